"""Exception hierarchy. Each class carries a short machine-readable code used by the CLI."""


class GSPError(Exception):
    code = "E_GSP"


class GraphError(GSPError, ValueError):
    code = "E_GRAPH"


class IsolatedNodeError(GraphError):
    code = "E_ISOLATED"


class NonErgodicError(GSPError):
    code = "E_NONERGODIC"


class DefectiveOperatorError(GSPError):
    code = "E_DEFECTIVE"


class UnsupportedOperatorError(GSPError, ValueError):
    code = "E_KIND"


class DomainError(GSPError, ValueError):
    code = "E_DOMAIN"


class IllConditionedError(GSPError):
    code = "E_CONDITION"


class RankDeficientError(GSPError):
    code = "E_RANK"


class UnstableDesignError(GSPError):
    code = "E_UNSTABLE"


class ConvergenceError(GSPError):
    code = "E_CONVERGENCE"


class FrameError(GSPError):
    code = "E_FRAME"


class NotBipartiteError(GSPError, ValueError):
    code = "E_BIPARTITE"


class PartitionError(GSPError, ValueError):
    code = "E_PARTITION"


class FileFormatError(GSPError, OSError):
    """Unreadable, missing or malformed input file."""

    code = "E_IO"
