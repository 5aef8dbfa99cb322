"""Exception types raised by the detection pipeline."""


class PipelineError(Exception):
    """Base class for errors that abort a detection run."""


class NoIntersectionsError(PipelineError):
    """No intersecting nucleus/body regions exist, so ratio statistics are undefined."""


class NoFeasibleLevelError(PipelineError):
    """Every candidate saliency level produced zero intersecting regions."""
