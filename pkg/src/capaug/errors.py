"""Exception hierarchy for the pipeline.

Every error carries a ``category`` used by the CLI to pick an exit code:
"data" -> 4, "backend" -> 3.
"""


class PipelineError(Exception):
    category = "data"


class BackendError(PipelineError):
    category = "backend"


# corpus
class MalformedAnnotation(PipelineError):
    pass


class MissingCaptions(PipelineError):
    pass


class UnknownSplit(PipelineError):
    pass


# textaug
class UnknownCaptionId(PipelineError):
    pass


class BackendUnavailable(BackendError):
    pass


class BackendMalformedReply(BackendError):
    pass


# imageaug
class DegenerateHomography(PipelineError):
    pass


class ImageReadError(PipelineError):
    pass


class ImageWriteError(PipelineError):
    pass


# synthesis
class NsfwExhausted(PipelineError):
    pass


# dataset_builder
class MissingGeneration(PipelineError):
    pass


# quality
class DimensionMismatch(PipelineError):
    pass


class ZeroVector(PipelineError):
    pass


class EmptyLabels(PipelineError):
    pass


class CoverageMismatch(PipelineError):
    pass


class EmptyTable(PipelineError):
    pass


# capmetrics
class EmptyCandidateSet(PipelineError):
    pass


class UnknownImageId(PipelineError):
    pass


class MalformedResults(PipelineError):
    pass
