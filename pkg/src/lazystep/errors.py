class LazystepError(Exception):
    """Base class for all errors raised by the package."""


class ParseError(LazystepError):
    def __init__(self, kind: str, message: str, offset: int | None = None):
        self.kind = kind
        self.offset = offset
        where = f" at offset {offset}" if offset is not None else ""
        super().__init__(f"{kind} error{where}: {message}")


class QuoteError(LazystepError):
    pass


class AnnotationError(LazystepError):
    pass


class ReconstructionError(LazystepError):
    pass


class SynthesisError(LazystepError):
    pass


class AxiomMismatch(LazystepError):
    pass


class TraceFormatError(LazystepError):
    pass


class StageError(LazystepError):
    """Wraps a failure in one stage of the instrumented pipeline."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"{stage}: {cause}")
