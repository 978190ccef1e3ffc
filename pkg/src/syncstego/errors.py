"""Exception types shared across the package."""


class VocabularyFormatError(ValueError):
    """A vocabulary file could not be parsed."""


class VocabularyValidationError(ValueError):
    """A parsed vocabulary violates an invariant (duplicate id/subword, empty subword)."""


class ParameterError(ValueError):
    """An argument violates an operation's precondition."""


class CapacityExhaustedError(RuntimeError):
    """The step budget ran out before the message was fully embedded."""


class DesynchronizationError(RuntimeError):
    """Receiver state diverged from the sender.

    Raised on corrupt stegotext, a wrong key, or mismatched session state.
    ``step`` is the 1-based step where divergence surfaced; ``partial_bits``
    holds whatever was decoded before it.
    """

    def __init__(self, message: str, step: int | None = None, partial_bits: str = ""):
        super().__init__(message)
        self.step = step
        self.partial_bits = partial_bits


class ProviderError(RuntimeError):
    """An external model endpoint failed or violated the wire protocol."""
