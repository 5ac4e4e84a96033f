"""Exception types shared across the package."""


class HclabError(Exception):
    """Base class for all library errors."""


class ContextMismatch(HclabError):
    """Two values from different group contexts were combined."""


class FixedCharacterError(HclabError):
    """A character is fixed by the translation element, so the averaging
    bound does not apply."""

    def __init__(self, k, a_value):
        self.k = k
        self.a_value = a_value
        super().__init__(f"character index {k} is fixed by rotation {a_value}")


class GridMismatch(HclabError):
    """A translation does not map the evaluation grid to itself."""


class NonPositiveWeight(HclabError):
    """A weight failed the strict positivity requirement."""


class PlateauResolutionFailure(HclabError):
    """No admissible cut heights could be placed at grid resolution."""


class WindowExceeded(HclabError):
    """An operation left the finite valuation window of a p-adic context."""


class InternalInconsistency(HclabError):
    """An exact-arithmetic self-check failed; indicates a bug."""


class SpecValidationError(HclabError):
    """An experiment file failed validation."""
