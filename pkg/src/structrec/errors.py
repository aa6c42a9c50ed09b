"""Exception types shared across the package."""


class StructrecError(Exception):
    """Base class for all package-specific errors."""


class MalformedSequenceError(StructrecError):
    """A token sequence does not decode to a well-formed term."""


class RemapError(StructrecError):
    """A vocabulary remap is not a bijection over the tokens present."""


class ReductionError(StructrecError):
    """The reduction engine hit an unreducible or ill-formed expression."""


class FuelExhaustedError(ReductionError):
    """Reduction did not reach a normal form within the step budget."""


class RenderError(StructrecError):
    """An expression or trace cannot be rendered in the requested style."""


class UpdateClashError(StructrecError):
    """Two fired ASM rules assigned different values to one location."""


class BudgetExhaustedError(StructrecError):
    """A machine run exceeded its step budget without halting."""


class GenerationError(StructrecError):
    """A dataset request cannot be satisfied as specified."""


class EvalError(StructrecError):
    """Evaluation inputs are inconsistent or incomplete."""


class IdMismatchError(EvalError):
    """Prediction ids do not line up with gold record ids."""
