class InvalidInputError(ValueError):
    """Input violates a precondition of a geometry, measure, solver or probe operation."""


class ConfigError(InvalidInputError):
    """A configuration value failed validation. Reported as a plumbing error, exit code 2."""


class AtomAtQueryError(InvalidInputError):
    """Exponent p = 1 with an atom at the query point: the differential is not linear there."""


class ResourceError(MemoryError):
    """Requested grid or sample exceeds the memory budget."""


class StepSizeError(RuntimeError):
    """Gradient descent kept increasing the Fréchet function after all step halvings."""


class SearchBudgetExhaustedError(RuntimeError):
    """A configuration search ran out of candidates before finding a match."""


def invalid(message: str, tip: str) -> InvalidInputError:
    return InvalidInputError(f"{message}\n[Tip] {tip}")
