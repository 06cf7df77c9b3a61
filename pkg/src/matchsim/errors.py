"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """A precondition of an operation was not met by the caller."""


class ExhaustedError(LookupError):
    """A lazy permutation has no unrevealed elements left."""


class IntegrityError(RuntimeError):
    """An event log disagrees with the market it claims to describe."""


class InstanceTooLarge(ValueError):
    """An explicit instance exceeds the brute-force enumeration guard."""
