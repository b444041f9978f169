"""Exception hierarchy shared by all modules."""


class NematoError(Exception):
    """Base class for all package errors."""


class DomainError(NematoError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class NumericError(NematoError, ArithmeticError):
    """A numerical procedure failed to converge or produced a non-finite value."""


class ModelError(NematoError):
    """The model data violate a structural assumption (e.g. divergent tail integral)."""


class SingularityError(DomainError):
    """A matrix that must be invertible is singular."""


class MeshError(NematoError):
    """Degenerate or inconsistent mesh data."""


class InversionError(NematoError):
    """A deformation would invert (or flatten) at least one element."""


class ConfinementError(NematoError):
    """A deformed node leaves the confinement box."""


class ContractError(NematoError):
    """Two objects that must share a mesh (or shape) do not."""


class ConfigError(NematoError):
    """Invalid experiment configuration; ``errors`` lists every problem found."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
