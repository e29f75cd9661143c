"""Exception hierarchy shared across the package."""


class MicroMacroError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(MicroMacroError, ValueError):
    """An argument lies outside the admissible range (e.g. a density outside [0, 1])."""


class CFLError(MicroMacroError):
    """The time step violates the CFL restriction of the explicit scheme."""


class InvariantError(MicroMacroError):
    """A state invariant (ordering, spacing, phase separation, ...) was breached."""


class ScenarioError(MicroMacroError, ValueError):
    """A scenario document failed validation.

    ``path`` names the offending field (dotted, with list indices), e.g.
    ``platoons[0][1]``.
    """

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")
