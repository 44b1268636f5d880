"""Exception hierarchy shared by the library and the command line front end."""


class ValidationError(ValueError):
    """Malformed input: bad shapes, out-of-bounds data, unparsable files."""


class DomainError(ValidationError):
    """An argument lies outside the domain of a numerical kernel."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (non-convergence, loss of definiteness)."""


class ConvergenceError(NumericalError):
    pass


class DegenerateDataWarning(UserWarning):
    """A variable pair carries no information about its correlation."""
