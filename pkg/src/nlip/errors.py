"""Exception types shared across the library.

Two families: precondition violations (the caller handed us data the
mathematics rejects) and numerical failures (a well-posed computation did
not reach its target). The CLI maps them to distinct exit codes.
"""


class PreconditionError(ValueError):
    """Input violates a documented precondition of the operation."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to converge or bracket its target."""


class MassMismatch(PreconditionError):
    """Profile mass is incompatible with the requested mean; the Neumann
    problem -v'' = u - m has no solution."""


class NonZeroMean(PreconditionError):
    """Right-hand side of a Neumann Poisson solve has nonzero discrete mean."""


class HypothesisViolation(PreconditionError):
    """Parameters fall outside the hypotheses of the statement being checked
    (e.g. the thin-domain stability bound)."""


class ConstraintViolation(PreconditionError):
    """A linear constraint on perturbation data is not satisfied."""


class SameSpin(PreconditionError):
    """A spin exchange was requested between two cells of equal spin."""


class NotSymmetric(PreconditionError):
    """Matrix handed to the symmetric eigen-solver is not symmetric."""


class JumpCollision(NumericalError):
    """Two interface positions approached within the minimum gap; the
    fixed-jump-count stratum boundary was reached."""


class NonConvergence(NumericalError):
    """Iteration budget exhausted without meeting the tolerance."""


class BracketFailure(NumericalError):
    """No sign change found inside the allowed bracketing range."""
