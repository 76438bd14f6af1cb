"""Exception types raised by the dpt package."""


class DptError(Exception):
    """Base class for all dpt errors."""


# -- matrix / field level ----------------------------------------------------

class NotPSDError(DptError):
    """A matrix required to be positive semi-definite is not."""


class SingularTransformError(DptError):
    """Congruence matrix is numerically singular."""


class UnsupportedDomainError(DptError):
    """Operation not defined for this domain variant."""


class DomainMismatchError(DptError):
    """Check kind incompatible with the field's domain."""


class TraceUnavailableError(DptError):
    """Boundary trace cannot be evaluated for this field/domain."""


# -- constructors ------------------------------------------------------------

class NegativeEntryError(DptError):
    """Diagonal constructor received a negative sample."""


class NotConvexError(DptError):
    """Quadratic-plus-potential Hessian fails positive semi-definiteness."""


class IncompatiblePairError(DptError):
    """Two-state pair (b, c) is not rank-deficient along the layering direction."""


class NegativeDensityError(DptError):
    pass


class NegativePressureError(DptError):
    pass


class NegativeDistributionError(DptError):
    pass


class SuperluminalVelocityError(DptError):
    """|v| >= c in a relativistic state."""


# -- inequality engine -------------------------------------------------------

class NotSingularDirectionError(DptError):
    """Segment direction matrix has nonzero determinant."""


class SupportTouchesBoundaryError(DptError):
    """Field minus its far value does not vanish on the boundary margin."""


# -- transport prover --------------------------------------------------------

class CompatibilityViolatedError(DptError):
    """Mean of the prescribed determinant does not match det(S)."""


class NotConvexIterateError(DptError):
    """Newton line search could not keep the iterate convex."""


class MaxIterationsError(DptError):
    """Iteration budget exhausted before reaching the residual target."""


class SingularLatticeError(DptError):
    pass


class SingularAPlusError(DptError):
    pass


# -- solvers -----------------------------------------------------------------

class CFLViolationError(DptError):
    pass


class VacuumBreakdownError(DptError):
    """Pressure/velocity evaluation failed near vacuum."""


class BoundaryLeakError(DptError):
    """Boundary flux exceeded the whole-space emulation budget."""


class NegativeRelaxationError(DptError):
    pass


class MaxwellianFitError(DptError):
    """Moment-matching exponential fit did not converge."""


class NotEllipticError(DptError):
    """Coefficient field fails the uniform ellipticity floor."""


class SolverDivergedError(DptError):
    pass


class BudgetExceededError(DptError):
    """Exhaustive enumeration would exceed the tuple budget."""


# -- configuration -----------------------------------------------------------

class ConfigError(DptError):
    """Malformed or rejected suite configuration."""


class UnknownOperationError(ConfigError):
    pass


class UnknownKeyError(ConfigError):
    pass
