"""Exception hierarchy shared by all modules."""


class SobolevLabError(Exception):
    """Base class for every error raised by this package."""


class InvalidDimension(SobolevLabError, ValueError):
    pass


class SideMismatch(SobolevLabError, ValueError):
    pass


class NonPositiveWeight(SobolevLabError, ValueError):
    pass


class DimensionMismatch(SobolevLabError, ValueError):
    pass


class SingularResolvent(SobolevLabError, ZeroDivisionError):
    pass


class DegenerateGrid(SobolevLabError, ValueError):
    pass


class ZeroDenominator(SobolevLabError, ZeroDivisionError):
    pass


class GridTouchesAxis(SobolevLabError, ValueError):
    pass


class ParameterOutOfRange(SobolevLabError, ValueError):
    pass


class ResidualTooLarge(SobolevLabError, ArithmeticError):
    pass


class ZeroField(SobolevLabError, ValueError):
    pass


class MaxIterations(SobolevLabError, RuntimeError):
    pass


class NotContractive(SobolevLabError, ArithmeticError):
    """Raised when the lower-order perturbation is not a contraction.

    Attributes
    ----------
    rho : float
        Estimated norm of the perturbation composed with the principal resolvent.
    suggested_lambda : float or None
        Smallest real spectral parameter on the doubling schedule 1, 2, 4, ...,
        2**20 for which the estimate drops below 0.9, or None if none does.
    """

    def __init__(self, rho, suggested_lambda=None):
        self.rho = float(rho)
        self.suggested_lambda = suggested_lambda
        hint = (
            f"; try lambda >= {suggested_lambda:g}"
            if suggested_lambda is not None
            else "; no lambda up to 2**20 restores contraction"
        )
        super().__init__(f"perturbation is not contractive (rho={self.rho:.4g}){hint}")


class ConfigInvalid(SobolevLabError, ValueError):
    pass
