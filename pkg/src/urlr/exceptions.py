"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input data or configuration failed a precondition."""


class NumericalError(ArithmeticError):
    """A numerical routine could not produce a trustworthy result."""


class ConvergenceError(NumericalError):
    """Coordinate descent hit its sweep budget at some grid point.

    Attributes
    ----------
    lambda_index : int
        Position of the offending value on the regularization grid.
    residual : float
        Largest scaled coefficient change in the final sweep.
    """

    def __init__(self, lambda_index, residual, max_sweeps):
        self.lambda_index = int(lambda_index)
        self.residual = float(residual)
        self.max_sweeps = int(max_sweeps)
        super().__init__(
            f"coordinate descent did not converge at lambda index {self.lambda_index} "
            f"after {self.max_sweeps} sweeps (last change {self.residual:.3e})"
        )
