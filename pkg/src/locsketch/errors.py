"""Exception hierarchy. The CLI maps these onto exit codes 2 and 3."""


class ValidationError(ValueError):
    """Bad shapes, partitions, parameters or input files."""


class NumericalError(ArithmeticError):
    """A numerical procedure failed on otherwise valid input."""


class NotPositiveDefiniteError(NumericalError):
    def __init__(self, pivot):
        super().__init__(f"matrix is not positive definite (pivot {pivot})")
        self.pivot = pivot


class ConvergenceError(NumericalError):
    def __init__(self, message, gap):
        super().__init__(f"{message} (last gap {gap:.3e})")
        self.gap = gap
