class SparseHBError(Exception):
    """Base class for errors raised by this package."""


class CapExceeded(SparseHBError):
    """A size guard (nnz cap, dense-solver cap) would be exceeded."""


class ConvergenceError(SparseHBError):
    """An iterative method stopped before reaching its tolerance.

    ``partial`` carries the best available result (a report or stats object).
    """

    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial
