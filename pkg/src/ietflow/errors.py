"""Exception types shared across the package."""


class BoundaryError(ArithmeticError):
    """Raised when renormalization hits the critical tie lambda_m == lambda_{pi^-1(m)}.

    The induction map is undefined on this (measure-zero) union of
    hyperplanes; callers are expected to resample or abort.  ``partial``
    optionally carries whatever prefix of the computation succeeded.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
