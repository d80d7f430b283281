class MuNormError(Exception):
    pass


class InvalidInputError(MuNormError, ValueError):
    pass


class SizeError(MuNormError, ValueError):
    """A combinatorial guard was exceeded."""


class NoClosedFormError(MuNormError, ValueError):
    pass


class InconsistencyError(MuNormError, ArithmeticError):
    pass


class SupportError(MuNormError, ValueError):
    """A localized function is nonzero outside its declared support."""
