"""Exception types shared across the package."""


class RangeError(ValueError):
    """A value lies outside the range a model or block can represent."""


class OperatingRangeError(RangeError):
    """A nonideal circuit block was driven outside its working region."""


class NumericError(ArithmeticError):
    """Integration produced a non-finite intermediate value."""


class ConvergenceError(RuntimeError):
    """An iterative procedure exhausted its iteration budget."""


class FormatError(ValueError):
    """Malformed input to one of the file readers."""
