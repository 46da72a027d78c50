"""Exception hierarchy shared by every module."""


class WavedepthError(Exception):
    """Base class for all errors raised by this package."""


class ContractError(WavedepthError, ValueError):
    """A caller violated an operation's precondition."""


class ShapeError(ContractError):
    """Operand extents are incompatible with an operator.

    The message always names the operator and the offending extents.
    """

    def __init__(self, op, detail, shapes=()):
        self.op = op
        self.shapes = tuple(tuple(s) for s in shapes)
        msg = f"{op}: {detail}"
        if self.shapes:
            msg += " (got " + ", ".join(str(s) for s in self.shapes) + ")"
        super().__init__(msg)


class DomainError(WavedepthError, ValueError):
    """A numeric input lies outside an operator's domain (log of 0, ...)."""


class EmptyMaskError(ContractError):
    """A validity mask selected no pixels (or no difference pairs)."""


class NonFiniteError(WavedepthError, FloatingPointError):
    """A loss or gradient became NaN or infinite."""


class ParseError(WavedepthError, ValueError):
    """A file could not be decoded. ``offset`` is the byte position."""

    def __init__(self, path, offset, detail):
        self.path = str(path)
        self.offset = offset
        super().__init__(f"{path}: byte {offset}: {detail}")
