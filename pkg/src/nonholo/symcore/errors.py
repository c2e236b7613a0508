class SymcoreError(Exception):
    """Base class for symbolic-core failures."""


class ParseError(SymcoreError, ValueError):
    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}")


class UndeclaredSymbolError(ParseError):
    pass


class ZeroDenominatorError(SymcoreError, ZeroDivisionError):
    pass


class SingularPointError(SymcoreError, ArithmeticError):
    pass


class ExponentOverflowError(SymcoreError, OverflowError):
    pass


class NotACoordinateError(SymcoreError, ValueError):
    pass
