"""Exception hierarchy shared by all modules."""


class MsgVerifError(Exception):
    pass


class ParseError(MsgVerifError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line else ""
        super().__init__(f"{where}{message}")


class PropertyError(MsgVerifError):
    pass


class UnboundVariable(MsgVerifError):
    pass


class DomainError(MsgVerifError):
    """A symbolic variable has no domain, or the enumeration cap is exceeded."""


class NotEnabled(MsgVerifError):
    pass


class SymbolicTarget(MsgVerifError):
    """A communication peer expression did not evaluate to a concrete rank."""


class LocalNondeterminism(MsgVerifError):
    """Local execution hit a branch whose condition is not concrete."""


class BudgetExceeded(MsgVerifError):
    pass
