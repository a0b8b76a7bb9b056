class IggpError(Exception):
    """Base class for all errors raised by this package."""


class GdlSyntaxError(IggpError, ValueError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{where}")


class FlattenError(IggpError, ValueError):
    pass


class UnstratifiableError(IggpError, ValueError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("cycle through negation: " + " -> ".join(self.cycle))


class UnsafeRuleError(IggpError, ValueError):
    pass


class IllFormedGameError(IggpError):
    pass


class IllegalMoveError(IggpError, ValueError):
    def __init__(self, role, action):
        self.role = role
        self.action = action
        super().__init__(f"illegal move {action!r} for role {role!r}")


class AmbiguousGoalError(IggpError):
    pass


class UnsupportedGameError(IggpError):
    pass


class EnumerationOverflowError(IggpError):
    pass


class TaskFormatError(IggpError, ValueError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f" ({path}" + (f":{line}" if line is not None else "") + ")"
        super().__init__(message + where)
