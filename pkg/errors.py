"""Exception hierarchy shared by every package.

Every error raised on purpose derives from ``EPTError`` and carries the exit
code the command line maps it to (1 usage, 2 data, 3 check failure).
"""


class EPTError(Exception):
    exit_code = 2


# ---------------------------
# Usage / configuration
# ---------------------------

class ConfigError(EPTError, ValueError):
    exit_code = 1


class CheckFailure(EPTError):
    exit_code = 3


# ---------------------------
# Data errors
# ---------------------------

class ParseError(EPTError, ValueError):
    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = []
        if source:
            where.append(str(source))
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{':'.join(where)}: " if where else ""
        super().__init__(prefix + message)


class StructuralError(EPTError, ValueError):
    pass


class CapacityError(EPTError, ValueError):
    pass


class ColumnError(EPTError, ValueError):
    pass


class CheckpointError(EPTError):
    pass


class TrainingError(EPTError, ArithmeticError):
    pass


# ---------------------------
# Numerical contracts
# ---------------------------

class DimensionError(EPTError, ValueError):
    pass


class ContractError(EPTError, ValueError):
    pass


class SegmentIndexError(EPTError, IndexError):
    pass


class PrecisionError(EPTError, ArithmeticError):
    pass


class DomainError(EPTError, ValueError):
    pass
