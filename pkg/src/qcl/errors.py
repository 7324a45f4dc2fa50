"""Error types shared by every layer.

Each user-facing failure carries a machine-readable ``code``.  The CLI maps
``QclError`` to exit status 1 and ``InternalError`` to exit status 2.
"""


class QclError(Exception):
    code = "error"

    def __init__(self, message, code=None, span=None):
        super().__init__(message)
        self.message = message
        if code is not None:
            self.code = code
        self.span = span

    def __str__(self):
        return f"[{self.code}] {self.message}"


class MalformedInput(QclError):
    code = "malformed-input"


class FormationError(QclError):
    """A pure term or unitary fails its formation rules."""

    code = "formation"


class MainTypeError(QclError):
    code = "main-type"


class TruncationError(QclError):
    code = "truncation-overflow"


class OutOfFragment(QclError):
    code = "out-of-fragment"


class ParseError(QclError):
    code = "syntax"


class StepLimitExceeded(QclError):
    code = "step-limit"


class InternalError(Exception):
    """Broken invariant: a bug in the checker or the machine, not in the input."""

    def __init__(self, message, dump=None):
        super().__init__(message)
        self.dump = dump


class TruncationWarning(UserWarning):
    pass
