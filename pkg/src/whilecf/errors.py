"""Exception types shared across the toolkit."""


class WhileCFError(Exception):
    pass


class ParseError(SyntaxError):
    """Malformed surface text. Carries 1-based line and column."""

    def __init__(self, msg, line=1, col=1, text=None):
        super().__init__(f"{msg} (line {line}, column {col})")
        self.msg = msg
        self.lineno = line
        self.offset = col
        self.text = text

    @property
    def line(self):
        return self.lineno

    @property
    def col(self):
        return self.offset


class EvalError(WhileCFError):
    """Division or modulus by zero."""


class CapExceeded(WhileCFError):
    """An enumeration would exceed its configured budget."""


class MalformedNode(WhileCFError):
    def __init__(self, msg, path="root"):
        super().__init__(f"{path}: {msg}")
        self.path = path
        self.reason = msg


class ShapeError(WhileCFError):
    pass


class SideConditionError(WhileCFError):
    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness


class EmptyDomain(WhileCFError):
    pass


class AnnotationMissing(WhileCFError):
    pass
