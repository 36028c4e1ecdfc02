class EvalError(Exception):
    pass


class SplitOverflow(EvalError):
    pass


class DegenerateSplit(EvalError):
    pass


class LengthMismatch(EvalError):
    pass
