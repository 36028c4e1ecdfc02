class TensorError(Exception):
    pass


class ShapeMismatch(TensorError):
    pass


class NonFiniteValue(TensorError):
    pass


class CheckpointError(TensorError):
    pass
