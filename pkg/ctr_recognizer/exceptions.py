class CtrError(Exception):
    pass


class DimensionMismatch(CtrError):
    pass


class LabelOutOfRange(CtrError):
    pass


class CandidateMissing(CtrError):
    pass
