class ClipError(Exception):
    pass


class EmptyDataset(ClipError):
    pass


class SequenceTooLong(ClipError):
    pass


class UnknownToken(ClipError):
    pass


class EmptyCandidates(ClipError):
    pass


class DuplicateClass(ClipError):
    pass
