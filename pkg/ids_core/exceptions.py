class IdsError(Exception):
    pass


class MalformedIds(IdsError):
    pass


class UnknownRadical(IdsError):
    pass


class UnknownClass(IdsError):
    pass


class UnknownToken(IdsError):
    pass


class LexiconError(IdsError):
    pass
