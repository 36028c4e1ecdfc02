class GlyphError(Exception):
    pass


class MissingBitmap(GlyphError):
    pass


class LineTooLong(GlyphError):
    pass


class DatasetError(GlyphError):
    pass
