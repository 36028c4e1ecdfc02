class AppError(Exception):
    pass


class ConfigError(AppError):
    pass


class MissingInput(AppError):
    pass


class RunLocked(AppError):
    pass
