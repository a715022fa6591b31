class BridgeError(Exception):
    pass


class BadFileError(BridgeError, ValueError):
    pass


class DimensionMismatchError(BridgeError, ValueError):
    pass


class MissingPlaceholderError(BridgeError, ValueError):
    pass


class LoadFailureError(BridgeError, RuntimeError):
    pass
