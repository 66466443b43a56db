class BridgeError(Exception):
    """Base class for bridge failures."""


class BridgeStartupError(BridgeError):
    """Model or parser pipeline could not be loaded."""
