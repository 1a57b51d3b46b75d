"""Exception hierarchy shared by every layer of the engine."""


class BTreeError(Exception):
    """Base class for all errors raised by embtree."""


class InvalidConfigError(BTreeError, ValueError):
    pass


class CorruptPageError(BTreeError):
    pass


class CorruptMetadataError(CorruptPageError):
    pass


class StoreError(BTreeError):
    """Device-level failure (bounds, I/O)."""


class PageOutOfRangeError(StoreError, IndexError):
    pass


class StoreFullError(StoreError):
    pass


class DuplicateKeyError(BTreeError, KeyError):
    pass


class KeyNotFoundError(BTreeError, KeyError):
    pass


class TreeFullError(BTreeError):
    """The tree would grow past MAX_HEIGHT levels."""
