"""On-page layout of B-tree nodes and the store metadata page.

Every node page starts with a 16-byte little-endian header::

    offset  size  field
    0       4     page_id
    4       2     count           (records / entries in use)
    6       1     kind            (0 = leaf, 1 = interior)
    7       1     reserved
    8       4     leftmost_child  (interior only; NO_PAGE on leaves)
    12      4     reserved

followed by ``count`` fixed-size slots.  Leaf slots are ``record_size`` bytes
(4-byte key, then the value payload); interior slots are 8 bytes
``(key, child)`` where ``child`` roots the subtree of keys ``>= key``.

Slots at index ``count`` and above are garbage: a split only lowers the count
of the left page, so nothing in this module ever looks past it.

All functions here operate on caller-owned buffers (``bytearray`` or
``memoryview``) and hold no state.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass

from .errors import CorruptMetadataError, CorruptPageError, InvalidConfigError

NO_PAGE = 0xFFFFFFFF
HEADER_SIZE = 16
KEY_SIZE = 4
ENTRY_SIZE = 8
MAX_COUNT = 0xFFFF

_HEADER = struct.Struct("<IHBBII")
_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")
_ENTRY = struct.Struct("<II")

_COUNT_OFFSET = 4
_KIND_OFFSET = 6
_LEFTMOST_OFFSET = 8


class NodeKind(enum.IntEnum):
    LEAF = 0
    INTERIOR = 1


def _capacity(page_size: int, header_size: int, slot_size: int) -> int:
    return (page_size - header_size) // slot_size


@dataclass(frozen=True)
class PageConfig:
    """Geometry of a store: page size and fixed record size."""

    page_size: int = 512
    record_size: int = 16
    key_size: int = KEY_SIZE
    header_size: int = HEADER_SIZE

    def __post_init__(self):
        if self.key_size != KEY_SIZE:
            raise InvalidConfigError(f"only {KEY_SIZE}-byte keys are supported, got {self.key_size}")
        if self.header_size != HEADER_SIZE:
            raise InvalidConfigError(f"header must be {HEADER_SIZE} bytes, got {self.header_size}")
        if self.record_size < self.key_size:
            raise InvalidConfigError("record_size must hold at least the key")
        if self.page_size > NO_PAGE:
            raise InvalidConfigError("page_size does not fit in 32 bits")
        for name, slot in (("leaf", self.record_size), ("interior", ENTRY_SIZE)):
            cap = _capacity(self.page_size, self.header_size, slot)
            if cap < 2:
                raise InvalidConfigError(
                    f"{name} capacity {cap} < 2 for page_size={self.page_size}, slot={slot}"
                )
            if cap > MAX_COUNT:
                raise InvalidConfigError(f"{name} capacity {cap} overflows the 16-bit count")

    @property
    def value_size(self) -> int:
        return self.record_size - self.key_size

    @property
    def leaf_capacity(self) -> int:
        return _capacity(self.page_size, self.header_size, self.record_size)

    @property
    def interior_capacity(self) -> int:
        return _capacity(self.page_size, self.header_size, ENTRY_SIZE)

    def capacity(self, kind: NodeKind) -> int:
        return self.leaf_capacity if kind == NodeKind.LEAF else self.interior_capacity

    def stride(self, kind: NodeKind) -> int:
        return self.record_size if kind == NodeKind.LEAF else ENTRY_SIZE


def leaf_capacity(cfg: PageConfig) -> int:
    """Number of data records that fit on one leaf page."""
    return cfg.leaf_capacity


def interior_capacity(cfg: PageConfig) -> int:
    """Number of (key, child) entries that fit on one interior page."""
    return cfg.interior_capacity


@dataclass(frozen=True)
class PageHeader:
    page_id: int
    count: int
    kind: NodeKind = NodeKind.LEAF
    leftmost_child: int = NO_PAGE


def encode_header(hdr: PageHeader, frame) -> None:
    """Write ``hdr`` into bytes 0..16 of ``frame``; the slot area is untouched."""
    leftmost = hdr.leftmost_child if hdr.kind == NodeKind.INTERIOR else NO_PAGE
    _HEADER.pack_into(frame, 0, hdr.page_id, hdr.count, int(hdr.kind), 0, leftmost, 0)


def validate_header(hdr: PageHeader, cfg: PageConfig) -> PageHeader:
    if hdr.count > cfg.capacity(hdr.kind):
        raise CorruptPageError(
            f"page {hdr.page_id}: count {hdr.count} exceeds {hdr.kind.name.lower()} "
            f"capacity {cfg.capacity(hdr.kind)}"
        )
    return hdr


def decode_header(frame, cfg: PageConfig) -> PageHeader:
    """Inverse of :func:`encode_header`, checked against the page geometry."""
    page_id, count, kind, _, leftmost, _ = _HEADER.unpack_from(frame, 0)
    try:
        kind = NodeKind(kind)
    except ValueError:
        raise CorruptPageError(f"page {page_id}: invalid node kind byte {kind}") from None
    if kind == NodeKind.LEAF:
        leftmost = NO_PAGE
    return validate_header(PageHeader(page_id, count, kind, leftmost), cfg)


def init_node(frame, page_id: int, kind: NodeKind, leftmost_child: int = NO_PAGE) -> None:
    encode_header(PageHeader(page_id, 0, kind, leftmost_child), frame)


# Hot-path accessors.  No validation: callers decode/validate a page once and
# then index it directly.

def get_count(frame) -> int:
    return _U16.unpack_from(frame, _COUNT_OFFSET)[0]


def set_count(frame, count: int) -> None:
    _U16.pack_into(frame, _COUNT_OFFSET, count)


def get_kind(frame) -> int:
    return frame[_KIND_OFFSET]


def get_page_id(frame) -> int:
    return _U32.unpack_from(frame, 0)[0]


def set_page_id(frame, page_id: int) -> None:
    _U32.pack_into(frame, 0, page_id)


def get_leftmost(frame) -> int:
    return _U32.unpack_from(frame, _LEFTMOST_OFFSET)[0]


def set_leftmost(frame, child: int) -> None:
    _U32.pack_into(frame, _LEFTMOST_OFFSET, child)


def key_at(frame, index: int, stride: int) -> int:
    return _U32.unpack_from(frame, HEADER_SIZE + index * stride)[0]


def read_record(frame, index: int, cfg: PageConfig) -> tuple[int, bytes]:
    off = HEADER_SIZE + index * cfg.record_size
    key = _U32.unpack_from(frame, off)[0]
    return key, bytes(frame[off + KEY_SIZE:off + cfg.record_size])


def write_record(frame, index: int, key: int, value, cfg: PageConfig) -> None:
    """Store ``(key, value)`` in leaf slot ``index``; ``value`` must be value_size bytes."""
    off = HEADER_SIZE + index * cfg.record_size
    _U32.pack_into(frame, off, key)
    frame[off + KEY_SIZE:off + cfg.record_size] = value


def read_entry(frame, index: int) -> tuple[int, int]:
    return _ENTRY.unpack_from(frame, HEADER_SIZE + index * ENTRY_SIZE)


def write_entry(frame, index: int, key: int, child: int) -> None:
    _ENTRY.pack_into(frame, HEADER_SIZE + index * ENTRY_SIZE, key, child)


def move_slots(frame: memoryview, dst: int, src: int, n: int, stride: int) -> None:
    """memmove ``n`` slots from index ``src`` to ``dst`` within one frame."""
    if n <= 0 or dst == src:
        return
    d = HEADER_SIZE + dst * stride
    s = HEADER_SIZE + src * stride
    frame[d:d + n * stride] = frame[s:s + n * stride]


def find_position(frame, key: int, cfg: PageConfig) -> int:
    """Lower bound: the smallest ``i`` in ``[0, count]`` with ``key_i >= key``."""
    stride = cfg.record_size if frame[_KIND_OFFSET] == NodeKind.LEAF else ENTRY_SIZE
    lo, hi = 0, _U16.unpack_from(frame, _COUNT_OFFSET)[0]
    unpack = _U32.unpack_from
    while lo < hi:
        mid = (lo + hi) >> 1
        if unpack(frame, HEADER_SIZE + mid * stride)[0] < key:
            lo = mid + 1
        else:
            hi = mid
    return lo


def child_slot(frame, key: int) -> int:
    """Index in ``[0, count]`` of the child subtree that may hold ``key``.

    Slot 0 is the leftmost child; slot ``i > 0`` is ``entry[i-1].child``.
    A key equal to a separator belongs to the separator's (right) child.
    """
    lo, hi = 0, _U16.unpack_from(frame, _COUNT_OFFSET)[0]
    unpack = _U32.unpack_from
    while lo < hi:
        mid = (lo + hi) >> 1
        if unpack(frame, HEADER_SIZE + mid * ENTRY_SIZE)[0] <= key:
            lo = mid + 1
        else:
            hi = mid
    return lo


def child_at(frame, slot: int) -> int:
    if slot == 0:
        return _U32.unpack_from(frame, _LEFTMOST_OFFSET)[0]
    return _U32.unpack_from(frame, HEADER_SIZE + (slot - 1) * ENTRY_SIZE + KEY_SIZE)[0]


def child_for_key(frame, key: int, cfg: PageConfig | None = None) -> int:
    """Page id of the child of an interior node to descend into for ``key``."""
    if frame[_KIND_OFFSET] != NodeKind.INTERIOR:
        raise CorruptPageError(f"page {get_page_id(frame)} is not an interior node")
    child = child_at(frame, child_slot(frame, key))
    if child == NO_PAGE:
        raise CorruptPageError(f"page {get_page_id(frame)}: child pointer is the null sentinel")
    return child


# Metadata page (page 0).
#
#     offset  size  field
#     0       4     magic "EBTR"
#     4       2     format version
#     6       2     record_size
#     8       4     page_size
#     12      4     root page id
#     16      4     next_page (allocation cursor)
#     20      2     height
#     22      1     key_size
#     23      1     header_size
#     24      8     record_count

META_MAGIC = b"EBTR"
META_VERSION = 1
_META = struct.Struct("<4sHHIIIHBBQ")
META_SIZE = _META.size


@dataclass(frozen=True)
class MetaPage:
    cfg: PageConfig
    root: int
    height: int
    record_count: int
    next_page: int


def encode_meta(meta: MetaPage, frame) -> None:
    """Pack ``meta`` into the first META_SIZE bytes; the rest of the page is reserved."""
    cfg = meta.cfg
    if cfg.page_size < META_SIZE:
        raise InvalidConfigError(f"page_size must be at least {META_SIZE} bytes to hold metadata")
    _META.pack_into(
        frame, 0, META_MAGIC, META_VERSION, cfg.record_size, cfg.page_size,
        meta.root, meta.next_page, meta.height, cfg.key_size, cfg.header_size,
        meta.record_count,
    )


def decode_meta(frame) -> MetaPage:
    if len(frame) < META_SIZE:
        raise CorruptMetadataError("metadata page truncated")
    (magic, version, record_size, page_size, root, next_page, height,
     key_size, header_size, record_count) = _META.unpack_from(frame, 0)
    if magic != META_MAGIC:
        raise CorruptMetadataError(f"bad magic {magic!r}")
    if version != META_VERSION:
        raise CorruptMetadataError(f"unsupported format version {version}")
    try:
        cfg = PageConfig(page_size, record_size, key_size, header_size)
    except InvalidConfigError as exc:
        raise CorruptMetadataError(f"invalid geometry in metadata: {exc}") from None
    if height < 1 or root == NO_PAGE or root >= next_page:
        raise CorruptMetadataError(f"inconsistent root/height ({root}, {height})")
    return MetaPage(cfg, root, height, record_count, next_page)


def peek_page_size(prefix: bytes) -> int:
    """Page size recorded in a metadata page, from its first META_SIZE bytes."""
    return decode_meta(prefix).cfg.page_size
