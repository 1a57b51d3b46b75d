"""B-tree over a fixed page-frame pool.

Inserts descend from the root recording the path, load the target leaf into
the pool's single write frame, and either insert in place or split.  A split
composes the left page, writes it, then rebuilds the same frame as the right
page and writes that too: no second page buffer is needed at any level, only
one record-sized temp slot.  The left half keeps its page id; the right half
gets a fresh one.

Separators follow "child holds keys >= separator".  Leaf splits copy the
first key of the right leaf up; interior splits move the middle key up.

Deletes never merge or rebalance.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterator

from . import page_format as pf
from .buffer_pool import BufferPool
from .errors import (
    CorruptMetadataError,
    CorruptPageError,
    DuplicateKeyError,
    InvalidConfigError,
    KeyNotFoundError,
    StoreFullError,
    TreeFullError,
)
from .page_format import ENTRY_SIZE, HEADER_SIZE, NO_PAGE, MetaPage, NodeKind, PageConfig
from .storage import PageStore

MAX_HEIGHT = 8
MAX_KEY = 0xFFFFFFFF

_LEAF = int(NodeKind.LEAF)
_INTERIOR = int(NodeKind.INTERIOR)


class ActivePath:
    """Root-to-leaf page ids and child slots, fixed capacity MAX_HEIGHT."""

    __slots__ = ("page_ids", "slots", "counts", "depth")

    def __init__(self):
        self.page_ids = [NO_PAGE] * MAX_HEIGHT
        self.slots = [0] * MAX_HEIGHT
        self.counts = [0] * MAX_HEIGHT
        self.depth = 0


@dataclass(frozen=True)
class NodeInfo:
    level: int
    page_id: int
    kind: NodeKind
    keys: tuple
    children: tuple = ()


class BTree:
    """B-tree of fixed-size records keyed by unsigned 32-bit integers.

    Use :meth:`create` for a fresh store and :meth:`open` for an existing one.
    ``buffers`` is the total number of page frames M.
    """

    def __init__(self, store: PageStore, buffers: int = 2):
        self.store = store
        self.pool = BufferPool(buffers, store)
        self._path = ActivePath()
        self.cfg: PageConfig | None = None
        self.root = NO_PAGE
        self.height = 0
        self.record_count = 0
        self._temp: bytearray | None = None

    def _finish_init(self, cfg: PageConfig) -> None:
        self.cfg = cfg
        self._leaf_cap = cfg.leaf_capacity
        self._interior_cap = cfg.interior_capacity
        self._rec = cfg.record_size
        self._value_size = cfg.value_size
        # one slot, large enough for a leaf record or an interior entry
        self._temp = self.pool.allocate_scratch(max(cfg.record_size, ENTRY_SIZE))
        self._temp_view = memoryview(self._temp)
        self.pool.seal()

    @classmethod
    def create(cls, store: PageStore, cfg: PageConfig | None = None, buffers: int = 2) -> "BTree":
        cfg = cfg or PageConfig(page_size=store.page_size)
        if cfg.page_size != store.page_size:
            raise InvalidConfigError(
                f"config page_size {cfg.page_size} != store page_size {store.page_size}")
        if cfg.page_size < pf.META_SIZE:
            raise InvalidConfigError(f"page_size must be >= {pf.META_SIZE} to hold metadata")
        if store.allocated_pages:
            raise InvalidConfigError("store is not empty")
        tree = cls(store, buffers)
        tree._finish_init(cfg)
        tree.root = store.allocate_page()
        tree.height = 1
        wf = tree.pool.write_view
        pf.init_node(wf, tree.root, NodeKind.LEAF)
        tree.pool.pin_root(tree.root)
        tree.pool.write_through(tree.root)
        tree._write_meta()
        return tree

    @classmethod
    def open(cls, store: PageStore, buffers: int = 2) -> "BTree":
        tree = cls(store, buffers)
        if store.next_page < 1 or store.page_size < pf.META_SIZE:
            raise CorruptMetadataError("store too small to hold metadata")
        meta = pf.decode_meta(tree.pool.read_meta())
        if meta.cfg.page_size != store.page_size:
            raise CorruptMetadataError(
                f"metadata page_size {meta.cfg.page_size} != store page_size {store.page_size}")
        if meta.height > MAX_HEIGHT:
            raise CorruptMetadataError(f"height {meta.height} exceeds {MAX_HEIGHT}")
        store.next_page = max(store.next_page, meta.next_page)
        tree._finish_init(meta.cfg)
        tree.root = meta.root
        tree.height = meta.height
        tree.record_count = meta.record_count
        tree.pool.pin_root(tree.root)
        return tree

    def _write_meta(self) -> None:
        pf.encode_meta(
            MetaPage(self.cfg, self.root, self.height, self.record_count, self.store.next_page),
            self.pool.write_view,
        )
        self.pool.write_meta()

    def flush(self) -> None:
        """Persist metadata (root, height, count) and fsync the store."""
        self._write_meta()
        self.store.flush()

    def close(self) -> None:
        self.flush()
        self.store.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __len__(self) -> int:
        return self.record_count

    def count(self) -> int:
        return self.record_count

    def __contains__(self, key: int) -> bool:
        return self.get(key) is not None

    # search

    def _descend(self, key: int, path: ActivePath) -> int:
        """Walk interior levels for ``key``; return the leaf page id."""
        fetch = self.pool.fetch
        page_id = self.root
        depth = 0
        for _ in range(self.height - 1):
            frame = fetch(page_id)
            if frame[6] != _INTERIOR:
                raise CorruptPageError(f"page {page_id} at depth {depth} should be interior")
            slot = pf.child_slot(frame, key)
            path.page_ids[depth] = page_id
            path.slots[depth] = slot
            path.counts[depth] = pf.get_count(frame)
            depth += 1
            page_id = pf.child_at(frame, slot)
            if page_id == NO_PAGE:
                raise CorruptPageError(f"null child pointer below page {path.page_ids[depth - 1]}")
        path.page_ids[depth] = page_id
        path.depth = depth + 1
        return page_id

    @staticmethod
    def _check_key(key: int) -> None:
        if not 0 <= key <= MAX_KEY:
            raise ValueError(f"key {key} outside the unsigned 32-bit range")

    def get(self, key: int) -> bytes | None:
        """Value stored under ``key``, or None.  Issues exactly ``height`` fetches."""
        self._check_key(key)
        leaf_id = self._descend(key, self._path)
        frame = self.pool.fetch(leaf_id)
        if frame[6] != _LEAF:
            raise CorruptPageError(f"page {leaf_id} should be a leaf")
        pos = pf.find_position(frame, key, self.cfg)
        if pos < pf.get_count(frame) and pf.key_at(frame, pos, self._rec) == key:
            off = HEADER_SIZE + pos * self._rec + pf.KEY_SIZE
            return bytes(frame[off:off + self._value_size])
        return None

    # insert

    def _coerce_value(self, value) -> bytes:
        vs = self._value_size
        n = len(value)
        if n == vs:
            return value
        if n > vs:
            raise ValueError(f"value of {n} bytes exceeds payload size {vs}")
        return bytes(value) + bytes(vs - n)

    def _load_leaf(self, key: int):
        path = self._path
        leaf_id = self._descend(key, path)
        wf = self.pool.load_for_write(leaf_id)
        if wf[6] != _LEAF:
            raise CorruptPageError(f"page {leaf_id} should be a leaf")
        count = pf.get_count(wf)
        path.counts[path.depth - 1] = count
        pos = pf.find_position(wf, key, self.cfg)
        found = pos < count and pf.key_at(wf, pos, self._rec) == key
        return leaf_id, wf, count, pos, found

    def put(self, key: int, value=b"") -> None:
        """Insert a new record.  Raises DuplicateKeyError if ``key`` exists."""
        self._check_key(key)
        value = self._coerce_value(value)
        leaf_id, wf, count, pos, found = self._load_leaf(key)
        if found:
            raise DuplicateKeyError(key)
        if count < self._leaf_cap:
            pf.move_slots(wf, pos + 1, pos, count - pos, self._rec)
            pf.write_record(wf, pos, key, value, self.cfg)
            pf.set_count(wf, count + 1)
            self.pool.write_through(leaf_id)
        else:
            self._precheck_split()
            self._split_insert(key, value)
        self.record_count += 1

    insert = put

    def _precheck_split(self) -> None:
        """Refuse a split that cannot complete, before anything is written."""
        path = self._path
        levels = 0
        for level in range(path.depth - 1, -1, -1):
            cap = self._leaf_cap if level == path.depth - 1 else self._interior_cap
            if path.counts[level] < cap:
                break
            levels += 1
        grows = levels == path.depth
        if grows and self.height >= MAX_HEIGHT:
            raise TreeFullError(f"tree already has the maximum height {MAX_HEIGHT}")
        need = levels + (1 if grows else 0)
        avail = self.store.pages_available()
        if avail is not None and avail < need:
            raise StoreFullError(f"split needs {need} pages, {avail} available")

    def _split_insert(self, key: int, value) -> None:
        """Insert into the full leaf held in the write frame, splitting upward.

        ``value`` is the record payload at the leaf level and the right child
        page id at interior levels.
        """
        pool = self.pool
        path = self._path
        wf = pool.write_view
        level = path.depth - 1
        page_id = path.page_ids[level]
        leaf = True
        while True:
            count = pf.get_count(wf)
            cap = self._leaf_cap if leaf else self._interior_cap
            if count < cap:
                pos = pf.find_position(wf, key, self.cfg)
                pf.move_slots(wf, pos + 1, pos, count - pos, ENTRY_SIZE)
                pf.write_entry(wf, pos, key, value)
                pf.set_count(wf, count + 1)
                pool.write_through(page_id)
                return
            mid = count // 2
            pos = pf.find_position(wf, key, self.cfg)
            right_id = self.store.allocate_page()
            if leaf:
                key = self._split_leaf(wf, page_id, right_id, pos, mid, count, key, value)
            else:
                key = self._split_interior(wf, page_id, right_id, pos, mid, count, key, value)
            value = right_id
            leaf = False
            if level == 0:
                self._grow_root(page_id, key, right_id)
                return
            level -= 1
            page_id = path.page_ids[level]
            pool.load_for_write(page_id)

    def _split_leaf(self, wf, left_id, right_id, pos, mid, count, key, value) -> int:
        rec = self._rec
        write_through = self.pool.write_through
        if pos < mid:
            off = HEADER_SIZE + mid * rec
            self._temp_view[:rec] = wf[off:off + rec]
            pf.move_slots(wf, pos + 1, pos, mid - pos, rec)
            pf.write_record(wf, pos, key, value, self.cfg)
            pf.set_count(wf, mid + 1)
            write_through(left_id)

            pf.set_page_id(wf, right_id)
            wf[HEADER_SIZE:HEADER_SIZE + rec] = self._temp_view[:rec]
            pf.move_slots(wf, 1, mid + 1, count - mid - 1, rec)
            pf.set_count(wf, count - mid)
            write_through(right_id)
        else:
            pf.set_count(wf, mid)
            write_through(left_id)

            pf.set_page_id(wf, right_id)
            pf.move_slots(wf, 0, mid, pos - mid, rec)
            pf.write_record(wf, pos - mid, key, value, self.cfg)
            pf.move_slots(wf, pos - mid + 1, pos, count - pos, rec)
            pf.set_count(wf, count - mid + 1)
            write_through(right_id)
        return pf.key_at(wf, 0, rec)

    def _split_interior(self, wf, left_id, right_id, pos, mid, count, key, child) -> int:
        write_through = self.pool.write_through
        if pos < mid:
            off = HEADER_SIZE + mid * ENTRY_SIZE
            temp = self._temp_view[:ENTRY_SIZE]
            temp[:] = wf[off:off + ENTRY_SIZE]
            pf.move_slots(wf, pos + 1, pos, mid - pos, ENTRY_SIZE)
            pf.write_entry(wf, pos, key, child)
            pf.set_count(wf, mid + 1)
            write_through(left_id)

            promoted, mid_child = pf._ENTRY.unpack_from(temp, 0)
            pf.set_page_id(wf, right_id)
            pf.set_leftmost(wf, mid_child)
            pf.move_slots(wf, 0, mid + 1, count - mid - 1, ENTRY_SIZE)
            pf.set_count(wf, count - mid - 1)
            write_through(right_id)
            return promoted

        pf.set_count(wf, mid)
        write_through(left_id)

        pf.set_page_id(wf, right_id)
        if pos == mid:
            # the inserted key itself is the middle of the combined sequence
            promoted = key
            pf.set_leftmost(wf, child)
            pf.move_slots(wf, 0, mid, count - mid, ENTRY_SIZE)
        else:
            promoted, mid_child = pf.read_entry(wf, mid)
            pf.set_leftmost(wf, mid_child)
            pf.move_slots(wf, 0, mid + 1, pos - mid - 1, ENTRY_SIZE)
            pf.write_entry(wf, pos - mid - 1, key, child)
            pf.move_slots(wf, pos - mid, pos, count - pos, ENTRY_SIZE)
        pf.set_count(wf, count - mid)
        write_through(right_id)
        return promoted

    def _grow_root(self, left_id: int, key: int, right_id: int) -> None:
        new_root = self.store.allocate_page()
        wf = self.pool.write_view
        pf.init_node(wf, new_root, NodeKind.INTERIOR, leftmost_child=left_id)
        pf.write_entry(wf, 0, key, right_id)
        pf.set_count(wf, 1)
        self.pool.pin_root(new_root)
        self.pool.write_through(new_root)
        self.root = new_root
        self.height += 1
        self._write_meta()

    # delete

    def remove(self, key: int) -> None:
        """Delete ``key``'s record.  Underfull leaves are left as they are."""
        self._check_key(key)
        leaf_id, wf, count, pos, found = self._load_leaf(key)
        if not found:
            raise KeyNotFoundError(key)
        pf.move_slots(wf, pos, pos + 1, count - pos - 1, self._rec)
        pf.set_count(wf, count - 1)
        self.pool.write_through(leaf_id)
        self.record_count -= 1

    delete = remove

    # range scan

    def range(self, low: int = 0, high: int = MAX_KEY) -> Iterator[tuple[int, bytes]]:
        """Yield ``(key, value)`` for ``low <= key <= high`` in ascending order.

        The tree has no sibling links; the cursor climbs back through the
        recorded path to reach the next leaf.  Mutating the tree while
        iterating is not supported.
        """
        if low > high:
            raise ValueError("low must not exceed high")
        fetch = self.pool.fetch
        cfg = self.cfg
        rec = self._rec
        path = ActivePath()
        leaf_id = self._descend(low, path)
        depth = path.depth
        start_key = low
        while True:
            frame = fetch(leaf_id)
            count = pf.get_count(frame)
            pos = pf.find_position(frame, start_key, cfg) if start_key is not None else 0
            batch = []
            done = False
            for i in range(pos, count):
                k, v = pf.read_record(frame, i, cfg)
                if k > high:
                    done = True
                    break
                batch.append((k, v))
            yield from batch
            if done:
                return
            start_key = None
            level = depth - 2
            while level >= 0:
                frame = fetch(path.page_ids[level])
                slot = path.slots[level] + 1
                if slot <= pf.get_count(frame):
                    if pf.key_at(frame, slot - 1, ENTRY_SIZE) > high:
                        return
                    path.slots[level] = slot
                    page_id = pf.child_at(frame, slot)
                    for lv in range(level + 1, depth - 1):
                        path.page_ids[lv] = page_id
                        path.slots[lv] = 0
                        page_id = pf.child_at(fetch(page_id), 0)
                    leaf_id = page_id
                    break
                level -= 1
            else:
                return

    def items(self) -> Iterator[tuple[int, bytes]]:
        return self.range(0, MAX_KEY)

    # structure

    def walk(self) -> Iterator[NodeInfo]:
        """Breadth-first listing of every node, read through the pool."""
        queue = deque([(self.root, 0)])
        while queue:
            page_id, level = queue.popleft()
            frame = self.pool.fetch(page_id)
            hdr = pf.decode_header(frame, self.cfg)
            if hdr.kind == NodeKind.LEAF:
                keys = tuple(pf.key_at(frame, i, self._rec) for i in range(hdr.count))
                yield NodeInfo(level, page_id, hdr.kind, keys)
            else:
                entries = [pf.read_entry(frame, i) for i in range(hdr.count)]
                keys = tuple(k for k, _ in entries)
                children = (hdr.leftmost_child,) + tuple(c for _, c in entries)
                yield NodeInfo(level, page_id, hdr.kind, keys, children)
                queue.extend((c, level + 1) for c in children)

    def verify(self) -> int:
        """Check the search-tree invariants; return the number of records found.

        Checks: header page ids, strictly ascending keys, every key inside the
        bounds set by its ancestors' separators, leaves exactly at the bottom
        level, interiors everywhere above, and the record total.
        """
        bounds = {self.root: (0, MAX_KEY + 1)}
        total = 0
        for node in self.walk():
            lo, hi = bounds.pop(node.page_id)
            expect_leaf = node.level == self.height - 1
            if (node.kind == NodeKind.LEAF) != expect_leaf:
                raise CorruptPageError(f"page {node.page_id}: wrong kind at level {node.level}")
            frame = self.pool.fetch(node.page_id)
            if pf.get_page_id(frame) != node.page_id:
                raise CorruptPageError(f"page {node.page_id}: header names {pf.get_page_id(frame)}")
            keys = node.keys
            if any(a >= b for a, b in zip(keys, keys[1:])):
                raise CorruptPageError(f"page {node.page_id}: keys not strictly ascending")
            if keys and not (lo <= keys[0] and keys[-1] < hi):
                raise CorruptPageError(f"page {node.page_id}: keys escape [{lo}, {hi})")
            if node.kind == NodeKind.LEAF:
                total += len(keys)
                continue
            edges = (lo,) + keys + (hi,)
            for i, child in enumerate(node.children):
                if child in bounds or child == NO_PAGE:
                    raise CorruptPageError(f"page {node.page_id}: bad child pointer {child}")
                bounds[child] = (edges[i], edges[i + 1])
        if total != self.record_count:
            raise CorruptPageError(f"found {total} records, metadata says {self.record_count}")
        return total
