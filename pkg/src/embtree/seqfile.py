"""Unindexed append-only record file, the baseline a B-tree is compared against.

Records are packed into pages in arrival order using the leaf page layout.
A point query scans pages from the first until the key turns up, so finding
a uniformly chosen record costs about N/2 page reads for N data pages.
"""

from __future__ import annotations

from . import page_format as pf
from .page_format import NodeKind, PageConfig
from .storage import PageStore


class SequentialFile:
    def __init__(self, store: PageStore, cfg: PageConfig | None = None):
        self.store = store
        self.cfg = cfg or PageConfig(page_size=store.page_size)
        self._write = bytearray(self.cfg.page_size)
        self._read = bytearray(self.cfg.page_size)
        self._tail = None
        self.pages: list[int] = []
        self.record_count = 0

    @property
    def num_pages(self) -> int:
        return len(self.pages)

    def append(self, key: int, value=b"") -> None:
        """Add a record to the tail page and write that page immediately."""
        cfg = self.cfg
        value = bytes(value).ljust(cfg.value_size, b"\0")
        if self._tail is None or pf.get_count(self._write) == cfg.leaf_capacity:
            self._tail = self.store.allocate_page()
            self.pages.append(self._tail)
            pf.init_node(self._write, self._tail, NodeKind.LEAF)
        n = pf.get_count(self._write)
        pf.write_record(self._write, n, key, value, cfg)
        pf.set_count(self._write, n + 1)
        self.store.write_page(self._tail, self._write)
        self.record_count += 1

    def find(self, key: int) -> tuple[bytes | None, int]:
        """Linear scan for ``key``; returns ``(value or None, pages read)``."""
        cfg = self.cfg
        reads = 0
        for page_id in self.pages:
            self.store.read_page(page_id, self._read)
            reads += 1
            for i in range(pf.get_count(self._read)):
                if pf.key_at(self._read, i, cfg.record_size) == key:
                    return pf.read_record(self._read, i, cfg)[1], reads
        return None, reads
