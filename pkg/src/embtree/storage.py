"""Page-granular storage devices with exact I/O accounting.

A store models an SD card behind a flash translation layer: pages are
logically overwritten in place, reads return the last bytes written, and
pages that were allocated but never written read back as zeros.

Page 0 holds the tree metadata; its traffic is tallied separately
(``meta_reads`` / ``meta_writes``) so node I/O can be compared directly
with the published counts.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields

from .errors import InvalidConfigError, PageOutOfRangeError, StoreError, StoreFullError
from .page_format import META_SIZE, peek_page_size

META_PAGE = 0

# Measured SD card rates on the reference hardware (pages per second).
SD_READ_PAGES_PER_S = 345.0
SD_WRITE_PAGES_PER_S = 175.0


@dataclass
class IoCounters:
    reads: int = 0
    writes: int = 0
    meta_reads: int = 0
    meta_writes: int = 0

    def snapshot(self) -> "IoCounters":
        return IoCounters(**{f.name: getattr(self, f.name) for f in fields(self)})

    def __sub__(self, other: "IoCounters") -> "IoCounters":
        return IoCounters(**{f.name: getattr(self, f.name) - getattr(other, f.name)
                             for f in fields(self)})


class PageStore:
    """Base class: bounds checks, allocation cursor, counters, simulated latency.

    Subclasses implement ``_read`` / ``_write`` / ``_flush``.
    """

    def __init__(self, page_size: int, max_pages: int | None = None,
                 read_latency_us: float = 0.0, write_latency_us: float = 0.0):
        if page_size < META_SIZE:
            raise InvalidConfigError(f"page_size must be >= {META_SIZE}")
        self.page_size = page_size
        self.max_pages = max_pages
        self.next_page = 1
        self.counters = IoCounters()
        self.read_latency_us = read_latency_us
        self.write_latency_us = write_latency_us
        self.sim_time_us = 0.0
        self._zero = memoryview(bytes(page_size))

    @classmethod
    def with_sd_latency(cls, *args, **kwargs):
        kwargs.setdefault("read_latency_us", 1e6 / SD_READ_PAGES_PER_S)
        kwargs.setdefault("write_latency_us", 1e6 / SD_WRITE_PAGES_PER_S)
        return cls(*args, **kwargs)

    @property
    def allocated_pages(self) -> int:
        """Number of node pages handed out so far (page 0 excluded)."""
        return self.next_page - 1

    def pages_available(self) -> int | None:
        if self.max_pages is None:
            return None
        return self.max_pages - self.allocated_pages

    def allocate_page(self) -> int:
        if self.max_pages is not None and self.allocated_pages >= self.max_pages:
            raise StoreFullError(f"store full ({self.max_pages} pages)")
        page_id = self.next_page
        self.next_page += 1
        return page_id

    def _check(self, page_id: int, buf) -> None:
        if not 0 <= page_id < self.next_page:
            raise PageOutOfRangeError(f"page {page_id} not allocated (next_page={self.next_page})")
        if len(buf) != self.page_size:
            raise StoreError(f"buffer of {len(buf)} bytes, page_size is {self.page_size}")

    def read_page(self, page_id: int, dest) -> None:
        self._check(page_id, dest)
        self._read(page_id, dest)
        if page_id == META_PAGE:
            self.counters.meta_reads += 1
        else:
            self.counters.reads += 1
        self.sim_time_us += self.read_latency_us

    def write_page(self, page_id: int, src) -> None:
        self._check(page_id, src)
        self._write(page_id, src)
        if page_id == META_PAGE:
            self.counters.meta_writes += 1
        else:
            self.counters.writes += 1
        self.sim_time_us += self.write_latency_us

    def flush(self) -> None:
        self._flush()

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _read(self, page_id, dest):
        raise NotImplementedError

    def _write(self, page_id, src):
        raise NotImplementedError

    def _flush(self):
        pass


class MemoryStore(PageStore):
    """Volatile store; a dict of page images."""

    def __init__(self, page_size: int = 512, **kwargs):
        super().__init__(page_size, **kwargs)
        self._pages: dict[int, bytes] = {}

    def _read(self, page_id, dest):
        dest[:] = self._pages.get(page_id, self._zero)

    def _write(self, page_id, src):
        self._pages[page_id] = bytes(src)

    def image(self) -> bytes:
        """The byte image a FileStore would hold: page 0 then pages 1..N."""
        return b"".join(bytes(self._pages.get(i, self._zero)) for i in range(self.next_page))


class FileStore(PageStore):
    """Store backed by a single file: page ``i`` lives at offset ``i * page_size``.

    The file is opened unbuffered so every ``write_page`` reaches the OS at
    once; ``flush`` adds an fsync.
    """

    def __init__(self, path, page_size: int = 512, *, create: bool = True, **kwargs):
        super().__init__(page_size, **kwargs)
        self.path = os.fspath(path)
        mode = "w+b" if create else "r+b"
        try:
            self._file = open(self.path, mode, buffering=0)
        except OSError as exc:
            raise StoreError(f"cannot open {self.path}: {exc}") from exc
        if not create:
            size = os.fstat(self._file.fileno()).st_size
            self.next_page = max(1, -(-size // page_size))

    @classmethod
    def open(cls, path, page_size: int | None = None, **kwargs) -> "FileStore":
        """Reopen an existing store file, reading the page size from its metadata."""
        if page_size is None:
            try:
                with open(path, "rb") as f:
                    prefix = f.read(META_SIZE)
            except OSError as exc:
                raise StoreError(f"cannot open {path}: {exc}") from exc
            page_size = peek_page_size(prefix)
        return cls(path, page_size, create=False, **kwargs)

    def _read(self, page_id, dest):
        try:
            self._file.seek(page_id * self.page_size)
            n = self._file.readinto(dest) or 0
        except OSError as exc:
            raise StoreError(f"read of page {page_id} failed: {exc}") from exc
        if n < self.page_size:
            memoryview(dest)[n:] = self._zero[n:]

    def _write(self, page_id, src):
        try:
            self._file.seek(page_id * self.page_size)
            n = self._file.write(src)
        except OSError as exc:
            raise StoreError(f"write of page {page_id} failed: {exc}") from exc
        if n != self.page_size:
            raise StoreError(f"short write on page {page_id}: {n} bytes")

    def _flush(self):
        try:
            os.fsync(self._file.fileno())
        except OSError as exc:
            raise StoreError(f"fsync failed: {exc}") from exc

    def close(self):
        if not self._file.closed:
            self._flush()
            self._file.close()
