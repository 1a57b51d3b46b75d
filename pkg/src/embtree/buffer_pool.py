"""Fixed pool of M page frames with write-through and root pinning.

Frame roles:

* frame 0 is the write frame.  Every page modification is composed there and
  written straight to the store; it never satisfies a cached read.
* frame 1 is the read frame (M >= 2).
* frame 2 is pinned to the current root when M >= 3.
* frames 3.. join frame 1 in an LRU set when M > 3.

All frames (plus an optional record-sized scratch slot) are allocated before
:meth:`BufferPool.seal`; the ``post_init_acquisitions`` counter exposes any
acquisition after that point, and should stay at zero.
"""

from __future__ import annotations

from .errors import InvalidConfigError, StoreError
from .page_format import NO_PAGE
from .storage import META_PAGE, PageStore


class Frame:
    __slots__ = ("buf", "view", "page_id", "last_use")

    def __init__(self, size: int):
        self.buf = bytearray(size)
        self.view = memoryview(self.buf).toreadonly()
        self.page_id = NO_PAGE
        self.last_use = -1


class BufferPool:
    def __init__(self, num_frames: int, store: PageStore):
        if num_frames < 2:
            raise InvalidConfigError(f"need at least 2 page frames, got {num_frames}")
        self.store = store
        self.num_frames = num_frames
        self.page_size = store.page_size
        self.acquisitions = 0
        self.post_init_acquisitions = 0
        self._sealed = False

        self.frames = [self._acquire_frame() for _ in range(num_frames)]
        self.write_frame = self.frames[0].buf
        self.write_view = memoryview(self.write_frame)
        self.root_frame = self.frames[2] if num_frames >= 3 else None
        self.lru_frames = [self.frames[1]] + self.frames[3:]
        self._cacheable = self.lru_frames + ([self.root_frame] if self.root_frame else [])
        self.scratch: bytearray | None = None

        self.pinned_root = NO_PAGE
        self.hits = 0
        self.misses = 0
        self._tick = 0
        self.peak_frames_in_use = 1

    def _acquire_frame(self) -> Frame:
        self._note_acquisition()
        return Frame(self.page_size)

    def _note_acquisition(self):
        self.acquisitions += 1
        if self._sealed:
            self.post_init_acquisitions += 1

    def allocate_scratch(self, size: int) -> bytearray:
        """Record-sized scratch slot used while splitting; only one is ever made."""
        if self.scratch is not None:
            raise InvalidConfigError("scratch slot already allocated")
        self._note_acquisition()
        self.scratch = bytearray(size)
        return self.scratch

    def seal(self) -> None:
        self._sealed = True

    # accounting

    @property
    def fetches(self) -> int:
        return self.hits + self.misses

    @property
    def hit_rate(self) -> float:
        return self.hits / self.fetches if self.fetches else 0.0

    def reset_stats(self) -> None:
        self.hits = self.misses = 0

    def frames_in_use(self) -> int:
        # the write frame is permanently reserved
        return 1 + sum(1 for f in self._cacheable if f.page_id != NO_PAGE)

    def _touch(self, frame: Frame) -> None:
        self._tick += 1
        frame.last_use = self._tick

    def _lookup(self, page_id: int) -> Frame | None:
        for f in self._cacheable:
            if f.page_id == page_id:
                return f
        return None

    def _load(self, frame: Frame, page_id: int) -> None:
        frame.page_id = NO_PAGE
        self.store.read_page(page_id, frame.buf)
        frame.page_id = page_id
        n = self.frames_in_use()
        if n > self.peak_frames_in_use:
            self.peak_frames_in_use = n

    # reads

    def fetch(self, page_id: int) -> memoryview:
        """Read-only view of ``page_id``; valid until the next pool call."""
        rf = self.root_frame
        if rf is not None and page_id == self.pinned_root:
            if rf.page_id == page_id:
                self.hits += 1
            else:
                self.misses += 1
                self._load(rf, page_id)
            return rf.view
        victim = None
        for f in self.lru_frames:
            if f.page_id == page_id:
                self.hits += 1
                self._touch(f)
                return f.view
            if victim is None or f.last_use < victim.last_use:
                victim = f
        self.misses += 1
        self._load(victim, page_id)
        self._touch(victim)
        return victim.view

    def load_for_write(self, page_id: int) -> memoryview:
        """Bring ``page_id`` into the write frame, copying from a cached frame if possible."""
        f = self._lookup(page_id)
        if f is not None:
            self.hits += 1
            if f is not self.root_frame:
                self._touch(f)
            self.write_view[:] = f.buf
        else:
            self.misses += 1
            self.store.read_page(page_id, self.write_frame)
        return self.write_view

    # writes

    def write_through(self, page_id: int) -> None:
        """Write the write frame to ``page_id`` now and refresh any cached copy."""
        if page_id == META_PAGE:
            raise StoreError("metadata goes through write_meta")
        self.store.write_page(page_id, self.write_frame)
        for f in self._cacheable:
            if f.page_id == page_id:
                f.buf[:] = self.write_frame
        rf = self.root_frame
        if rf is not None and page_id == self.pinned_root and rf.page_id != page_id:
            rf.buf[:] = self.write_frame
            rf.page_id = page_id

    def pin_root(self, page_id: int) -> None:
        """Dedicate the root frame to ``page_id``; no-op with only two frames."""
        rf = self.root_frame
        if rf is None or page_id == self.pinned_root:
            return
        self.pinned_root = page_id
        if rf.page_id == page_id:
            return
        cached = self._lookup(page_id)
        if cached is not None:
            rf.buf[:] = cached.buf
            cached.page_id = NO_PAGE
            cached.last_use = -1
            rf.page_id = page_id
        else:
            rf.page_id = NO_PAGE

    def read_meta(self) -> memoryview:
        self.store.read_page(META_PAGE, self.write_frame)
        return self.write_view

    def write_meta(self) -> None:
        self.store.write_page(META_PAGE, self.write_frame)

    def invalidate(self) -> None:
        for f in self._cacheable:
            f.page_id = NO_PAGE
            f.last_use = -1
