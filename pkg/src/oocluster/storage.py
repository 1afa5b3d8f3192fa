"""Pages, segments, placements, the disk time model and the FIFO buffer."""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Iterable, Iterator


class StorageError(ValueError):
    pass


class UnknownPage(KeyError):
    pass


class PageOverflow(StorageError):
    pass


@dataclass
class Page:
    page_id: int
    capacity: float
    residents: dict[int, float] = field(default_factory=dict)
    used: float = 0
    dirty: bool = False
    segment_id: int | None = None

    def free(self) -> float:
        return self.capacity - self.used

    def fits(self, size: float) -> bool:
        return self.used + size <= self.capacity

    def __len__(self) -> int:
        return len(self.residents)


@dataclass
class Segment:
    segment_id: int
    size_pages: int
    owner: object = None
    base_pages: list[int] = field(default_factory=list)
    overflow_pages: list[int] = field(default_factory=list)

    def pages(self) -> list[int]:
        return self.base_pages + self.overflow_pages


class Placement:
    """OID -> page mapping with capacity bookkeeping; pages optionally
    grouped into segments with chained overflow pages."""

    def __init__(self, page_capacity: float, first_page: int = 1):
        if page_capacity <= 0:
            raise StorageError("page capacity must be positive")
        self.page_capacity = page_capacity
        self.pages: dict[int, Page] = {}
        self.segments: dict[int, Segment] = {}
        self._where: dict[int, int] = {}
        self._next_page = first_page
        self._next_segment = 1
        self.peak_pages = 0

    @property
    def next_page_id(self) -> int:
        return self._next_page

    # -------------------------------------------------------------- pages
    def new_page(self, segment_id: int | None = None) -> Page:
        page = Page(self._next_page, self.page_capacity, segment_id=segment_id)
        self._next_page += 1
        self.pages[page.page_id] = page
        self.peak_pages = max(self.peak_pages, len(self.pages))
        return page

    def page(self, page_id: int) -> Page:
        try:
            return self.pages[page_id]
        except KeyError:
            raise UnknownPage(page_id) from None

    def drop_page(self, page_id: int) -> None:
        page = self.page(page_id)
        if page.residents:
            raise StorageError(f"page {page_id} still holds objects")
        del self.pages[page_id]
        if page.segment_id is not None:
            seg = self.segments[page.segment_id]
            if page_id in seg.base_pages:
                seg.base_pages.remove(page_id)
            else:
                seg.overflow_pages.remove(page_id)

    def assign(self, oid: int, size: float, page_id: int) -> None:
        if oid in self._where:
            raise StorageError(f"object {oid} is already placed on page {self._where[oid]}")
        page = self.page(page_id)
        if not page.fits(size):
            raise PageOverflow(f"object {oid} ({size}) does not fit page {page_id} ({page.free()} free)")
        page.residents[oid] = size
        page.used += size
        self._where[oid] = page_id

    def remove(self, oid: int) -> int:
        page_id = self._where.pop(oid)
        page = self.pages[page_id]
        page.used -= page.residents.pop(oid)
        return page_id

    def move(self, oid: int, page_id: int) -> None:
        size = self.pages[self._where[oid]].residents[oid]
        old = self.remove(oid)
        try:
            self.assign(oid, size, page_id)
        except PageOverflow:
            self.assign(oid, size, old)
            raise

    def page_of(self, oid: int) -> int:
        return self._where[oid]

    def __contains__(self, oid: int) -> bool:
        return oid in self._where

    def __len__(self) -> int:
        return len(self._where)

    def oids(self) -> Iterator[int]:
        return iter(self._where)

    @property
    def num_pages(self) -> int:
        return len(self.pages)

    def nonempty_pages(self) -> list[int]:
        return [p for p, page in self.pages.items() if page.residents]

    # ----------------------------------------------------------- segments
    def new_segment(self, size_pages: int, owner: object = None, reserve: bool = False) -> Segment:
        """Open a segment; with ``reserve`` its ``size_pages`` base pages are
        allocated at once (fixed-size segment)."""
        seg = Segment(self._next_segment, size_pages, owner)
        self._next_segment += 1
        self.segments[seg.segment_id] = seg
        if reserve:
            for _ in range(size_pages):
                seg.base_pages.append(self.new_page(seg.segment_id).page_id)
        return seg

    def grow_segment(self, segment_id: int) -> Page:
        """Add a page to the segment: a base page while the segment has
        fewer than ``size_pages`` of them, otherwise a chained overflow page."""
        seg = self.segments[segment_id]
        page = self.new_page(segment_id)
        if len(seg.base_pages) < seg.size_pages:
            seg.base_pages.append(page.page_id)
        else:
            seg.overflow_pages.append(page.page_id)
        return page

    def place_in_segment(self, oid: int, size: float, segment_id: int) -> int:
        """First fit over the segment's pages in chain order."""
        seg = self.segments[segment_id]
        for pid in seg.pages():
            if self.pages[pid].fits(size):
                self.assign(oid, size, pid)
                return pid
        page = self.grow_segment(segment_id)
        self.assign(oid, size, page.page_id)
        return page.page_id

    def segment_of(self, oid: int) -> int | None:
        return self.pages[self._where[oid]].segment_id

    def overflow_depth(self, page_id: int) -> int:
        page = self.page(page_id)
        if page.segment_id is None:
            return 0
        return overflow_access_penalty(self.segments[page.segment_id], page_id)

    # ---------------------------------------------------------- text dump
    def dump(self, fh, with_segments: bool = False) -> None:
        for pid, page in self.pages.items():
            for oid in page.residents:
                if with_segments:
                    fh.write(f"{page.segment_id} {pid} {oid}\n")
                else:
                    fh.write(f"{pid} {oid}\n")

    def blocks(self) -> list[list[int]]:
        """Resident OIDs per page, pages in allocation order."""
        return [list(p.residents) for p in self.pages.values() if p.residents]


def overflow_access_penalty(segment: Segment, page_id: int) -> int:
    """Extra descriptor-chasing reads to reach ``page_id``: k for the k-th
    overflow page, 0 for a base page."""
    if page_id in segment.base_pages:
        return 0
    try:
        return segment.overflow_pages.index(page_id) + 1
    except ValueError:
        raise UnknownPage(page_id) from None


@dataclass(frozen=True)
class DiskModel:
    rseek: float = 28.0
    rlatency: float = 8.33
    rtransfer: float = 1.28

    def __post_init__(self):
        if min(self.rseek, self.rlatency, self.rtransfer) < 0:
            raise StorageError("disk timings must be >= 0")

    def access_time(self) -> float:
        return self.rseek + self.rlatency + self.rtransfer


def disk_access_time(model: DiskModel) -> float:
    return model.access_time()


@dataclass
class FetchOutcome:
    io_reads: int = 0
    io_writes: int = 0
    time_ms: float = 0.0

    @property
    def ios(self) -> int:
        return self.io_reads + self.io_writes

    def __iadd__(self, other: "FetchOutcome") -> "FetchOutcome":
        self.io_reads += other.io_reads
        self.io_writes += other.io_writes
        self.time_ms += other.time_ms
        return self


class BufferPool:
    """Page buffer with strict FIFO replacement: the oldest resident page
    is dropped and written back first if it is dirty."""

    def __init__(self, capacity: int, disk: DiskModel | None = None):
        if capacity < 0:
            raise StorageError("buffer capacity must be >= 0")
        self.capacity = capacity
        self.disk = disk or DiskModel()
        self._t = self.disk.access_time()
        self._frames: OrderedDict[int, bool] = OrderedDict()  # page_id -> dirty
        self.hits = 0
        self.misses = 0
        self.evictions = 0
        self.dirty_writes = 0

    def __contains__(self, page_id: int) -> bool:
        return page_id in self._frames

    def __len__(self) -> int:
        return len(self._frames)

    def resident(self) -> list[int]:
        return list(self._frames)

    def is_dirty(self, page_id: int) -> bool:
        return self._frames.get(page_id, False)

    def fetch(self, page_id: int, placement: Placement | None = None, write: bool = False) -> FetchOutcome:
        if placement is not None and page_id not in placement.pages:
            raise UnknownPage(page_id)
        t = self._t
        if page_id in self._frames:
            self.hits += 1
            if write:
                self._frames[page_id] = True
            return FetchOutcome()
        self.misses += 1
        out = FetchOutcome(io_reads=1, time_ms=t)
        if self.capacity == 0:
            if write:
                # nowhere to keep the page: write straight through
                out.io_writes += 1
                out.time_ms += t
                self.dirty_writes += 1
            return out
        if len(self._frames) >= self.capacity:
            out += self._evict()
        self._frames[page_id] = write
        return out

    def mark_dirty(self, page_id: int) -> None:
        if page_id not in self._frames:
            raise UnknownPage(page_id)
        self._frames[page_id] = True

    def write_new(self, page_id: int) -> FetchOutcome:
        """Install a freshly built page (no read needed) as dirty."""
        if page_id in self._frames:
            self._frames[page_id] = True
            return FetchOutcome()
        if self.capacity == 0:
            self.dirty_writes += 1
            return FetchOutcome(io_writes=1, time_ms=self._t)
        out = FetchOutcome()
        if len(self._frames) >= self.capacity:
            out += self._evict()
        self._frames[page_id] = True
        return out

    def _evict(self) -> FetchOutcome:
        victim, dirty = self._frames.popitem(last=False)
        self.evictions += 1
        if dirty:
            self.dirty_writes += 1
            return FetchOutcome(io_writes=1, time_ms=self._t)
        return FetchOutcome()

    def discard(self, page_ids: Iterable[int]) -> None:
        """Forget pages that no longer exist (freed by a reorganization)."""
        for pid in page_ids:
            self._frames.pop(pid, None)

    def flush(self, page_ids: Iterable[int] | None = None) -> FetchOutcome:
        """Write back dirty resident pages (all of them, or only ``page_ids``)."""
        out = FetchOutcome()
        wanted = None if page_ids is None else set(page_ids)
        for pid, dirty in self._frames.items():
            if dirty and (wanted is None or pid in wanted):
                out.io_writes += 1
                out.time_ms += self._t
                self.dirty_writes += 1
                self._frames[pid] = False
        return out

    @property
    def fetches(self) -> int:
        return self.hits + self.misses


def fetch(buffer: BufferPool, page_id: int, placement: Placement | None = None, write: bool = False) -> FetchOutcome:
    """Functional form of :meth:`BufferPool.fetch`."""
    return buffer.fetch(page_id, placement, write=write)
