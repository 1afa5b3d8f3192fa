"""Statistics-driven greedy block packing (Cactis)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

from ..object_model import Database
from ..storage import BufferPool, FetchOutcome, Placement
from .base import BaseClusterer, ReorgCost, ReorgRates, check_capacity, check_database


class ObjectTooLarge(ValueError):
    pass


def greedy_blocks(
    oids: Iterable[int],
    size_of: Callable[[int], float],
    access_count_of: Callable[[int], int],
    links_of: Callable[[int], Iterable[tuple[int, int]]],
    capacity: float,
    min_crossings: int = 1,
    log: list | None = None,
) -> list[list[int]]:
    """Pack objects into blocks.

    A block is seeded with the most accessed unassigned object, then grows
    by the unassigned neighbour reached over the most crossed relationship
    of any member. It closes when no neighbour is left or the best one does
    not fit. Ties go to the lowest OID. ``links_of(oid)`` yields
    ``(neighbour, crossing_count)`` pairs; links crossed fewer than
    ``min_crossings`` times are ignored.
    """
    oids = sorted(oids)
    for oid in oids:
        if size_of(oid) > capacity:
            raise ObjectTooLarge(f"object {oid} ({size_of(oid)}) exceeds block capacity {capacity}")
    order = sorted(oids, key=lambda o: (-access_count_of(o), o))
    assigned: set[int] = set()
    blocks: list[list[int]] = []
    cursor = 0
    while len(assigned) < len(oids):
        while order[cursor] in assigned:
            cursor += 1
        seed = order[cursor]
        block = [seed]
        used = size_of(seed)
        assigned.add(seed)
        if log is not None:
            log.append(("seed", len(blocks), seed))
        while True:
            best = None
            for member in block:
                for other, count in links_of(member):
                    if other in assigned or count < min_crossings:
                        continue
                    key = (-count, other)
                    if best is None or key < best:
                        best = key
            if best is None:
                break
            cand = best[1]
            if used + size_of(cand) > capacity:
                if log is not None:
                    log.append(("full", len(blocks), cand))
                break
            block.append(cand)
            used += size_of(cand)
            assigned.add(cand)
            if log is not None:
                log.append(("add", len(blocks), cand))
        blocks.append(block)
    return blocks


def recluster(
    db: Database, block_capacity: float, min_crossings: int = 1,
    log: list | None = None, first_page: int = 1,
) -> Placement:
    """Reorganize the whole database into fresh blocks (one page each)."""

    def links(oid):
        return ((e.other(oid), e.crossing_count) for e in db.edges_of(oid))

    blocks = greedy_blocks(
        db.oids(), db.size_of, lambda o: db.objects[o].access_count, links,
        block_capacity, min_crossings=min_crossings, log=log,
    )
    placement = Placement(block_capacity, first_page)
    for block in blocks:
        page = placement.new_page()
        for oid in block:
            placement.assign(oid, db.size_of(oid), page.page_id)
    return placement


def recluster_cost(
    db: Database,
    placement_old: Placement,
    placement_new: Placement,
    buffer: BufferPool,
    rates: ReorgRates | None = None,
) -> ReorgCost:
    """Replay the reorganization against stored data through ``buffer``.

    Access counts live with the objects, so each new block starts with a
    scan, in storage order, of the pages still holding unassigned objects to
    find the most accessed one. Each object moved into the block is then
    read from its old page. Finished blocks are written once. Memory time
    covers the comparisons of the scans and the word moves; counter
    maintenance is not charged.
    """
    rates = rates or ReorgRates()
    out = FetchOutcome()
    compares = 0
    words = 0
    live = {pid: len(page.residents) for pid, page in placement_old.pages.items() if page.residents}
    for page in list(placement_new.pages.values()):
        if not page.residents:
            continue
        for pid in [p for p in live if live[p]]:
            out += buffer.fetch(pid)
            compares += live[pid]
        for oid in page.residents:
            old_pid = placement_old.page_of(oid)
            out += buffer.fetch(old_pid)
            compares += max(1, len(db.edges_of(oid))) if oid in db else 1
            words += 2 * rates.words(page.residents[oid])
            live[old_pid] -= 1
        out += buffer.write_new(page.page_id)
    out += buffer.flush(placement_new.pages)
    time_ms = out.time_ms + compares * rates.rmtest + words * rates.rmacc
    return ReorgCost(io=out.ios, reads=out.io_reads, writes=out.io_writes, time_ms=time_ms)


class CactisClusterer(BaseClusterer):
    """Estimator wrapper: ``fit(db)`` packs the database into blocks.

    Fitted attributes: ``placement_``, ``labels_`` (block index per OID, in
    ``oids_`` order), ``log_``.
    """

    def __init__(self, block_capacity: float = 2048, min_crossings: int = 1):
        self.block_capacity = block_capacity
        self.min_crossings = min_crossings

    def fit(self, db: Database, y=None):
        check_database(db)
        check_capacity(self.block_capacity)
        self.log_ = []
        self.placement_ = recluster(db, self.block_capacity, self.min_crossings, log=self.log_)
        self._set_labels(self.placement_)
        return self
