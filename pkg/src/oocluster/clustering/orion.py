"""Segment-based clustering (ORION): composite hierarchies share a segment,
remaining objects are grouped by class."""
from __future__ import annotations

from ..object_model import Database
from ..storage import BufferPool, FetchOutcome, Placement
from .base import BaseClusterer, ReorgCost, ReorgRates, check_capacity, check_database


def hierarchy_members(db: Database, oid: int) -> list[int]:
    """Whole composite hierarchy containing ``oid``, depth first from its root."""
    root = db.composite_root(oid)
    out = []
    stack = [root]
    while stack:
        cur = stack.pop()
        out.append(cur)
        stack.extend(reversed(db.objects[cur].components))
    return out


def cluster_all(db: Database, seg_size_pages: int, page_capacity: float, first_page: int = 1) -> Placement:
    placement = Placement(page_capacity, first_page)
    done: set[int] = set()
    for oid in sorted(db.oids()):
        if oid in done:
            continue
        members = hierarchy_members(db, oid)
        if len(members) == 1:
            continue
        seg = placement.new_segment(seg_size_pages, owner=("hierarchy", members[0]), reserve=True)
        for m in members:
            placement.place_in_segment(m, db.size_of(m), seg.segment_id)
        done.update(members)
    by_class: dict[int, list[int]] = {}
    for oid in sorted(db.oids()):
        if oid not in done:
            by_class.setdefault(db.objects[oid].class_id, []).append(oid)
    for cid in sorted(by_class):
        seg = placement.new_segment(seg_size_pages, owner=("class", cid), reserve=True)
        for m in by_class[cid]:
            placement.place_in_segment(m, db.size_of(m), seg.segment_id)
    return placement


def class_segment(placement: Placement, class_id: int) -> int | None:
    for seg in placement.segments.values():
        if seg.owner == ("class", class_id):
            return seg.segment_id
    return None


def place_new(db: Database, placement: Placement, oid: int, seg_size_pages: int) -> int:
    """Placement of an object created between two Cluster messages: into
    its composite's hierarchy segment when there is one, otherwise into its
    class segment."""
    obj = db.objects[oid]
    size = db.size_of(oid)
    if obj.composite_parent is not None and obj.composite_parent in placement:
        seg_id = placement.segment_of(obj.composite_parent)
        if seg_id is not None and placement.segments[seg_id].owner[0] == "hierarchy":
            return placement.place_in_segment(oid, size, seg_id)
    seg_id = class_segment(placement, obj.class_id)
    if seg_id is None:
        seg_id = placement.new_segment(seg_size_pages, owner=("class", obj.class_id), reserve=True).segment_id
    return placement.place_in_segment(oid, size, seg_id)


def read_object(buffer: BufferPool, placement: Placement, oid: int, write: bool = False) -> FetchOutcome:
    """Fetch ``oid``: its whole segment is loaded (one read per base page,
    buffered pages excepted), then the overflow chain is followed up to the
    object's page through the segment descriptor."""
    pid = placement.page_of(oid)
    page = placement.pages[pid]
    if page.segment_id is None:
        return buffer.fetch(pid, write=write)
    seg = placement.segments[page.segment_id]
    out = FetchOutcome()
    for base in seg.base_pages:
        out += buffer.fetch(base, write=write and base == pid)
    depth = placement.overflow_depth(pid)
    if depth:
        # descriptor (first base page, resident by now) then the chain
        for hop in seg.overflow_pages[: depth - 1]:
            out += buffer.fetch(hop)
        out += buffer.fetch(pid, write=write)
    return out


def cluster_message_cost(
    db: Database,
    placement_old: Placement,
    placement_new: Placement,
    buffer: BufferPool,
    rates: ReorgRates | None = None,
) -> ReorgCost:
    """Replay a Cluster message against stored data through ``buffer``.

    First pass: every object is visited in OID order and, for each new
    hierarchy, all its members are read. Remaining objects are then grouped
    by class with one scan of the leftovers per class. Second pass: every
    object is read again and rewritten into its new segment.
    """
    rates = rates or ReorgRates()
    out = FetchOutcome()
    compares = 0
    words = 0
    done: set[int] = set()
    oids = sorted(placement_old.oids())
    for oid in oids:
        out += read_object(buffer, placement_old, oid)
        compares += 1
        if oid in done:
            continue
        members = hierarchy_members(db, oid)
        if len(members) == 1:
            continue
        for m in members:
            out += read_object(buffer, placement_old, m)
            compares += 1
        done.update(members)
    leftovers = [o for o in oids if o not in done]
    classes = sorted({db.objects[o].class_id for o in leftovers})
    for cid in classes:
        for oid in leftovers:
            out += read_object(buffer, placement_old, oid)
            compares += 1
        leftovers = [o for o in leftovers if db.objects[o].class_id != cid]
    for pid, page in placement_new.pages.items():
        if not page.residents:
            continue
        for oid in page.residents:
            out += read_object(buffer, placement_old, oid)
            words += 2 * rates.words(page.residents[oid])
        out += buffer.write_new(pid)
    out += buffer.flush(placement_new.pages)
    time_ms = out.time_ms + compares * rates.rmtest + words * rates.rmacc
    return ReorgCost(io=out.ios, reads=out.io_reads, writes=out.io_writes, time_ms=time_ms)


class OrionClusterer(BaseClusterer):
    """Estimator wrapper around :func:`cluster_all`.

    Fitted attributes: ``placement_``, ``labels_`` (page per OID),
    ``segment_labels_`` (segment per OID).
    """

    def __init__(self, seg_size_pages: int = 5, page_capacity: float = 2048):
        self.seg_size_pages = seg_size_pages
        self.page_capacity = page_capacity

    def fit(self, db: Database, y=None):
        check_database(db)
        check_capacity(self.page_capacity)
        if self.seg_size_pages < 1:
            raise ValueError("seg_size_pages must be >= 1")
        self.placement_ = cluster_all(db, self.seg_size_pages, self.page_capacity)
        self._set_labels(self.placement_)
        self.segment_labels_ = [self.placement_.segment_of(int(o)) for o in self.oids_]
        return self
