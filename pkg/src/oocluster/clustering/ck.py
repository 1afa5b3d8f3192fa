"""Dynamic clustering at object-creation time (CK).

Placement picks the cheapest page among those holding objects related to
the new one. A page's cost adds up the frequency-weighted relationships it
would leave remote and, for each inherited attribute, the cheaper of
copying it (storage) or referencing the ancestor (a lookup when the ancestor
lives elsewhere). Full pages may be split greedily along the most costly
arcs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from ..object_model import (
    STRUCTURAL,
    AttributeSlot,
    ClassDef,
    Database,
    Impl,
    RelKind,
)
from ..storage import Placement
from .base import BaseClusterer, check_capacity, check_database


class ObjectTooLarge(ValueError):
    pass


class NodeTooLarge(ValueError):
    pass


class NoCommonAttributes(ValueError):
    pass


@dataclass
class CkParams:
    ithreshold: int = 25
    iscalef: float = 0.5
    isplit: bool = True
    lookup_unit: float = 1.0

    def validate(self) -> "CkParams":
        if not 0 <= self.ithreshold <= 255:
            raise ValueError(f"ithreshold must lie in [0, 255], got {self.ithreshold}")
        if not 0.0 <= self.iscalef <= 1.0:
            raise ValueError(f"iscalef must lie in [0, 1], got {self.iscalef}")
        return self


_TIE_ORDER = (RelKind.CONFIGURATION, RelKind.VERSION, RelKind.EQUIVALENCE)


def choose_initial_relationship(cls: ClassDef) -> RelKind:
    """Most frequently used relationship; ties prefer configuration, then
    version, then equivalence."""
    return max(_TIE_ORDER, key=lambda k: (cls.frequency(k), -_TIE_ORDER.index(k)))


@dataclass
class AttrCost:
    attr_index: int
    copy_cost: float
    ref_cost: float
    choice: Impl


def inherited_slots(db: Database, oid: int) -> list[AttributeSlot]:
    obj = db.objects[oid]
    if obj.version_ancestor is None:
        return []
    return [s for s in obj.attributes if s.target is not None]


def attribute_impl_costs(
    db: Database,
    oid: int,
    params: CkParams,
    placement: Placement,
    candidate_page: int | None,
) -> list[AttrCost]:
    """Copy vs reference cost of every inherited attribute of ``oid`` if it
    were stored on ``candidate_page`` (``None`` for a fresh page)."""
    slots = inherited_slots(db, oid)
    if not slots:
        raise NoCommonAttributes(f"object {oid} inherits no attribute values")
    obj = db.objects[oid]
    sizes = db.classes[obj.class_id].attr_sizes
    out = []
    for slot in slots:
        target_page = placement.page_of(slot.target) if slot.target in placement else None
        remote = target_page is None or target_page != candidate_page
        ref_cost = params.lookup_unit if remote else 0.0
        copy_cost = params.iscalef * sizes[slot.attr_index]
        choice = Impl.COPY if copy_cost <= ref_cost else Impl.REFERENCE
        out.append(AttrCost(slot.attr_index, copy_cost, ref_cost, choice))
    return out


def _inheritance_cost(costs: Iterable[AttrCost]) -> float:
    return sum(min(c.copy_cost, c.ref_cost) for c in costs)


@dataclass
class SplitResult:
    subset_a: list[int] = field(default_factory=list)
    subset_b: list[int] = field(default_factory=list)
    broken_arcs: list[tuple[int, int, float]] = field(default_factory=list)
    c_total: float = 0.0
    unplaced: list[int] = field(default_factory=list)
    ops: int = 0

    @property
    def ok(self) -> bool:
        return not self.unplaced


def page_split(
    nodes: dict[int, float],
    arcs: Iterable[tuple[int, int, float]],
    capacity: float,
) -> SplitResult:
    """Greedy two-way partition of a page's dependency graph.

    Arcs are taken by decreasing cost. Two unvisited endpoints go together
    into A, else into B, else the arc breaks. When one endpoint is already
    placed the other joins it if it fits, else the arc breaks. An arc whose
    endpoints sit in different subsets is broken. Nodes left over (no arcs,
    or never co-located) go to the first subset with room.
    """
    for n, size in nodes.items():
        if size > capacity:
            raise NodeTooLarge(f"node {n} ({size}) exceeds capacity {capacity}")
    res = SplitResult()
    where: dict[int, str] = {}
    room = {"A": capacity, "B": capacity}
    members = {"A": res.subset_a, "B": res.subset_b}

    def put(n, side):
        where[n] = side
        room[side] -= nodes[n]
        members[side].append(n)

    def broken(arc):
        res.broken_arcs.append(arc)
        res.c_total += arc[2]

    ordered = sorted(arcs, key=lambda a: (-a[2], min(a[0], a[1]), max(a[0], a[1])))
    for arc in ordered:
        res.ops += 1
        head, tail, _ = arc
        if head not in nodes or tail not in nodes:
            continue
        h, t = where.get(head), where.get(tail)
        if h is None and t is None:
            need = nodes[head] + nodes[tail]
            if need <= room["A"]:
                put(head, "A"), put(tail, "A")
            elif need <= room["B"]:
                put(head, "B"), put(tail, "B")
            else:
                broken(arc)
        elif h is None or t is None:
            side = h or t
            loose = head if h is None else tail
            if nodes[loose] <= room[side]:
                put(loose, side)
            else:
                broken(arc)
        elif h != t:
            broken(arc)
    for n in sorted(nodes):
        if n in where:
            continue
        res.ops += 1
        if nodes[n] <= room["A"]:
            put(n, "A")
        elif nodes[n] <= room["B"]:
            put(n, "B")
        else:
            res.unplaced.append(n)
    return res


@dataclass
class CkPlacement:
    page_id: int
    touched: set[int] = field(default_factory=set)
    written: set[int] = field(default_factory=set)
    split: SplitResult | None = None
    moved: list[int] = field(default_factory=list)


def _relatives(db: Database, oid: int, placement: Placement) -> list[tuple[int, RelKind, float]]:
    obj = db.objects[oid]
    cls = db.classes[obj.class_id]
    out = []
    for e in db.edges_of(oid):
        if e.kind not in STRUCTURAL:
            continue
        other = e.other(oid)
        if other in placement:
            out.append((other, e.kind, cls.frequency(e.kind)))
    return out


def page_costs(
    db: Database, oid: int, placement: Placement, params: CkParams
) -> tuple[dict[int, float], float]:
    """Total cost of every candidate page and of a fresh page."""
    rels = _relatives(db, oid, placement)
    slots = inherited_slots(db, oid)
    # candidates: relatives along the initial relationship, then the pages
    # that inheritance (augmented frequencies) points at
    init = choose_initial_relationship(db.class_of(oid))
    pages = {placement.page_of(r) for r, kind, _ in rels if kind is init}
    pages |= {placement.page_of(s.target) for s in slots if s.target in placement}
    remote_all = sum(w for _, _, w in rels) * params.lookup_unit
    costs = {}
    for pid in pages:
        affinity = remote_all - sum(w for r, _, w in rels if placement.page_of(r) == pid) * params.lookup_unit
        inherit = _inheritance_cost(attribute_impl_costs(db, oid, params, placement, pid)) if slots else 0.0
        costs[pid] = affinity + inherit
    fresh = remote_all
    if slots:
        fresh += _inheritance_cost(attribute_impl_costs(db, oid, params, placement, None))
    return costs, fresh


def _finalize_attributes(db: Database, oid: int, placement: Placement, params: CkParams, page_id: int) -> None:
    if not inherited_slots(db, oid):
        return
    by_index = {c.attr_index: c for c in attribute_impl_costs(db, oid, params, placement, page_id)}
    for slot in db.objects[oid].attributes:
        cost = by_index.get(slot.attr_index)
        if cost is not None:
            slot.implementation = cost.choice
    db.sync_inheritance(oid)


def _split_arcs(db: Database, nodes: Iterable[int]) -> list[tuple[int, int, float]]:
    nodes = set(nodes)
    seen = set()
    arcs = []
    for n in nodes:
        for e in db.edges_of(n):
            other = e.other(n)
            if other in nodes and id(e) not in seen:
                seen.add(id(e))
                arcs.append((e.a, e.b, e.lookup_cost))
    return arcs


def place_object(
    db: Database,
    oid: int,
    placement: Placement,
    params: CkParams,
    log: list | None = None,
) -> CkPlacement:
    """Place a newly created object, splitting a full best page when that
    breaks less than settling for the next best candidate."""
    size = db.size_of(oid)
    if size > placement.page_capacity:
        raise ObjectTooLarge(f"object {oid} ({size}) exceeds page capacity {placement.page_capacity}")
    costs, fresh_cost = page_costs(db, oid, placement, params)
    result = CkPlacement(page_id=-1, touched=set(costs))

    def emit(event, pid, cost):
        if log is not None:
            log.append((event, pid, cost))

    def settle(pid, cost, event="place"):
        placement.assign(oid, size, pid)
        _finalize_attributes(db, oid, placement, params, pid)
        result.page_id = pid
        result.written.add(pid)
        emit(event, pid, cost)
        return result

    def fresh():
        return settle(placement.new_page().page_id, fresh_cost, "fresh")

    if not costs:
        # nothing related is stored yet: the object opens its own page
        return fresh()

    ordered = sorted(costs, key=lambda p: (costs[p], p))
    for pid in ordered:
        emit("candidate", pid, costs[pid])
    if not params.isplit:
        for pid in ordered:
            if placement.pages[pid].fits(size):
                return settle(pid, costs[pid])
            emit("skip", pid, costs[pid])
        return fresh()

    best = ordered[0]
    if placement.pages[best].fits(size):
        return settle(best, costs[best])
    emit("skip", best, costs[best])
    next_best, next_cost = None, fresh_cost
    for pid in ordered[1:]:
        if placement.pages[pid].fits(size):
            next_best, next_cost = pid, costs[pid]
            break
    nodes = dict(placement.pages[best].residents)
    nodes[oid] = size
    split = page_split(nodes, _split_arcs(db, nodes), placement.page_capacity)
    if split.ok and split.c_total < next_cost:
        other = placement.new_page()
        for n in split.subset_b:
            if n != oid:
                placement.move(n, other.page_id)
                result.moved.append(n)
        result.split = split
        result.written |= {best, other.page_id}
        emit("split", best, split.c_total)
        return settle(best if oid in split.subset_a else other.page_id, split.c_total)
    if next_best is not None:
        return settle(next_best, next_cost)
    return fresh()


def on_attribute_update(slot: AttributeSlot, params: CkParams) -> AttributeSlot:
    """Count an update of a referenced attribute; past ``ithreshold``
    updates the slot is flagged for conversion to a copy."""
    if not slot.is_reference:
        return slot
    slot.update_counter += 1
    if slot.update_counter > params.ithreshold:
        slot.convert_pending = True
    return slot


def apply_pending_conversions(db: Database, oids: Iterable[int] | None = None) -> list[int]:
    """Turn flagged reference slots into copies; returns the objects changed."""
    changed = []
    for oid in (db.oids() if oids is None else oids):
        obj = db.objects[oid]
        hit = False
        for slot in obj.attributes:
            if slot.is_reference and slot.convert_pending:
                slot.implementation = Impl.COPY
                slot.convert_pending = False
                hit = True
        if hit:
            db.sync_inheritance(oid)
            changed.append(oid)
    return changed


class CkClusterer(BaseClusterer):
    """Estimator wrapper: ``fit(db)`` places every object in creation (OID)
    order into an empty set of pages.

    Fitted attributes: ``placement_``, ``labels_``, ``log_``.
    """

    def __init__(self, page_capacity: float = 2048, iscalef: float = 0.5,
                 isplit: bool = True, ithreshold: int = 25, lookup_unit: float = 1.0):
        self.page_capacity = page_capacity
        self.iscalef = iscalef
        self.isplit = isplit
        self.ithreshold = ithreshold
        self.lookup_unit = lookup_unit

    def params(self) -> CkParams:
        return CkParams(self.ithreshold, self.iscalef, self.isplit, self.lookup_unit).validate()

    def fit(self, db: Database, y=None):
        check_database(db)
        check_capacity(self.page_capacity)
        params = self.params()
        self.placement_ = Placement(self.page_capacity)
        self.log_ = []
        for oid in sorted(db.oids()):
            place_object(db, oid, self.placement_, params, log=self.log_)
        self._set_labels(self.placement_)
        return self
