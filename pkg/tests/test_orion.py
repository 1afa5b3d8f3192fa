import math

import numpy as np

from oocluster.clustering.orion import (
    cluster_all,
    cluster_message_cost,
    hierarchy_members,
    place_new,
    read_object,
)
from oocluster.generator import SchemaParams, generate_initial_db
from oocluster.object_model import ClassDef, Database, ObjectInstance
from oocluster.storage import BufferPool, Placement


def _classes(n=2):
    return [ClassDef(i, f"C{i}", attr_sizes=[1]) for i in range(n)]


def _seg_contents(placement):
    out = []
    for seg in placement.segments.values():
        members = sorted(o for p in seg.pages() for o in placement.pages[p].residents)
        if members:
            out.append(members)
    return sorted(out)


def test_hierarchy_plus_loose_objects():
    db = Database(_classes())
    db.add_object(ObjectInstance(1, 0, size_override=1))
    db.add_object(ObjectInstance(2, 0, size_override=1, composite_parent=1))
    db.add_object(ObjectInstance(3, 0, size_override=1, composite_parent=2))
    db.add_object(ObjectInstance(4, 1, size_override=1))
    db.add_object(ObjectInstance(5, 1, size_override=1))
    pl = cluster_all(db, 2, 5)
    assert _seg_contents(pl) == [[1, 2, 3], [4, 5]]
    # depth first from the root
    assert hierarchy_members(db, 3) == [1, 2, 3]


def test_no_configuration_edges_one_segment_per_class():
    db = Database(_classes(3))
    for oid, cid in enumerate([0, 2, 0, 2, 2], 1):
        db.add_object(ObjectInstance(oid, cid, size_override=1))
    pl = cluster_all(db, 2, 5)
    assert _seg_contents(pl) == [[1, 3], [2, 4, 5]]


def test_large_hierarchy_overflow_chain():
    seg_pages, cap, n = 2, 5, 23
    db = Database(_classes(1))
    db.add_object(ObjectInstance(1, 0, size_override=1))
    for oid in range(2, n + 1):
        db.add_object(ObjectInstance(oid, 0, size_override=1, composite_parent=1))
    pl = cluster_all(db, seg_pages, cap)
    (seg,) = [s for s in pl.segments.values() if s.owner[0] == "hierarchy"]
    excess = n - seg_pages * cap
    assert len(seg.base_pages) == seg_pages
    assert len(seg.overflow_pages) == math.ceil(excess / cap)


def test_cost_empty_db():
    db = Database(_classes(1))
    cost = cluster_message_cost(db, Placement(5), Placement(5), BufferPool(3))
    assert (cost.io, cost.time_ms) == (0, 0)


def test_cost_one_page_two_passes():
    db = Database(_classes(1))
    db.add_object(ObjectInstance(1, 0, size_override=1))
    old = cluster_all(db, 1, 5)
    new = cluster_all(db, 1, 5, first_page=old.next_page_id)
    cost = cluster_message_cost(db, old, new, BufferPool(0))
    assert cost.reads >= 2 and cost.writes == 1


def test_cost_large_buffer_reads_each_old_page_once():
    db = generate_initial_db(SchemaParams(), 120, np.random.default_rng(3))
    old = cluster_all(db, 5, 2048)
    new = cluster_all(db, 5, 2048, first_page=old.next_page_id)
    cost = cluster_message_cost(db, old, new, BufferPool(10_000))
    touched = {p for seg in old.segments.values() for p in seg.base_pages}
    touched |= {old.page_of(o) for o in db.oids()}
    assert cost.reads == len(touched)
    assert cost.writes == len(new.nonempty_pages())


def test_partition_invariants_on_generated_db():
    db = generate_initial_db(SchemaParams(), 400, np.random.default_rng(7))
    pl = cluster_all(db, 5, 2048)
    assert sorted(pl.oids()) == sorted(db.oids())
    for oid in db.oids():
        root = db.composite_root(oid)
        assert pl.segment_of(oid) == pl.segment_of(root)
    assert all(p.used <= p.capacity for p in pl.pages.values())


def test_read_object_loads_segment_and_chain():
    db = Database(_classes(1))
    for oid in range(1, 14):
        db.add_object(ObjectInstance(oid, 0, size_override=1))
    pl = cluster_all(db, 2, 5)
    seg = next(iter(pl.segments.values()))
    last = 13  # on the first overflow page
    assert pl.overflow_depth(pl.page_of(last)) == 1
    buf = BufferPool(0)
    assert read_object(buf, pl, last).io_reads == len(seg.base_pages) + 1
    assert read_object(BufferPool(0), pl, 1).io_reads == len(seg.base_pages)


def test_place_new_follows_composite():
    db = Database(_classes(2))
    db.add_object(ObjectInstance(1, 0, size_override=1))
    db.add_object(ObjectInstance(2, 0, size_override=1, composite_parent=1))
    pl = cluster_all(db, 1, 5)
    db.add_object(ObjectInstance(3, 0, size_override=1, composite_parent=2))
    place_new(db, pl, 3, 1)
    assert pl.segment_of(3) == pl.segment_of(1)
    db.add_object(ObjectInstance(4, 1, size_override=1))
    place_new(db, pl, 4, 1)
    assert pl.segments[pl.segment_of(4)].owner == ("class", 1)
