import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oocluster.object_model import (
    ClassDef,
    Database,
    DanglingReference,
    DuplicateOid,
    ModelError,
    ObjectInstance,
    RelKind,
    object_size,
)


def _db(nattr=10):
    return Database([ClassDef(0, "C0", attr_sizes=[1] * nattr)])


def test_isolated_object():
    db = _db()
    db.add_object(ObjectInstance(1, 0))
    assert db.get(1).oid == 1
    assert db.edges_of(1) == []


def test_composite_link_is_reciprocal():
    db = _db()
    db.add_object(ObjectInstance(1, 0))
    db.add_object(ObjectInstance(2, 0, composite_parent=1))
    assert db.get(1).components == [2]
    e = db.edge(RelKind.CONFIGURATION, 2, 1)
    assert e is db.edge(RelKind.CONFIGURATION, 1, 2)
    assert e in db.edges_of(1) and e in db.edges_of(2)


def test_dangling_reference_rejected():
    db = _db()
    db.add_object(ObjectInstance(1, 0))
    with pytest.raises(DanglingReference):
        db.add_object(ObjectInstance(3, 0, composite_parent=99))
    assert 3 not in db


def test_duplicate_oid_rejected():
    db = _db()
    db.add_object(ObjectInstance(1, 0))
    with pytest.raises(DuplicateOid):
        db.add_object(ObjectInstance(1, 0))


def test_access_counter_table1_o1():
    # O1 of the Cactis example was accessed 90 times
    db = _db()
    db.add_object(ObjectInstance(1, 0))
    assert db.get(1).access_count == 0
    for _ in range(90):
        db.record_access(1)
    assert db.get(1).access_count == 90


def test_access_and_crossing_counted_independently():
    db = _db()
    db.add_object(ObjectInstance(1, 0))
    db.add_object(ObjectInstance(2, 0, equivalents=[1]))
    e = db.edge(RelKind.EQUIVALENCE, 1, 2)
    for op in ["a", "c", "a", "c", "a"]:
        db.record_access(1) if op == "a" else db.record_crossing(e)
    assert (db.get(1).access_count, e.crossing_count) == (3, 2)


def test_object_size_default_words():
    cls = ClassDef(0, "C", attr_sizes=[1] * 10)
    assert object_size(ObjectInstance(1, 0), cls, word_size=4) == 40


def test_object_size_override():
    assert object_size(ObjectInstance(1, 0, size_override=7), None) == 7


def test_zero_attribute_class_rejected():
    db = Database([ClassDef(0, "empty", attr_sizes=[])])
    with pytest.raises(ModelError):
        db.add_object(ObjectInstance(1, 0))


def test_version_chain_rules():
    db = _db()
    db.add_object(ObjectInstance(1, 0, version_no=1))
    db.add_object(ObjectInstance(2, 0, version_no=2, version_ancestor=1))
    assert db.get(1).version_descendant == 2
    with pytest.raises(ModelError):
        db.add_object(ObjectInstance(3, 0, version_no=3, version_ancestor=1))  # second descendant
    with pytest.raises(ModelError):
        db.add_object(ObjectInstance(4, 0, version_no=1, version_ancestor=2))  # not increasing
    assert db.ancestors(2) == [1] and db.descendants(1) == [2]


def test_dump_load_roundtrip():
    db = _db()
    db.add_object(ObjectInstance(1, 0))
    db.add_object(ObjectInstance(2, 0, composite_parent=1), {RelKind.CONFIGURATION: 0.25})
    db.add_object(ObjectInstance(3, 0, equivalents=[2]), {RelKind.EQUIVALENCE: 0.5})
    buf = io.StringIO()
    db.dump(buf)
    back = Database.load(io.StringIO(buf.getvalue()))
    assert sorted(back.oids()) == [1, 2, 3]
    assert [back.size_of(o) for o in (1, 2, 3)] == [40, 40, 40]
    assert back.edge(RelKind.CONFIGURATION, 1, 2).lookup_cost == 0.25
    assert back.get(2).composite_parent == 1
    assert back.get(3).equivalents == [2]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("pcev"), st.integers(0, 30), st.integers(0, 30)), max_size=40),
       st.lists(st.integers(0, 30), max_size=60))
def test_reciprocity_and_access_tally(links, accesses):
    db = _db(1)
    log = []
    for step, (kind, x, y) in enumerate(links, 1):
        obj = ObjectInstance(step, 0, version_no=step)
        prev = [o for o in db.oids()]
        if prev:
            tgt = prev[x % len(prev)]
            t = db.get(tgt)
            if kind == "p":
                obj.composite_parent = tgt
            elif kind == "e":
                obj.equivalents = [tgt]
            elif kind == "v" and t.version_descendant is None:
                obj.version_ancestor = tgt
        db.add_object(obj)
    for a in accesses:
        if len(db):
            oid = db.oids()[a % len(db)]
            db.record_access(oid)
            log.append(oid)
    # every edge is visible from both ends, once
    for e in db.edges:
        assert db.edges_of(e.a).count(e) == 1
        assert db.edges_of(e.b).count(e) == 1
    for obj in db:
        for c in obj.components:
            assert db.get(c).composite_parent == obj.oid
        for q in obj.equivalents:
            assert obj.oid in db.get(q).equivalents
        if obj.version_ancestor is not None:
            anc = db.get(obj.version_ancestor)
            assert anc.version_descendant == obj.oid
            assert anc.version_no < obj.version_no
    assert sum(o.access_count for o in db) == len(log) == db.total_accesses
