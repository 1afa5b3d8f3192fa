"""Worked clustering examples replayed exactly (abstract size units)."""
from __future__ import annotations

from dataclasses import dataclass, field

from .clustering.cactis import recluster
from .clustering.ck import CkParams, place_object
from .object_model import ClassDef, Database, ObjectInstance, RelKind
from .storage import Placement

# name, size, times accessed
CACTIS_OBJECTS = [
    ("O1", 7, 90),
    ("O2", 2, 200),
    ("O3", 5, 80),
    ("O4", 6, 50),
    ("O5", 4, 300),
    ("O6", 3, 170),
]
CACTIS_LINKS = [("O1", "O3", 30), ("O1", "O4", 80), ("O2", "O3", 70),
                ("O2", "O6", 200), ("O4", "O5", 100), ("O5", "O6", 50)]
CACTIS_CAPACITY = 10
CACTIS_EXPECTED = [["O5", "O4"], ["O2", "O6", "O3"], ["O1"]]

# type: size, (version, configuration, equivalence) access frequencies
CK_TYPES = {
    "Ferrari": (2, (0.20, 0.10, 0.70)),
    "car": (2, (0.65, 0.30, 0.05)),
    "body": (3, (0.25, 0.75, 0.0)),
    "drivetrain": (3, (0.30, 0.70, 0.0)),
}
CK_PAGE_SIZE = 5
# creation order; (relationship, related object, arc lookup cost)
CK_OBJECTS = [
    ("Nice[1].car", None),
    ("F40[0].Ferrari", (RelKind.EQUIVALENCE, "Nice[1].car", 0.4)),
    ("Sport[2].body", (RelKind.CONFIGURATION, "Nice[1].car", 0.9)),
    ("Good[3].drivetrain", (RelKind.CONFIGURATION, "Nice[1].car", 0.6)),
    ("Nice[2].car", (RelKind.VERSION, "Nice[1].car", 0.5)),
    ("Sport[3].body", (RelKind.CONFIGURATION, "Nice[2].car", 0.9)),
]
# page each object lands on when it is created
CK_EXPECTED_NO_SPLIT = {
    "Nice[1].car": 1, "F40[0].Ferrari": 1, "Sport[2].body": 2,
    "Good[3].drivetrain": 3, "Nice[2].car": 4, "Sport[3].body": 4,
}
CK_EXPECTED_SPLIT = {
    "Nice[1].car": 1, "F40[0].Ferrari": 1, "Sport[2].body": 1,
    "Good[3].drivetrain": 3, "Nice[2].car": 4, "Sport[3].body": 4,
}
# final layout with splitting: F40[0].Ferrari was moved out of page #1
CK_EXPECTED_SPLIT_FINAL = {
    "Nice[1].car": 1, "F40[0].Ferrari": 2, "Sport[2].body": 1,
    "Good[3].drivetrain": 3, "Nice[2].car": 4, "Sport[3].body": 4,
}


def cactis_database() -> Database:
    db = Database([ClassDef(0, "object", attr_sizes=[1])])
    ids = {}
    for i, (name, size, accesses) in enumerate(CACTIS_OBJECTS, 1):
        db.add_object(ObjectInstance(i, 0, size_override=size, access_count=accesses, name=name))
        ids[name] = i
    for a, b, crossed in CACTIS_LINKS:
        # generic relationships: modelled as symmetric equivalence links
        db.get(ids[a]).equivalents.append(ids[b])
        db.get(ids[b]).equivalents.append(ids[a])
        edge = db._link(RelKind.EQUIVALENCE, ids[a], ids[b], {})
        edge.crossing_count = crossed
    return db


def run_cactis() -> list[list[str]]:
    db = cactis_database()
    placement = recluster(db, CACTIS_CAPACITY)
    return [[db.get(o).label() for o in block] for block in placement.blocks()]


def _parse_name(name: str) -> tuple[str, int, str]:
    base, typ = name.rsplit(".", 1)
    stem, version = base[:-1].split("[")
    return stem, int(version), typ


def ck_schema() -> list[ClassDef]:
    classes = []
    for i, (typ, (_, (fv, fc, fe))) in enumerate(CK_TYPES.items()):
        classes.append(ClassDef(i, typ, attr_sizes=[1], freq_version=fv,
                                freq_configuration=fc, freq_equivalence=fe))
    return classes


@dataclass
class CkTrace:
    at_creation: dict[str, int] = field(default_factory=dict)
    final: dict[str, int] = field(default_factory=dict)
    log: list = field(default_factory=list)


def run_ck(isplit: bool) -> CkTrace:
    classes = ck_schema()
    by_name = {c.name: c for c in classes}
    db = Database(classes)
    placement = Placement(CK_PAGE_SIZE)
    params = CkParams(isplit=isplit)
    ids: dict[str, int] = {}
    trace = CkTrace()
    for i, (name, link) in enumerate(CK_OBJECTS, 1):
        _, version, typ = _parse_name(name)
        size = CK_TYPES[typ][0]
        obj = ObjectInstance(i, by_name[typ].class_id, version_no=version, size_override=size, name=name)
        costs = {}
        if link is not None:
            kind, other, cost = link
            costs[kind] = cost
            if kind is RelKind.EQUIVALENCE:
                obj.equivalents.append(ids[other])
            elif kind is RelKind.CONFIGURATION:
                obj.composite_parent = ids[other]
            else:
                obj.version_ancestor = ids[other]
        db.add_object(obj, costs)
        ids[name] = i
        placed = place_object(db, i, placement, params, log=trace.log)
        trace.at_creation[name] = placed.page_id
    trace.final = {name: placement.page_of(oid) for name, oid in ids.items()}
    return trace


def check(name: str) -> tuple[bool, str]:
    """Replay one worked example; returns (passed, report)."""
    if name == "cactis":
        got = run_cactis()
        ok = got == CACTIS_EXPECTED
        return ok, f"blocks {got} expected {CACTIS_EXPECTED}"
    if name in ("ck_on", "ck_off"):
        split = name == "ck_on"
        trace = run_ck(split)
        expected = CK_EXPECTED_SPLIT if split else CK_EXPECTED_NO_SPLIT
        lines = []
        ok = True
        for obj, page in expected.items():
            got = trace.at_creation[obj]
            flag = "ok" if got == page else "MISMATCH"
            ok &= got == page
            lines.append(f"{obj}: page #{got} (expected #{page}) {flag}")
        if split:
            ok &= trace.final == CK_EXPECTED_SPLIT_FINAL
            lines.append(f"final layout {trace.final}")
        return ok, "\n".join(lines)
    raise ValueError(f"unknown golden trace {name!r}; choose cactis, ck_on or ck_off")
