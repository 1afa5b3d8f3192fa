"""Random class lattice and instance generation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .object_model import (
    AttributeSlot,
    ClassDef,
    Database,
    Impl,
    ObjectInstance,
    RelKind,
)


class InvalidParams(ValueError):
    pass


class EmptySchema(ValueError):
    pass


@dataclass
class SchemaParams:
    ncl: int = 20
    iavgver: float = 3
    rpsuper: float = 0.9
    rpcomp: float = 0.5
    rpequi: float = 0.1
    iavgnattr: float = 10
    iavgasize: float = 1

    def validate(self) -> "SchemaParams":
        if self.ncl < 1:
            raise InvalidParams(f"ncl must be >= 1, got {self.ncl}")
        for name in ("rpsuper", "rpcomp", "rpequi"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise InvalidParams(f"{name} must lie in [0, 1], got {p}")
        for name in ("iavgver", "iavgnattr", "iavgasize"):
            if getattr(self, name) < 1:
                raise InvalidParams(f"{name} must be >= 1, got {getattr(self, name)}")
        return self


def _around(rng: np.random.Generator, avg: float) -> int:
    # uniform integer on [1, 2*avg - 1]; mean is avg
    hi = max(1, int(round(2 * avg - 1)))
    return int(rng.integers(1, hi + 1))


def generate_schema(params: SchemaParams, rng: np.random.Generator) -> list[ClassDef]:
    """Build ``ncl`` classes, each linked only to classes generated before
    it, so superclass and composition links are acyclic by construction.

    Consecutive classes form version lineages whose length is drawn around
    ``iavgver``; versions of a lineage share the same attribute layout.
    """
    params.validate()
    classes: list[ClassDef] = []
    lineage_left = 0
    for i in range(params.ncl):
        sup = rng.random() < params.rpsuper
        sup_pick = int(rng.integers(0, i)) if i > 0 else None
        comp = rng.random() < params.rpcomp
        comp_pick = int(rng.integers(0, i)) if i > 0 else None
        equi = rng.random() < params.rpequi
        equi_pick = int(rng.integers(0, i)) if i > 0 else None
        nattr = _around(rng, params.iavgnattr)
        sizes = [_around(rng, params.iavgasize) for _ in range(nattr)]
        lineage = _around(rng, params.iavgver)

        cls = ClassDef(i, f"C{i}", attr_sizes=sizes)
        if lineage_left > 0:
            prev = classes[i - 1]
            cls.attr_sizes = list(prev.attr_sizes)
            cls.version_ancestor_class = prev.class_id
            prev.version_descendant_class = i
            lineage_left -= 1
        else:
            lineage_left = lineage - 1
        if i > 0 and sup:
            cls.superclass = sup_pick
        if i > 0 and comp:
            cls.component_of = comp_pick
            classes[comp_pick].components.append(i)
        if i > 0 and equi:
            cls.equivalent = equi_pick
            if classes[equi_pick].equivalent is None:
                classes[equi_pick].equivalent = i
        classes.append(cls)

    for cls in classes:
        w = rng.random(3)
        if cls.version_ancestor_class is None and cls.version_descendant_class is None:
            w[0] = 0.0
        if cls.component_of is None and not cls.components:
            w[1] = 0.0
        if cls.equivalent is None:
            w[2] = 0.0
        total = w.sum()
        if total > 0:
            w = w / total
        cls.freq_version, cls.freq_configuration, cls.freq_equivalence = (float(x) for x in w)
    return classes


def draw_edge_costs(rng: np.random.Generator) -> dict[RelKind, float]:
    """Random run-time lookup cost for each kind of edge a new object may get."""
    u = rng.random(4)
    return {
        RelKind.VERSION: float(u[0]),
        RelKind.CONFIGURATION: float(u[1]),
        RelKind.EQUIVALENCE: float(u[2]),
        RelKind.INHERITANCE: float(u[3]),
    }


def create_instance(
    schema: list[ClassDef] | dict[int, ClassDef],
    db: Database,
    rng: np.random.Generator,
    ck_mode: bool = False,
) -> int:
    """Create one object following the instance-generation procedure.

    In ``ck_mode`` every inherited attribute starts implemented by reference
    to the version ancestor; CK placement then decides per attribute whether
    a copy is cheaper.
    """
    classes = list(schema.values()) if isinstance(schema, dict) else list(schema)
    if not classes:
        raise EmptySchema("cannot create an instance without classes")
    for c in classes:
        if c.class_id not in db.classes:
            db.add_class(c)
    cls = classes[int(rng.integers(len(classes)))]
    oid = db.next_oid()
    obj = ObjectInstance(oid, cls.class_id)

    if cls.component_of is not None:
        parents = db.extent(cls.component_of)
        if parents:
            obj.composite_parent = parents[int(rng.integers(len(parents)))]

    ancestor = None
    if cls.version_ancestor_class is not None:
        free = [o for o in db.extent(cls.version_ancestor_class) if db.objects[o].version_descendant is None]
        if free:
            ancestor = db.objects[free[int(rng.integers(len(free)))]]
    if ancestor is not None:
        obj.version_ancestor = ancestor.oid
        obj.version_no = ancestor.version_no + 1
    common = len(db.classes[ancestor.class_id].attr_sizes) if ancestor is not None else 0
    for i in range(cls.attr_count):
        if ck_mode and i < common:
            obj.attributes.append(AttributeSlot(i, Impl.REFERENCE, target=ancestor.oid))
        else:
            obj.attributes.append(AttributeSlot(i))

    equivalent_classes = []
    if cls.equivalent is not None:
        equivalent_classes.append(cls.equivalent)
    equivalent_classes += [c.class_id for c in classes if c.equivalent == cls.class_id and c.class_id != cls.equivalent]
    for ec in equivalent_classes[:1]:
        pool = db.extent(ec)
        if pool:
            obj.equivalents.append(pool[int(rng.integers(len(pool)))])

    return db.add_object(obj, draw_edge_costs(rng))


def generate_initial_db(
    params: SchemaParams,
    inobj: int,
    rng: np.random.Generator,
    ck_mode: bool = False,
    on_create: Callable[[Database, int], None] | None = None,
    word_size: int = 4,
) -> Database:
    """Generate a schema and ``inobj`` instances; OIDs are dense from 1.

    ``on_create`` runs after each object is inserted (CK places objects as
    they are created).
    """
    if inobj < 0:
        raise InvalidParams(f"inobj must be >= 0, got {inobj}")
    schema = generate_schema(params, rng)
    db = Database(schema, word_size=word_size)
    for _ in range(inobj):
        oid = create_instance(schema, db, rng, ck_mode=ck_mode)
        if on_create is not None:
            on_create(db, oid)
    return db
