"""Schema, object graph and usage statistics.

Objects are vertices; structural relationships (version, configuration,
equivalence) and inheritance dependencies are undirected edges shared by
both endpoints, so reciprocity holds by construction.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Iterator, TextIO

COUNTER_MAX = 2**63 - 1


class ModelError(ValueError):
    pass


class DuplicateOid(ModelError):
    pass


class DanglingReference(ModelError):
    pass


class UnknownOid(KeyError):
    pass


class UnknownEdge(KeyError):
    pass


class UnknownClass(ModelError):
    pass


class CounterOverflow(OverflowError):
    pass


class RelKind(enum.Enum):
    VERSION = "version"
    CONFIGURATION = "configuration"
    EQUIVALENCE = "equivalence"
    INHERITANCE = "inheritance"

    @classmethod
    def parse(cls, text: str) -> "RelKind":
        try:
            return cls(text.lower())
        except ValueError:
            raise ModelError(f"unknown relationship kind {text!r}") from None


STRUCTURAL = (RelKind.VERSION, RelKind.CONFIGURATION, RelKind.EQUIVALENCE)


@dataclass
class ClassDef:
    class_id: int
    name: str
    attr_sizes: list[int]
    superclass: int | None = None
    components: list[int] = field(default_factory=list)
    equivalent: int | None = None
    version_ancestor_class: int | None = None
    version_descendant_class: int | None = None
    freq_version: float = 0.0
    freq_configuration: float = 0.0
    freq_equivalence: float = 0.0
    # set on the component side; a class is a component of at most one class
    component_of: int | None = None

    @property
    def attr_count(self) -> int:
        return len(self.attr_sizes)

    def frequency(self, kind: RelKind) -> float:
        if kind is RelKind.VERSION:
            return self.freq_version
        if kind is RelKind.CONFIGURATION:
            return self.freq_configuration
        if kind is RelKind.EQUIVALENCE:
            return self.freq_equivalence
        return 0.0


class Impl(enum.Enum):
    COPY = "copy"
    REFERENCE = "reference"


@dataclass
class AttributeSlot:
    attr_index: int
    implementation: Impl = Impl.COPY
    target: int | None = None  # ancestor oid when implemented by reference
    update_counter: int = 0
    convert_pending: bool = False

    @property
    def is_reference(self) -> bool:
        return self.implementation is Impl.REFERENCE


@dataclass(eq=False)
class RelationshipEdge:
    """Undirected edge. For configuration ``a`` is the composite and ``b``
    the component; for versions ``a`` is the ancestor."""

    kind: RelKind
    a: int
    b: int
    lookup_cost: float = 0.0
    crossing_count: int = 0

    def __post_init__(self):
        if self.lookup_cost < 0:
            raise ModelError("lookup_cost must be >= 0")

    @property
    def endpoints(self) -> tuple[int, int]:
        return self.a, self.b

    def other(self, oid: int) -> int:
        if oid == self.a:
            return self.b
        if oid == self.b:
            return self.a
        raise UnknownOid(oid)

    def key(self) -> tuple[str, int, int]:
        return self.kind.value, min(self.a, self.b), max(self.a, self.b)


@dataclass
class ObjectInstance:
    oid: int
    class_id: int
    version_no: int = 0
    size_override: int | None = None
    attributes: list[AttributeSlot] = field(default_factory=list)
    composite_parent: int | None = None
    components: list[int] = field(default_factory=list)
    equivalents: list[int] = field(default_factory=list)
    version_ancestor: int | None = None
    version_descendant: int | None = None
    access_count: int = 0
    name: str | None = None

    def label(self) -> str:
        return self.name if self.name is not None else f"O{self.oid}"


def object_size(instance: ObjectInstance, cls: ClassDef | None, word_size: int = 4) -> int:
    """Stored size: sum of attribute sizes in words times the word size,
    unless an abstract size override is set."""
    if instance.size_override is not None:
        size = instance.size_override
    else:
        if cls is None or not cls.attr_sizes:
            raise ModelError(f"object {instance.oid} has no attributes and no size override")
        size = sum(cls.attr_sizes) * word_size
    if size <= 0:
        raise ModelError(f"object {instance.oid} must have a positive size")
    return size


class Database:
    """The object base: classes, objects, edges and counters.

    Single-writer; not thread-safe.
    """

    def __init__(self, classes: Iterable[ClassDef] = (), word_size: int = 4):
        self.word_size = word_size
        self.classes: dict[int, ClassDef] = {c.class_id: c for c in classes}
        self.objects: dict[int, ObjectInstance] = {}
        self.edges: list[RelationshipEdge] = []
        self._adj: dict[int, list[RelationshipEdge]] = {}
        self._edge_index: dict[tuple[str, int, int], RelationshipEdge] = {}
        self._extent: dict[int, list[int]] = {}
        self._sizes: dict[int, int] = {}
        self._max_oid = 0
        self.total_accesses = 0
        self.total_crossings = 0

    def __len__(self) -> int:
        return len(self.objects)

    def __contains__(self, oid: int) -> bool:
        return oid in self.objects

    def __iter__(self) -> Iterator[ObjectInstance]:
        return iter(self.objects.values())

    # ------------------------------------------------------------------ build
    def add_class(self, cls: ClassDef) -> None:
        self.classes[cls.class_id] = cls

    def next_oid(self) -> int:
        return self._max_oid + 1

    def add_object(self, instance: ObjectInstance, edge_costs: dict[RelKind, float] | None = None) -> int:
        """Insert ``instance`` and install every reciprocal link it names.

        ``edge_costs`` gives the lookup cost of each new edge kind
        (defaults to 0).
        """
        oid = instance.oid
        if oid <= 0:
            raise ModelError(f"OIDs are positive integers, got {oid}")
        if oid in self._sizes:
            raise DuplicateOid(oid)
        if instance.class_id not in self.classes:
            raise UnknownClass(f"class {instance.class_id} is not in the schema")
        refs = [instance.composite_parent, instance.version_ancestor, instance.version_descendant]
        refs += instance.components + instance.equivalents
        refs += [s.target for s in instance.attributes if s.is_reference]
        for ref in refs:
            if ref is not None and ref not in self.objects:
                raise DanglingReference(f"object {oid} refers to unknown object {ref}")
        if instance.version_ancestor is not None:
            anc = self.objects[instance.version_ancestor]
            if anc.version_descendant is not None:
                raise ModelError(f"object {anc.oid} already has a version descendant")
            if anc.version_no >= instance.version_no:
                raise ModelError("version ancestor must have a smaller version number")
        if instance.version_descendant is not None:
            desc = self.objects[instance.version_descendant]
            if desc.version_ancestor is not None:
                raise ModelError(f"object {desc.oid} already has a version ancestor")
            if desc.version_no <= instance.version_no:
                raise ModelError("version descendant must have a larger version number")
        for c in instance.components:
            if self.objects[c].composite_parent is not None:
                raise ModelError(f"object {c} already belongs to a composite")
        if instance.size_override is None and not self.classes[instance.class_id].attr_sizes:
            raise ModelError(f"class {instance.class_id} has no attributes")

        size =object_size(instance, self.classes[instance.class_id], self.word_size)
        costs = edge_costs or {}
        self.objects[oid] = instance
        self._sizes[oid] = size
        self._adj[oid] = []
        self._extent.setdefault(instance.class_id, []).append(oid)
        self._max_oid = max(self._max_oid, oid)

        if instance.composite_parent is not None:
            parent = self.objects[instance.composite_parent]
            if oid not in parent.components:
                parent.components.append(oid)
            self._link(RelKind.CONFIGURATION, parent.oid, oid, costs)
        for c in instance.components:
            self.objects[c].composite_parent = oid
            self._link(RelKind.CONFIGURATION, oid, c, costs)
        if instance.version_ancestor is not None:
            self.objects[instance.version_ancestor].version_descendant = oid
            self._link(RelKind.VERSION, instance.version_ancestor, oid, costs)
        if instance.version_descendant is not None:
            self.objects[instance.version_descendant].version_ancestor = oid
            self._link(RelKind.VERSION, oid, instance.version_descendant, costs)
        for e in instance.equivalents:
            other = self.objects[e]
            if oid not in other.equivalents:
                other.equivalents.append(oid)
            self._link(RelKind.EQUIVALENCE, e, oid, costs)
        self.sync_inheritance(oid, costs.get(RelKind.INHERITANCE, 0.0))
        return oid

    def _link(self, kind: RelKind, a: int, b: int, costs) -> RelationshipEdge:
        edge = RelationshipEdge(kind, a, b, lookup_cost=costs.get(kind, 0.0))
        k = edge.key()
        if k in self._edge_index:
            return self._edge_index[k]
        self._edge_index[k] = edge
        self.edges.append(edge)
        self._adj[a].append(edge)
        self._adj[b].append(edge)
        return edge

    def sync_inheritance(self, oid: int, cost: float = 0.0) -> RelationshipEdge | None:
        """Keep one inheritance-dependency edge per (object, ancestor) pair
        while at least one attribute is implemented by reference."""
        obj = self.objects[oid]
        targets = {s.target for s in obj.attributes if s.is_reference}
        edge = None
        for t in targets:
            k = (RelKind.INHERITANCE.value, min(oid, t), max(oid, t))
            edge = self._edge_index.get(k)
            if edge is None:
                edge = self._link(RelKind.INHERITANCE, t, oid, {RelKind.INHERITANCE: cost})
        stale = [
            e for e in self._adj[oid]
            if e.kind is RelKind.INHERITANCE and e.b == oid and e.a not in targets
        ]
        for e in stale:
            self._unlink(e)
        return edge

    def _unlink(self, edge: RelationshipEdge) -> None:
        del self._edge_index[edge.key()]
        self.edges.remove(edge)
        self._adj[edge.a].remove(edge)
        self._adj[edge.b].remove(edge)

    # ---------------------------------------------------------------- queries
    def get(self, oid: int) -> ObjectInstance:
        try:
            return self.objects[oid]
        except KeyError:
            raise UnknownOid(oid) from None

    def size_of(self, oid: int) -> int:
        try:
            return self._sizes[oid]
        except KeyError:
            raise UnknownOid(oid) from None

    def class_of(self, oid: int) -> ClassDef:
        return self.classes[self.get(oid).class_id]

    def edges_of(self, oid: int) -> list[RelationshipEdge]:
        try:
            return self._adj[oid]
        except KeyError:
            raise UnknownOid(oid) from None

    def edge(self, kind: RelKind, a: int, b: int) -> RelationshipEdge:
        try:
            return self._edge_index[(kind.value, min(a, b), max(a, b))]
        except KeyError:
            raise UnknownEdge((kind, a, b)) from None

    def extent(self, class_id: int) -> list[int]:
        """OIDs of the instances of ``class_id`` in creation order."""
        return self._extent.get(class_id, [])

    def oids(self) -> list[int]:
        return list(self.objects)

    def neighbors(self, oid: int, kind: RelKind | None = None) -> list[int]:
        return [e.other(oid) for e in self.edges_of(oid) if kind is None or e.kind is kind]

    def composite_root(self, oid: int) -> int:
        obj = self.get(oid)
        while obj.composite_parent is not None:
            obj = self.objects[obj.composite_parent]
        return obj.oid

    def ancestors(self, oid: int) -> list[int]:
        out = []
        obj = self.get(oid)
        while obj.version_ancestor is not None:
            out.append(obj.version_ancestor)
            obj = self.objects[obj.version_ancestor]
        return out

    def descendants(self, oid: int) -> list[int]:
        out = []
        obj = self.get(oid)
        while obj.version_descendant is not None:
            out.append(obj.version_descendant)
            obj = self.objects[obj.version_descendant]
        return out

    # --------------------------------------------------------------- counters
    def record_access(self, oid: int) -> None:
        obj = self.get(oid)
        if obj.access_count >= COUNTER_MAX:
            raise CounterOverflow(f"access counter of {oid}")
        obj.access_count += 1
        self.total_accesses += 1

    def record_crossing(self, edge: RelationshipEdge) -> None:
        if self._edge_index.get(edge.key()) is not edge:
            raise UnknownEdge(edge.key())
        if edge.crossing_count >= COUNTER_MAX:
            raise CounterOverflow(f"crossing counter of {edge.key()}")
        edge.crossing_count += 1
        self.total_crossings += 1

    # ------------------------------------------------------------ text format
    def dump(self, fh: TextIO) -> None:
        """Write ``OID class version size`` records, then ``kind a b cost``."""
        for obj in self.objects.values():
            fh.write(f"{obj.oid} {obj.class_id} {obj.version_no} {self._sizes[obj.oid]}\n")
        for e in self.edges:
            fh.write(f"{e.kind.value} {e.a} {e.b} {e.lookup_cost!r}\n")

    @classmethod
    def load(cls, fh: TextIO) -> "Database":
        """Rebuild a snapshot written by :meth:`dump`.

        Classes are reconstructed as placeholders; sizes become overrides.
        """
        db = cls()
        pending: list[tuple[RelKind, int, int, float]] = []
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if len(parts) != 4:
                raise ModelError(f"line {lineno}: expected 4 fields, got {len(parts)}")
            if parts[0].isdigit():
                oid, class_id, version, size = (int(p) for p in parts)
                if class_id not in db.classes:
                    db.add_class(ClassDef(class_id, f"C{class_id}", attr_sizes=[1]))
                db.add_object(ObjectInstance(oid, class_id, version, size_override=size))
            else:
                pending.append((RelKind.parse(parts[0]), int(parts[1]), int(parts[2]), float(parts[3])))
        for kind, a, b, cost in pending:
            for oid in (a, b):
                if oid not in db.objects:
                    raise DanglingReference(f"edge refers to unknown object {oid}")
            if kind is RelKind.CONFIGURATION:
                db.objects[a].components.append(b)
                db.objects[b].composite_parent = a
            elif kind is RelKind.VERSION:
                db.objects[a].version_descendant = b
                db.objects[b].version_ancestor = a
            elif kind is RelKind.EQUIVALENCE:
                db.objects[a].equivalents.append(b)
                db.objects[b].equivalents.append(a)
            db._link(kind, a, b, {kind: cost})
        return db
