"""The fifteen transaction types and their resolution into object accesses."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence, TextIO

import numpy as np

from .generator import create_instance
from .object_model import STRUCTURAL, Database, RelationshipEdge, RelKind


class BadMix(ValueError):
    pass


class EmptyDb(ValueError):
    pass


class TxKind(enum.IntEnum):
    NAME_LOOKUP = 1
    RANGE_LOOKUP = 2
    GROUP_COMPONENTS = 3
    GROUP_EQUIVALENTS = 4
    GROUP_DESCENDANTS = 5
    REF_COMPOSITE = 6
    REF_ANCESTORS = 7
    SEQUENTIAL_SCAN = 8
    CLOSURE_VERSION = 9
    CLOSURE_CONFIGURATION = 10
    CLOSURE_EQUIVALENCE = 11
    CLOSURE_RANDOM = 12
    EDITING = 13
    OBJECT_CREATION = 14
    RECLUSTERING = 15

    @property
    def is_write(self) -> bool:
        return self in (TxKind.EDITING, TxKind.OBJECT_CREATION)


READ_KINDS = tuple(TxKind(i) for i in range(1, 13))

_CLOSURE_KIND = {
    TxKind.CLOSURE_VERSION: RelKind.VERSION,
    TxKind.CLOSURE_CONFIGURATION: RelKind.CONFIGURATION,
    TxKind.CLOSURE_EQUIVALENCE: RelKind.EQUIVALENCE,
}


@dataclass(frozen=True)
class TransactionMix:
    pt: tuple[float, ...]

    def __post_init__(self):
        if len(self.pt) != 15:
            raise BadMix(f"a mix needs 15 probabilities, got {len(self.pt)}")
        if any(p < 0 for p in self.pt):
            raise BadMix("probabilities must be >= 0")
        if abs(sum(self.pt) - 1.0) > 1e-9:
            raise BadMix(f"probabilities sum to {sum(self.pt)!r}, not 1")

    @classmethod
    def for_algorithm(cls, algorithm: str, read: float = 0.065, create: float = 0.05) -> "TransactionMix":
        """Default mix: twelve read types at ``read`` each; editing takes
        the rest after creation and reclustering."""
        recluster = {"cactis": 0.0005, "orion": 0.001, "ck": 0.0}[algorithm]
        editing = 1.0 - 12 * read - create - recluster
        return cls((read,) * 12 + (editing, create, recluster))

    def prob(self, kind: TxKind) -> float:
        return self.pt[kind - 1]

    @property
    def write_fraction(self) -> float:
        return self.pt[12] + self.pt[13]


def sample_transaction(mix: TransactionMix, rng: np.random.Generator) -> TxKind:
    """Inverse-CDF draw in type order (one uniform per call)."""
    u = rng.random()
    acc = 0.0
    last = None
    for i, p in enumerate(mix.pt):
        if p <= 0:
            continue
        acc += p
        last = i
        if u < acc:
            return TxKind(i + 1)
    return TxKind(last + 1)


def select_start_object(db: Database, distribution: str, rng: np.random.Generator) -> int:
    """Uniform over OIDs, or a normal law over the OID rank centred on the
    middle of the base (sigma = N/6), clipped to the valid range."""
    n = len(db)
    if n == 0:
        raise EmptyDb("no object to start from")
    oids = db.oids()
    if distribution == "uniform":
        return oids[int(rng.integers(n))]
    if distribution == "normal":
        rank = int(round(rng.normal(n / 2, n / 6)))
        rank = min(max(rank, 1), n)
        return oids[rank - 1]
    raise ValueError(f"unknown distribution {distribution!r}")


@dataclass
class Access:
    oid: int
    write: bool = False
    via: RelationshipEdge | None = None
    attr: int | None = None  # None: all attributes
    compares: int = 0


@dataclass
class Transaction:
    kind: TxKind
    accesses: list[Access] = field(default_factory=list)
    created: int | None = None

    @property
    def oids(self) -> list[int]:
        return [a.oid for a in self.accesses]


def attribute_value(oid: int, attr: int) -> int:
    # synthetic value in [0, 1000)
    return (oid * 2654435761 + attr * 40503 + 12345) % 1000


def _random_class_with_instances(db: Database, rng) -> int:
    populated = sorted(c for c in db.classes if db.extent(c))
    if not populated:
        raise EmptyDb("no populated class")
    return populated[int(rng.integers(len(populated)))]


def _edge_to(db: Database, a: int, b: int, kind: RelKind) -> RelationshipEdge:
    return db.edge(kind, a, b)


def resolve(
    kind: TxKind,
    db: Database,
    rng: np.random.Generator,
    imd: int = 5,
    distribution: str = "uniform",
    ck_mode: bool = False,
) -> Transaction:
    txn = Transaction(kind)
    acc = txn.accesses
    if kind is TxKind.RECLUSTERING:
        return txn
    if kind is TxKind.OBJECT_CREATION:
        oid = create_instance(db.classes, db, rng, ck_mode=ck_mode)
        txn.created = oid
        for e in db.edges_of(oid):
            if e.kind in STRUCTURAL:
                acc.append(Access(e.other(oid), via=e))
        acc.append(Access(oid, write=True))
        return txn

    if kind in (TxKind.RANGE_LOOKUP, TxKind.SEQUENTIAL_SCAN):
        cid = _random_class_with_instances(db, rng)
        nattr = db.classes[cid].attr_count
        attr = int(rng.integers(nattr))
        if kind is TxKind.SEQUENTIAL_SCAN:
            for oid in db.extent(cid):
                acc.append(Access(oid, attr=attr))
            return txn
        lo, hi = sorted(int(v) for v in rng.integers(0, 1000, size=2))
        for oid in db.extent(cid):
            hit = lo <= attribute_value(oid, attr) <= hi
            acc.append(Access(oid, attr=None if hit else attr, compares=2))
        return txn

    start = select_start_object(db, distribution, rng)
    obj = db.get(start)
    if kind is TxKind.NAME_LOOKUP:
        nattr = max(1, len(obj.attributes))
        acc.append(Access(start, attr=int(rng.integers(nattr))))
    elif kind is TxKind.EDITING:
        nattr = max(1, len(obj.attributes))
        attr = int(rng.integers(nattr))
        acc.append(Access(start, attr=attr))
        acc.append(Access(start, write=True, attr=attr))
    elif kind is TxKind.GROUP_COMPONENTS:
        acc.append(Access(start))
        for c in obj.components:
            acc.append(Access(c, via=_edge_to(db, start, c, RelKind.CONFIGURATION)))
    elif kind is TxKind.GROUP_EQUIVALENTS:
        acc.append(Access(start))
        for q in obj.equivalents:
            acc.append(Access(q, via=_edge_to(db, start, q, RelKind.EQUIVALENCE)))
    elif kind is TxKind.GROUP_DESCENDANTS:
        acc.append(Access(start))
        prev = start
        for d in db.descendants(start):
            acc.append(Access(d, via=_edge_to(db, prev, d, RelKind.VERSION)))
            prev = d
    elif kind is TxKind.REF_COMPOSITE:
        acc.append(Access(start))
        if obj.composite_parent is not None:
            p = obj.composite_parent
            acc.append(Access(p, via=_edge_to(db, start, p, RelKind.CONFIGURATION)))
    elif kind is TxKind.REF_ANCESTORS:
        acc.append(Access(start))
        prev = start
        for a in db.ancestors(start):
            acc.append(Access(a, via=_edge_to(db, prev, a, RelKind.VERSION)))
            prev = a
    else:
        depth = int(rng.integers(1, imd + 1))
        acc.append(Access(start, attr=None))
        prev, cur = None, start
        for _ in range(depth):
            rel = _CLOSURE_KIND.get(kind)
            if rel is None:
                rel = STRUCTURAL[int(rng.integers(3))]
            options = [e for e in db.edges_of(cur) if e.kind is rel and e.other(cur) != prev]
            if not options:
                break
            e = options[int(rng.integers(len(options)))]
            prev, cur = cur, e.other(cur)
            acc.append(Access(cur, via=e))
        last = db.get(cur)
        acc[-1].attr = int(rng.integers(max(1, len(last.attributes))))
    return txn


def dump_trace(transactions: Sequence[Transaction], fh: TextIO) -> None:
    """One ``seq kind oid_list`` line per transaction."""
    for seq, txn in enumerate(transactions, 1):
        oids = ",".join(str(o) for o in txn.oids)
        fh.write(f"{seq} {txn.kind.name} {oids or '-'}\n")


def load_trace(fh: TextIO) -> list[tuple[int, TxKind, list[int]]]:
    out = []
    for line in fh:
        if not line.strip():
            continue
        seq, kind, oids = line.split()
        out.append((int(seq), TxKind[kind], [] if oids == "-" else [int(o) for o in oids.split(",")]))
    return out
