"""Closed-loop discrete-event simulation of clients, transaction manager,
buffering manager, clustering manager and disk."""
from __future__ import annotations

import csv
import dataclasses
import heapq
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .clustering.base import ReorgCost, ReorgRates
from .clustering.cactis import recluster, recluster_cost
from .clustering.ck import CkParams, apply_pending_conversions, on_attribute_update, place_object
from .clustering.orion import cluster_all, cluster_message_cost, place_new, read_object
from .generator import SchemaParams, generate_initial_db
from .object_model import Database, Impl
from .storage import BufferPool, DiskModel, FetchOutcome, Placement
from .workload import Access, Transaction, TransactionMix, TxKind, resolve, sample_transaction

ALGORITHMS = ("cactis", "orion", "ck")


class InvalidParams(ValueError):
    pass


class UnknownParam(KeyError):
    pass


@dataclass
class SimParams:
    # static parameters
    RCC: float = 0.5
    IMLVL: int = 10
    IWDSIZE: int = 4
    ICPU: float = 2.0
    RMACC: float = 0.0001
    RMTEST: float = 0.0007
    IPGSIZE: int = 2048
    RSEEK: float = 28.0
    RLATENCY: float = 8.33
    RTRANSFER: float = 1.28
    # dynamic parameters
    RAVGTHINK: float = 4.0
    NCL: int = 20
    IAVGVER: float = 3
    RPSUPER: float = 0.9
    RPCOMP: float = 0.5
    RPEQUI: float = 0.1
    INOBJ: int = 400
    IAVGASIZE: float = 1
    IAVGNATTR: float = 10
    IBUFF: int = 10
    IMD: int = 5
    ISEGSIZE: int = 5
    ITHRESHOLD: int = 25
    ISCALEF: float = 0.5
    ISPLIT: bool = True
    PT: tuple[float, ...] | None = None  # PT1..PT15; None: default mix of ALGORITHM
    SIMTIME: float = 10800.0
    # run control
    ALGORITHM: str = "ck"
    DISTRIBUTION: str = "uniform"
    CLIENT_MODE: str = "stream"
    SEED: int = 0

    def mix(self) -> TransactionMix:
        if self.PT is None:
            return TransactionMix.for_algorithm(self.ALGORITHM)
        return TransactionMix(tuple(self.PT))

    def schema_params(self) -> SchemaParams:
        return SchemaParams(self.NCL, self.IAVGVER, self.RPSUPER, self.RPCOMP,
                            self.RPEQUI, self.IAVGNATTR, self.IAVGASIZE)

    def disk(self) -> DiskModel:
        return DiskModel(self.RSEEK, self.RLATENCY, self.RTRANSFER)

    def validate(self) -> "SimParams":
        bad = []
        if self.ALGORITHM not in ALGORITHMS:
            bad.append(f"ALGORITHM={self.ALGORITHM!r} (choose {', '.join(ALGORITHMS)})")
        if self.DISTRIBUTION not in ("uniform", "normal"):
            bad.append(f"DISTRIBUTION={self.DISTRIBUTION!r} (uniform or normal)")
        if self.CLIENT_MODE not in ("stream", "clients"):
            bad.append(f"CLIENT_MODE={self.CLIENT_MODE!r} (stream or clients)")
        for key in ("RCC", "RMACC", "RMTEST", "RSEEK", "RLATENCY", "RTRANSFER", "SIMTIME", "ICPU"):
            if getattr(self, key) < 0:
                bad.append(f"{key} must be >= 0")
        for key in ("IMLVL", "IWDSIZE", "IPGSIZE", "IMD", "ISEGSIZE", "NCL"):
            if getattr(self, key) < 1:
                bad.append(f"{key} must be >= 1")
        if self.RAVGTHINK <= 0:
            bad.append("RAVGTHINK must be > 0")
        if self.INOBJ < 0 or self.IBUFF < 0:
            bad.append("INOBJ and IBUFF must be >= 0")
        if not 0 <= self.ITHRESHOLD <= 255:
            bad.append("ITHRESHOLD must lie in 0-255")
        for key in ("RPSUPER", "RPCOMP", "RPEQUI", "ISCALEF"):
            if not 0 <= getattr(self, key) <= 1:
                bad.append(f"{key} must lie in 0-1")
        if self.IAVGVER < 1 or self.IAVGNATTR < 1 or self.IAVGASIZE < 1:
            bad.append("IAVGVER, IAVGNATTR and IAVGASIZE must be >= 1")
        if self.PT is not None:
            if len(self.PT) != 15:
                bad.append(f"PT1-PT15: expected 15 values, got {len(self.PT)}")
            elif abs(sum(self.PT) - 1.0) > 1e-9:
                off = [f"PT{i}" for i, (p, d) in enumerate(
                    zip(self.PT, TransactionMix.for_algorithm(self.ALGORITHM).pt), 1) if p != d]
                bad.append(f"PT1-PT15 sum to {sum(self.PT):.6g}, not 1 (changed: {', '.join(off) or 'none'})")
            elif any(p < 0 for p in self.PT):
                bad.append("PT values must be >= 0")
        if bad:
            raise InvalidParams("; ".join(bad))
        return self


_SCALAR_KEYS = [f.name for f in dataclasses.fields(SimParams) if f.name != "PT"]
PARAM_KEYS = tuple(_SCALAR_KEYS[:-4] + [f"PT{i}" for i in range(1, 16)] + _SCALAR_KEYS[-4:])


def _coerce(key: str, text: str):
    default = getattr(SimParams, key)
    if isinstance(default, bool):
        low = text.strip().lower()
        if low in ("on", "true", "yes", "1"):
            return True
        if low in ("off", "false", "no", "0"):
            return False
        raise InvalidParams(f"{key}: expected ON or OFF, got {text!r}")
    if isinstance(default, int):
        try:
            return int(text)
        except ValueError:
            value = float(text)
            if not value.is_integer():
                raise InvalidParams(f"{key}: expected an integer, got {text!r}") from None
            return int(value)
    if isinstance(default, float):
        return float(text)
    return text.strip().lower() if key in ("ALGORITHM", "DISTRIBUTION", "CLIENT_MODE") else text.strip()


def with_values(params: SimParams, values: dict[str, str | float]) -> SimParams:
    """Copy of ``params`` with Table-named keys overridden (PTn included)."""
    updates = {}
    for key, value in values.items():
        key = key.strip().upper()
        if key.startswith("PT") and key[2:].isdigit() and 1 <= int(key[2:]) <= 15:
            updates.setdefault("_pt", {})[int(key[2:])] = float(value)
        elif key == "READPCT":
            updates["_read"] = float(value)
        elif key in _SCALAR_KEYS:
            updates[key] = _coerce(key, str(value)) if isinstance(value, str) else value
        else:
            raise UnknownParam(key)
    pts = updates.pop("_pt", None)
    read = updates.pop("_read", None)
    out = dataclasses.replace(params, **updates)
    if pts:
        base = list(out.PT if out.PT is not None else TransactionMix.for_algorithm(out.ALGORITHM).pt)
        for i, p in pts.items():
            base[i - 1] = p
        out = dataclasses.replace(out, PT=tuple(base))
    if read is not None:
        out = with_read_fraction(out, read / 100 if read > 1 else read)
    return out


def with_read_fraction(params: SimParams, read: float) -> SimParams:
    """Spread ``read`` evenly over PT1-PT12 and shift the rest between
    Editing and Object Creation in their default proportion."""
    base = params.mix().pt
    if not 0 <= read <= 1 - base[14]:
        raise InvalidParams(f"read fraction {read} leaves no room for reclustering")
    writes = 1.0 - read - base[14]
    edit_share = base[12] / (base[12] + base[13])
    pt = (read / 12,) * 12 + (writes * edit_share, writes * (1 - edit_share), base[14])
    return dataclasses.replace(params, PT=pt)


def parse_config(text: str, base: SimParams | None = None) -> SimParams:
    """Flat ``KEY = value`` lines; ``#`` starts a comment."""
    values = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParams(f"line {n}: expected KEY = value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = value
    return with_values(base or SimParams(), values).validate()


def load_config(path: str | Path) -> SimParams:
    return parse_config(Path(path).read_text())


@dataclass
class MetricsReport:
    transactions: int = 0
    mean_response_ms: float | None = None
    transaction_ios: int = 0
    clustering_time_ms: float = 0.0
    clustering_ios: int = 0
    max_pages: int = 0
    throughput: float = 0.0
    reclusterings: int = 0
    objects: int = 0
    buffer_hits: int = 0
    buffer_misses: int = 0
    buffer_evictions: int = 0
    dirty_writes: int = 0
    disk_ios: int = 0

    METRICS = ("mean_response_ms", "transaction_ios", "clustering_time_ms",
               "clustering_ios", "max_pages", "throughput")


@dataclass
class Job:
    seq: int
    kind: TxKind
    issued: float
    client: int = 0
    started: float | None = None
    done: float | None = None
    ios: int = 0


@dataclass
class RunLog:
    """Per-run record used by :func:`summarize`."""

    simtime_ms: float = 0.0
    jobs: list[Job] = field(default_factory=list)
    reorgs: list[tuple[float, float]] = field(default_factory=list)
    transaction_ios: int = 0
    clustering_ios: int = 0
    clustering_time_ms: float = 0.0
    max_pages: int = 0
    objects: int = 0
    buffer_hits: int = 0
    buffer_misses: int = 0
    buffer_evictions: int = 0
    dirty_writes: int = 0
    disk_ios: int = 0


def summarize(log: RunLog) -> MetricsReport:
    regular = [j for j in log.jobs if j.kind is not TxKind.RECLUSTERING
               and j.done is not None and j.done <= log.simtime_ms]
    rep = MetricsReport(
        transactions=len(regular),
        transaction_ios=log.transaction_ios,
        clustering_time_ms=log.clustering_time_ms,
        clustering_ios=log.clustering_ios,
        max_pages=log.max_pages,
        reclusterings=len(log.reorgs),
        objects=log.objects,
        buffer_hits=log.buffer_hits,
        buffer_misses=log.buffer_misses,
        buffer_evictions=log.buffer_evictions,
        dirty_writes=log.dirty_writes,
        disk_ios=log.disk_ios,
    )
    if regular:
        rep.mean_response_ms = math.fsum(j.done - j.issued for j in regular) / len(regular)
    if log.simtime_ms > 0:
        rep.throughput = len(regular) / (log.simtime_ms / 1000.0)
    return rep


_ISSUE, _DONE = 0, 1


class Simulation:
    """One run. Random streams (database, think times, transaction kinds,
    resolution) are independent children of ``SEED`` so that different
    algorithms see the same workload for the same seed."""

    def __init__(self, params: SimParams):
        self.p = params.validate()
        ss = np.random.SeedSequence(params.SEED)
        db_ss, think_ss, kind_ss, resolve_ss = ss.spawn(4)
        self.rng_think = np.random.default_rng(think_ss)
        self.rng_kind = np.random.default_rng(kind_ss)
        self.rng_resolve = np.random.default_rng(resolve_ss)
        self.mix = params.mix()
        self.rates = ReorgRates(params.RMTEST, params.RMACC, params.IWDSIZE)
        self.ck = CkParams(params.ITHRESHOLD, params.ISCALEF, params.ISPLIT).validate()
        self.algorithm = params.ALGORITHM
        self.buffer = BufferPool(params.IBUFF, params.disk())
        self.log = RunLog(simtime_ms=params.SIMTIME * 1000.0)
        self.unwritten: set[int] = set()  # pages built in memory, never stored

        ck_mode = self.algorithm == "ck"
        self.placement = Placement(params.IPGSIZE)
        on_create = self._ck_initial if ck_mode else None
        self.db: Database = generate_initial_db(
            params.schema_params(), params.INOBJ, np.random.default_rng(db_ss),
            ck_mode=ck_mode, on_create=on_create, word_size=params.IWDSIZE,
        )
        if self.algorithm == "orion":
            self.placement = cluster_all(self.db, params.ISEGSIZE, params.IPGSIZE)
        elif self.algorithm == "cactis":
            # no statistics yet: objects stored in creation order
            for oid in self.db.oids():
                self._append(oid)
            self.unwritten.clear()  # the initial base is already stored
        self.log.max_pages = len(self.placement.nonempty_pages())

        self._events: list = []
        self._eseq = 0
        self._jseq = 0
        self.queue: list[Job] = []
        self.busy = False
        self.outstanding = 0
        self.waiting_on: dict[int, Job | None] = {}
        self.stalled: set[int] = set()

    # ---------------------------------------------------------- placement
    def _ck_initial(self, db: Database, oid: int) -> None:
        place_object(db, oid, self.placement, self.ck)

    def _append(self, oid: int) -> int:
        size = self.db.size_of(oid)
        pages = self.placement.pages
        last = max(pages) if pages else None
        if last is None or not pages[last].fits(size):
            last = self.placement.new_page().page_id
            self.unwritten.add(last)
        self.placement.assign(oid, size, last)
        return last

    def _track_pages(self) -> None:
        self.log.max_pages = max(self.log.max_pages, len(self.placement.nonempty_pages()))

    # ----------------------------------------------------------- buffer io
    def _touch(self, page_id: int, write: bool = False) -> FetchOutcome:
        if page_id in self.unwritten:
            self.unwritten.discard(page_id)
            return self.buffer.write_new(page_id)
        return self.buffer.fetch(page_id, write=write)

    def _read(self, oid: int, write: bool = False) -> FetchOutcome:
        pid = self.placement.page_of(oid)
        if self.algorithm == "orion":
            return read_object(self.buffer, self.placement, oid, write=write)
        return self._touch(pid, write)

    # -------------------------------------------------------- transactions
    def _words(self, oid: int, attr: int | None) -> int:
        cls = self.db.class_of(oid)
        obj = self.db.get(oid)
        if obj.size_override is not None or not cls.attr_sizes:
            return self.rates.words(self.db.size_of(oid))
        if attr is None:
            return sum(cls.attr_sizes)
        return cls.attr_sizes[attr % len(cls.attr_sizes)]

    def _access(self, a: Access) -> tuple[float, FetchOutcome]:
        p = self.p
        out = FetchOutcome()
        if a.via is not None:
            self.db.record_crossing(a.via)
        self.db.record_access(a.oid)
        out += self._read(a.oid, write=a.write)
        obj = self.db.get(a.oid)
        # attributes implemented by reference are looked up on the ancestor
        slots = obj.attributes if a.attr is None else [s for s in obj.attributes if s.attr_index == a.attr]
        targets = []
        for s in slots:
            if s.is_reference and s.target in self.placement:
                if a.write:
                    on_attribute_update(s, self.ck)
                elif s.target not in targets:
                    targets.append(s.target)
        for t in targets:
            out += self._read(t)
        if a.write and any(s.convert_pending for s in slots):
            apply_pending_conversions(self.db, [a.oid])
        time = p.RCC + self._words(a.oid, a.attr) * p.RMACC + a.compares * p.RMTEST
        return time + out.time_ms, out

    def _create(self, txn: Transaction) -> tuple[float, FetchOutcome, FetchOutcome]:
        """Place the new object; returns (cluster time, cluster io, 0)."""
        oid = txn.created
        cl = FetchOutcome()
        cl_time = 0.0
        if self.algorithm == "ck":
            before = set(self.placement.pages)
            res = place_object(self.db, oid, self.placement, self.ck)
            fresh = set(self.placement.pages) - before
            self.unwritten |= fresh
            for pid in sorted(res.touched - fresh):
                cl += self._touch(pid)
            for pid in sorted(res.written - {res.page_id}):
                cl += self._touch(pid, write=True)
            ops = len(res.touched) + 1 + (res.split.ops if res.split else 0)
            cl_time = cl.time_ms + ops * self.p.RMTEST + 2 * len(res.moved) * self.p.RMACC
        elif self.algorithm == "orion":
            # segment pages are allocated on disk when the segment is opened
            place_new(self.db, self.placement, oid, self.p.ISEGSIZE)
        else:
            self._append(oid)
        self._track_pages()
        return cl_time, cl, FetchOutcome()

    def execute_transaction(self, txn: Transaction) -> tuple[float, int]:
        """Run the accesses of ``txn``; returns (service time ms, disk ios)."""
        service = 0.0
        ios = 0
        if txn.kind is TxKind.OBJECT_CREATION and txn.created is not None:
            cl_time, cl, _ = self._create(txn)
            service += cl_time
            self.log.clustering_ios += cl.ios
            self.log.clustering_time_ms += cl_time
        for a in txn.accesses:
            t, out = self._access(a)
            service += t
            ios += out.ios
        self.log.transaction_ios += ios
        return service, ios

    def _reorganize(self) -> ReorgCost:
        old = self.placement
        first = old.next_page_id
        if self.algorithm == "cactis":
            new = recluster(self.db, self.p.IPGSIZE, first_page=first)
            cost = recluster_cost(self.db, old, new, self.buffer, self.rates)
        else:
            new = cluster_all(self.db, self.p.ISEGSIZE, self.p.IPGSIZE, first_page=first)
            cost = cluster_message_cost(self.db, old, new, self.buffer, self.rates)
        self.buffer.discard(old.pages)
        self.unwritten -= set(old.pages)
        self.placement = new
        self._track_pages()
        self.log.clustering_ios += cost.io
        self.log.clustering_time_ms += cost.time_ms
        return cost

    # --------------------------------------------------------------- events
    def _push(self, time: float, kind: int, data) -> None:
        heapq.heappush(self._events, (time, self._eseq, kind, data))
        self._eseq += 1

    def _think(self) -> float:
        return float(self.rng_think.exponential(self.p.RAVGTHINK)) * 1000.0

    def _issue(self, now: float, client: int) -> None:
        kind = sample_transaction(self.mix, self.rng_kind)
        self._jseq += 1
        job = Job(self._jseq, kind, now, client)
        self.log.jobs.append(job)
        regular = kind is not TxKind.RECLUSTERING
        if regular:
            self.outstanding += 1
        immediate = not self.busy and not self.queue
        self.queue.append(job)
        if regular and immediate:
            self.waiting_on[client] = job
        elif self.outstanding < self.p.IMLVL:
            self._push(now + self._think(), _ISSUE, client)
        else:
            self.stalled.add(client)
        self._start(now)

    def _start(self, now: float) -> None:
        if self.busy or not self.queue or now > self.log.simtime_ms:
            return
        job = self.queue.pop(0)
        job.started = now
        if job.kind is TxKind.RECLUSTERING:
            if self.algorithm == "ck":
                service = 0.0
            else:
                cost = self._reorganize()
                service = cost.time_ms
                job.ios = cost.io
                self.log.reorgs.append((now, now + service))
        else:
            txn = resolve(job.kind, self.db, self.rng_resolve, self.p.IMD,
                          self.p.DISTRIBUTION, ck_mode=self.algorithm == "ck")
            service, job.ios = self.execute_transaction(txn)
        self.busy = True
        self._push(now + service, _DONE, job)

    def _done(self, now: float, job: Job) -> None:
        job.done = now
        self.busy = False
        if job.kind is not TxKind.RECLUSTERING:
            self.outstanding -= 1
        for client in sorted(self.waiting_on):
            if self.waiting_on[client] is job:
                del self.waiting_on[client]
                self._push(now + self._think(), _ISSUE, client)
        if self.stalled and self.outstanding < self.p.IMLVL:
            for client in sorted(self.stalled):
                self._push(now + self._think(), _ISSUE, client)
            self.stalled.clear()
        self._start(now)

    def run(self) -> MetricsReport:
        horizon = self.log.simtime_ms
        clients = self.p.IMLVL if self.p.CLIENT_MODE == "clients" else 1
        for c in range(clients):
            self._push(self._think(), _ISSUE, c)
        if self.p.CLIENT_MODE == "clients":
            # every client waits for its own transactions
            self.p = dataclasses.replace(self.p, IMLVL=10**9)
        while self._events:
            time, _, kind, data = heapq.heappop(self._events)
            if time > horizon:
                break
            if kind == _ISSUE:
                self._issue(time, data)
            else:
                self._done(time, data)
        self.log.objects = len(self.db)
        self.log.buffer_hits = self.buffer.hits
        self.log.buffer_misses = self.buffer.misses
        self.log.buffer_evictions = self.buffer.evictions
        self.log.dirty_writes = self.buffer.dirty_writes
        self.log.disk_ios = self.buffer.misses + self.buffer.dirty_writes
        return summarize(self.log)


def run(params: SimParams) -> MetricsReport:
    return Simulation(params).run()


EXTRA_COLUMNS = ("transactions", "reclusterings", "objects", "buffer_hits",
                 "buffer_misses", "buffer_evictions", "dirty_writes")


def csv_header() -> list[str]:
    return list(PARAM_KEYS) + list(MetricsReport.METRICS) + list(EXTRA_COLUMNS)


def csv_row(params: SimParams, report: MetricsReport) -> list[str]:
    pt = params.mix().pt
    row = []
    for key in PARAM_KEYS:
        if key.startswith("PT") and key[2:].isdigit():
            row.append(repr(pt[int(key[2:]) - 1]))
        else:
            value = getattr(params, key)
            row.append(("ON" if value else "OFF") if isinstance(value, bool) else str(value))
    for key in MetricsReport.METRICS + EXTRA_COLUMNS:
        value = getattr(report, key)
        row.append("" if value is None else repr(value) if isinstance(value, float) else str(value))
    return row


def write_csv(rows: Iterable[list[str]], fh=None) -> str:
    buf = fh or io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(csv_header())
    writer.writerows(rows)
    return buf.getvalue() if fh is None else ""
