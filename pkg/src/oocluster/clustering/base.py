from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.exceptions import NotFittedError

from ..object_model import Database
from ..storage import Placement


@dataclass
class ReorgRates:
    """Memory-operation prices charged by reorganizations (ms)."""

    rmtest: float = 0.0007
    rmacc: float = 0.0001
    word_size: int = 4

    def words(self, size: float) -> int:
        return max(1, int(-(-size // self.word_size)))


@dataclass
class ReorgCost:
    io: int = 0
    reads: int = 0
    writes: int = 0
    time_ms: float = 0.0

    def __add__(self, other: "ReorgCost") -> "ReorgCost":
        return ReorgCost(
            self.io + other.io, self.reads + other.reads,
            self.writes + other.writes, self.time_ms + other.time_ms,
        )


def check_capacity(capacity) -> float:
    if not isinstance(capacity, (int, float, np.number)) or isinstance(capacity, bool) or capacity <= 0:
        raise ValueError(f"capacity must be a positive number, got {capacity!r}")
    return capacity


def check_database(db) -> Database:
    if not isinstance(db, Database):
        raise TypeError(f"expected a Database, got {type(db).__name__}")
    return db


class BaseClusterer(ClusterMixin, BaseEstimator):
    """Common surface: ``fit(db)`` -> ``placement_``; ``labels_`` holds
    the page id of each OID in ``oids_`` order."""

    def _set_labels(self, placement: Placement) -> None:
        self.oids_ = np.array(sorted(placement.oids()), dtype=np.int64)
        self.labels_ = np.array([placement.page_of(o) for o in self.oids_], dtype=np.int64)
        self.n_pages_ = len(placement.nonempty_pages())

    def fit_predict(self, db, y=None, **kwargs):
        return self.fit(db, **kwargs).labels_

    def predict(self, oids) -> np.ndarray:
        if not hasattr(self, "placement_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet")
        return np.array([self.placement_.page_of(int(o)) for o in np.atleast_1d(oids)], dtype=np.int64)
