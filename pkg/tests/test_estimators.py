import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from oocluster.clustering import CactisClusterer, CkClusterer, OrionClusterer, check_capacity, check_database
from oocluster.generator import SchemaParams, generate_initial_db

ESTIMATORS = [
    (CactisClusterer, {"block_capacity": 1024, "min_crossings": 0}),
    (OrionClusterer, {"seg_size_pages": 3, "page_capacity": 1024}),
    (CkClusterer, {"page_capacity": 1024, "iscalef": 0.25, "isplit": False, "ithreshold": 10}),
]


@pytest.fixture(scope="module")
def db():
    return generate_initial_db(SchemaParams(), 150, np.random.default_rng(12), ck_mode=True)


@pytest.mark.parametrize("cls,kw", ESTIMATORS)
def test_get_params_and_clone(cls, kw):
    est = cls(**kw)
    assert {k: est.get_params()[k] for k in kw} == kw
    twin = clone(est)
    assert twin is not est and twin.get_params() == est.get_params()
    est.set_params(page_capacity=512) if "page_capacity" in kw else est.set_params(block_capacity=512)
    assert 512 in est.get_params().values()


@pytest.mark.parametrize("cls,kw", ESTIMATORS)
def test_not_fitted(cls, kw):
    with pytest.raises(NotFittedError):
        cls(**kw).predict([1])


@pytest.mark.parametrize("cls,kw", ESTIMATORS)
def test_fit_predict_labels(cls, kw, db):
    est = cls(**kw)
    labels = est.fit_predict(db)
    assert len(labels) == len(db.oids())
    assert list(est.oids_) == sorted(db.oids())
    assert np.array_equal(est.predict(est.oids_), labels)
    assert est.n_pages_ == len(set(labels.tolist()))


@pytest.mark.parametrize("cls,kw", ESTIMATORS)
def test_input_validation(cls, kw, db):
    with pytest.raises(TypeError):
        cls(**kw).fit([1, 2, 3])
    key = "block_capacity" if cls is CactisClusterer else "page_capacity"
    with pytest.raises(ValueError):
        cls(**{**kw, key: 0}).fit(db)


def test_helpers():
    assert check_capacity(7) == 7
    with pytest.raises(ValueError):
        check_capacity(-1)
    with pytest.raises(ValueError):
        check_capacity("big")
    with pytest.raises(TypeError):
        check_database({})
