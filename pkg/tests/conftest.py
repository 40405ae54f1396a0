import json
import pathlib

import numpy as np
import pytest

from rare_rules import _backend
from rare_rules.dataset import Attribute, AttributeSchema, TransactionSet
from rare_rules.synth import PlantSpec

DATA = pathlib.Path(__file__).parent / "data"


def pytest_report_header(config):
    return f"rare_rules kernel backend: {_backend.BACKEND}"


@pytest.fixture(params=["python", "cython"])
def kernels(request):
    if request.param == "cython":
        if _backend.compiled_kernels is None:
            pytest.skip("compiled kernels not built")
        return _backend.compiled_kernels
    return _backend.python_kernels


@pytest.fixture
def toy_schema():
    return AttributeSchema((Attribute("A", ("a0", "a1")), Attribute("B", ("b0", "b1", "b2")),
                            Attribute("C", ("c0", "c1"))), "y", "1", "0")


@pytest.fixture
def toy_ts(toy_schema):
    # 8 transactions, 3 attributes
    records = [
        ("a0", "b0", "c0"), ("a0", "b0", "c1"), ("a0", "b1", "c0"), ("a1", "b0", "c0"),
        ("a1", "b2", "c1"), ("a0", "b0", "c0"), ("a1", "b1", "c1"), ("a0", "b2", "c0"),
    ]
    labels = [1, 1, 0, 0, 0, 1, 0, 1]
    return TransactionSet.from_records(toy_schema, records, labels)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def load_planted_spec() -> PlantSpec:
    return PlantSpec.from_dict(json.loads((DATA / "planted_spec.json").read_text()))
