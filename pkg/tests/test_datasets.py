import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spthe_cl.datasets import (
    CORRUPTED,
    IR,
    SECTION5_PHI4,
    SECTION5_TIMES,
    SR,
    AsymmetricMatrixError,
    Dataset,
    DatasetRegistry,
    SchemaError,
    build_dataset,
    classify,
    corruption_offset,
    inject_corruption,
    load_registry,
    recorded_noise,
    registry_from_dict,
    registry_to_dict,
    residual,
    richness,
    save_registry,
    section5_registry,
)
from spthe_cl.signal_model import RegressorModel, TrueSystem, section5_model

# Hand-computed data matrices for the benchmark recording times
PHI1 = np.array([[3.0, 0.0, 2.0], [0.0, 2.0, 0.0], [2.0, 0.0, 2.0]])
PHI2 = np.array([[3.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.5]])
ALPHA1 = (5 - math.sqrt(17)) / 2  # lambda_min of [[3, 2], [2, 2]]
ALPHA2 = (3.5 - math.sqrt(10.25)) / 2  # lambda_min of [[3, 1], [1, 0.5]]


@pytest.fixture(scope="module")
def registry():
    return section5_registry()


def test_section5_data_matrices(registry):
    np.testing.assert_allclose(registry[1].data_matrix, PHI1, atol=1e-14)
    np.testing.assert_allclose(registry[2].data_matrix, PHI2, atol=1e-14)
    expected3 = np.zeros((3, 3))
    expected3[0, 0] = 3.0
    np.testing.assert_allclose(registry[3].data_matrix, expected3, atol=1e-14)
    np.testing.assert_array_equal(registry[4].data_matrix, SECTION5_PHI4)


def test_section5_richness(registry):
    assert richness(registry[1]) == pytest.approx(ALPHA1, abs=1e-12)
    assert richness(registry[2]) == pytest.approx(ALPHA2, abs=1e-12)
    assert richness(registry[1]) == pytest.approx(0.44, abs=0.01)
    assert richness(registry[2]) == pytest.approx(0.15, abs=0.01)
    assert abs(richness(registry[3])) < 1e-12
    with pytest.raises(AsymmetricMatrixError):
        richness(registry[4])


def test_section5_partition(registry):
    assert registry.sufficient == {1, 2}
    assert registry.insufficient == {3}
    assert registry.corrupted == {4}
    assert registry[1].kind == SR and registry[3].kind == IR and registry[4].kind == CORRUPTED
    assert registry.uninformative == {3, 4}


def test_build_dataset_sums(registry):
    sys, reg = section5_model()
    ds = registry[2]
    vec = sum(reg(t) * ((math.sin(t) - 1) ** 2 + 0.25 * math.tanh(t)) for t in SECTION5_TIMES[2])
    np.testing.assert_allclose(ds.data_vector, vec, atol=1e-13)
    assert [s.t for s in ds.samples] == list(SECTION5_TIMES[2])


def test_zero_regressor_is_ir():
    sys = TrueSystem(np.array([1.0, 2.0]))
    reg = RegressorModel(2, lambda t: np.zeros(2), 1.0)
    ds = build_dataset(1, [0.0], sys, reg)
    assert np.all(ds.data_matrix == 0) and np.all(ds.data_vector == 0)
    assert ds.kind == IR


def test_build_dataset_errors():
    sys, reg = section5_model()
    with pytest.raises(ValueError):
        build_dataset(1, [], sys, reg)
    with pytest.raises(ValueError):
        build_dataset(1, [0.0, 1.0], sys, reg, noise=[0.0])
    with pytest.raises(ValueError):
        build_dataset(1, [0.0], TrueSystem(np.zeros(2)), reg)


def test_classify_injected():
    base = section5_registry()[1]
    assert classify(inject_corruption(base, np.zeros((3, 3)))).kind == IR
    ident = inject_corruption(base, np.eye(3))
    assert ident.kind == SR and ident.alpha == pytest.approx(1.0)
    assert inject_corruption(base, base.data_matrix).classification == base.classification
    skew = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]) * (1e-3 / math.sqrt(2))
    assert inject_corruption(base, base.data_matrix + skew).kind == CORRUPTED
    assert inject_corruption(base, -np.eye(3)).kind == CORRUPTED
    assert inject_corruption(base, np.diag([1.0, -1.0, 1.0])).kind == CORRUPTED
    with pytest.raises(ValueError):
        inject_corruption(base, np.eye(2))


def test_residual_examples(registry):
    sys, reg = section5_model()
    clean = section5_registry(disturbed=False)
    for q in (1, 2, 3):
        np.testing.assert_allclose(residual(clean[q], sys.theta_star), 0.0, atol=1e-12)
        np.testing.assert_allclose(residual(registry[q], np.zeros(3)), -registry[q].data_vector)
    d = lambda t: 0.25 * math.tanh(t)  # noqa: E731
    expected = -(0.0 * reg(0.0) + d(-math.pi / 2) * reg(-math.pi / 2) + d(-3 * math.pi / 2) * reg(-3 * math.pi / 2))
    np.testing.assert_allclose(residual(registry[1], sys.theta_star), expected, atol=1e-13)
    with pytest.raises(ValueError):
        residual(registry[1], np.zeros(4))


def test_corruption_offset_examples(registry):
    sys, _ = section5_model()
    clean = section5_registry(disturbed=False)
    assert corruption_offset(clean[1], sys.theta_star) == pytest.approx(0.0, abs=1e-12)
    ident = Dataset(9, (), np.eye(3), np.zeros(3), classify(inject_corruption(clean[1], np.eye(3))))
    assert corruption_offset(ident, sys.theta_star) == pytest.approx(math.sqrt(6))
    # brute force: Phi4 theta* - Psi4 with Psi4 from the recorded samples
    psi4 = sum(np.array(s.phi) * s.psi for s in registry[4].samples)
    brute = np.linalg.norm(SECTION5_PHI4 @ sys.theta_star - psi4)
    assert corruption_offset(registry[4], sys.theta_star) == pytest.approx(brute, rel=1e-13)


def test_recorded_noise(registry):
    sys, _ = section5_model()
    for q in (1, 2, 3):
        noise = recorded_noise(registry[q], sys.theta_star)
        np.testing.assert_allclose(noise, [0.25 * math.tanh(t) for t in SECTION5_TIMES[q]], atol=1e-14)


def test_round_trip(tmp_path, registry):
    path = tmp_path / "reg.json"
    save_registry(registry, path)
    loaded = load_registry(path)
    assert loaded.datasets == registry.datasets
    assert (loaded.sufficient, loaded.insufficient, loaded.corrupted) == (
        registry.sufficient, registry.insufficient, registry.corrupted)


def test_schema_errors(tmp_path, registry):
    doc = registry_to_dict(registry)
    bad = json.loads(json.dumps(doc))
    bad["partition"]["corrupted"] = [1, 4]
    bad["partition"]["sufficient"] = [2]
    with pytest.raises(SchemaError):
        registry_from_dict(bad)
    missing = json.loads(json.dumps(doc))
    del missing["datasets"][0]["data_vector"]
    path = tmp_path / "missing.json"
    path.write_text(json.dumps(missing))
    with pytest.raises(SchemaError, match="data_vector"):
        load_registry(path)
    broken = tmp_path / "broken.json"
    broken.write_text('{\n  "format": \n}')
    with pytest.raises(SchemaError, match="line 3"):
        load_registry(broken)


def test_registry_validates_given_partition(registry):
    with pytest.raises(SchemaError):
        DatasetRegistry(dict(registry.datasets), sufficient={1}, insufficient={3}, corrupted={2, 4})
    assert registry.subset([1, 3]).modes == (1, 3)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 6), k=st.integers(1, 8), seed=st.integers(0, 10_000))
def test_random_sample_properties(n, k, seed):
    rng = np.random.default_rng(seed)
    table = rng.normal(size=(k, n))
    theta = rng.normal(size=n)
    reg = RegressorModel(n, lambda t: table[int(t)], float(np.abs(table).sum()))
    ds = build_dataset(1, list(range(k)), TrueSystem(theta), reg)
    # built from samples: never corrupted, residual vanishes at the truth
    assert ds.kind != CORRUPTED
    np.testing.assert_allclose(residual(ds, theta), 0.0, atol=1e-10 * (1 + np.abs(ds.data_matrix).max()))
    alpha = richness(ds)
    if k < n:
        assert abs(alpha) < 1e-9 * max(1.0, np.abs(ds.data_matrix).max())
    v = rng.normal(size=(100, n))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    quad = np.einsum("ij,jk,ik->i", v, ds.data_matrix, v)
    assert np.all(quad >= alpha - 1e-9)
