"""Recorded datasets, their richness classification, and registry persistence.

A dataset holds recorded samples ``(t_k, phi_k, psi_k)`` together with the
data matrix ``Phi = sum phi_k phi_k'`` and data vector ``Psi = sum phi_k psi_k``.
The matrix can be overridden to model tampering, in which case the samples are
kept for provenance only.

Registry file format (JSON, one document per registry)::

    {
      "format": "spthe-cl-registry",
      "version": 1,
      "dimension": n,
      "datasets": [
        {
          "id": 1,
          "samples": [{"t": ..., "phi": [...], "psi": ...}, ...],
          "data_matrix": [[...], ...],        # row-major, n x n
          "data_vector": [...],
          "classification": {"kind": "SR" | "IR" | "Corrupted", "alpha": ...}
        }, ...
      ],
      "partition": {"sufficient": [...], "insufficient": [...], "corrupted": [...]}
    }

Floats are written with ``repr`` precision, so a save/load round trip is exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .linalg import is_symmetric, min_eigenvalue
from .signal_model import RegressorModel, TrueSystem, section5_model

__all__ = [
    "SR",
    "IR",
    "CORRUPTED",
    "TOL_SR",
    "Sample",
    "Classification",
    "Dataset",
    "DatasetRegistry",
    "AsymmetricMatrixError",
    "SchemaError",
    "build_dataset",
    "richness",
    "classify",
    "inject_corruption",
    "residual",
    "corruption_offset",
    "recorded_noise",
    "save_registry",
    "load_registry",
    "registry_to_dict",
    "registry_from_dict",
    "section5_registry",
    "SECTION5_TIMES",
    "SECTION5_PHI4",
]

SR = "SR"
IR = "IR"
CORRUPTED = "Corrupted"

TOL_SR = 1e-9
SYMMETRY_RTOL = 1e-10

FORMAT_TAG = "spthe-cl-registry"
FORMAT_VERSION = 1


class AsymmetricMatrixError(ValueError):
    """Richness is undefined for a non-symmetric data matrix."""


class SchemaError(ValueError):
    """A registry document is malformed or internally inconsistent."""


@dataclass(frozen=True)
class Sample:
    t: float
    phi: tuple[float, ...]
    psi: float


@dataclass(frozen=True)
class Classification:
    kind: str
    alpha: float = 0.0

    def __str__(self):
        if self.kind == SR:
            return f"SR(alpha={self.alpha:.6g})"
        return self.kind


@dataclass(frozen=True, eq=False)
class Dataset:
    id: int
    samples: tuple[Sample, ...]
    data_matrix: np.ndarray
    data_vector: np.ndarray
    classification: Classification

    def __post_init__(self):
        for name in ("data_matrix", "data_vector"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = self.data_vector.shape[0]
        if self.data_matrix.shape != (n, n):
            raise ValueError(
                f"dataset {self.id}: data matrix shape {self.data_matrix.shape} "
                f"does not match data vector length {n}"
            )

    @property
    def dimension(self) -> int:
        return self.data_vector.shape[0]

    @property
    def kind(self) -> str:
        return self.classification.kind

    @property
    def alpha(self) -> float:
        return self.classification.alpha

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.id == other.id
            and self.samples == other.samples
            and np.array_equal(self.data_matrix, other.data_matrix)
            and np.array_equal(self.data_vector, other.data_vector)
            and self.classification == other.classification
        )

    __hash__ = None


def _classify_matrix(phi: np.ndarray) -> Classification:
    if not is_symmetric(phi, SYMMETRY_RTOL):
        return Classification(CORRUPTED)
    lam = min_eigenvalue(phi)
    if lam < -TOL_SR:
        return Classification(CORRUPTED)
    if lam > TOL_SR:
        return Classification(SR, lam)
    return Classification(IR)


def build_dataset(
    id: int,
    times: Sequence[float],
    sys: TrueSystem,
    reg: RegressorModel,
    noise: Sequence[float] | None = None,
) -> Dataset:
    """Record ``psi`` at ``times`` and assemble the data matrix and vector.

    ``noise`` overrides the recorded disturbance sample by sample; by default
    the system's own disturbance ``d(t_k)`` is used.
    """
    times = [float(t) for t in times]
    if not times:
        raise ValueError("a dataset needs at least one recording time")
    if reg.dimension != sys.dimension:
        raise ValueError(
            f"regressor dimension {reg.dimension} does not match parameter dimension {sys.dimension}"
        )
    if noise is not None and len(noise) != len(times):
        raise ValueError(f"{len(noise)} noise values for {len(times)} recording times")
    n = reg.dimension
    mat = np.zeros((n, n))
    vec = np.zeros(n)
    samples = []
    for k, t in enumerate(times):
        p = reg(t)
        d = sys.disturbance(t) if noise is None else float(noise[k])
        psi = float(p @ sys.theta_star + d)
        mat += np.outer(p, p)
        vec += p * psi
        samples.append(Sample(t, tuple(float(v) for v in p), psi))
    return Dataset(int(id), tuple(samples), mat, vec, _classify_matrix(mat))


def richness(ds: Dataset) -> float:
    """Largest ``alpha`` with ``Phi >= alpha I``, i.e. ``lambda_min(Phi)``."""
    if not is_symmetric(ds.data_matrix, SYMMETRY_RTOL):
        raise AsymmetricMatrixError(f"dataset {ds.id} has a non-symmetric data matrix; use classify()")
    return min_eigenvalue(ds.data_matrix)


def classify(ds: Dataset) -> Classification:
    return _classify_matrix(ds.data_matrix)


def inject_corruption(ds: Dataset, phi_override, psi_override=None) -> Dataset:
    """Replace the data matrix (and optionally vector), keeping the samples."""
    mat = np.array(phi_override, dtype=float)
    if mat.shape != (ds.dimension, ds.dimension):
        raise ValueError(f"override has shape {mat.shape}, expected {(ds.dimension, ds.dimension)}")
    vec = ds.data_vector if psi_override is None else np.array(psi_override, dtype=float)
    if vec.shape != (ds.dimension,):
        raise ValueError(f"data vector override has shape {vec.shape}, expected ({ds.dimension},)")
    return Dataset(ds.id, ds.samples, mat, vec, _classify_matrix(mat))


def residual(ds: Dataset, theta) -> np.ndarray:
    """Batch residual ``Phi theta - Psi``."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (ds.dimension,):
        raise ValueError(f"parameter has shape {theta.shape}, expected ({ds.dimension},)")
    return ds.data_matrix @ theta - ds.data_vector


def corruption_offset(ds: Dataset, theta_star) -> float:
    """``|Phi theta* - Psi|``: the bias a dataset injects at the true parameter."""
    return float(np.linalg.norm(residual(ds, theta_star)))


def recorded_noise(ds: Dataset, theta_star) -> np.ndarray:
    """Per-sample recording disturbance ``psi_k - phi_k' theta*``."""
    theta_star = np.asarray(theta_star, dtype=float)
    return np.array([s.psi - np.dot(s.phi, theta_star) for s in ds.samples])


@dataclass(frozen=True)
class DatasetRegistry:
    """Datasets keyed by mode index, partitioned into SR / IR / corrupted modes."""

    datasets: Mapping[int, Dataset]
    sufficient: frozenset = field(default=None)
    insufficient: frozenset = field(default=None)
    corrupted: frozenset = field(default=None)

    def __post_init__(self):
        data = {int(k): v for k, v in sorted(self.datasets.items())}
        object.__setattr__(self, "datasets", data)
        derived = {SR: set(), IR: set(), CORRUPTED: set()}
        for q, ds in data.items():
            if ds.id != q:
                raise SchemaError(f"dataset stored under mode {q} has id {ds.id}")
            derived[ds.kind].add(q)
        for attr, kind in (("sufficient", SR), ("insufficient", IR), ("corrupted", CORRUPTED)):
            given = getattr(self, attr)
            if given is None:
                object.__setattr__(self, attr, frozenset(derived[kind]))
                continue
            given = frozenset(int(q) for q in given)
            if given != derived[kind]:
                raise SchemaError(
                    f"partition '{attr}' lists modes {sorted(given)} but the datasets "
                    f"classified {kind} are {sorted(derived[kind])}"
                )
            object.__setattr__(self, attr, given)
        dims = {ds.dimension for ds in data.values()}
        if len(dims) > 1:
            raise SchemaError(f"datasets have mixed dimensions {sorted(dims)}")

    @classmethod
    def from_datasets(cls, datasets: Iterable[Dataset]) -> "DatasetRegistry":
        return cls({ds.id: ds for ds in datasets})

    @property
    def modes(self) -> tuple[int, ...]:
        return tuple(self.datasets)

    @property
    def uninformative(self) -> frozenset:
        """Modes that drain the activation budget (IR or corrupted)."""
        return self.insufficient | self.corrupted

    @property
    def dimension(self) -> int:
        return next(iter(self.datasets.values())).dimension

    def __getitem__(self, q: int) -> Dataset:
        return self.datasets[q]

    def subset(self, modes: Iterable[int]) -> "DatasetRegistry":
        return DatasetRegistry.from_datasets(self.datasets[int(q)] for q in modes)

    def replace(self, ds: Dataset) -> "DatasetRegistry":
        data = dict(self.datasets)
        data[ds.id] = ds
        return DatasetRegistry(data)


def _dataset_to_dict(ds: Dataset) -> dict:
    cls = {"kind": ds.kind}
    if ds.kind == SR:
        cls["alpha"] = ds.alpha
    return {
        "id": ds.id,
        "samples": [{"t": s.t, "phi": list(s.phi), "psi": s.psi} for s in ds.samples],
        "data_matrix": ds.data_matrix.tolist(),
        "data_vector": ds.data_vector.tolist(),
        "classification": cls,
    }


def registry_to_dict(reg: DatasetRegistry) -> dict:
    return {
        "format": FORMAT_TAG,
        "version": FORMAT_VERSION,
        "dimension": reg.dimension,
        "datasets": [_dataset_to_dict(ds) for ds in reg.datasets.values()],
        "partition": {
            "sufficient": sorted(reg.sufficient),
            "insufficient": sorted(reg.insufficient),
            "corrupted": sorted(reg.corrupted),
        },
    }


def _require(obj: Mapping, key: str, where: str):
    if not isinstance(obj, Mapping) or key not in obj:
        raise SchemaError(f"{where}: missing '{key}'")
    return obj[key]


def _dataset_from_dict(d: Mapping, n: int) -> Dataset:
    ds_id = _require(d, "id", "dataset")
    where = f"dataset {ds_id}"
    try:
        samples = tuple(
            Sample(float(s["t"]), tuple(float(v) for v in s["phi"]), float(s["psi"]))
            for s in _require(d, "samples", where)
        )
        mat = np.array(_require(d, "data_matrix", where), dtype=float)
        vec = np.array(_require(d, "data_vector", where), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: {exc}") from exc
    if mat.shape != (n, n) or vec.shape != (n,):
        raise SchemaError(f"{where}: matrix/vector shapes {mat.shape}/{vec.shape} do not match dimension {n}")
    if any(len(s.phi) != n for s in samples):
        raise SchemaError(f"{where}: sample regressor length differs from dimension {n}")
    stored = _require(d, "classification", where)
    computed = _classify_matrix(mat)
    if _require(stored, "kind", where) != computed.kind:
        raise SchemaError(f"{where}: stored classification {stored['kind']} but matrix is {computed.kind}")
    return Dataset(int(ds_id), samples, mat, vec, computed)


def registry_from_dict(doc: Mapping) -> DatasetRegistry:
    if not isinstance(doc, Mapping):
        raise SchemaError("registry document must be an object")
    if doc.get("format") != FORMAT_TAG:
        raise SchemaError(f"unknown format tag {doc.get('format')!r}")
    if doc.get("version") != FORMAT_VERSION:
        raise SchemaError(f"unsupported version {doc.get('version')!r}")
    n = int(_require(doc, "dimension", "registry"))
    datasets = [_dataset_from_dict(d, n) for d in _require(doc, "datasets", "registry")]
    if not datasets:
        raise SchemaError("registry holds no datasets")
    part = _require(doc, "partition", "registry")
    ids = [ds.id for ds in datasets]
    if len(set(ids)) != len(ids):
        raise SchemaError(f"duplicate dataset ids {ids}")
    return DatasetRegistry(
        {ds.id: ds for ds in datasets},
        sufficient=_require(part, "sufficient", "partition"),
        insufficient=_require(part, "insufficient", "partition"),
        corrupted=_require(part, "corrupted", "partition"),
    )


def save_registry(reg: DatasetRegistry, path) -> None:
    Path(path).write_text(json.dumps(registry_to_dict(reg), indent=2) + "\n")


def load_registry(path) -> DatasetRegistry:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return registry_from_dict(doc)


SECTION5_TIMES = {
    1: (0.0, -math.pi / 2, -3 * math.pi / 2),
    2: (0.0, -math.pi / 4, -7 * math.pi / 4),
    3: (0.0, -math.pi, -2 * math.pi),
    4: (0.0, -math.pi / 7, -math.pi / 5),
}

SECTION5_PHI4 = np.array([[0.6, 0.3, 0.4], [0.3, 1.0, 0.3], [0.7, 0.5, 0.4]])


def section5_registry(disturbed: bool = True, modes: Iterable[int] = (1, 2, 3, 4)) -> DatasetRegistry:
    """Benchmark registry: two SR sets, one IR set, one tampered set (mode 4)."""
    sys, reg = section5_model(disturbed)
    out = []
    for q in modes:
        ds = build_dataset(q, SECTION5_TIMES[q], sys, reg)
        if q == 4:
            ds = inject_corruption(ds, SECTION5_PHI4)
        out.append(ds)
    return DatasetRegistry.from_datasets(out)
