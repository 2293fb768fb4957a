"""Small dense symmetric eigenproblems by cyclic Jacobi rotations.

Data matrices here are at most ~10x10, where Jacobi is deterministic,
accurate to working precision, and needs nothing beyond numpy arrays.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["jacobi_eigh", "jacobi_eigenvalues", "min_eigenvalue", "spectral_norm", "is_symmetric"]


def jacobi_eigh(a, tol: float = 1e-15, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix.

    Returns ``(w, V)`` with eigenvalues ``w`` in ascending order and the
    corresponding orthonormal eigenvectors as the columns of ``V``.  Only the
    symmetric part of ``a`` is used.
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    scale = max(float(np.abs(a).max()) if n else 0.0, 1e-300)
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(np.triu(a, 1) ** 2)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                diff = float(a[q, q] - a[p, p])
                if abs(apq) < 1e-18 * abs(diff):
                    # tiny angle: tan = 1 / (2 theta) without overflowing theta^2
                    t = float(apq) / diff
                else:
                    theta = diff / (2.0 * float(apq))
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # rotate rows/columns p and q
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    w = np.diag(a).copy()
    order = np.argsort(w)
    return w[order], v[:, order]


def jacobi_eigenvalues(a, tol: float = 1e-15) -> np.ndarray:
    return jacobi_eigh(a, tol=tol)[0]


def min_eigenvalue(a) -> float:
    """Smallest eigenvalue of the symmetric part of ``a``."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0.0
    return float(jacobi_eigenvalues(a)[0])


def spectral_norm(a) -> float:
    """Largest singular value, ``sqrt(lambda_max(a' a))``."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0.0
    return math.sqrt(max(float(jacobi_eigenvalues(a.T @ a)[-1]), 0.0))


def is_symmetric(a, rtol: float = 1e-10) -> bool:
    """Max-norm asymmetry test relative to the matrix max-norm (at least 1)."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return True
    scale = max(1.0, float(np.abs(a).max()))
    return float(np.abs(a - a.T).max()) <= rtol * scale
