"""Dense linear-algebra kernels shared by the embedding, CCA and shift code.

Everything is float64. Factorizations check their inputs and refuse to
propagate NaN/Inf.
"""
from __future__ import annotations

import numpy as np


class NumericsError(ValueError):
    pass


def make_rng(seed: int | np.random.Generator | None = 0) -> np.random.Generator:
    """Seeded PCG64 generator; passing a Generator returns it unchanged."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(np.uint64(0 if seed is None else seed & 0xFFFFFFFFFFFFFFFF))


def rng_normal(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return rng.standard_normal((rows, cols))


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise NumericsError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericsError(f"{name} contains NaN or Inf")
    return a


def _check_symmetric(a: np.ndarray, tol: float = 1e-10) -> None:
    if a.shape[0] != a.shape[1]:
        raise NumericsError(f"expected a square matrix, got {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 1.0)
    if np.max(np.abs(a - a.T), initial=0.0) > tol * scale:
        raise NumericsError("matrix is not symmetric")


def matmul(a, b) -> np.ndarray:
    a, b = as_matrix(a, "a"), as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise NumericsError(f"dimension mismatch: {a.shape} @ {b.shape}")
    out = a @ b
    if not np.all(np.isfinite(out)):
        raise NumericsError("matrix product overflowed")
    return out


def cholesky_psd(a, jitter: float = 0.0) -> np.ndarray:
    """Lower-triangular L with L @ L.T == a + jitter * I."""
    a = as_matrix(a)
    _check_symmetric(a)
    if jitter < 0:
        raise NumericsError("jitter must be non-negative")
    sym = 0.5 * (a + a.T) + jitter * np.eye(a.shape[0])
    try:
        return np.linalg.cholesky(sym)
    except np.linalg.LinAlgError as exc:
        raise NumericsError(
            f"matrix is not positive definite with jitter={jitter:g}; "
            "increase the regularization") from exc


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    """Flip columns so each one's largest-magnitude entry is positive."""
    if vecs.size == 0:
        return vecs
    pivot = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[pivot, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def sym_eig(a) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order and orthonormal eigenvector columns."""
    a = as_matrix(a)
    _check_symmetric(a)
    vals, vecs = np.linalg.eigh(0.5 * (a + a.T))
    order = np.argsort(-vals, kind="stable")
    return vals[order], _fix_signs(vecs[:, order])


def _orth(y: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(y, mode="reduced")
    return q


def truncated_svd(a, rank: int, oversample: int = 10, power_iters: int = 4,
                  rng: np.random.Generator | int | None = 0):
    """Randomized rank-``rank`` SVD by range finding with power iterations.

    Returns ``(U, S, Vt)`` with ``U`` (m, rank), ``S`` (rank,), ``Vt``
    (rank, n). Each power step is re-orthonormalized to keep small singular
    directions from being swamped in double precision.
    """
    a = as_matrix(a)
    m, n = a.shape
    if rank < 1 or rank > min(m, n):
        raise NumericsError(f"rank must be in [1, {min(m, n)}], got {rank}")
    rng = make_rng(rng)
    width = min(rank + max(oversample, 0), min(m, n))
    omega = rng_normal(rng, n, width)
    q = _orth(a @ omega)
    for _ in range(power_iters):
        q = _orth(a.T @ q)
        q = _orth(a @ q)
    small = q.T @ a
    u_small, s, vt = np.linalg.svd(small, full_matrices=False)
    u = q @ u_small
    u, s, vt = u[:, :rank], s[:rank], vt[:rank]
    # deterministic orientation: make each right singular vector's pivot positive
    signs = np.sign(vt[np.arange(rank), np.argmax(np.abs(vt), axis=1)])
    signs[signs == 0] = 1.0
    return u * signs, s, vt * signs[:, None]


def exact_svd(a):
    """Thin SVD through the eigendecomposition of the smaller Gram matrix.

    Slow and squares the condition number; kept as an independent oracle for
    small matrices.
    """
    a = as_matrix(a)
    m, n = a.shape
    if n <= m:
        vals, v = sym_eig(a.T @ a)
        s = np.sqrt(np.clip(vals, 0.0, None))
        keep = s > s[0] * 1e-12 if s.size and s[0] > 0 else np.zeros_like(s, bool)
        u = np.zeros((m, n))
        u[:, keep] = (a @ v[:, keep]) / s[keep]
        return u, s, v.T
    u, s, vt = exact_svd(a.T)
    return vt.T, s, u.T
