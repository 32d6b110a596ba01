"""Regularized (kernel) canonical correlation analysis between two views.

Linear CCA whitens each centered view with a ridge-regularized covariance,

    C_vv = V_c^T V_c / m + lam_v I,   lam_v = reg * trace(V_c^T V_c / m) / dim_v,

and takes the SVD of C_xx^{-1/2} C_xy C_yy^{-1/2} (whitening through
Cholesky factors). The ridge is relative to the mean per-coordinate variance,
so correlations do not depend on the overall scale of either view.

Gaussian KCCA works either from the exact centered kernel (dual solution) or
from Nystrom landmark features fed to the linear solver. Both use the
kernel-space ridge ``reg * trace(K_c) / m``.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Vocabulary
from .embeddings import EmbeddingMatrix, load_pretrained, save_embeddings
from .numerics import NumericsError, as_matrix, cholesky_psd, sym_eig


class AlignmentError(ValueError):
    pass


@dataclass(frozen=True)
class CcaConfig:
    reg: float = 1e-3
    rank: int | None = None          # None: min of the view dimensions
    kernel: str = "linear"           # "linear" or "gaussian"
    sigma: float = 1.0
    landmarks: int | None = 512      # gaussian only; None = exact kernel

    def __post_init__(self):
        if not self.reg > 0:
            raise ValueError("reg must be positive")
        if self.rank is not None and self.rank < 1:
            raise ValueError("rank must be >= 1")
        if self.kernel not in ("linear", "gaussian"):
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.kernel == "gaussian" and not self.sigma > 0:
            raise ValueError("gaussian kernel needs sigma > 0")
        if self.landmarks is not None and self.landmarks < 1:
            raise ValueError("landmarks must be positive")


@dataclass(frozen=True)
class _KernelMap:
    """Maps raw inputs to the feature space the canonical maps act on."""

    points: np.ndarray               # training points or landmarks
    sigma: float
    transform: np.ndarray | None     # Nystrom: K_LL^{-1/2}; exact: None
    col_mean: np.ndarray | None = None   # exact: column means of the training kernel
    grand_mean: float = 0.0

    def __call__(self, v: np.ndarray) -> np.ndarray:
        k = gaussian_kernel(v, self.points, self.sigma)
        if self.transform is not None:
            return k @ self.transform
        return k - k.mean(axis=1, keepdims=True) - self.col_mean + self.grand_mean


@dataclass(frozen=True)
class CcaModel:
    config: CcaConfig
    correlations: np.ndarray
    means: tuple[np.ndarray, np.ndarray]
    maps: tuple[np.ndarray, np.ndarray]
    input_dims: tuple[int, int]
    feature_maps: tuple[_KernelMap | None, _KernelMap | None] = (None, None)

    @property
    def rank(self) -> int:
        return len(self.correlations)


@dataclass(frozen=True)
class AlignedPairs:
    vocab: Vocabulary
    x: np.ndarray
    y: np.ndarray
    model: CcaModel | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.x.shape != self.y.shape or self.x.shape[0] != len(self.vocab):
            raise ValueError("aligned views must share vocabulary and shape")

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def view(self, which: str) -> EmbeddingMatrix:
        return EmbeddingMatrix(self.vocab, self.x if which == "a" else self.y, "projected")


def gaussian_kernel(a: np.ndarray, b: np.ndarray, sigma: float) -> np.ndarray:
    sq = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * a @ b.T
    return np.exp(-np.maximum(sq, 0.0) / (2.0 * sigma * sigma))


def _check_pair(x, y):
    x, y = as_matrix(x, "X"), as_matrix(y, "Y")
    if x.shape[0] != y.shape[0]:
        raise AlignmentError(f"views have {x.shape[0]} and {y.shape[0]} rows")
    if x.shape[0] < 2:
        raise AlignmentError("CCA needs at least 2 paired rows")
    return x, y


def _orient(p: np.ndarray, q: np.ndarray):
    """Flip canonical pairs jointly so each left vector's pivot is positive."""
    piv = np.argmax(np.abs(p), axis=0)
    s = np.sign(p[piv, np.arange(p.shape[1])])
    s[s == 0] = 1.0
    return p * s, q * s


def _primal(xc: np.ndarray, yc: np.ndarray, lam_x: float, lam_y: float, rank: int):
    m = xc.shape[0]
    cxx = xc.T @ xc / m
    cyy = yc.T @ yc / m
    cxy = xc.T @ yc / m
    lx = cholesky_psd(0.5 * (cxx + cxx.T), jitter=lam_x)
    ly = cholesky_psd(0.5 * (cyy + cyy.T), jitter=lam_y)
    mid = np.linalg.solve(ly, np.linalg.solve(lx, cxy).T).T
    p, rho, qt = np.linalg.svd(mid, full_matrices=False)
    p, q = _orient(p[:, :rank], qt[:rank].T)
    a = np.linalg.solve(lx.T, p)
    b = np.linalg.solve(ly.T, q)
    return a, b, np.clip(rho[:rank], 0.0, 1.0)


def _resolve_rank(cfg: CcaConfig, limit: int) -> int:
    rank = limit if cfg.rank is None else cfg.rank
    if rank > limit:
        raise AlignmentError(f"rank {rank} exceeds the usable dimension {limit}")
    return rank


def fit_cca(x, y, cfg: CcaConfig = CcaConfig()) -> CcaModel:
    """Linear regularized CCA."""
    x, y = _check_pair(x, y)
    rank = _resolve_rank(cfg, min(x.shape[1], y.shape[1]))
    mx, my = x.mean(0), y.mean(0)
    xc, yc = x - mx, y - my
    m = x.shape[0]
    tx = np.einsum("ij,ij->", xc, xc) / m
    ty = np.einsum("ij,ij->", yc, yc) / m
    if tx == 0 or ty == 0:
        raise AlignmentError("a view is constant; nothing to correlate")
    a, b, rho = _primal(xc, yc, cfg.reg * tx / x.shape[1], cfg.reg * ty / y.shape[1], rank)
    return CcaModel(cfg, rho, (mx, my), (a, b), (x.shape[1], y.shape[1]))


def _landmark_idx(m: int, n_landmarks: int) -> np.ndarray:
    if n_landmarks >= m:
        return np.arange(m)
    return np.unique(np.linspace(0, m - 1, n_landmarks).round().astype(np.int64))


def _nystrom_map(v: np.ndarray, idx: np.ndarray, sigma: float) -> _KernelMap:
    pts = v[idx]
    vals, vecs = sym_eig(gaussian_kernel(pts, pts, sigma))
    keep = vals > vals[0] * 1e-12
    return _KernelMap(pts, sigma, vecs[:, keep] / np.sqrt(vals[keep]))


def _exact_dual(v: np.ndarray, sigma: float, reg: float):
    m = v.shape[0]
    k = gaussian_kernel(v, v, sigma)
    col = k.mean(0)
    grand = float(k.mean())
    kc = k - col[None, :] - col[:, None] + grand
    lam = reg * np.trace(kc) / m
    vals, vecs = sym_eig(0.5 * (kc + kc.T))
    keep = vals > vals[0] * 1e-12
    vals, vecs = vals[keep], vecs[:, keep]
    shrink = np.sqrt((vals / m) / (vals / m + lam))
    fmap = _KernelMap(v, sigma, None, col, grand)
    return fmap, vecs, vals, shrink, lam


def fit_kcca_gaussian(x, y, cfg: CcaConfig) -> CcaModel:
    """Gaussian-kernel CCA, exact (``landmarks=None``) or Nystrom-approximated."""
    if cfg.kernel != "gaussian":
        raise ValueError("fit_kcca_gaussian needs kernel='gaussian'")
    x, y = _check_pair(x, y)
    m = x.shape[0]
    try:
        if cfg.landmarks is not None:
            idx = _landmark_idx(m, cfg.landmarks)
            fx, fy = _nystrom_map(x, idx, cfg.sigma), _nystrom_map(y, idx, cfg.sigma)
            px, py = fx(x), fy(y)
            mx, my = px.mean(0), py.mean(0)
            pxc, pyc = px - mx, py - my
            rank = _resolve_rank(cfg, min(px.shape[1], py.shape[1]))
            lam_x = cfg.reg * np.einsum("ij,ij->", pxc, pxc) / m
            lam_y = cfg.reg * np.einsum("ij,ij->", pyc, pyc) / m
            a, b, rho = _primal(pxc, pyc, lam_x, lam_y, rank)
            return CcaModel(cfg, rho, (mx, my), (a, b), (x.shape[1], y.shape[1]), (fx, fy))

        fx, ux, lx, ex, lam_x = _exact_dual(x, cfg.sigma, cfg.reg)
        fy, uy, ly, ey, lam_y = _exact_dual(y, cfg.sigma, cfg.reg)
        rank = _resolve_rank(cfg, min(len(lx), len(ly)))
        mid = (ex[:, None] * (ux.T @ uy)) * ey[None, :]
        p, rho, qt = np.linalg.svd(mid, full_matrices=False)
        p, q = _orient(p[:, :rank], qt[:rank].T)
        # dual coefficients: kernel column -> canonical coordinate
        a = ux @ (p / (np.sqrt(lx) * np.sqrt(lx / m + lam_x))[:, None])
        b = uy @ (q / (np.sqrt(ly) * np.sqrt(ly / m + lam_y))[:, None])
    except (np.linalg.LinAlgError, NumericsError) as exc:
        raise NumericsError(f"kernel CCA failed ({exc}); try a larger reg") from exc
    zeros = (np.zeros(m), np.zeros(m))
    return CcaModel(cfg, np.clip(rho[:rank], 0.0, 1.0), zeros, (a, b),
                    (x.shape[1], y.shape[1]), (fx, fy))


def fit(x, y, cfg: CcaConfig = CcaConfig()) -> CcaModel:
    return fit_kcca_gaussian(x, y, cfg) if cfg.kernel == "gaussian" else fit_cca(x, y, cfg)


def project(model: CcaModel, v, view: str = "a") -> np.ndarray:
    """Project one vector (d,) or a batch (n, d) into the canonical space."""
    i = {"a": 0, "b": 1}[view]
    arr = np.asarray(v, dtype=np.float64)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != model.input_dims[i]:
        raise AlignmentError(f"view {view} expects dimension {model.input_dims[i]}, got {arr.shape[1]}")
    fmap = model.feature_maps[i]
    feats = fmap(arr) if fmap is not None else arr
    out = (feats - model.means[i]) @ model.maps[i]
    return out[0] if single else out


def align_generic_ds(gen: EmbeddingMatrix, ds: EmbeddingMatrix,
                     cfg: CcaConfig = CcaConfig()) -> AlignedPairs:
    """Project generic and domain-specific vectors into a shared canonical space.

    The output covers the whole domain-specific vocabulary; words the generic
    file lacks reuse their DS projection for the generic view.
    """
    shared = [t for t in ds.vocab.tokens if t in gen.vocab]
    if not shared:
        raise AlignmentError("generic and domain-specific vocabularies are disjoint")
    model = fit(gen.rows(shared), ds.rows(shared), cfg)
    y_bar = project(model, ds.vectors, "b")
    x_bar = y_bar.copy()
    rows = [ds.vocab.index[t] for t in shared]
    x_bar[rows] = project(model, gen.rows(shared), "a")
    return AlignedPairs(ds.vocab, x_bar, y_bar, model)


def cross_domain_align(da_a: EmbeddingMatrix, da_b: EmbeddingMatrix,
                       common: Vocabulary | Sequence[str],
                       cfg: CcaConfig = CcaConfig()) -> AlignedPairs:
    """Second-stage CCA bringing two domains' vectors for ``common`` together."""
    tokens = list(common.tokens if isinstance(common, Vocabulary) else common)
    if len(tokens) < 2:
        raise AlignmentError("need at least 2 common words")
    missing = [t for t in tokens if t not in da_a.vocab or t not in da_b.vocab]
    if missing:
        raise AlignmentError(f"{len(missing)} common words missing from a domain, e.g. {missing[0]!r}")
    xa, xb = da_a.rows(tokens), da_b.rows(tokens)
    model = fit(xa, xb, cfg)
    vocab = common if isinstance(common, Vocabulary) else Vocabulary(tuple(tokens), (0,) * len(tokens))
    return AlignedPairs(vocab, project(model, xa, "a"), project(model, xb, "b"), model)


def save_aligned(pairs: AlignedPairs, prefix: str | Path) -> tuple[Path, Path, Path]:
    """Write ``<prefix>.a.vec``, ``<prefix>.b.vec`` and a JSON header."""
    prefix = Path(prefix)
    pa, pb, ph = (prefix.with_name(prefix.name + s) for s in (".a.vec", ".b.vec", ".header.json"))
    save_embeddings(pairs.view("a"), pa)
    save_embeddings(pairs.view("b"), pb)
    header = {"words": len(pairs.vocab), "dim": pairs.dim}
    if pairs.model is not None:
        header["config"] = asdict(pairs.model.config)
        header["correlations"] = [float(r) for r in pairs.model.correlations]
    ph.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return pa, pb, ph


def load_aligned(prefix: str | Path) -> AlignedPairs:
    prefix = Path(prefix)
    a = load_pretrained(prefix.with_name(prefix.name + ".a.vec"), role="projected")
    b = load_pretrained(prefix.with_name(prefix.name + ".b.vec"), role="projected")
    if a.vocab.tokens != b.vocab.tokens:
        raise AlignmentError(f"{prefix}: view files list different words")
    return AlignedPairs(a.vocab, a.vectors, b.vectors)
