from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from daembed.corpus import Dataset, Document


def numeric_grad(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central differences of scalar ``f()`` w.r.t. every entry of ``x`` (in place)."""
    g = np.zeros_like(x, dtype=np.float64)
    flat, gflat = x.reshape(-1), g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        fp = f()
        flat[i] = old - h
        fm = f()
        flat[i] = old
        gflat[i] = (fp - fm) / (2 * h)
    return g


def rel_error(a, b) -> float:
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-8)
    return float(np.linalg.norm(a - b) / scale)


def toy_dataset(n_per_class: int = 10, seed: int = 0) -> Dataset:
    """Linearly separable two-class toy data: class words never overlap."""
    rng = np.random.default_rng(seed)
    words = (["good", "great", "fine"], ["bad", "awful", "poor"])
    filler = ["the", "a", "movie", "plot"]
    docs = []
    for label, pool in enumerate(words):
        for _ in range(n_per_class):
            toks = [pool[i] for i in rng.integers(0, 3, 3)] + [filler[i] for i in rng.integers(0, 4, 2)]
            rng.shuffle(toks)
            docs.append(Document(tuple(toks), label))
    return Dataset(tuple(docs), ("pos", "neg"), "toy")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def synth_world(tmp_path_factory) -> Path:
    """Default synthetic world (seed 0) with DS and aligned embeddings built."""
    from daembed.cli import main

    out = tmp_path_factory.mktemp("synth0")
    assert main(["synth", "--out", str(out), "--seed", "0"]) == 0
    ini = str(out / "run.ini")
    assert main(["build-ds", "--config", ini, "--out", str(out)]) == 0
    assert main(["align", "--config", ini, "--out", str(out)]) == 0
    return out


def network_grad_errors(kind: str, seed: int, adapted: bool = True) -> dict[str, float]:
    """Relative error between analytic and central-difference gradients for
    every parameter of a small randomly initialized network."""
    from daembed.adaptation import AdaptationParams
    from daembed.corpus import Vocabulary
    from daembed.encoders import EncoderConfig, Network, WordTables, make_batch

    rng = np.random.default_rng(seed)
    n_words, d = 7, 3
    vocab = Vocabulary(tuple(f"w{i}" for i in range(n_words)), (1,) * n_words)
    x = rng.standard_normal((n_words, d))
    y = rng.standard_normal((n_words, d)) if adapted else None
    enc = EncoderConfig(kind=kind, filter_widths=(1, 2), feature_maps=3, hidden=2, dropout=0.5)
    net = Network(enc, WordTables(vocab, x, y), n_classes=3)
    params = net.init_params(rng, AdaptationParams(*rng.uniform(0.2, 1.0, 2)) if adapted else None)
    for k in params:
        if k.endswith(("_b", "_b1", "_b2")) or k.startswith("cnn_b") or k == "clf_b":
            params[k] = params[k] + 0.1 * rng.standard_normal(params[k].shape)
    seqs = [rng.integers(0, n_words, int(n)) for n in rng.integers(1, 5, 3)]
    batch = make_batch(seqs, rng.integers(0, 3, 3), net.min_len)
    _, grads = net.loss_and_grads(params, batch)
    errors = {}
    for k, v in params.items():
        v = np.array(v, dtype=np.float64)
        params[k] = v
        num = numeric_grad(lambda: net.loss_and_grads(params, batch, need=set())[0], v)
        errors[k] = rel_error(grads[k], num)
    return errors


def rational_pmf(V: int, K: int, n: int, k: int):
    """Exact hypergeometric pmf as a big-integer fraction."""
    from fractions import Fraction
    from math import comb

    if k < max(0, n + K - V) or k > min(n, K):
        return Fraction(0)
    return Fraction(comb(K, k) * comb(V - K, n - k), comb(V, n))
