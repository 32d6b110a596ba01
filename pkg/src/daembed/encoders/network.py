"""Adaptation layer + sentence encoder + softmax classifier as one network.

Parameters live in a flat ``dict[str, ndarray]``; ``alpha``/``beta`` are 0-d
arrays present only for adapted networks. Word-vector tables are inputs, not
parameters, and are never updated.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..adaptation import AdaptationParams, apply as adapt_apply, grad as adapt_grad
from ..corpus import Dataset, Document, Vocabulary
from ..embeddings import EmbeddingMatrix
from ..kcca import AlignedPairs
from .bilstm import bilstm_backward, bilstm_forward, init_bilstm
from .bow import bow_backward, bow_forward
from .cnn import cnn_backward, cnn_forward, init_cnn
from .layers import cross_entropy, softmax

ENCODERS = ("bow", "cnn", "bilstm")
MODES = ("vanilla", "adapt_only", "end_to_end")


@dataclass(frozen=True)
class EncoderConfig:
    kind: str = "cnn"
    filter_widths: tuple[int, ...] = (3, 4, 5)
    feature_maps: int = 100
    hidden: int = 150
    dropout: float = 0.5
    max_len: int = 100

    def __post_init__(self):
        if self.kind not in ENCODERS:
            raise ValueError(f"unknown encoder {self.kind!r}")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must be in [0, 1)")
        if self.max_len < 1 or self.feature_maps < 1 or self.hidden < 1:
            raise ValueError("max_len, feature_maps and hidden must be positive")
        if not self.filter_widths or min(self.filter_widths) < 1:
            raise ValueError("filter widths must be positive")
        object.__setattr__(self, "filter_widths", tuple(int(w) for w in self.filter_widths))

    def sentence_dim(self, word_dim: int) -> int:
        if self.kind == "cnn":
            return len(self.filter_widths) * self.feature_maps
        if self.kind == "bilstm":
            return 2 * self.hidden
        return word_dim


@dataclass(frozen=True)
class TrainConfig:
    mode: str = "vanilla"
    lr: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 100
    patience: int = 5
    seed: int = 0
    n_classes: int = 2

    def __post_init__(self):
        mode = self.mode.replace("-", "_")
        object.__setattr__(self, "mode", mode)
        if mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.lr < 0 or self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ValueError("lr must be >= 0; batch_size, max_epochs, patience positive")
        if self.n_classes < 2:
            raise ValueError("need at least 2 classes")


@dataclass(frozen=True)
class WordTables:
    """Word vectors fed to the network: one static table or two aligned views."""

    vocab: Vocabulary
    x: np.ndarray
    y: np.ndarray | None = None

    @property
    def adapted(self) -> bool:
        return self.y is not None

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    @classmethod
    def of(cls, source: "EmbeddingMatrix | AlignedPairs | WordTables") -> "WordTables":
        if isinstance(source, WordTables):
            return source
        if isinstance(source, AlignedPairs):
            return cls(source.vocab, source.x, source.y)
        return cls(source.vocab, source.vectors)


@dataclass
class Batch:
    ids: np.ndarray        # (B, T); -1 marks padding
    lengths: np.ndarray    # token counts before padding
    labels: np.ndarray | None


def encode_docs(docs: Sequence[Document], vocab: Vocabulary, max_len: int) -> list[np.ndarray]:
    """In-vocabulary token ids per document, truncated at ``max_len``."""
    out = []
    for doc in docs:
        ids = [vocab.index[t] for t in doc.tokens if t in vocab.index][:max_len]
        out.append(np.array(ids, dtype=np.int64))
    return out


def make_batch(seqs: Sequence[np.ndarray], labels=None, min_len: int = 0) -> Batch:
    lengths = np.array([len(s) for s in seqs], dtype=np.int64)
    T = max(int(lengths.max(initial=0)), min_len, 1)
    ids = np.full((len(seqs), T), -1, dtype=np.int64)
    for b, s in enumerate(seqs):
        ids[b, :len(s)] = s
    lab = None if labels is None else np.asarray(labels, dtype=np.int64)
    return Batch(ids, lengths, lab)


def _gather(table: np.ndarray, ids: np.ndarray) -> np.ndarray:
    padded = np.vstack([table, np.zeros((1, table.shape[1]))])
    return padded[np.where(ids < 0, table.shape[0], ids)]


class Network:
    def __init__(self, enc: EncoderConfig, tables: WordTables, n_classes: int):
        self.enc = enc
        self.tables = tables
        self.n_classes = n_classes
        self.min_len = max(enc.filter_widths) if enc.kind == "cnn" else 0

    @property
    def sentence_dim(self) -> int:
        return self.enc.sentence_dim(self.tables.dim)

    def init_params(self, rng: np.random.Generator, adaptation: AdaptationParams | None = None) -> dict:
        d = self.tables.dim
        params: dict[str, np.ndarray] = {}
        if self.enc.kind == "cnn":
            params.update(init_cnn(rng, d, self.enc.filter_widths, self.enc.feature_maps))
        elif self.enc.kind == "bilstm":
            params.update(init_bilstm(rng, d, self.enc.hidden))
        D = self.sentence_dim
        params["clf_W"] = rng.standard_normal((self.n_classes, D)) * np.sqrt(1.0 / D)
        params["clf_b"] = np.zeros(self.n_classes)
        if self.tables.adapted:
            a = adaptation or AdaptationParams()
            params["alpha"] = np.array(a.alpha)
            params["beta"] = np.array(a.beta)
        return params

    def encoder_keys(self, params: dict) -> list[str]:
        return sorted(k for k in params if k.startswith(("cnn_", "lstm_")))

    def word_vectors(self, params: dict, batch: Batch):
        gx = _gather(self.tables.x, batch.ids)
        if not self.tables.adapted:
            return gx, None
        gy = _gather(self.tables.y, batch.ids)
        p = AdaptationParams(float(params["alpha"]), float(params["beta"]))
        return adapt_apply(p, gx, gy), (gx, gy, p)

    def forward(self, params: dict, batch: Batch, rng: np.random.Generator | None = None):
        """Class probabilities; ``rng`` enables training-mode dropout."""
        x, adapt_cache = self.word_vectors(params, batch)
        kind = self.enc.kind
        if kind == "bow":
            h, enc_cache = bow_forward(x, batch.lengths)
        elif kind == "cnn":
            lengths = np.maximum(batch.lengths, self.min_len)
            h, enc_cache = cnn_forward(params, x, lengths, self.enc.filter_widths,
                                       self.enc.dropout, rng)
        else:
            h, enc_cache = bilstm_forward(params, x, batch.lengths, self.enc.dropout, rng)
        probs = softmax(h @ params["clf_W"].T + params["clf_b"])
        return probs, (h, enc_cache, adapt_cache)

    def loss_and_grads(self, params: dict, batch: Batch, rng: np.random.Generator | None = None,
                       need: set[str] | None = None):
        """Mean cross-entropy over the batch and gradients for ``need`` (default: all)."""
        probs, (h, enc_cache, adapt_cache) = self.forward(params, batch, rng)
        losses, dlogits = cross_entropy(probs, batch.labels)
        B = len(batch.labels)
        dlogits = dlogits / B
        grads = {"clf_W": dlogits.T @ h, "clf_b": dlogits.sum(0)}
        need = set(params) if need is None else need
        wants_input = adapt_cache is not None and ({"alpha", "beta"} & need)
        wants_encoder = any(k in need for k in self.encoder_keys(params))
        if wants_input or wants_encoder:
            dh = dlogits @ params["clf_W"]
            kind = self.enc.kind
            if kind == "bow":
                enc_grads, dx = bow_backward(enc_cache, dh)
            elif kind == "cnn":
                enc_grads, dx = cnn_backward(params, enc_cache, dh)
            else:
                enc_grads, dx = bilstm_backward(params, enc_cache, dh)
            grads.update(enc_grads)
            if adapt_cache is not None:
                gx, gy, p = adapt_cache
                da, db = adapt_grad(p, gx, gy, dx)
                grads["alpha"], grads["beta"] = np.array(da), np.array(db)
        return float(losses.mean()), {k: v for k, v in grads.items() if k in need}

    def predict_proba(self, params: dict, seqs: Sequence[np.ndarray], batch_size: int = 256) -> np.ndarray:
        out = []
        for start in range(0, len(seqs), batch_size):
            batch = make_batch(seqs[start:start + batch_size], min_len=self.min_len)
            out.append(self.forward(params, batch)[0])
        return np.vstack(out) if out else np.zeros((0, self.n_classes))


def dataset_arrays(ds: Dataset, vocab: Vocabulary, max_len: int):
    return encode_docs(ds.documents, vocab, max_len), ds.y
