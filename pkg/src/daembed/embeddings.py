"""Generic embedding I/O and LSA-style domain-specific embeddings."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .corpus import Document, Vocabulary
from .numerics import NumericsError, as_matrix, truncated_svd

ROLES = ("generic", "domain_specific", "projected", "domain_adapted")


class EmbeddingFormatError(ValueError):
    pass


@dataclass(frozen=True)
class EmbeddingMatrix:
    vocab: Vocabulary
    vectors: np.ndarray
    role: str = "generic"

    def __post_init__(self):
        vec = as_matrix(self.vectors, "embedding vectors")
        if vec.shape[0] != len(self.vocab):
            raise ValueError(f"{vec.shape[0]} rows for a vocabulary of {len(self.vocab)}")
        if vec.shape[1] < 1:
            raise ValueError("embedding dimension must be positive")
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        object.__setattr__(self, "vectors", vec)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.vocab)

    def __getitem__(self, token: str) -> np.ndarray:
        return self.vectors[self.vocab.index[token]]

    def rows(self, tokens: Sequence[str]) -> np.ndarray:
        return self.vectors[[self.vocab.index[t] for t in tokens]]

    def restrict(self, tokens: Sequence[str]) -> "EmbeddingMatrix":
        """Sub-matrix for ``tokens`` (all must be present), in that order."""
        counts = tuple(self.vocab.freq(t) for t in tokens)
        return EmbeddingMatrix(Vocabulary(tuple(tokens), counts), self.rows(tokens), self.role)


def _plain_vocab(tokens: Sequence[str]) -> Vocabulary:
    return Vocabulary(tuple(tokens), (0,) * len(tokens))


def load_pretrained(path: str | Path, vocab_filter: Vocabulary | Iterable[str] | None = None,
                    role: str = "generic") -> EmbeddingMatrix:
    """Read a GloVe/word2vec text file (optional ``<count> <dim>`` header line).

    Rows keep file order. With ``vocab_filter`` only its tokens are kept.
    """
    keep = None if vocab_filter is None else set(vocab_filter)
    words: list[str] = []
    rows: list[list[float]] = []
    seen: set[str] = set()
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split(" ")
            parts = [p for p in parts if p != ""]
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                dim = int(parts[1])
                continue
            word, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
                if dim == 0:
                    raise EmbeddingFormatError(f"{path}:{lineno}: no vector values")
            if len(values) != dim:
                raise EmbeddingFormatError(
                    f"{path}:{lineno}: expected {dim} values, found {len(values)}")
            if word in seen:
                raise EmbeddingFormatError(f"{path}:{lineno}: duplicate word {word!r}")
            seen.add(word)
            try:
                vec = [float(v) for v in values]
            except ValueError as exc:
                raise EmbeddingFormatError(f"{path}:{lineno}: {exc}") from None
            if keep is None or word in keep:
                words.append(word)
                rows.append(vec)
    if not words:
        raise EmbeddingFormatError(f"{path}: no usable vectors")
    return EmbeddingMatrix(_plain_vocab(words), np.array(rows, dtype=np.float64), role)


def save_embeddings(emb: EmbeddingMatrix, path: str | Path) -> None:
    """Write GloVe text format with shortest round-trip float formatting."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for word, row in zip(emb.vocab.tokens, emb.vectors.tolist()):
            fh.write(word + " " + " ".join(repr(float(x)) for x in row) + "\n")


@dataclass(frozen=True)
class CooccurrenceCounts:
    vocab: Vocabulary
    window: int
    matrix: np.ndarray  # dense |V| x |V|, symmetric

    def __getitem__(self, pair: tuple[str, str]) -> float:
        a, b = pair
        return float(self.matrix[self.vocab.index[a], self.vocab.index[b]])

    @property
    def total(self) -> float:
        return float(self.matrix.sum())


def _encode(docs: Iterable[Document | Sequence[str]], vocab: Vocabulary):
    ids: list[int] = []
    offsets = [0]
    lookup = vocab.index
    for doc in docs:
        toks = doc.tokens if isinstance(doc, Document) else doc
        ids.extend(lookup.get(t, -1) for t in toks)
        offsets.append(len(ids))
    return np.array(ids, dtype=np.int64), np.array(offsets, dtype=np.int64)


def count_cooccurrence(docs: Iterable[Document | Sequence[str]], vocab: Vocabulary,
                       window: int = 5) -> CooccurrenceCounts:
    if window < 1:
        raise ValueError("window must be >= 1")
    ids, offsets = _encode(docs, vocab)
    mat = _kernels.cooccurrence(ids, offsets, window, len(vocab))
    return CooccurrenceCounts(vocab, window, mat)


def ppmi(counts: CooccurrenceCounts | np.ndarray) -> np.ndarray:
    """Positive PMI with marginals taken from the count table itself."""
    c = counts.matrix if isinstance(counts, CooccurrenceCounts) else as_matrix(counts)
    total = c.sum()
    if total <= 0:
        raise ValueError("co-occurrence table is empty")
    row = c.sum(axis=1) / total
    col = c.sum(axis=0) / total
    out = np.zeros_like(c)
    nz = c > 0
    i, j = np.nonzero(nz)
    out[i, j] = np.maximum(0.0, np.log((c[i, j] / total) / (row[i] * col[j])))
    return out


def build_ds_embeddings(docs: Sequence[Document | Sequence[str]], vocab: Vocabulary,
                        d: int = 300, window: int = 5, rng=0, power: float = 1.0,
                        oversample: int = 10, power_iters: int = 4) -> EmbeddingMatrix:
    """Domain-specific vectors: rows of U * S**power from the PPMI matrix SVD.

    ``d`` above the vocabulary size is clamped with a warning.
    """
    if d > len(vocab):
        warnings.warn(f"embedding dim {d} exceeds vocabulary size {len(vocab)}; clamped",
                      stacklevel=2)
        d = len(vocab)
    counts = count_cooccurrence(docs, vocab, window)
    if counts.total <= 0:
        raise NumericsError("corpus has no in-vocabulary co-occurrences")
    u, s, _ = truncated_svd(ppmi(counts), d, oversample=oversample,
                            power_iters=power_iters, rng=rng)
    return EmbeddingMatrix(vocab, u * s ** power, "domain_specific")


def standardize_norms(e: EmbeddingMatrix) -> EmbeddingMatrix:
    """Scale every row by one common factor so the mean row norm is 1."""
    mean_norm = np.linalg.norm(e.vectors, axis=1).mean()
    if mean_norm == 0:
        raise ValueError("cannot standardize an all-zero embedding matrix")
    return EmbeddingMatrix(e.vocab, e.vectors / mean_norm, e.role)
