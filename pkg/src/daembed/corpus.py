"""Text ingestion: tokenization, vocabularies, dataset files and splits."""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

_TOKEN_RE = re.compile(r"[^\W_]+")


class CorpusError(ValueError):
    """Raised when a corpus or dataset cannot be used as requested."""


def tokenize(text: str) -> list[str]:
    """Lowercase ``text`` and return its runs of Unicode letters/digits."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Document:
    tokens: tuple[str, ...]
    label: int | None = None


@dataclass(frozen=True)
class Vocabulary:
    """Dense 0-based token index with corpus frequencies."""

    tokens: tuple[str, ...]
    counts: tuple[int, ...]
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.tokens) != len(self.counts):
            raise ValueError("tokens and counts differ in length")
        index = {tok: i for i, tok in enumerate(self.tokens)}
        if len(index) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")
        object.__setattr__(self, "index", index)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def __iter__(self):
        return iter(self.tokens)

    def freq(self, token: str) -> int:
        return self.counts[self.index[token]]

    @classmethod
    def from_counts(cls, counts: dict[str, int]) -> "Vocabulary":
        # descending frequency, lexicographic tie-break
        items = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        return cls(tuple(t for t, _ in items), tuple(int(c) for _, c in items))


@dataclass(frozen=True)
class Dataset:
    documents: tuple[Document, ...]
    labels: tuple[str, ...]
    source: str = ""

    def __len__(self) -> int:
        return len(self.documents)

    @property
    def y(self) -> np.ndarray:
        return np.array([d.label for d in self.documents], dtype=np.int64)

    def subset(self, indices: Iterable[int], tag: str = "") -> "Dataset":
        docs = tuple(self.documents[i] for i in indices)
        src = f"{self.source}#{tag}" if tag else self.source
        return Dataset(docs, self.labels, src)


def build_vocab(docs: Iterable[Document | Sequence[str]], min_count: int = 1) -> Vocabulary:
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    freq: Counter[str] = Counter()
    for doc in docs:
        freq.update(doc.tokens if isinstance(doc, Document) else doc)
    kept = {t: c for t, c in freq.items() if c >= min_count}
    if not kept:
        raise CorpusError(f"no token reaches min_count={min_count}; corpus unusable")
    return Vocabulary.from_counts(kept)


def common_vocab(a: Vocabulary, b: Vocabulary) -> Vocabulary:
    shared = set(a.tokens) & set(b.tokens)
    if not shared:
        raise CorpusError("vocabularies have no token in common")
    return Vocabulary.from_counts({t: a.freq(t) + b.freq(t) for t in shared})


def read_corpus(path: str | Path) -> list[Document]:
    """One unlabeled document per line; blank lines are skipped."""
    docs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                docs.append(Document(tuple(tokenize(line))))
    return docs


def read_dataset(path: str | Path, labels: Sequence[str] | None = None) -> Dataset:
    """Read a ``label<TAB>text`` file.

    Class names are sorted unless an explicit ``labels`` order is given, in
    which case unseen labels raise.
    """
    rows: list[tuple[str, str]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            if "\t" not in line:
                raise CorpusError(f"{path}:{lineno}: expected 'label<TAB>text'")
            label, text = line.split("\t", 1)
            rows.append((label.strip(), text))
    if labels is None:
        labels = sorted({lab for lab, _ in rows})
    lookup = {lab: i for i, lab in enumerate(labels)}
    docs = []
    for lab, text in rows:
        if lab not in lookup:
            raise CorpusError(f"{path}: unknown label {lab!r}")
        docs.append(Document(tuple(tokenize(text)), lookup[lab]))
    return Dataset(tuple(docs), tuple(labels), f"{path}:tsv")


def write_dataset(ds: Dataset, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc in ds.documents:
            fh.write(f"{ds.labels[doc.label]}\t{' '.join(doc.tokens)}\n")


def _quotas(n: int, fractions: Sequence[float]) -> list[int]:
    """Largest-remainder apportionment of ``n`` items; earlier parts win ties."""
    exact = [f * n for f in fractions]
    base = [int(np.floor(e + 1e-9)) for e in exact]
    rest = n - sum(base)
    order = sorted(range(len(exact)), key=lambda i: (-(exact[i] - base[i]), i))
    for i in order[:rest]:
        base[i] += 1
    return base


def _by_class(ds: Dataset) -> dict[int, list[int]]:
    groups: dict[int, list[int]] = {}
    for i, doc in enumerate(ds.documents):
        if doc.label is None:
            raise CorpusError("stratification requires labeled documents")
        groups.setdefault(doc.label, []).append(i)
    return groups


def split(ds: Dataset, ratios: Sequence[float] = (0.8, 0.1, 0.1),
          seed: int = 0) -> tuple[Dataset, Dataset, Dataset]:
    """Stratified, seeded train/dev/test partition."""
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must be three non-negative fractions summing to 1, got {ratios}")
    if len(ds) == 0:
        raise CorpusError("cannot split an empty dataset")
    rng = np.random.default_rng(seed)
    parts: list[list[int]] = [[], [], []]
    for label, idx in sorted(_by_class(ds).items()):
        if len(idx) < 3:
            raise CorpusError(f"class {ds.labels[label]!r} has {len(idx)} examples; need at least 3")
        perm = [idx[j] for j in rng.permutation(len(idx))]
        start = 0
        for part, q in zip(parts, _quotas(len(idx), ratios)):
            part.extend(perm[start:start + q])
            start += q
    return tuple(ds.subset(sorted(p), tag) for p, tag in zip(parts, ("train", "dev", "test")))


def stratified_sample(ds: Dataset, n: int, seed: int = 0) -> Dataset:
    """Seeded stratified subsample of ``n`` documents (per-class +/-1)."""
    if n < 1:
        raise ValueError("n must be positive")
    if n > len(ds):
        raise CorpusError(f"cannot draw {n} documents from a dataset of {len(ds)}")
    rng = np.random.default_rng(seed)
    groups = sorted(_by_class(ds).items())
    quotas = _quotas(n, [len(idx) / len(ds) for _, idx in groups])
    chosen: list[int] = []
    for (_, idx), q in zip(groups, quotas):
        pick = rng.permutation(len(idx))[:q]
        chosen.extend(idx[j] for j in pick)
    return ds.subset(sorted(chosen), f"sample{n}")
