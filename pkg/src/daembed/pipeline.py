"""Multi-step flows shared by the CLI and the library API."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .adaptation import AdaptationParams, adapt_matrix
from .corpus import Document, Vocabulary, build_vocab, common_vocab
from .embeddings import EmbeddingMatrix, build_ds_embeddings
from .kcca import AlignedPairs, CcaConfig, align_generic_ds, cross_domain_align
from .shift import ShiftReport, SignificanceReport, shift_scores, significance_report


@dataclass
class DsBuild:
    embedding: EmbeddingMatrix
    requested_dim: int
    clamped: bool


def build_ds(docs: Sequence[Document], dim: int = 300, window: int = 5, min_count: int = 1,
             seed: int = 0, power: float = 1.0) -> DsBuild:
    vocab = build_vocab(docs, min_count)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        emb = build_ds_embeddings(docs, vocab, dim, window, rng=seed, power=power)
    return DsBuild(emb, dim, emb.dim < dim)


@dataclass
class DomainView:
    vocab: Vocabulary
    ds: EmbeddingMatrix
    aligned: AlignedPairs
    adapted: EmbeddingMatrix


@dataclass
class ShiftResult:
    report: ShiftReport
    significance: SignificanceReport
    common: Vocabulary
    domains: tuple[DomainView, DomainView]
    cross: AlignedPairs
    notes: list[str] = field(default_factory=list)


def domain_view(docs: Sequence[Document], generic: EmbeddingMatrix, *, dim: int, window: int,
                min_count: int, seed: int, cca: CcaConfig,
                adaptation: AdaptationParams) -> DomainView:
    built = build_ds(docs, dim, window, min_count, seed)
    aligned = align_generic_ds(generic, built.embedding, cca)
    return DomainView(built.embedding.vocab, built.embedding, aligned,
                      adapt_matrix(adaptation, aligned))


def shift_analysis(docs_a: Sequence[Document], docs_b: Sequence[Document],
                   generic: EmbeddingMatrix, gold: Iterable[str], *, dim: int = 300,
                   window: int = 5, min_count: int = 1, seed: int = 0,
                   cca: CcaConfig = CcaConfig(), cross: CcaConfig = CcaConfig(),
                   adaptation: AdaptationParams = AdaptationParams(),
                   normalize: bool = True, top_n: int = 200) -> ShiftResult:
    """DS embeddings per domain, generic alignment, DA mix, second alignment
    over the shared vocabulary, shift ranking and the overlap test."""
    kw = dict(dim=dim, window=window, min_count=min_count, seed=seed, cca=cca,
              adaptation=adaptation)
    view_a = domain_view(docs_a, generic, **kw)
    view_b = domain_view(docs_b, generic, **kw)
    common = common_vocab(view_a.vocab, view_b.vocab)
    pairs = cross_domain_align(view_a.adapted, view_b.adapted, common, cross)
    report = shift_scores(pairs, normalize, reg=cross.reg, alpha=adaptation.alpha,
                          beta=adaptation.beta)
    notes = []
    if top_n > len(report):
        notes.append(f"top_n {top_n} exceeds the {len(report)} common words; using all")
        top_n = len(report)
    sig = significance_report(report, gold, top_n)
    return ShiftResult(report, sig, common, (view_a, view_b), pairs, notes)
