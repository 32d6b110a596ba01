"""Domain-adapted word embeddings: DS embeddings from PPMI + SVD, (K)CCA
alignment with generic vectors, a learned adaptation mix, sentence encoders,
and cross-domain word shift ranking with a hypergeometric overlap test."""
from .adaptation import AdaptationParams, adapt_matrix
from .corpus import (CorpusError, Dataset, Document, Vocabulary, build_vocab, common_vocab,
                     read_corpus, read_dataset, split, tokenize)
from .embeddings import (EmbeddingFormatError, EmbeddingMatrix, build_ds_embeddings,
                         load_pretrained, ppmi, save_embeddings)
from .kcca import (AlignedPairs, AlignmentError, CcaConfig, align_generic_ds,
                   cross_domain_align, fit, project)
from .shift import (HypergeomParams, ShiftReport, hypergeom_pmf, read_gold, shift_scores,
                    significance, significance_report, tail_pvalue)

__version__ = "0.1.0"

__all__ = [
    "AdaptationParams", "AlignedPairs", "AlignmentError", "CcaConfig", "CorpusError", "Dataset",
    "Document", "EmbeddingFormatError", "EmbeddingMatrix", "HypergeomParams", "ShiftReport",
    "Vocabulary", "adapt_matrix", "align_generic_ds", "build_ds_embeddings", "build_vocab",
    "common_vocab", "cross_domain_align", "fit", "hypergeom_pmf", "load_pretrained", "ppmi",
    "project", "read_corpus", "read_dataset", "read_gold", "save_embeddings", "shift_scores",
    "significance", "significance_report", "split", "tail_pvalue", "tokenize",
]
