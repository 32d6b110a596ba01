import numpy as np
import pytest
from hypothesis import given, strategies as st

from daembed.corpus import (CorpusError, Dataset, Document, Vocabulary, build_vocab, common_vocab,
                            read_corpus, read_dataset, split, stratified_sample, tokenize,
                            write_dataset)


@pytest.mark.parametrize("text, tokens", [
    ("Kill the Bill!", ["kill", "the", "bill"]),
    ("", []),
    ("80/10/10 splits", ["80", "10", "10", "splits"]),
    ("Café au-lait, ÜBER_cool", ["café", "au", "lait", "über", "cool"]),
])
def test_tokenize(text, tokens):
    assert tokenize(text) == tokens


@given(st.text())
def test_tokenize_no_empty_tokens(text):
    toks = tokenize(text)
    assert all(toks) and toks == tokenize(text)
    assert all(t == t.lower() for t in toks)


def test_build_vocab_counts_and_filter():
    v = build_vocab([["a", "a", "b"]], 1)
    assert v.index == {"a": 0, "b": 1}
    assert (v.freq("a"), v.freq("b")) == (2, 1)
    assert build_vocab([["a", "a", "b"]], 2).index == {"a": 0}


def test_build_vocab_tie_break_and_idempotent():
    docs = [["zeta", "alpha", "mid", "mid"]]
    v = build_vocab(docs)
    assert v.tokens == ("mid", "alpha", "zeta")
    assert build_vocab(docs) == v


def test_build_vocab_empty_raises():
    with pytest.raises(CorpusError):
        build_vocab([["a"]], 2)
    with pytest.raises(CorpusError):
        build_vocab([[]])


def test_common_vocab():
    a = build_vocab([["a", "b", "c"]])
    b = build_vocab([["b", "c", "d", "c"]])
    c = common_vocab(a, b)
    assert set(c.tokens) == {"b", "c"}
    assert c.freq("c") == 3 and c.tokens[0] == "c"
    assert set(common_vocab(a, a).tokens) == set(a.tokens)
    with pytest.raises(CorpusError):
        common_vocab(a, build_vocab([["x"]]))


def _balanced(n_per_class, n_classes=2):
    docs = tuple(Document((f"w{i}",), c) for c in range(n_classes) for i in range(n_per_class))
    return Dataset(docs, tuple(f"c{i}" for i in range(n_classes)))


def test_split_sizes_and_determinism():
    ds = _balanced(50)
    tr, dv, te = split(ds, (0.8, 0.1, 0.1), seed=7)
    assert (len(tr), len(dv), len(te)) == (80, 10, 10)
    again = split(ds, (0.8, 0.1, 0.1), seed=7)
    assert [p.documents for p in again] == [tr.documents, dv.documents, te.documents]


def test_split_stratified_binary():
    tr, _, _ = split(_balanced(500), seed=3)
    assert np.bincount(tr.y).tolist() == [400, 400]


@given(st.lists(st.integers(3, 40), min_size=2, max_size=4), st.integers(0, 2**32))
def test_split_partitions(sizes, seed):
    docs = tuple(Document((f"w{c}_{i}",), c) for c, n in enumerate(sizes) for i in range(n))
    ds = Dataset(docs, tuple(str(c) for c in range(len(sizes))))
    parts = split(ds, (0.8, 0.1, 0.1), seed)
    seen = sorted(d.tokens for p in parts for d in p.documents)
    assert seen == sorted(d.tokens for d in docs)
    for c, n in enumerate(sizes):
        for p, r in zip(parts, (0.8, 0.1, 0.1)):
            assert abs(int((p.y == c).sum()) - r * n) <= 1


def test_split_errors():
    with pytest.raises(CorpusError, match="'c1'"):
        split(Dataset(_balanced(5).documents[:7], ("c0", "c1")))
    with pytest.raises(ValueError):
        split(_balanced(5), (0.5, 0.5, 0.5))


def test_stratified_sample():
    ds = _balanced(2000)
    sub = stratified_sample(ds, 1000, seed=1)
    assert np.bincount(sub.y).tolist() == [500, 500]
    assert stratified_sample(ds, 1000, seed=1).documents == sub.documents
    assert sorted(stratified_sample(ds, len(ds), 5).documents, key=str) == sorted(ds.documents, key=str)
    with pytest.raises(CorpusError):
        stratified_sample(ds, len(ds) + 1)


def test_dataset_roundtrip(tmp_path):
    p = tmp_path / "d.tsv"
    p.write_text("pos\tGreat movie!\n\nneg\tAwful, awful.\n", encoding="utf-8")
    ds = read_dataset(p)
    assert ds.labels == ("neg", "pos")
    assert ds.documents[0] == Document(("great", "movie"), 1)
    write_dataset(ds, tmp_path / "e.tsv")
    assert read_dataset(tmp_path / "e.tsv").documents == ds.documents
    (tmp_path / "bad.tsv").write_text("no tab here\n", encoding="utf-8")
    with pytest.raises(CorpusError, match=":1:"):
        read_dataset(tmp_path / "bad.tsv")


def test_read_corpus(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("One doc here.\n\nSecond doc\n", encoding="utf-8")
    docs = read_corpus(p)
    assert [d.tokens for d in docs] == [("one", "doc", "here"), ("second", "doc")]


def test_vocabulary_rejects_duplicates():
    with pytest.raises(ValueError):
        Vocabulary(("a", "a"), (1, 1))
