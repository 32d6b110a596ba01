"""Seeded synthetic two-domain corpora for end-to-end checks.

Vocabulary: topic words, polar (sentiment) words and function words. Each
document draws one topic and one polarity. Two kinds of domain idiosyncrasy
are planted:

* shifted words: one word per topic (up to ``n_planted``) belongs to its own
  topic in domain A but to a distant topic in domain B;
* flipped polar words: a fraction of polar words carry the opposite polarity
  in both domains from the one their generic vector encodes.

Generic vectors are prototype-plus-noise draws from the generic grouping, so
they know topics and generic polarity but none of the domain idiosyncrasies.
The labeled dataset is domain-A text labeled by document polarity.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .numerics import make_rng


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    n_docs: int = 1000            # unlabeled documents per domain
    n_planted: int = 10
    n_topics: int = 10
    topic_size: int = 20
    polar_size: int = 30          # words per polarity
    n_function: int = 15
    n_generic_extra: int = 200    # generic-only words
    flip_frac: float = 0.4
    generic_dim: int = 32
    generic_noise: float = 0.3
    n_labeled: int = 4000
    min_len: int = 8
    max_len: int = 16
    p_topic: float = 0.55
    p_polar: float = 0.25

    def __post_init__(self):
        if not 0 < self.n_planted <= self.n_topics:
            raise ValueError("n_planted must be in [1, n_topics]")
        if self.n_topics < 2 or self.topic_size < 2 or self.polar_size < 2:
            raise ValueError("need at least 2 topics of 2 words and 2 polar words per side")
        if not 0 <= self.flip_frac < 1 or self.p_topic + self.p_polar > 1:
            raise ValueError("invalid probabilities")
        if not 1 <= self.min_len <= self.max_len:
            raise ValueError("invalid document length range")


@dataclass
class SynthWorld:
    cfg: SynthConfig
    topic_words: list[list[str]]
    polar_words: list[list[str]]          # generic polarity 0 = pos, 1 = neg
    function_words: list[str]
    planted: list[str]
    flipped: list[str]
    generic_words: list[str]
    generic_vectors: np.ndarray

    def members(self, domain: str):
        """Topic membership and in-domain polar sets for ``domain`` ('a'/'b')."""
        topics = [list(ws) for ws in self.topic_words]
        if domain == "b":
            half = self.cfg.n_topics // 2
            for c in range(self.cfg.n_planted):
                w = self.topic_words[c][0]
                topics[c].remove(w)
                topics[(c + half) % self.cfg.n_topics].append(w)
        flipped = set(self.flipped)
        polar: list[list[str]] = [[], []]
        for side, words in enumerate(self.polar_words):
            for w in words:
                polar[1 - side if w in flipped else side].append(w)
        return topics, polar


def make_world(cfg: SynthConfig) -> SynthWorld:
    rng = make_rng(cfg.seed)
    topic_words = [[f"t{c:02d}w{j:02d}" for j in range(cfg.topic_size)] for c in range(cfg.n_topics)]
    polar_words = [[f"{tag}{j:02d}" for j in range(cfg.polar_size)] for tag in ("pos", "neg")]
    function_words = [f"fn{j:02d}" for j in range(cfg.n_function)]
    planted = [topic_words[c][0] for c in range(cfg.n_planted)]
    n_flip = int(round(cfg.flip_frac * cfg.polar_size))
    flipped = []
    for words in polar_words:
        pick = sorted(rng.permutation(len(words))[:n_flip])
        flipped.extend(words[i] for i in pick)

    dim = cfg.generic_dim
    protos = rng.standard_normal((cfg.n_topics + 3, dim))
    groups: list[tuple[str, int, float]] = []
    for c, ws in enumerate(topic_words):
        groups += [(w, c, cfg.generic_noise) for w in ws]
    for side, ws in enumerate(polar_words):
        groups += [(w, cfg.n_topics + side, cfg.generic_noise) for w in ws]
    groups += [(w, cfg.n_topics + 2, 2 * cfg.generic_noise) for w in function_words]
    words, rows = [], []
    for w, g, noise in groups:
        words.append(w)
        rows.append(protos[g] + noise * rng.standard_normal(dim))
    for j in range(cfg.n_generic_extra):
        words.append(f"gx{j:03d}")
        rows.append(rng.standard_normal(dim))
    order = rng.permutation(len(words))
    words = [words[i] for i in order]
    vectors = np.array(rows)[order]
    return SynthWorld(cfg, topic_words, polar_words, function_words, planted,
                      sorted(flipped), words, vectors)


def sample_documents(world: SynthWorld, domain: str, n: int, rng: np.random.Generator):
    """``n`` documents as (tokens, polarity) pairs."""
    cfg = world.cfg
    topics, polar = world.members(domain)
    docs = []
    for _ in range(n):
        c = int(rng.integers(cfg.n_topics))
        s = int(rng.integers(2))
        length = int(rng.integers(cfg.min_len, cfg.max_len + 1))
        kinds = rng.random(length)
        toks = []
        for u in kinds:
            if u < cfg.p_topic:
                pool = topics[c]
            elif u < cfg.p_topic + cfg.p_polar:
                pool = polar[s]
            else:
                pool = world.function_words
            toks.append(pool[int(rng.integers(len(pool)))])
        docs.append((toks, s))
    return docs


def write_synthetic(cfg: SynthConfig, out: str | Path) -> dict:
    """Write corpora, labeled data, generic vectors, gold list and manifest."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    world = make_world(cfg)
    rng = make_rng(cfg.seed + 1)
    files = {}
    for domain in ("a", "b"):
        docs = sample_documents(world, domain, cfg.n_docs, rng)
        path = out / f"domain_{domain}.txt"
        path.write_text("".join(" ".join(t) + "\n" for t, _ in docs), encoding="utf-8")
        files[f"corpus_{domain}"] = path.name
    labeled = sample_documents(world, "a", cfg.n_labeled, rng)
    names = ("pos", "neg")
    (out / "labeled.tsv").write_text(
        "".join(f"{names[s]}\t{' '.join(t)}\n" for t, s in labeled), encoding="utf-8")
    files["dataset"] = "labeled.tsv"
    with open(out / "generic.vec", "w", encoding="utf-8", newline="\n") as fh:
        for w, row in zip(world.generic_words, world.generic_vectors.tolist()):
            fh.write(w + " " + " ".join(repr(float(x)) for x in row) + "\n")
    files["generic"] = "generic.vec"
    (out / "gold.txt").write_text("".join(w + "\n" for w in sorted(world.planted)), encoding="utf-8")
    files["gold"] = "gold.txt"
    manifest = {
        "config": asdict(cfg),
        "files": files,
        "planted": sorted(world.planted),
        "flipped": world.flipped,
        "documents_per_domain": cfg.n_docs,
        "labeled_documents": cfg.n_labeled,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                       encoding="utf-8")
    return manifest
