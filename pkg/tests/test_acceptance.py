"""Acceptance suite: one PASS/FAIL line per primary criterion.

Run with ``pytest tests/test_acceptance.py -s`` or ``python tests/test_acceptance.py``.
Tolerances and runtime budgets are pinned in the constants below.
"""
from __future__ import annotations

import configparser
import contextlib
import csv
import io
import json
import math
import shutil
import sys
import tempfile
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import network_grad_errors, rational_pmf, rel_error  # noqa: E402
from daembed.adaptation import AdaptationParams, adapt_matrix, apply, grad  # noqa: E402
from daembed.cli import main  # noqa: E402
from daembed.corpus import Vocabulary  # noqa: E402
from daembed.encoders import (EncoderConfig, Network, WordTables, bow_encode,  # noqa: E402
                              make_batch, metrics_from_predictions)
from daembed.kcca import AlignedPairs, CcaConfig, fit_cca  # noqa: E402
from daembed.numerics import exact_svd, truncated_svd  # noqa: E402
from daembed.shift import (GOLD_SHA256, HypergeomParams, hypergeom_mean_std,  # noqa: E402
                           hypergeom_pmf, lexicon_digest, read_gold, tail_pvalue)

SEEDS = (0, 1, 2, 3, 4)

# hypergeometric reproduction
HG_PARAMS = (1573, 74, 200, 20)
HG_MEAN, HG_MEAN_TOL = 9.4088, 1e-4
HG_STD, HG_STD_TOL = 2.7984, 1e-4
HG_PMF, HG_PMF_TOL = 0.000346, 2e-6
HG_P, HG_P_TOL = 0.000524, 2e-6
HG_BUDGET = 1.0
# rational oracle
ORACLE_MAX_V = 60
ORACLE_REL_TOL = 1e-10
SUM_SETS, SUM_MAX_V, SUM_TOL = 100, 5000, 1e-10
ORACLE_BUDGET = 30.0
# 1-D CCA
CCA_SAMPLES, CCA_M, CCA_REG, CCA_TOL, CCA_BUDGET = 50, 200, 1e-9, 1e-6, 10.0
# gradients
GRAD_INSTANCES, GRAD_STEP, GRAD_TOL, GRAD_BUDGET = 20, 1e-5, 1e-4, 120.0
# SVD
SVD_REL_TOL, SVD_EXACT_TOL, SVD_BUDGET = 1e-6, 1e-6, 30.0
# planted shift
PLANTED_MIN_HITS, PLANTED_TOP_N, PLANTED_P, PLANTED_MIN_SEEDS = 7, 20, 0.01, 4
PLANTED_BUDGET = 300.0
# adaptation benefit
ADAPT_SIZES = (2500, 1000)
ADAPT_MIN_GAP_PP, ADAPT_MIN_SEEDS, ADAPT_SHRINK_SLACK_PP = 1.0, 4, 1.0
ADAPT_LR = {"bow": 1e-2, "cnn": 1e-3}
ADAPT_BUDGET = 900.0
# identities
IDENTITY_TOL = 1e-12
# gold fixture
GOLD_COUNT = 74


def _run(*argv: str) -> None:
    code = main(list(argv))
    if code != 0:
        raise RuntimeError(f"daembed {' '.join(argv)} exited {code}")


def _world(root: Path, seed: int) -> Path:
    """Synthetic world with DS and aligned embeddings, built once per seed."""
    out = root / f"world{seed}"
    if not (out / "aligned.header.json").exists():
        _run("synth", "--out", str(out), "--seed", str(seed))
        ini = str(out / "run.ini")
        _run("build-ds", "--config", ini, "--out", str(out))
        _run("align", "--config", ini, "--out", str(out))
    return out


# ---------------------------------------------------------------------------
# criteria: each returns (passed, detail)
# ---------------------------------------------------------------------------

def hypergeometric_reproduction(root: Path):
    t0 = time.perf_counter()
    p = HypergeomParams(*HG_PARAMS)
    mu, sd = hypergeom_mean_std(p)
    pmf, tail = hypergeom_pmf(p), tail_pvalue(p)
    secs = time.perf_counter() - t0
    ok = (abs(mu - HG_MEAN) <= HG_MEAN_TOL and abs(sd - HG_STD) <= HG_STD_TOL
          and abs(pmf - HG_PMF) <= HG_PMF_TOL and abs(tail - HG_P) <= HG_P_TOL
          and secs < HG_BUDGET)
    return ok, f"mu={mu:.6f} sigma={sd:.6f} pmf={pmf:.6g} p={tail:.6g} ({secs:.3f}s)"


def exact_oracle_equivalence(root: Path):
    t0 = time.perf_counter()
    worst, count = 0.0, 0
    for V in range(1, ORACLE_MAX_V + 1):
        for K in range(V + 1):
            for n in range(V + 1):
                for k in range(max(0, n + K - V), min(n, K) + 1):
                    exact = rational_pmf(V, K, n, k)
                    got = hypergeom_pmf(HypergeomParams(V, K, n, k))
                    worst = max(worst, float(abs(Fraction(got) - exact) / exact))
                    count += 1
    rng = np.random.default_rng(0)
    worst_sum = 0.0
    for _ in range(SUM_SETS):
        V = int(rng.integers(1, SUM_MAX_V + 1))
        K, n = (int(v) for v in rng.integers(0, V + 1, 2))
        lo, hi = max(0, n + K - V), min(n, K)
        total = math.fsum(hypergeom_pmf(HypergeomParams(V, K, n, k)) for k in range(lo, hi + 1))
        worst_sum = max(worst_sum, abs(total - 1.0))
    secs = time.perf_counter() - t0
    ok = worst < ORACLE_REL_TOL and worst_sum < SUM_TOL and secs < ORACLE_BUDGET
    return ok, (f"{count} sets, max rel err {worst:.2e}; max |sum-1| {worst_sum:.2e} "
                f"over {SUM_SETS} sets ({secs:.1f}s)")


def cca_analytic_oracle(root: Path):
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(CCA_SAMPLES):
        r = rng.uniform(-0.95, 0.95)
        x = rng.standard_normal(CCA_M)
        y = r * x + math.sqrt(1 - r * r) * rng.standard_normal(CCA_M)
        pearson = abs(np.corrcoef(x, y)[0, 1])
        rho = fit_cca(x[:, None], y[:, None], CcaConfig(reg=CCA_REG)).correlations[0]
        worst = max(worst, abs(rho - pearson))
    secs = time.perf_counter() - t0
    return worst < CCA_TOL and secs < CCA_BUDGET, f"max |rho - |r|| = {worst:.2e} ({secs:.2f}s)"


def _alpha_beta_error(seed: int) -> float:
    rng = np.random.default_rng(seed)
    g, s, w = rng.standard_normal((3, 6))
    ab = rng.standard_normal(2)

    def loss(a, b):
        return float(np.sum(np.sin(apply(AdaptationParams(a, b), g, s)) * w))

    up = np.cos(apply(AdaptationParams(*ab), g, s)) * w
    h = GRAD_STEP
    num = [(loss(ab[0] + h, ab[1]) - loss(ab[0] - h, ab[1])) / (2 * h),
           (loss(ab[0], ab[1] + h) - loss(ab[0], ab[1] - h)) / (2 * h)]
    return rel_error(grad(AdaptationParams(*ab), g, s, up), num)


def gradient_suite(root: Path):
    t0 = time.perf_counter()
    worst = {"alpha_beta": max(_alpha_beta_error(s) for s in range(GRAD_INSTANCES))}
    groups = {"classifier": ("clf_",), "cnn": ("cnn_",), "bilstm": ("lstm_",)}
    for kind in ("bow", "cnn", "bilstm"):
        for seed in range(GRAD_INSTANCES):
            errs = network_grad_errors(kind, seed, adapted=True)
            for name, key in (("alpha_beta", "alpha"), ("alpha_beta", "beta")):
                worst[name] = max(worst[name], errs[key])
            for group, prefixes in groups.items():
                vals = [e for k, e in errs.items() if k.startswith(prefixes)]
                if vals:
                    worst[group] = max(worst.get(group, 0.0), max(vals))
    secs = time.perf_counter() - t0
    ok = max(worst.values()) < GRAD_TOL and secs < GRAD_BUDGET
    detail = ", ".join(f"{k} {v:.1e}" for k, v in sorted(worst.items()))
    return ok, f"max rel err: {detail}; {GRAD_INSTANCES} instances per encoder ({secs:.1f}s)"


def svd_properties(root: Path):
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    worst_rec, worst_exact, monotone = 0.0, 0.0, True
    for r in range(1, 11):
        for shape in ((200, 100), (100, 200), (60, 40)):
            a = rng.standard_normal((shape[0], r)) @ rng.standard_normal((r, shape[1]))
            u, s, vt = truncated_svd(a, r, rng=r)
            worst_rec = max(worst_rec, np.linalg.norm(a - (u * s) @ vt) / np.linalg.norm(a))
            monotone &= bool(np.all(np.diff(s) <= 0)) and bool(np.all(s >= 0))
    for n in (5, 12, 30):
        a = rng.standard_normal((n, n))
        _, s_exact, _ = exact_svd(a)
        _, s, _ = truncated_svd(a, n, rng=0)
        worst_exact = max(worst_exact, float(np.max(np.abs(s - s_exact))))
    secs = time.perf_counter() - t0
    ok = worst_rec < SVD_REL_TOL and worst_exact < SVD_EXACT_TOL and monotone and secs < SVD_BUDGET
    return ok, (f"max rel reconstruction {worst_rec:.1e}, max |s - s_exact| {worst_exact:.1e}, "
                f"non-increasing={monotone} ({secs:.1f}s)")


def planted_shift_recovery(root: Path):
    t0 = time.perf_counter()
    rows, good = [], 0
    for seed in SEEDS:
        world = _world(root, seed)
        out = root / f"shift{seed}"
        _run("shift", "--config", str(world / "run.ini"), "--out", str(out),
             "--top-n", str(PLANTED_TOP_N))
        with open(out / "shift.csv", encoding="utf-8", newline="") as fh:
            top = list(csv.DictReader(fh))[:PLANTED_TOP_N]
        hits = sum(int(r["in_gold"]) for r in top)
        p = json.loads((out / "significance.json").read_text())["p_value"]
        good += hits >= PLANTED_MIN_HITS and p < PLANTED_P
        rows.append(f"s{seed}:{hits}/10 p={p:.1e}")
    secs = time.perf_counter() - t0
    ok = good >= PLANTED_MIN_SEEDS and secs < PLANTED_BUDGET
    return ok, f"{good}/5 seeds pass [{' '.join(rows)}] ({secs:.0f}s)"


def _encoder_ini(world: Path, kind: str) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    cp.read(world / "run.ini", encoding="utf-8")
    cp["encoder"]["kind"] = kind
    cp["train"]["lr"] = repr(ADAPT_LR[kind])
    path = world / f"{kind}.ini"
    with open(path, "w", encoding="utf-8") as fh:
        cp.write(fh)
    return str(path)


def _test_accuracy(ini: str, out: Path, mode: str, size: int) -> float:
    _run("train", "--config", ini, "--out", str(out), "--mode", mode, "--train-size", str(size))
    return json.loads((out / "train_report.json").read_text())["metrics"]["test"]["accuracy"]


def adaptation_benefit(root: Path):
    t0 = time.perf_counter()
    gaps = {(k, n): [] for k in ADAPT_LR for n in ADAPT_SIZES}
    for seed in SEEDS:
        world = _world(root, seed)
        for kind in ADAPT_LR:
            ini = _encoder_ini(world, kind)
            for n in ADAPT_SIZES:
                base = root / f"adapt{seed}" / f"{kind}{n}"
                van = _test_accuracy(ini, base / "vanilla", "vanilla", n)
                ada = _test_accuracy(ini, base / "adapt", "adapt-only", n)
                gaps[kind, n].append(100.0 * (ada - van))
    secs = time.perf_counter() - t0
    ok, parts = secs < ADAPT_BUDGET, []
    for kind in ADAPT_LR:
        big, small = gaps[kind, ADAPT_SIZES[0]], gaps[kind, ADAPT_SIZES[1]]
        wins = [sum(g >= ADAPT_MIN_GAP_PP for g in gaps[kind, n]) for n in ADAPT_SIZES]
        holds = np.mean(small) >= np.mean(big) - ADAPT_SHRINK_SLACK_PP
        ok &= min(wins) >= ADAPT_MIN_SEEDS and bool(holds)
        parts.append(f"{kind}: wins {wins[0]}/5@{ADAPT_SIZES[0]} {wins[1]}/5@{ADAPT_SIZES[1]}, "
                     f"mean gap {np.mean(big):+.1f}pp -> {np.mean(small):+.1f}pp")
    return ok, "; ".join(parts) + f" ({secs:.0f}s)"


def baseline_identities(root: Path):
    rng = np.random.default_rng(0)
    micro_ok = True
    for _ in range(500):
        c = int(rng.integers(2, 8))
        n = int(rng.integers(1, 200))
        m = metrics_from_predictions(rng.integers(0, c, n), rng.integers(0, c, n), c)
        micro_ok &= m.micro_f1 == m.accuracy
    for seed in SEEDS:
        report = root / f"adapt{seed}"
        for path in report.glob("*/*/train_report.json"):
            for m in json.loads(path.read_text())["metrics"].values():
                micro_ok &= m["micro_f1"] == m["accuracy"]
    words = tuple(f"w{i}" for i in range(40))
    v = Vocabulary(words, (1,) * len(words))
    pairs = AlignedPairs(v, rng.standard_normal((40, 16)), rng.standard_normal((40, 16)))
    net = Network(EncoderConfig(kind="bow"), WordTables.of(pairs), 2)
    params = net.init_params(rng, AdaptationParams(0.5, 0.5))
    da = adapt_matrix(AdaptationParams(0.5, 0.5), pairs)
    docs = [[words[i] for i in rng.integers(0, 40, int(rng.integers(1, 30)))] for _ in range(50)]
    seqs = [np.array([v.index[t] for t in d]) for d in docs]
    h = net.forward(params, make_batch(seqs))[1][0]
    worst = max(float(np.max(np.abs(row - bow_encode(d, da)))) for row, d in zip(h, docs))
    ok = micro_ok and worst < IDENTITY_TOL
    return ok, f"micro-F == accuracy: {micro_ok}; max |BoW-DA difference| {worst:.1e}"


def determinism(root: Path):
    t0 = time.perf_counter()
    outputs = []
    for rep in ("a", "b"):
        base = root / f"det_{rep}"
        world = base / "world"
        ini = str(world / "run.ini")
        _run("synth", "--out", str(world), "--seed", "3")
        _run("build-ds", "--config", ini, "--out", str(world))
        _run("align", "--config", ini, "--out", str(world))
        for kind, mode in (("cnn", "vanilla"), ("bilstm", "end-to-end"), ("bow", "adapt-only")):
            out = base / f"train_{kind}"
            _run("train", "--config", ini, "--out", str(out), "--encoder", kind,
                 "--mode", mode, "--train-size", "200", "--seed", "3")
            ev = world / f"eval_{kind}.ini"
            ev.write_text(Path(ini).read_text(encoding="utf-8")
                          + f"\n[eval]\nmodel = ../train_{kind}/model.daemb\n", encoding="utf-8")
            _run("eval", "--config", str(ev), "--out", str(out), "--encoder", kind)
        _run("shift", "--config", ini, "--out", str(base / "shift"))
        buf = io.StringIO()
        with contextlib.redirect_stdout(buf):
            _run("hypergeom", *map(str, HG_PARAMS))
        (base / "hypergeom.txt").write_text(buf.getvalue(), encoding="utf-8")
        outputs.append({str(p.relative_to(base)): p.read_bytes()
                        for p in sorted(base.rglob("*"))
                        if p.is_file() and not p.name.endswith(".timing.json")})
    a, b = outputs
    differing = sorted(k for k in a.keys() | b.keys() if a.get(k) != b.get(k))
    secs = time.perf_counter() - t0
    ok = not differing and len(a) > 0
    detail = f"{len(a)} files compared across 7 commands" if ok else f"differ: {differing[:5]}"
    return ok, f"{detail} ({secs:.0f}s)"


def gold_fixture_integrity(root: Path):
    words = read_gold()
    digest_ok = lexicon_digest(words) == GOLD_SHA256
    ok = digest_ok and len(words) == GOLD_COUNT and len(set(words)) == len(words)
    return ok, f"{len(words)} words (required {GOLD_COUNT}); checksum match={digest_ok}"


CRITERIA = [
    ("Hypergeometric reproduction", hypergeometric_reproduction),
    ("Exact-oracle equivalence", exact_oracle_equivalence),
    ("CCA analytic oracle", cca_analytic_oracle),
    ("Gradient suite", gradient_suite),
    ("SVD properties", svd_properties),
    ("Planted-shift recovery", planted_shift_recovery),
    ("Adaptation benefit trend", adaptation_benefit),
    ("Baseline identities", baseline_identities),
    ("Determinism", determinism),
    ("Gold fixture integrity", gold_fixture_integrity),
]


def _line(name: str, ok: bool, detail: str) -> str:
    return f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


@pytest.mark.parametrize("name, check", CRITERIA, ids=[c[0] for c in CRITERIA])
def test_criterion(name, check, workdir, capsys):
    ok, detail = check(workdir)
    with capsys.disabled():
        print("\n" + _line(name, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    root = Path(tempfile.mkdtemp(prefix="daembed-acceptance-"))
    failures = 0
    try:
        for name, check in CRITERIA:
            ok, detail = check(root)
            failures += not ok
            print(_line(name, ok, detail), flush=True)
    finally:
        shutil.rmtree(root, ignore_errors=True)
    sys.exit(1 if failures else 0)
