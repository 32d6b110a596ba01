"""``daembed`` command line: build-ds, align, train, eval, shift, hypergeom, synth.

Settings come from an INI file (``--config``) whose sections and keys are
checked against ``SCHEMA``; unknown keys are rejected. Flags override the
file. Relative paths in the file resolve against the file's directory.

Primary outputs are canonical (sorted-key JSON, repr floats, no clocks), so a
rerun with the same inputs rewrites them byte for byte. Wall-clock timings go
to a ``<command>.timing.json`` sidecar.
"""
from __future__ import annotations

import argparse
import configparser
import json
import sys
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from . import __version__
from .adaptation import AdaptationParams
from .corpus import read_corpus, read_dataset, split
from .embeddings import load_pretrained, save_embeddings
from .encoders import EncoderConfig, TrainConfig, evaluate, load_model, save_model, train
from .encoders.training import subsample_train
from .kcca import CcaConfig, align_generic_ds, load_aligned, save_aligned
from .pipeline import build_ds, shift_analysis
from .shift import HypergeomParams, read_gold, report_csv, significance
from .synth import SynthConfig, write_synthetic


class UsageError(ValueError):
    pass


def _opt_int(s: str) -> int | None:
    return None if s.strip().lower() in ("", "none") else int(s)


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _ints(s: str) -> tuple[int, ...]:
    return tuple(int(t) for t in s.replace(",", " ").split())


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(t) for t in s.replace(",", " ").split())


_CCA = {"reg": float, "rank": _opt_int, "kernel": str, "sigma": float, "landmarks": _opt_int}
_SYNTH_TYPES = {"int": int, "float": float}

SCHEMA: dict[str, dict] = {
    "run": {"seed": int},
    "corpus": {"path": "path", "domain_a": "path", "domain_b": "path", "min_count": int},
    "embeddings": {"generic": "path", "ds": "path", "aligned": "path", "dim": int,
                   "window": int, "power": float},
    "cca": _CCA,
    "cross": _CCA,
    "adaptation": {"alpha": float, "beta": float, "model": "path"},
    "encoder": {"kind": str, "filter_widths": _ints, "feature_maps": int, "hidden": int,
                "dropout": float, "max_len": int},
    "train": {"dataset": "path", "mode": str, "lr": float, "batch_size": int,
              "max_epochs": int, "patience": int, "train_size": _opt_int, "split": _floats,
              "init_model": "path"},
    "eval": {"model": "path", "dataset": "path", "split": str},
    "shift": {"gold": "path", "top_n": int, "normalize": _bool},
    "synth": {f.name: _SYNTH_TYPES[f.type] for f in fields(SynthConfig) if f.name != "seed"},
}

DEFAULTS: dict[str, dict] = {
    "run": {"seed": 0},
    "corpus": {"min_count": 1},
    "embeddings": {"dim": 300, "window": 5, "power": 1.0},
    "cca": asdict(CcaConfig()),
    "cross": asdict(CcaConfig()),
    "adaptation": {"alpha": 0.5, "beta": 0.5},
    "encoder": asdict(EncoderConfig()),
    "train": {"mode": "vanilla", "lr": 1e-3, "batch_size": 32, "max_epochs": 100,
              "patience": 5, "train_size": None, "split": (0.8, 0.1, 0.1)},
    "eval": {"split": "test"},
    "shift": {"top_n": 200, "normalize": True},
    "synth": {k: v for k, v in asdict(SynthConfig()).items() if k != "seed"},
}


@dataclass
class RunConfig:
    values: dict[str, dict]
    raw_paths: dict[str, str]      # "section.key" -> path as written, for report echo
    base: Path

    def get(self, section: str, key: str, default=None):
        return self.values.get(section, {}).get(key, default)

    def path(self, section: str, key: str, required: bool = True) -> Path | None:
        raw = self.get(section, key)
        if raw is None:
            if required:
                raise UsageError(f"missing setting [{section}] {key}")
            return None
        p = Path(raw)
        return p if p.is_absolute() else self.base / p

    def echo(self, *sections: str) -> dict:
        out = {}
        for s in sections:
            sec = {}
            for k, v in sorted(self.values.get(s, {}).items()):
                sec[k] = list(v) if isinstance(v, tuple) else v
            out[s] = sec
        return out

    def cca(self, section: str) -> CcaConfig:
        return CcaConfig(**self.values[section])


def load_config(path: str | Path | None) -> RunConfig:
    values = {s: dict(v) for s, v in DEFAULTS.items()}
    raw_paths: dict[str, str] = {}
    base = Path.cwd()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise UsageError(f"config file not found: {path}")
        parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
        parser.read(path, encoding="utf-8")
        base = path.parent
        for section in parser.sections():
            if section not in SCHEMA:
                raise UsageError(f"{path}: unknown section [{section}]")
            for key, text in parser.items(section):
                kind = SCHEMA[section].get(key)
                if kind is None:
                    raise UsageError(f"{path}: unknown key {key!r} in [{section}]")
                if kind == "path":
                    values.setdefault(section, {})[key] = text.strip()
                    raw_paths[f"{section}.{key}"] = text.strip()
                    continue
                try:
                    values.setdefault(section, {})[key] = kind(text)
                except ValueError as exc:
                    raise UsageError(f"{path}: bad value for [{section}] {key}: {exc}") from None
    return RunConfig(values, raw_paths, base)


def _apply_flags(cfg: RunConfig, args) -> None:
    if getattr(args, "seed", None) is not None:
        cfg.values["run"]["seed"] = args.seed
    if getattr(args, "train_size", None) is not None:
        cfg.values["train"]["train_size"] = args.train_size
    if getattr(args, "mode", None) is not None:
        cfg.values["train"]["mode"] = args.mode.replace("-", "_")
    if getattr(args, "encoder", None) is not None:
        cfg.values["encoder"]["kind"] = args.encoder
    if getattr(args, "top_n", None) is not None:
        cfg.values["shift"]["top_n"] = args.top_n
    if getattr(args, "no_normalize", False):
        cfg.values["shift"]["normalize"] = False


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def canonical_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="\n")


def _timing(out: Path, command: str, started: float, stages: dict[str, float]) -> None:
    sidecar = {"command": command, "wall_seconds": time.perf_counter() - started,
               "stages": stages, "finished_at": time.strftime("%Y-%m-%dT%H:%M:%S%z")}
    _write(out / f"{command}.timing.json", canonical_json(sidecar))


def _header(command: str, cfg: RunConfig) -> dict:
    return {"tool": "daembed", "version": __version__, "command": command,
            "seed": cfg.get("run", "seed"), "paths": dict(sorted(cfg.raw_paths.items()))}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_build_ds(cfg: RunConfig, out: Path) -> dict:
    t0 = time.perf_counter()
    docs = read_corpus(cfg.path("corpus", "path"))
    e = cfg.values["embeddings"]
    built = build_ds(docs, e["dim"], e["window"], cfg.get("corpus", "min_count"),
                     cfg.get("run", "seed"), e["power"])
    save_embeddings(built.embedding, out / "ds.vec")
    warnings = []
    if built.clamped:
        warnings.append(f"dim {e['dim']} exceeds vocabulary size; clamped to {built.embedding.dim}")
    side = {**_header("build-ds", cfg), **cfg.echo("embeddings", "corpus"),
            "documents": len(docs), "vocab_size": len(built.embedding.vocab),
            "dim": built.embedding.dim, "requested_dim": built.requested_dim,
            "warnings": warnings}
    _write(out / "ds.json", canonical_json(side))
    _timing(out, "build-ds", t0, {})
    return side


def cmd_align(cfg: RunConfig, out: Path) -> dict:
    t0 = time.perf_counter()
    ds = load_pretrained(cfg.path("embeddings", "ds"), role="domain_specific")
    gen = load_pretrained(cfg.path("embeddings", "generic"), vocab_filter=ds.vocab.tokens,
                          role="generic")
    pairs = align_generic_ds(gen, ds, cfg.cca("cca"))
    save_aligned(pairs, out / "aligned")
    _timing(out, "align", t0, {})
    return {"words": len(pairs.vocab), "correlations": pairs.model.correlations.tolist()}


def _embedding_source(cfg: RunConfig, adapted: bool, vocab_tokens):
    if adapted:
        key = "aligned"
        return load_aligned(cfg.path("embeddings", "aligned")), key
    key = "generic"
    return load_pretrained(cfg.path("embeddings", "generic"), vocab_filter=vocab_tokens,
                           role="generic"), key


def _dataset_tokens(ds) -> set[str]:
    return {t for d in ds.documents for t in d.tokens}


def cmd_train(cfg: RunConfig, out: Path) -> dict:
    t0 = time.perf_counter()
    seed = cfg.get("run", "seed")
    t = cfg.values["train"]
    dataset = read_dataset(cfg.path("train", "dataset"))
    tr, dv, te = split(dataset, t["split"], seed)
    if t["train_size"] is not None:
        tr = subsample_train(tr, t["train_size"], seed)
    enc = EncoderConfig(**cfg.values["encoder"])
    tc = TrainConfig(mode=t["mode"], lr=t["lr"], batch_size=t["batch_size"],
                     max_epochs=t["max_epochs"], patience=t["patience"], seed=seed,
                     n_classes=len(dataset.labels))
    source, key = _embedding_source(cfg, tc.mode != "vanilla", _dataset_tokens(dataset))
    init = cfg.path("train", "init_model", required=False)
    init_model = load_model(init) if init is not None else None
    sources = {"embeddings": cfg.raw_paths.get(f"embeddings.{key}", ""),
               "dataset": cfg.raw_paths.get("train.dataset", ""),
               "split": ",".join(repr(r) for r in t["split"])}
    stage = time.perf_counter()
    model = train((tr, dv, te), source, enc, tc, init_from=init_model, sources=sources)
    train_secs = time.perf_counter() - stage
    save_model(model, out / "model.daemb")
    metrics = {name: evaluate(model, part, source).as_dict()
               for name, part in (("train", tr), ("dev", dv), ("test", te))}
    report = {**_header("train", cfg), **cfg.echo("encoder", "train"),
              "labels": list(model.labels),
              "sizes": {"train": len(tr), "dev": len(dv), "test": len(te)},
              "epochs_run": len(model.history),
              "best_dev_accuracy": max(h["dev_acc"] for h in model.history),
              "metrics": metrics}
    ad = model.adaptation
    if ad is not None:
        report["adaptation"] = {"alpha": ad.alpha, "beta": ad.beta}
    _write(out / "train_report.json", canonical_json(report))
    _timing(out, "train", t0, {"train": train_secs})
    return report


def cmd_eval(cfg: RunConfig, out: Path) -> dict:
    t0 = time.perf_counter()
    model = load_model(cfg.path("eval", "model"))
    ds_path = cfg.path("eval", "dataset", required=False) or cfg.path("train", "dataset")
    dataset = read_dataset(ds_path, labels=model.labels)
    which = cfg.get("eval", "split")
    if which == "all":
        part = dataset
    elif which in ("train", "dev", "test"):
        ratios = _floats(model.sources.get("split", "0.8,0.1,0.1"))
        tr, dv, te = split(dataset, ratios, model.train.seed)
        part = {"train": tr, "dev": dv, "test": te}[which]
    else:
        raise UsageError(f"[eval] split must be train, dev, test or all, got {which!r}")
    source, _ = _embedding_source(cfg, model.adaptation is not None, _dataset_tokens(dataset))
    metrics = evaluate(model, part, source)
    report = {**_header("eval", cfg), "split": which, "size": len(part),
              "metrics": metrics.as_dict()}
    ad = model.adaptation
    if ad is not None:
        report["adaptation"] = {"alpha": ad.alpha, "beta": ad.beta}
    _write(out / "eval_report.json", canonical_json(report))
    _timing(out, "eval", t0, {})
    return report


def cmd_shift(cfg: RunConfig, out: Path) -> dict:
    t0 = time.perf_counter()
    docs_a = read_corpus(cfg.path("corpus", "domain_a"))
    docs_b = read_corpus(cfg.path("corpus", "domain_b"))
    gen = load_pretrained(cfg.path("embeddings", "generic"), role="generic")
    gold_path = cfg.path("shift", "gold", required=False)
    gold = read_gold(gold_path)
    model_path = cfg.path("adaptation", "model", required=False)
    if model_path is not None:
        ad = load_model(model_path).adaptation
        if ad is None:
            raise UsageError(f"{model_path}: model has no adaptation weights")
    else:
        ad = AdaptationParams(cfg.get("adaptation", "alpha"), cfg.get("adaptation", "beta"))
    e, s = cfg.values["embeddings"], cfg.values["shift"]
    res = shift_analysis(docs_a, docs_b, gen, gold, dim=e["dim"], window=e["window"],
                         min_count=cfg.get("corpus", "min_count"), seed=cfg.get("run", "seed"),
                         cca=cfg.cca("cca"), cross=cfg.cca("cross"), adaptation=ad,
                         normalize=s["normalize"], top_n=s["top_n"])
    _write(out / "shift.csv", report_csv(res.report, gold))
    sig = res.significance
    summary = {**_header("shift", cfg), **cfg.echo("embeddings", "cca", "cross", "shift"),
               "adaptation": {"alpha": ad.alpha, "beta": ad.beta},
               "common_words": len(res.common), "notes": res.notes,
               "hypergeom": asdict(sig.params), "mean": sig.mean, "std": sig.std,
               "pmf": sig.pmf, "p_value": sig.p_value, "verdict": sig.verdict}
    _write(out / "significance.json", canonical_json(summary))
    _write(out / "significance.txt", "\n".join(sig.lines()) + "\n")
    _timing(out, "shift", t0, {})
    return summary


def cmd_hypergeom(V: int, K: int, n: int, k: int) -> list[str]:
    try:
        params = HypergeomParams(V, K, n, k)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return significance(params).lines()


SYNTH_RUN_INI = """\
# Settings for running the pipeline on this synthetic world.
# Use --out pointing at this directory for build-ds and align so that
# ds.vec and aligned.* land where the paths below expect them.
[run]
seed = {seed}

[corpus]
path = domain_a.txt
domain_a = domain_a.txt
domain_b = domain_b.txt

[embeddings]
generic = generic.vec
ds = ds.vec
aligned = aligned
dim = 20

[cross]
rank = 10

[encoder]
feature_maps = 40
max_len = 32

[train]
dataset = labeled.tsv
max_epochs = 30

[shift]
gold = gold.txt
top_n = 20
"""


def cmd_synth(cfg: RunConfig, out: Path) -> dict:
    t0 = time.perf_counter()
    sc = SynthConfig(seed=cfg.get("run", "seed"), **cfg.values["synth"])
    manifest = write_synthetic(sc, out)
    _write(out / "run.ini", SYNTH_RUN_INI.format(seed=sc.seed))
    _timing(out, "synth", t0, {})
    return manifest


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="daembed", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"daembed {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--config", help="INI settings file")
        sp.add_argument("--seed", type=int)
        if out:
            sp.add_argument("--out", default=".", help="output directory (default: .)")
        return sp

    common(sub.add_parser("build-ds", help="PPMI + truncated SVD embeddings of a corpus"))
    common(sub.add_parser("align", help="CCA-align generic and domain-specific embeddings"))
    for name, text in (("train", "train a classifier"), ("eval", "evaluate a saved model")):
        sp = common(sub.add_parser(name, help=text))
        sp.add_argument("--train-size", type=int)
        sp.add_argument("--mode", choices=("vanilla", "adapt-only", "end-to-end",
                                           "adapt_only", "end_to_end"))
        sp.add_argument("--encoder", choices=("bow", "cnn", "bilstm"))
    sp = common(sub.add_parser("shift", help="rank cross-domain word shift"))
    sp.add_argument("--top-n", type=int)
    sp.add_argument("--no-normalize", action="store_true")
    sp = sub.add_parser("hypergeom", help="hypergeometric overlap significance")
    for name in ("V", "K", "n", "k"):
        sp.add_argument(name, type=int)
    common(sub.add_parser("synth", help="write a synthetic two-domain world"))
    return p


COMMANDS = {"build-ds": cmd_build_ds, "align": cmd_align, "train": cmd_train,
            "eval": cmd_eval, "shift": cmd_shift, "synth": cmd_synth}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "hypergeom":
            print("\n".join(cmd_hypergeom(args.V, args.K, args.n, args.k)))
            return 0
        cfg = load_config(args.config)
        _apply_flags(cfg, args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](cfg, out)
        return 0
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"daembed {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, RuntimeError, KeyError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"daembed {args.command}: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
