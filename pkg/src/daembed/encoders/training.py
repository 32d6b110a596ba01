"""Mini-batch Adam training with early stopping, evaluation metrics and the
``DAEMB1`` model artifact."""
from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..adaptation import AdaptationParams
from ..corpus import Dataset, stratified_sample
from ..embeddings import EmbeddingMatrix
from ..kcca import AlignedPairs
from ..numerics import make_rng
from .network import EncoderConfig, Network, TrainConfig, WordTables, encode_docs, make_batch

MAGIC = b"DAEMB1\n"


class TrainingError(RuntimeError):
    pass


@dataclass
class Metrics:
    accuracy: float
    micro_f1: float
    precision: list[float]
    recall: list[float]
    confusion: np.ndarray  # rows: true class, columns: predicted

    def as_dict(self) -> dict:
        return {"accuracy": self.accuracy, "micro_f1": self.micro_f1,
                "precision": self.precision, "recall": self.recall,
                "confusion": self.confusion.tolist()}


def metrics_from_predictions(y_true: Sequence[int], y_pred: Sequence[int], n_classes: int) -> Metrics:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.size == 0:
        raise ValueError("cannot evaluate an empty dataset")
    conf = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(conf, (y_true, y_pred), 1)
    total = int(conf.sum())
    tp = np.diag(conf)
    accuracy = float(tp.sum()) / total
    # pooled counts: every error is one FP (predicted class) and one FN (true class)
    fp = int(conf.sum(axis=0).sum() - tp.sum())
    fn = int(conf.sum(axis=1).sum() - tp.sum())
    micro_p = float(tp.sum()) / (tp.sum() + fp)
    micro_r = float(tp.sum()) / (tp.sum() + fn)
    if micro_p == micro_r:
        micro_f1 = micro_p
    else:
        micro_f1 = 2 * micro_p * micro_r / (micro_p + micro_r)
    col, row = conf.sum(axis=0), conf.sum(axis=1)
    precision = [float(tp[c]) / col[c] if col[c] else 0.0 for c in range(n_classes)]
    recall = [float(tp[c]) / row[c] if row[c] else 0.0 for c in range(n_classes)]
    return Metrics(accuracy, micro_f1, precision, recall, conf)


class Adam:
    def __init__(self, lr: float = 1e-3, b1: float = 0.9, b2: float = 0.999, eps: float = 1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        c1 = 1 - self.b1 ** self.t
        c2 = 1 - self.b2 ** self.t
        for k in sorted(grads):
            g = grads[k]
            m = self.m.setdefault(k, np.zeros_like(g))
            v = self.v.setdefault(k, np.zeros_like(g))
            m *= self.b1
            m += (1 - self.b1) * g
            v *= self.b2
            v += (1 - self.b2) * g * g
            params[k] = np.asarray(params[k] - self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps))


@dataclass
class TrainedModel:
    encoder: EncoderConfig
    train: TrainConfig
    labels: tuple[str, ...]
    params: dict[str, np.ndarray]
    history: list[dict] = field(default_factory=list)
    sources: dict[str, str] = field(default_factory=dict)

    @property
    def adaptation(self) -> AdaptationParams | None:
        if "alpha" not in self.params:
            return None
        return AdaptationParams(float(self.params["alpha"]), float(self.params["beta"]))

    def network(self, source) -> Network:
        tables = WordTables.of(source)
        if tables.adapted != ("alpha" in self.params):
            raise ValueError("embedding source does not match the model's adaptation setting")
        return Network(self.encoder, tables, len(self.labels))


def _trainable(mode: str, net: Network, params: dict) -> set[str]:
    keys = {"clf_W", "clf_b"}
    if mode in ("adapt_only", "end_to_end"):
        keys |= {"alpha", "beta"}
    if mode in ("vanilla", "end_to_end"):
        keys |= set(net.encoder_keys(params))
    return keys


def _mean_loss_acc(net: Network, params: dict, seqs, y) -> tuple[float, float]:
    probs = net.predict_proba(params, seqs)
    p_true = np.maximum(probs[np.arange(len(y)), y], 1e-12)
    return float(-np.log(p_true).mean()), float((probs.argmax(1) == y).mean())


def train(splits: tuple[Dataset, Dataset] | tuple[Dataset, Dataset, Dataset],
          source: EmbeddingMatrix | AlignedPairs | WordTables,
          enc_cfg: EncoderConfig, train_cfg: TrainConfig,
          init_from: TrainedModel | None = None,
          sources: dict[str, str] | None = None) -> TrainedModel:
    """Fit a network on ``splits[0]``, early-stopping on accuracy over ``splits[1]``.

    vanilla needs a plain embedding; adapt_only / end_to_end need aligned
    pairs. In adapt_only mode the encoder weights come from ``init_from`` (a
    previously trained model with the same encoder) or from the seeded random
    initialization, and are never updated.
    """
    train_ds, dev_ds = splits[0], splits[1]
    if len(train_ds) == 0 or len(dev_ds) == 0:
        raise TrainingError("train and dev splits must be non-empty")
    tables = WordTables.of(source)
    adapted = train_cfg.mode != "vanilla"
    if adapted != tables.adapted:
        need = "aligned pairs" if adapted else "a single embedding matrix"
        raise TrainingError(f"mode {train_cfg.mode} needs {need}")
    net = Network(enc_cfg, tables, train_cfg.n_classes)
    rng = make_rng(train_cfg.seed)
    params = net.init_params(rng)
    if init_from is not None:
        if init_from.encoder != enc_cfg:
            raise TrainingError("init_from model has a different encoder configuration")
        for k in net.encoder_keys(params):
            params[k] = init_from.params[k].copy()
    trainable = _trainable(train_cfg.mode, net, params)

    tr_seqs = encode_docs(train_ds.documents, tables.vocab, enc_cfg.max_len)
    dv_seqs = encode_docs(dev_ds.documents, tables.vocab, enc_cfg.max_len)
    tr_y, dv_y = train_ds.y, dev_ds.y
    opt = Adam(train_cfg.lr)
    best_acc, best_params, stale = -1.0, None, 0
    history: list[dict] = []
    for epoch in range(train_cfg.max_epochs):
        order = rng.permutation(len(tr_seqs))
        for bi, start in enumerate(range(0, len(order), train_cfg.batch_size)):
            idx = order[start:start + train_cfg.batch_size]
            batch = make_batch([tr_seqs[i] for i in idx], tr_y[idx], net.min_len)
            loss, grads = net.loss_and_grads(params, batch, rng, trainable)
            if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads.values()):
                raise TrainingError(f"non-finite loss or gradient at epoch {epoch}, batch {bi}")
            opt.step(params, grads)
        tr_loss, tr_acc = _mean_loss_acc(net, params, tr_seqs, tr_y)
        dv_loss, dv_acc = _mean_loss_acc(net, params, dv_seqs, dv_y)
        record = {"epoch": epoch + 1, "train_loss": tr_loss, "train_acc": tr_acc,
                  "dev_loss": dv_loss, "dev_acc": dv_acc}
        if adapted:
            record["alpha"] = float(params["alpha"])
            record["beta"] = float(params["beta"])
        history.append(record)
        if dv_acc > best_acc:
            best_acc, stale = dv_acc, 0
            best_params = {k: v.copy() for k, v in params.items()}
        else:
            stale += 1
            if stale >= train_cfg.patience:
                break
    return TrainedModel(enc_cfg, train_cfg, train_ds.labels, best_params, history,
                        dict(sources or {}))


def evaluate(model: TrainedModel, dataset: Dataset, source) -> Metrics:
    """Eval-mode metrics of ``model`` on a labeled dataset."""
    if len(dataset) == 0:
        raise ValueError("cannot evaluate an empty dataset")
    net = model.network(source)
    seqs = encode_docs(dataset.documents, net.tables.vocab, model.encoder.max_len)
    pred = net.predict_proba(model.params, seqs).argmax(1)
    return metrics_from_predictions(dataset.y, pred, len(model.labels))


def subsample_train(train_ds: Dataset, n: int, seed: int = 0) -> Dataset:
    """Stratified seeded subsample used for the reduced-training-size runs."""
    return stratified_sample(train_ds, n, seed)


# ---------------------------------------------------------------------------
# DAEMB1 artifact: magic line, 8-byte header length, JSON header, raw float64
# ---------------------------------------------------------------------------

def save_model(model: TrainedModel, path: str | Path) -> None:
    names = sorted(model.params)
    arrays, offset = [], 0
    for name in names:
        arr = np.asarray(model.params[name], dtype="<f8")
        arrays.append({"name": name, "shape": list(arr.shape), "offset": offset})
        offset += arr.nbytes
    header = {
        "format": "DAEMB1",
        "encoder": asdict(model.encoder),
        "train": asdict(model.train),
        "labels": list(model.labels),
        "history": model.history,
        "sources": model.sources,
        "arrays": arrays,
    }
    ad = model.adaptation
    if ad is not None:
        header["adaptation"] = {"alpha": ad.alpha, "beta": ad.beta}
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for name in names:
            fh.write(np.asarray(model.params[name], dtype="<f8").tobytes())


def load_model(path: str | Path) -> TrainedModel:
    data = Path(path).read_bytes()
    if not data.startswith(MAGIC):
        raise ValueError(f"{path}: not a DAEMB1 model file")
    pos = len(MAGIC)
    (n,) = struct.unpack("<Q", data[pos:pos + 8])
    pos += 8
    header = json.loads(data[pos:pos + n].decode("utf-8"))
    body = pos + n
    params = {}
    for entry in header["arrays"]:
        count = int(np.prod(entry["shape"], dtype=np.int64))
        start = body + entry["offset"]
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=start)
        params[entry["name"]] = arr.reshape(entry["shape"]).astype(np.float64)
    enc = dict(header["encoder"])
    enc["filter_widths"] = tuple(enc["filter_widths"])
    return TrainedModel(EncoderConfig(**enc), TrainConfig(**header["train"]),
                        tuple(header["labels"]), params, header["history"], header["sources"])
