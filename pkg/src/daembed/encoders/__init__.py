"""Sentence encoders, the composed classifier network and its training loop."""
from .bilstm import bilstm_backward, bilstm_forward, init_bilstm
from .bow import bow_encode
from .cnn import cnn_backward, cnn_forward, init_cnn
from .layers import classify, cross_entropy, softmax
from .network import Batch, EncoderConfig, Network, TrainConfig, WordTables, make_batch
from .training import (Metrics, TrainedModel, TrainingError, evaluate, load_model,
                       metrics_from_predictions, save_model, subsample_train, train)

__all__ = [
    "Batch", "EncoderConfig", "Metrics", "Network", "TrainConfig", "TrainedModel",
    "TrainingError", "WordTables", "bilstm_backward", "bilstm_forward", "bow_encode",
    "classify", "cnn_backward", "cnn_forward", "cross_entropy", "evaluate", "init_bilstm",
    "init_cnn", "load_model", "make_batch", "metrics_from_predictions", "save_model",
    "softmax", "subsample_train", "train",
]
