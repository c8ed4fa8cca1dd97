import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
import pandas as pd
import yaml
from tqdm import tqdm

from components.checkpoint_system import save_checkpoint, load_checkpoint
from components.nn_system import (Embedding, Conv1D, GlobalMaxPool, Bidirectional, Dense, Dropout, Adam,
                                  softmax, softmax_crossentropy, ensure_finite)
from config import model_config
from config.dataprep_config import default_seed
from config.textenc_config import max_words as default_max_words, max_length as default_max_length
from utils.exceptions import CheckpointError, TrainingDivergedError, NonFiniteTensorError, InsufficientDataError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModelSpec:
    kind: str = 'cnn'
    max_words: int = default_max_words
    embedding_dim: int = model_config.embedding_dim
    max_length: int = default_max_length
    filters: int = model_config.cnn_filters
    kernel_size: int = model_config.cnn_kernel_size
    units: int = model_config.lstm_units
    dense_units: int = model_config.dense_units
    dropout: float = model_config.dropout_rate
    classes: int = model_config.num_classes
    bilstm_pooling: str = model_config.bilstm_pooling

    def __post_init__(self):
        if self.kind not in model_config.model_kinds:
            raise ValueError(f"Unknown model kind: {self.kind}")
        for name in ('max_words', 'embedding_dim', 'max_length', 'filters', 'kernel_size', 'units', 'dense_units'):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.classes != model_config.num_classes:
            raise ValueError(f"classes must be {model_config.num_classes}, got {self.classes}")
        if self.kind == 'cnn' and self.max_length < self.kernel_size:
            raise ValueError(f"max_length {self.max_length} is shorter than kernel_size {self.kernel_size}")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = model_config.epochs
    batch_size: int = model_config.batch_size
    validation_fraction: float = model_config.validation_fraction
    patience: int = model_config.patience
    restore_best: bool = model_config.restore_best
    learning_rate: float = model_config.learning_rate
    seed: int = default_seed
    show_progress: bool = False

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError(f"validation_fraction must be in (0, 1), got {self.validation_fraction}")
        if self.patience < 0:
            raise ValueError(f"patience must be non-negative, got {self.patience}")


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    train_accuracy: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    val_accuracy: list = field(default_factory=list)
    stopped_epoch: int = 0
    best_epoch: int = 0

    def __len__(self):
        return len(self.train_loss)

    def to_frame(self):
        return pd.DataFrame({
            'epoch': list(range(1, len(self) + 1)),
            'train_loss': self.train_loss,
            'train_accuracy': self.train_accuracy,
            'val_loss': self.val_loss,
            'val_accuracy': self.val_accuracy,
        })


class SentimentModel(ABC):
    """
    A chain of layers ending in 3 logits; softmax is folded into the loss for training and applied in predict.
    """
    kind = None

    def __init__(self, spec, seed):
        self.spec = spec
        self.seed = seed
        self.layers = self._build_layers(np.random.default_rng(seed))

    @abstractmethod
    def _build_layers(self, rng):
        pass

    def parameters(self):
        return {f"{layer.name}.{key}": value for layer in self.layers for key, value in layer.params.items()}

    def gradients(self):
        return {f"{layer.name}.{key}": value for layer in self.layers for key, value in layer.grads.items()}

    def parameter_count(self):
        return sum(layer.parameter_count() for layer in self.layers)

    def zero_grad(self):
        for layer in self.layers:
            layer.zero_grad()

    def forward(self, ids, training=False, rng=None):
        activation = np.asarray(ids)
        for layer in self.layers:
            activation = ensure_finite(f"{self.kind} {layer.name} output",
                                       layer.forward(activation, training=training, rng=rng))
        return activation

    def backward(self, grad):
        for layer in reversed(self.layers):
            grad = layer.backward(grad)

    def loss_and_gradients(self, ids, targets, training=True, rng=None):
        """
        Forward, loss, and a fresh backward pass; gradients are left in each layer's grads.
        :return: mean loss over the batch
        """
        self.zero_grad()
        logits = self.forward(ids, training=training, rng=rng)
        loss, _, grad = softmax_crossentropy(logits, targets)
        self.backward(grad)
        return loss

    def predict_proba(self, ids):
        return softmax(self.forward(ids, training=False))

    def load_parameters(self, params):
        current = self.parameters()
        missing = set(current) - set(params)
        unexpected = set(params) - set(current)
        if missing or unexpected:
            raise CheckpointError(f"Parameter names do not match the {self.kind} architecture "
                                  f"(missing {sorted(missing)}, unexpected {sorted(unexpected)})")
        for name, value in params.items():
            if value.shape != current[name].shape:
                raise CheckpointError(f"{name}: checkpoint shape {value.shape}, model shape {current[name].shape}")
            np.copyto(current[name], value)

    def snapshot(self):
        return {name: value.copy() for name, value in self.parameters().items()}


class CNNModel(SentimentModel):
    kind = 'cnn'

    def _build_layers(self, rng):
        spec = self.spec
        return [
            Embedding('embedding', spec.max_words, spec.embedding_dim, rng),
            Conv1D('conv1d', spec.embedding_dim, spec.filters, spec.kernel_size, rng),
            GlobalMaxPool('global_max_pool'),
            Dense('dense', spec.filters, spec.dense_units, rng, activation='relu'),
            Dropout('dropout', spec.dropout),
            Dense('output', spec.dense_units, spec.classes, rng),
        ]


class BiLSTMModel(SentimentModel):
    kind = 'bilstm'

    def _build_layers(self, rng):
        spec = self.spec
        return [
            Embedding('embedding', spec.max_words, spec.embedding_dim, rng),
            Bidirectional('bilstm', spec.embedding_dim, spec.units, rng, pooling=spec.bilstm_pooling),
            Dropout('dropout', spec.dropout),
            Dense('dense', 2 * spec.units, spec.dense_units, rng, activation='relu'),
            Dropout('dropout_1', spec.dropout),
            Dense('output', spec.dense_units, spec.classes, rng),
        ]


model_class_map = {
    'cnn': CNNModel,
    'bilstm': BiLSTMModel,
}


def build(spec, seed):
    """
    Initialize a model for `spec`; the same seed always gives the same parameters.
    """
    model = model_class_map[spec.kind](spec, seed)
    logger.info(f"Built {spec.kind} model with {model.parameter_count()} parameters")
    return model


def parameter_count(model):
    return model.parameter_count()


def _evaluate(model, ids, labels, batch_size):
    """
    Mean loss and accuracy at inference.
    """
    total_loss = 0.0
    correct = 0
    for start in range(0, len(labels), batch_size):
        logits = model.forward(ids[start:start + batch_size], training=False)
        _, row_losses, _ = softmax_crossentropy(logits, labels[start:start + batch_size])
        total_loss += row_losses.sum()
        correct += int((logits.argmax(axis=1) == labels[start:start + batch_size]).sum())
    return total_loss / len(labels), correct / len(labels)


def carve_validation(ids, labels, fraction):
    """
    Hold out the last `fraction` of the rows, as a validation_split does.
    """
    n_val = int(round(len(labels) * fraction))
    if n_val < 1 or n_val >= len(labels):
        raise InsufficientDataError(f"Cannot hold out {fraction:.0%} of {len(labels)} rows for validation")
    cut = len(labels) - n_val
    return (ids[:cut], labels[:cut]), (ids[cut:], labels[cut:])


def train(model, train_data, config, validation_data=None):
    """
    Mini-batch Adam with a seeded shuffle per epoch and early stopping on validation loss.
    The last partial batch is trained. patience=0 disables early stopping.
    :param model: SentimentModel
    :param train_data: (ids [N x L], labels [N])
    :param config: TrainConfig
    :param validation_data: (ids, labels); when None, config.validation_fraction of train_data is held out
    :return: TrainHistory
    """
    ids, labels = (np.asarray(part) for part in train_data)
    if validation_data is None:
        (ids, labels), (val_ids, val_labels) = carve_validation(ids, labels, config.validation_fraction)
    else:
        val_ids, val_labels = (np.asarray(part) for part in validation_data)
    if len(labels) == 0 or len(val_labels) == 0:
        raise InsufficientDataError("Training and validation data must both be non-empty")

    rng = np.random.default_rng(config.seed)
    optimizer = Adam(lr=config.learning_rate)
    history = TrainHistory()
    best_loss = np.inf
    best_params = None
    waited = 0

    epochs = tqdm(range(1, config.epochs + 1), desc=f"train {model.kind}", disable=not config.show_progress)
    for epoch in epochs:
        order = rng.permutation(len(labels))
        epoch_loss = 0.0
        correct = 0
        for start in range(0, len(order), config.batch_size):
            batch = order[start:start + config.batch_size]
            try:
                loss = model.loss_and_gradients(ids[batch], labels[batch], training=True, rng=rng)
            except NonFiniteTensorError as err:
                raise TrainingDivergedError(f"{model.kind} diverged in epoch {epoch}: {err}") from err
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"{model.kind} loss became {loss} in epoch {epoch}, batch at row {start}")
            epoch_loss += loss * len(batch)
            optimizer.step(model.parameters(), model.gradients())

        # accuracy on the training rows after the epoch's updates, at inference
        train_loss = epoch_loss / len(labels)
        _, train_accuracy = _evaluate(model, ids, labels, config.batch_size)
        val_loss, val_accuracy = _evaluate(model, val_ids, val_labels, config.batch_size)
        history.train_loss.append(float(train_loss))
        history.train_accuracy.append(float(train_accuracy))
        history.val_loss.append(float(val_loss))
        history.val_accuracy.append(float(val_accuracy))
        history.stopped_epoch = epoch
        if config.show_progress:
            epochs.set_postfix(loss=f"{train_loss:.4f}", val_loss=f"{val_loss:.4f}", val_acc=f"{val_accuracy:.4f}")
        logger.debug(f"{model.kind} epoch {epoch}: loss {train_loss:.4f} acc {train_accuracy:.4f} "
                     f"val_loss {val_loss:.4f} val_acc {val_accuracy:.4f}")

        if val_loss < best_loss:
            best_loss = val_loss
            history.best_epoch = epoch
            waited = 0
            if config.restore_best:
                best_params = model.snapshot()
        else:
            waited += 1
            if config.patience and waited >= config.patience:
                logger.info(f"{model.kind} early stop at epoch {epoch}, best epoch {history.best_epoch}")
                break

    epochs.close()

    if config.restore_best and best_params is not None:
        model.load_parameters(best_params)
        logger.debug(f"Restored {model.kind} weights from epoch {history.best_epoch}")

    logger.info(f"Trained {model.kind} for {history.stopped_epoch} epochs, best val_loss {best_loss:.4f} "
                f"at epoch {history.best_epoch}")
    return history


def predict(model, ids, batch_size=model_config.batch_size):
    """
    Class codes and probabilities with dropout off. Ties go to the lowest class index.
    :return: (classes [N], probabilities [N x 3])
    """
    ids = np.asarray(ids)
    chunks = [model.predict_proba(ids[start:start + batch_size]) for start in range(0, len(ids), batch_size)]
    probabilities = np.concatenate(chunks, axis=0) if chunks else np.zeros((0, model.spec.classes))
    return probabilities.argmax(axis=1), probabilities


def save_model(model, directory, config=None, history=None):
    """
    Write <kind>.ckpt, the <kind>.yaml sidecar and, when a history is given, <kind>_history.csv.
    :return: checkpoint path
    """
    directory = Path(directory)
    checkpoint_path = directory / f"{model.kind}.ckpt"
    save_checkpoint(checkpoint_path, model.kind, model.parameters())

    sidecar = {
        'architecture': model.kind,
        'seed': model.seed,
        'model_spec': asdict(model.spec),
        'train_config': asdict(config) if config is not None else None,
        'history': asdict(history) if history is not None else None,
    }
    with (directory / f"{model.kind}.yaml").open('w', encoding='utf-8', newline='\n') as handle:
        yaml.safe_dump(sidecar, handle, sort_keys=True)

    if history is not None:
        history.to_frame().to_csv(directory / f"{model.kind}_history.csv", index=False, lineterminator='\n')
    return checkpoint_path


def load_model(checkpoint_path):
    """
    Rebuild a model from its checkpoint and sidecar.
    :return: (model, sidecar dict)
    """
    checkpoint_path = Path(checkpoint_path)
    sidecar_path = checkpoint_path.with_suffix('.yaml')
    if not sidecar_path.is_file():
        raise FileNotFoundError(f"Model sidecar not found: {sidecar_path}")
    with sidecar_path.open(encoding='utf-8') as handle:
        sidecar = yaml.safe_load(handle)

    architecture, params = load_checkpoint(checkpoint_path)
    if architecture != sidecar['architecture']:
        raise CheckpointError(f"{checkpoint_path}: architecture {architecture} but sidecar says "
                              f"{sidecar['architecture']}")

    model = model_class_map[architecture](ModelSpec(**sidecar['model_spec']), sidecar['seed'])
    model.load_parameters(params)
    logger.info(f"Loaded {architecture} model from {checkpoint_path}")
    return model, sidecar
