import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from dotenv import dotenv_values

from components.corpus_system import ColumnMap, ingest, deduplicate, clean_reviews, write_reviews, read_reviews
from components.dataprep_system import (SplitSpec, label_reviews, oversample, stratified_split, write_split_manifest,
                                        write_dataset, read_dataset, encode_labels)
from components.eda_system import (sentiment_proportions, rating_distribution, top_k_words, word_frequencies,
                                   texts_by_app, polarity_summary, class_balance, proportions_frame, ratings_frame,
                                   write_tables)
from components.eval_system import confusion, class_report, write_reports
from components.lexicon_system import load_lexicon
from components.models_system import ModelSpec, TrainConfig, build, train, predict, save_model, load_model
from components.textenc_system import build_vocab, encode_batch, save_vocab, load_vocab
from config import pipeline_config as names
from config import model_config
from config.dataprep_config import pipeline_order, pipeline_orders, default_seed
from config.eda_config import top_k as default_top_k, stop_words as default_stop_words
from config.path_config import default_output_dir, starter_lexicon_path
from config.textenc_config import max_words as default_max_words, max_length as default_max_length
from utils.exceptions import StageError
from utils.hash_ops import file_sha256

logger = logging.getLogger(__name__)

# smallest probability used when turning predictions back into a loss
PROBABILITY_FLOOR = 1e-12


@dataclass(frozen=True)
class RunConfig:
    """
    Everything a pipeline run depends on. The seed drives every random choice downstream.
    """
    inputs: tuple = ()
    lexicon: Path = starter_lexicon_path
    out: Path = default_output_dir
    seed: int = default_seed
    order: str = pipeline_order
    columns: ColumnMap = field(default_factory=ColumnMap)
    models: tuple = model_config.model_kinds
    max_words: int = default_max_words
    max_length: int = default_max_length
    epochs: int = model_config.epochs
    batch_size: int = model_config.batch_size
    patience: int = model_config.patience
    bilstm_pooling: str = model_config.bilstm_pooling
    top_k: int = default_top_k
    use_stop_words: bool = False
    show_progress: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'inputs', tuple((Path(path), app_id) for path, app_id in self.inputs))
        object.__setattr__(self, 'lexicon', Path(self.lexicon))
        object.__setattr__(self, 'out', Path(self.out))
        object.__setattr__(self, 'models', tuple(self.models))
        if self.order not in pipeline_orders:
            raise ValueError(f"Unknown pipeline order: {self.order}")
        for kind in self.models:
            if kind not in model_config.model_kinds:
                raise ValueError(f"Unknown model kind: {kind}")

    @property
    def split_first(self):
        return self.order == 'split-first'

    def path(self, *parts):
        return self.out.joinpath(*parts)


# keys accepted in a --config file, mapped to RunConfig field and type
CONFIG_FILE_KEYS = {
    'LEXICON': ('lexicon', Path),
    'OUT': ('out', Path),
    'SEED': ('seed', int),
    'ORDER': ('order', str),
    'MODELS': ('models', lambda value: tuple(kind.strip() for kind in value.split(',') if kind.strip())),
    'MAX_WORDS': ('max_words', int),
    'MAX_LENGTH': ('max_length', int),
    'EPOCHS': ('epochs', int),
    'BATCH_SIZE': ('batch_size', int),
    'PATIENCE': ('patience', int),
    'BILSTM_POOLING': ('bilstm_pooling', str),
    'TOP_K': ('top_k', int),
    'USE_STOP_WORDS': ('use_stop_words', lambda value: value.strip().lower() in ('1', 'true', 'yes', 'on')),
}


def read_config_file(path):
    """
    Parse a key=value config file into RunConfig field overrides. Unknown keys are ignored with a warning.
    :param path: config file
    :return: dict of RunConfig field name -> value
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Config file not found: {path}")

    overrides = {}
    for key, value in dotenv_values(path).items():
        if key.upper() not in CONFIG_FILE_KEYS:
            logger.warning(f"{path.name}: ignoring unknown key {key}")
            continue
        if value is None:
            continue
        name, convert = CONFIG_FILE_KEYS[key.upper()]
        try:
            overrides[name] = convert(value)
        except ValueError:
            raise ValueError(f"{path.name}: invalid value for {key}: {value!r}") from None
    return overrides


def _relative(config, path):
    path = Path(path)
    try:
        return path.resolve().relative_to(config.out.resolve()).as_posix()
    except ValueError:
        return path.name


def _require(config, stage, upstream, *parts):
    path = config.path(*parts)
    if not path.is_file():
        raise StageError(stage, f"missing {_relative(config, path)} in {config.out}; run `{upstream}` first")
    return path


def _record(config, stage, inputs, outputs, **extra):
    """
    Append one manifest line: stage, input and output hashes, seed, version and pipeline order.
    """
    entry = {
        'stage': stage,
        'inputs': {_relative(config, path): file_sha256(path) for path in inputs},
        'outputs': {_relative(config, path): file_sha256(path) for path in outputs},
        'seed': config.seed,
        'version': names.package_version,
        'order': config.order,
        **extra,
    }
    manifest = config.path(names.manifest_file)
    manifest.parent.mkdir(parents=True, exist_ok=True)
    with manifest.open('a', encoding='utf-8', newline='\n') as handle:
        handle.write(json.dumps(entry, sort_keys=True) + '\n')
    logger.info(f"Stage {stage} finished, {len(outputs)} artifacts written")


def ingest_stage(config):
    """
    Read every (export, app id) pair, deduplicate within each app and write reviews.csv.
    """
    if not config.inputs:
        raise StageError('ingest', "no --input given")

    reviews = []
    dropped = duplicates = 0
    for path, app_id in config.inputs:
        loaded, empty = ingest(path, app_id, config.columns)
        unique, removed = deduplicate(loaded)
        reviews.extend(unique)
        dropped += empty
        duplicates += removed

    output = config.path(names.reviews_file)
    write_reviews(reviews, output)
    _record(config, 'ingest', [path for path, _ in config.inputs], [output], rows=len(reviews),
            dropped_empty=dropped, duplicates=duplicates)
    return reviews


def label_stage(config):
    source = _require(config, 'label', 'ingest', names.reviews_file)
    cleaned, dropped = clean_reviews(read_reviews(source))
    lex = load_lexicon(config.lexicon)
    data = label_reviews(cleaned, lex)

    output = config.path(names.labeled_file)
    write_dataset(data, output)
    _record(config, 'label', [source, config.lexicon], [output], rows=len(data), dropped_empty=dropped)
    return data


def _balance_paths(config):
    if config.split_first:
        return ('split', (names.splits_dir, 'train.csv')), (names.splits_dir, names.train_balanced_file)
    return ('label', (names.labeled_file,)), (names.balanced_file,)


def balance_stage(config):
    """
    Oversample to equal class counts: the whole labelled set, or only the train split when splitting first.
    """
    (upstream, source_parts), output_parts = _balance_paths(config)
    source = _require(config, 'balance', upstream, *source_parts)
    balanced = oversample(read_dataset(source), config.seed)

    output = config.path(*output_parts)
    write_dataset(balanced, output)
    _record(config, 'balance', [source], [output], rows=len(balanced))
    return balanced


def split_stage(config):
    """
    Stratified train/val/test split of the balanced set, or of the labelled set when splitting first.
    """
    if config.split_first:
        source = _require(config, 'split', 'label', names.labeled_file)
    else:
        source = _require(config, 'split', 'balance', names.balanced_file)
    data = read_dataset(source)
    spec = SplitSpec.from_total(len(data), config.seed)
    parts = stratified_split(data, spec)

    outputs = []
    for split_name, part in zip(names.split_names, parts):
        path = config.path(names.splits_dir, f"{split_name}.csv")
        write_dataset(part, path)
        outputs.append(path)
    manifest = config.path(names.split_manifest_file)
    write_split_manifest(data, spec, manifest)
    outputs.append(manifest)

    _record(config, 'split', [source], outputs, n_train=spec.n_train, n_val=spec.n_val, n_test=spec.n_test)
    return parts


def _train_source(config):
    if config.split_first:
        return _require(config, 'encode', 'balance', names.splits_dir, names.train_balanced_file)
    return _require(config, 'encode', 'split', names.splits_dir, 'train.csv')


def encode_stage(config):
    """
    Fit the vocabulary on the training split and write padded id matrices and label vectors per split.
    """
    sources = {'train': _train_source(config)}
    for split_name in names.split_names[1:]:
        sources[split_name] = _require(config, 'encode', 'split', names.splits_dir, f"{split_name}.csv")
    datasets = {split_name: read_dataset(path) for split_name, path in sources.items()}

    vocab = build_vocab(datasets['train'].texts, config.max_words, config.max_length)
    vocab_path = config.path(names.vocab_file)
    save_vocab(vocab, vocab_path)

    outputs = [vocab_path]
    encoded_dir = config.path(names.encoded_dir)
    encoded_dir.mkdir(parents=True, exist_ok=True)
    for split_name, data in datasets.items():
        ids, _ = encode_batch(data.texts, vocab, config.max_length)
        labels = np.array(encode_labels(data), dtype=np.int64)
        for suffix, array in (('ids', ids), ('labels', labels)):
            path = encoded_dir / f"{split_name}_{suffix}.npy"
            np.save(path, array, allow_pickle=False)
            outputs.append(path)

    _record(config, 'encode', list(sources.values()), outputs, vocabulary=len(vocab))
    return vocab


def _load_encoded(config, stage, split_name):
    arrays = []
    for suffix in ('ids', 'labels'):
        path = _require(config, stage, 'encode', names.encoded_dir, f"{split_name}_{suffix}.npy")
        arrays.append(np.load(path, allow_pickle=False))
    return tuple(arrays)


def train_stage(config, kind):
    """
    Train one architecture on the encoded train split, monitoring the validation split.
    """
    train_data = _load_encoded(config, 'train', 'train')
    val_data = _load_encoded(config, 'train', 'val')
    vocab = load_vocab(_require(config, 'train', 'encode', names.vocab_file))

    spec = ModelSpec(kind=kind, max_words=vocab.max_words, max_length=train_data[0].shape[1],
                     bilstm_pooling=config.bilstm_pooling)
    train_config = TrainConfig(epochs=config.epochs, batch_size=config.batch_size, patience=config.patience,
                               seed=config.seed, show_progress=config.show_progress)
    model = build(spec, config.seed)
    history = train(model, train_data, train_config, validation_data=val_data)

    models_dir = config.path(names.models_dir)
    models_dir.mkdir(parents=True, exist_ok=True)
    checkpoint = save_model(model, models_dir, train_config, history)
    inputs = [config.path(names.encoded_dir, f"{split_name}_{suffix}.npy")
              for split_name in names.split_names[:2] for suffix in ('ids', 'labels')]
    _record(config, f"train:{kind}", inputs,
            [checkpoint, checkpoint.with_suffix('.yaml'), models_dir / f"{kind}_history.csv"],
            parameters=model.parameter_count(), epochs_run=history.stopped_epoch, best_epoch=history.best_epoch)
    return model, history


def evaluate_stage(config):
    """
    Score every configured model on the test split and write the comparison reports.
    """
    checkpoints = [_require(config, 'evaluate', 'train', names.models_dir, f"{kind}.ckpt") for kind in config.models]
    test_ids, test_labels = _load_encoded(config, 'evaluate', 'test')

    reports = {}
    for kind, checkpoint in zip(config.models, checkpoints):
        model, _ = load_model(checkpoint)
        predicted, probabilities = predict(model, test_ids, config.batch_size)
        true_probabilities = probabilities[np.arange(len(test_labels)), test_labels]
        losses = -np.log(np.maximum(true_probabilities, PROBABILITY_FLOOR))
        reports[kind] = class_report(confusion(test_labels, predicted), losses)
        logger.info(f"{kind} test accuracy {reports[kind].accuracy:.4f}, loss {reports[kind].loss:.4f}")

    outputs = write_reports(reports, config.path(names.reports_dir))
    inputs = checkpoints + [config.path(names.encoded_dir, f"test_{suffix}.npy") for suffix in ('ids', 'labels')]
    _record(config, 'evaluate', inputs, outputs)
    return reports


def eda_stage(config):
    """
    Descriptive tables over the ingested and labelled corpus: proportions, ratings, word counts, balance.
    """
    reviews_path = _require(config, 'eda', 'ingest', names.reviews_file)
    labeled_path = _require(config, 'eda', 'label', names.labeled_file)
    reviews = read_reviews(reviews_path)
    labeled = read_dataset(labeled_path)
    stop_words = default_stop_words if config.use_stop_words else None
    texts = texts_by_app(labeled)

    stages = {'labeled': labeled}
    inputs = [reviews_path, labeled_path]
    _, balanced_parts = _balance_paths(config)
    balanced_path = config.path(*balanced_parts)
    if balanced_path.is_file():
        stages['balanced'] = read_dataset(balanced_path)
        inputs.append(balanced_path)

    tables = {
        'sentiment_proportions': (proportions_frame(sentiment_proportions(labeled)), True),
        'rating_distribution': (ratings_frame(rating_distribution(reviews)), True),
        'top_words': (top_k_words(texts, config.top_k, stop_words).to_frame(), False),
        'word_frequencies': (word_frequencies(texts, stop_words).to_frame(), False),
        'polarity_summary': (polarity_summary(labeled), True),
        'class_balance': (class_balance(stages), True),
    }
    outputs = write_tables(tables, config.path(names.eda_dir))
    _record(config, 'eda', inputs, outputs, top_k=config.top_k)
    return tables


def run_all(config):
    """
    Every stage in order. Balance-first order oversamples before splitting; split-first balances only the train split.
    """
    logger.info(f"Running the full pipeline in {config.order} order into {config.out}")
    ingest_stage(config)
    label_stage(config)
    if config.split_first:
        split_stage(config)
        balance_stage(config)
    else:
        balance_stage(config)
        split_stage(config)
    encode_stage(config)
    for kind in config.models:
        train_stage(config, kind)
    reports = evaluate_stage(config)
    eda_stage(config)
    return reports


def train_all(config):
    return {kind: train_stage(config, kind) for kind in config.models}


stage_map = {
    'ingest': ingest_stage,
    'label': label_stage,
    'balance': balance_stage,
    'split': split_stage,
    'encode': encode_stage,
    'train': train_all,
    'evaluate': evaluate_stage,
    'eda': eda_stage,
    'run-all': run_all,
}


def run_stage(name, config):
    """
    Run one stage by its subcommand name.
    """
    if name not in stage_map:
        raise ValueError(f"Unknown stage: {name}")
    return stage_map[name](config)


def with_overrides(config, **overrides):
    return replace(config, **{key: value for key, value in overrides.items() if value is not None})
