import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from imblearn.over_sampling import RandomOverSampler

from components.lexicon_system import SentimentLabel, LabelRule, score_text, assign_label
from config.dataprep_config import train_full_fraction, validation_fraction, min_rows_per_class
from utils.exceptions import InsufficientDataError, SchemaError
from utils.hash_ops import row_hash

logger = logging.getLogger(__name__)

LABELED_COLUMNS = ['app_id', 'rating', 'clean_text', 'polarity', 'label', 'label_code']


@dataclass(frozen=True)
class LabeledRow:
    clean_text: str
    label: SentimentLabel
    app_id: str
    polarity: Optional[float] = None
    rating: Optional[int] = None


@dataclass(frozen=True)
class LabeledDataset:
    rows: tuple = ()
    class_counts: dict = field(init=False, compare=False)

    def __post_init__(self):
        rows = tuple(self.rows)
        for row in rows:
            if not row.clean_text:
                raise ValueError("LabeledDataset rows must have non-empty text")
        object.__setattr__(self, 'rows', rows)
        counts = Counter(row.label for row in rows)
        object.__setattr__(self, 'class_counts', {label: counts.get(label, 0) for label in SentimentLabel})

    def __len__(self):
        return len(self.rows)

    @property
    def texts(self):
        return [row.clean_text for row in self.rows]

    @property
    def app_ids(self):
        return sorted({row.app_id for row in self.rows})


@dataclass(frozen=True)
class SplitSpec:
    """
    Split sizes: 80% train_full / 20% test, then 10% of train_full held out for validation.
    Rounding is half-up on integers, so totals are always exact.
    """
    n_total: int
    n_train_full: int
    n_test: int
    n_val: int
    n_train: int
    seed: int

    @classmethod
    def from_total(cls, n_total, seed):
        if n_total < 0:
            raise ValueError(f"n_total must be non-negative, got {n_total}")
        n_train_full = _round_half_up(n_total, train_full_fraction)
        n_val = _round_half_up(n_train_full, validation_fraction)
        return cls(n_total=n_total,
                   n_train_full=n_train_full,
                   n_test=n_total - n_train_full,
                   n_val=n_val,
                   n_train=n_train_full - n_val,
                   seed=seed)


def _round_half_up(count, fraction):
    # fraction has one decimal digit, so this stays in integers
    tenths = round(fraction * 10)
    return (count * tenths + 5) // 10


def label_reviews(clean_reviews, lex, rule=LabelRule()):
    """
    Score and threshold every cleaned review with the lexicon.
    :param clean_reviews: list of CleanReview
    :param lex: Lexicon
    :param rule: LabelRule
    :return: LabeledDataset, polarity kept on each row
    """
    rows = []
    for review in clean_reviews:
        polarity = score_text(review.text, lex)
        rows.append(LabeledRow(clean_text=review.text, label=assign_label(polarity, rule), app_id=review.app_id,
                               polarity=polarity, rating=review.rating))
    data = LabeledDataset(rows)
    logger.info(f"Labelled {len(data)} reviews: " +
                ", ".join(f"{label.display_name}={count}" for label, count in data.class_counts.items()))
    return data


def encode_labels(data):
    """
    Negative -> 0, Neutral -> 1, Positive -> 2.
    """
    return [int(row.label) for row in data.rows]


def oversample(data, seed):
    """
    Randomly duplicate rows of every class until it reaches the largest class count.
    Originals come first in their input order, added copies follow class by class, drawn uniformly with replacement.
    :param data: LabeledDataset with at least one row per class
    :param seed: seed for the sampling generator
    :return: balanced LabeledDataset
    """
    empty = [label.display_name for label, count in data.class_counts.items() if count == 0]
    if empty:
        raise InsufficientDataError(f"Cannot oversample classes with no rows: {', '.join(empty)}")

    # resample row positions, then look the rows up
    positions = np.arange(len(data)).reshape(-1, 1)
    sampler = RandomOverSampler(sampling_strategy='not majority', random_state=seed)
    resampled, _ = sampler.fit_resample(positions, np.asarray(encode_labels(data)))
    for label in SentimentLabel:
        shortfall = sampler.sampling_strategy_.get(int(label), 0)
        if shortfall:
            logger.debug(f"Oversampled {label.display_name} by {shortfall} rows")

    balanced = LabeledDataset(tuple(data.rows[index] for index in resampled[:, 0]))
    logger.info(f"Oversampled {len(data)} rows to {len(balanced)} ({max(data.class_counts.values())} per class)")
    return balanced


def _interleave_order(labels, rng):
    """
    Shuffle each class, then order all rows by their fractional position within their class,
    ties broken by label code. Every contiguous window of the result is near-proportional
    per class; for equal class sizes it is a strict round-robin Negative, Neutral, Positive.
    """
    keys = []
    for label in SentimentLabel:
        members = np.flatnonzero(labels == int(label))
        members = members[rng.permutation(len(members))]
        size = len(members)
        for position, index in enumerate(members):
            keys.append(((2 * position + 1) / (2 * size), int(label), int(index)))
    keys.sort()
    return [index for _, _, index in keys]


def stratified_split(data, spec):
    """
    Split into train, validation and test with the exact sizes of `spec`. Test takes the first
    n_test rows of a per-class interleave, validation the next n_val, train the rest; each split is
    then shuffled. For balanced input the per-class counts in every split differ by at most one,
    remainders going to the lower label codes.
    :param data: LabeledDataset
    :param spec: SplitSpec with n_total == len(data)
    :return: (train, val, test) LabeledDatasets
    """
    if spec.n_total != len(data):
        raise ValueError(f"SplitSpec is for {spec.n_total} rows but the dataset has {len(data)}")
    minimum = len(SentimentLabel) * min_rows_per_class
    if spec.n_total < minimum:
        raise InsufficientDataError(f"Cannot stratify {spec.n_total} rows, need at least {minimum}")

    indices = split_indices(data, spec)
    train, val, test = (LabeledDataset(tuple(data.rows[index] for index in part)) for part in indices)

    for name, part in (('train', train), ('val', val), ('test', test)):
        logger.info(f"{name} split: {len(part)} rows, " +
                    ", ".join(f"{label.display_name}={count}" for label, count in part.class_counts.items()))
    return train, val, test


def split_indices(data, spec):
    """
    Row indices of (train, val, test), as used by stratified_split.
    """
    rng = np.random.default_rng(spec.seed)
    labels = np.array(encode_labels(data), dtype=np.int64)
    order = _interleave_order(labels, rng)

    test = order[:spec.n_test]
    val = order[spec.n_test:spec.n_test + spec.n_val]
    train = order[spec.n_test + spec.n_val:]

    return tuple([part[i] for i in rng.permutation(len(part))] for part in (train, val, test))


def write_split_manifest(data, spec, path):
    """
    One line per row of `data`: row index, row hash, split name. Sorted by row index.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    assignment = {}
    for name, part in zip(('train', 'val', 'test'), split_indices(data, spec)):
        for index in part:
            assignment[index] = name

    with path.open('w', encoding='utf-8', newline='\n') as handle:
        handle.write(f"# n_total={spec.n_total} n_train={spec.n_train} n_val={spec.n_val} n_test={spec.n_test} "
                     f"seed={spec.seed}\n")
        for index, row in enumerate(data.rows):
            handle.write(f"{index}\t{row_hash(row.app_id, int(row.label), row.clean_text)}\t{assignment[index]}\n")
    logger.debug(f"Wrote split manifest for {len(data)} rows to {path}")


def dataset_to_frame(data):
    return pd.DataFrame({
        'app_id': [row.app_id for row in data.rows],
        'rating': [str(row.rating) if row.rating is not None else '' for row in data.rows],
        'clean_text': [row.clean_text for row in data.rows],
        'polarity': ['' if row.polarity is None else repr(float(row.polarity)) for row in data.rows],
        'label': [row.label.display_name for row in data.rows],
        'label_code': [str(int(row.label)) for row in data.rows],
    }, columns=LABELED_COLUMNS)


def write_dataset(data, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dataset_to_frame(data).to_csv(path, index=False, lineterminator='\n')
    logger.debug(f"Wrote {len(data)} labelled rows to {path}")


def read_dataset(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Labelled dataset not found: {path}")
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    for column in ('app_id', 'clean_text', 'label_code'):
        if column not in frame.columns:
            raise SchemaError(column, path)

    rows = []
    for record in frame.to_dict(orient='records'):
        polarity = record.get('polarity', '')
        rating = record.get('rating', '')
        rows.append(LabeledRow(clean_text=record['clean_text'],
                               label=SentimentLabel(int(record['label_code'])),
                               app_id=record['app_id'],
                               polarity=float(polarity) if polarity else None,
                               rating=int(rating) if rating else None))
    return LabeledDataset(tuple(rows))
