import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from components.corpus_system import VALID_RATINGS
from components.lexicon_system import SentimentLabel
from config.eda_config import top_k as default_top_k
from utils.string_ops import tokenize

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FreqTable:
    """
    rows: (token, {app_id: count}) sorted by combined count descending, ties alphabetical.
    Every row carries a count for every app, zero included.
    """
    rows: tuple
    app_ids: tuple

    def __len__(self):
        return len(self.rows)

    def tokens(self):
        return [token for token, _ in self.rows]

    def to_frame(self):
        frame = pd.DataFrame([[token, *(counts[app] for app in self.app_ids), sum(counts.values())]
                              for token, counts in self.rows],
                             columns=['token', *self.app_ids, 'total'])
        return frame


@dataclass(frozen=True)
class RatingHistogram:
    counts: dict = field(default_factory=lambda: {star: 0 for star in VALID_RATINGS})
    missing: int = 0

    @property
    def total(self):
        return sum(self.counts.values()) + self.missing


def _rows_by_app(data):
    by_app = {}
    for row in data.rows:
        by_app.setdefault(row.app_id, []).append(row)
    return by_app


def sentiment_proportions(data, app_ids=None):
    """
    Share of Negative, Neutral and Positive rows per app.
    :param data: LabeledDataset
    :param app_ids: apps to report on, defaults to every app in `data`; apps without rows are omitted
    :return: dict app_id -> (neg, neu, pos)
    """
    by_app = _rows_by_app(data)
    proportions = {}
    for app_id in (app_ids if app_ids is not None else sorted(by_app)):
        rows = by_app.get(app_id, [])
        if not rows:
            logger.warning(f"No labelled rows for app {app_id}, omitted from sentiment proportions")
            continue
        counts = Counter(row.label for row in rows)
        proportions[app_id] = tuple(counts.get(label, 0) / len(rows) for label in SentimentLabel)
    return proportions


def rating_distribution(reviews):
    """
    Star histogram (1..5) per app, with reviews lacking a rating counted separately.
    :param reviews: list of Review
    :return: dict app_id -> RatingHistogram
    """
    tallies = {}
    for review in reviews:
        counts, missing = tallies.setdefault(review.app_id, ({star: 0 for star in VALID_RATINGS}, [0]))
        if review.rating is None:
            missing[0] += 1
        else:
            counts[review.rating] += 1
    return {app_id: RatingHistogram(counts=counts, missing=missing[0])
            for app_id, (counts, missing) in sorted(tallies.items())}


def _count_tokens(texts, stop_words):
    counter = Counter()
    for text in texts:
        counter.update(token for token in tokenize(text) if token not in stop_words)
    return counter


def _ranked(counter):
    return sorted(counter.items(), key=lambda item: (-item[1], item[0]))


def _freq_table(counters, tokens):
    app_ids = tuple(counters)
    rows = [(token, {app: counters[app].get(token, 0) for app in app_ids}) for token in tokens]
    rows.sort(key=lambda row: (-sum(row[1].values()), row[0]))
    return FreqTable(rows=tuple(rows), app_ids=app_ids)


def top_k_words(texts_by_app, k=default_top_k, stop_words=None):
    """
    Union of each app's k most frequent tokens, with every app's count for each token.
    Per-app ranking breaks ties alphabetically, so the result does not depend on row order.
    :param texts_by_app: dict app_id -> list of cleaned texts
    :param k: tokens taken per app
    :param stop_words: optional set of tokens to ignore
    :return: FreqTable
    """
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    stop_words = frozenset(stop_words or ())
    counters = {app: _count_tokens(texts, stop_words) for app, texts in texts_by_app.items()}

    union = set()
    for app, counter in counters.items():
        union.update(token for token, _ in _ranked(counter)[:k])
    table = _freq_table(counters, union)
    logger.info(f"Top-{k} word table over {len(counters)} apps has {len(table)} tokens")
    return table


def word_frequencies(texts_by_app, stop_words=None):
    """
    Every token of every app with per-app counts.
    """
    stop_words = frozenset(stop_words or ())
    counters = {app: _count_tokens(texts, stop_words) for app, texts in texts_by_app.items()}
    union = set()
    for counter in counters.values():
        union.update(counter)
    return _freq_table(counters, union)


def texts_by_app(data):
    return {app_id: [row.clean_text for row in rows] for app_id, rows in sorted(_rows_by_app(data).items())}


def polarity_summary(data):
    """
    Per app: row count, mean and median polarity, share of rows with positive polarity.
    Rows without a polarity are skipped.
    :return: pandas DataFrame indexed by app_id
    """
    records = []
    for app_id, rows in sorted(_rows_by_app(data).items()):
        polarities = np.array([row.polarity for row in rows if row.polarity is not None], dtype=np.float64)
        if not polarities.size:
            logger.warning(f"No polarity scores for app {app_id}, omitted from polarity summary")
            continue
        records.append({'app_id': app_id,
                        'rows': int(polarities.size),
                        'mean_polarity': float(polarities.mean()),
                        'median_polarity': float(np.median(polarities)),
                        'positive_share': float((polarities > 0).mean())})
    return pd.DataFrame(records, columns=['app_id', 'rows', 'mean_polarity', 'median_polarity',
                                          'positive_share']).set_index('app_id')


def class_balance(stages):
    """
    Per-label row counts at each named stage, e.g. {'labeled': data, 'balanced': balanced}.
    :return: pandas DataFrame, one row per stage, one column per label in code order
    """
    names = [label.display_name for label in SentimentLabel]
    frame = pd.DataFrame([[data.class_counts[label] for label in SentimentLabel] for data in stages.values()],
                         index=list(stages), columns=names)
    frame.index.name = 'stage'
    frame['total'] = frame[names].sum(axis=1)
    return frame


def proportions_frame(proportions):
    frame = pd.DataFrame.from_dict(proportions, orient='index',
                                   columns=[label.display_name for label in SentimentLabel])
    frame.index.name = 'app_id'
    return frame


def ratings_frame(histograms):
    frame = pd.DataFrame([[*(hist.counts[star] for star in VALID_RATINGS), hist.missing, hist.total]
                          for hist in histograms.values()],
                         index=list(histograms),
                         columns=[*(f"stars_{star}" for star in VALID_RATINGS), 'missing', 'total'])
    frame.index.name = 'app_id'
    return frame


def write_tables(tables, directory):
    """
    Write each named DataFrame as <name>.csv.
    :param tables: dict name -> (DataFrame, write_index)
    :return: list of written paths
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, (frame, with_index) in tables.items():
        path = directory / f"{name}.csv"
        frame.to_csv(path, index=with_index, lineterminator='\n', float_format='%.10g')
        written.append(path)
    logger.info(f"Wrote {len(written)} EDA tables to {directory}")
    return written
