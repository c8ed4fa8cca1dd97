import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import pandas as pd

from config.corpus_config import (text_column, rating_column, time_column, id_column, delimiter, encoding,
                                  clean_text_column)
from utils.exceptions import SchemaError
from utils.string_ops import clean_text

logger = logging.getLogger(__name__)

VALID_RATINGS = range(1, 6)


@dataclass(frozen=True)
class Review:
    app_id: str
    text: str
    rating: Optional[int] = None
    timestamp: Optional[str] = None
    review_id: Optional[str] = None


@dataclass(frozen=True)
class CleanReview:
    app_id: str
    text: str
    rating: Optional[int] = None


@dataclass(frozen=True)
class ColumnMap:
    """
    Maps the scraper schema onto whatever the export file calls its columns.
    """
    text: str = text_column
    rating: str = rating_column
    timestamp: str = time_column
    review_id: str = id_column


def _parse_rating(value):
    value = value.strip()
    if not value:
        return None
    try:
        rating = int(float(value))
    except ValueError:
        return None
    if rating != float(value) or rating not in VALID_RATINGS:
        return None
    return rating


def ingest(path, app_id, columns=None, sep=delimiter):
    """
    Read one app's review export into Review records.
    Rows whose text is empty (after stripping whitespace) are dropped and counted.
    :param path: delimiter-separated file with a header row
    :param app_id: identifier recorded on every review
    :param columns: ColumnMap for exports that use other column names
    :param sep: field delimiter
    :return: (reviews, dropped_count)
    """
    columns = columns or ColumnMap()
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Review export not found: {path}")

    frame = pd.read_csv(path, sep=sep, dtype=str, keep_default_na=False, encoding=encoding)

    for required in (columns.text, columns.rating):
        if required not in frame.columns:
            raise SchemaError(required, path)

    has_time = columns.timestamp in frame.columns
    has_id = columns.review_id in frame.columns

    reviews = []
    dropped = 0
    bad_ratings = 0
    for record in frame.to_dict(orient='records'):
        text = record[columns.text]
        if not text.strip():
            dropped += 1
            continue
        rating = _parse_rating(record[columns.rating])
        if rating is None and record[columns.rating].strip():
            bad_ratings += 1
        reviews.append(Review(app_id=app_id,
                              text=text,
                              rating=rating,
                              timestamp=(record[columns.timestamp] or None) if has_time else None,
                              review_id=(record[columns.review_id] or None) if has_id else None))

    if dropped:
        logger.warning(f"{path.name}: dropped {dropped} rows with empty text")
    if bad_ratings:
        logger.warning(f"{path.name}: {bad_ratings} ratings outside 1-5 recorded as missing")
    logger.info(f"Ingested {len(reviews)} reviews for app '{app_id}' from {path}")

    return reviews, dropped


def deduplicate(reviews):
    """
    Keep the first occurrence of each exact raw text, preserving order.
    Runs before cleaning, so "Good" and "good" are both kept.
    :param reviews: list of Review
    :return: (unique_reviews, removed_count)
    """
    seen = set()
    unique = []
    for review in reviews:
        if review.text in seen:
            continue
        seen.add(review.text)
        unique.append(review)

    removed = len(reviews) - len(unique)
    if removed:
        logger.warning(f"Removed {removed} duplicate reviews")
    return unique, removed


def clean_reviews(reviews):
    """
    Normalize every review's text and drop the ones left empty.
    :param reviews: list of Review
    :return: (clean_reviews, dropped_empty_count)
    """
    cleaned = []
    dropped = 0
    for review in reviews:
        text = clean_text(review.text)
        if not text:
            dropped += 1
            continue
        cleaned.append(CleanReview(app_id=review.app_id, text=text, rating=review.rating))

    if dropped:
        logger.warning(f"Dropped {dropped} reviews with no alphabetic content after cleaning")
    return cleaned, dropped


def reviews_to_frame(reviews, columns=None):
    """
    Tabulate reviews in the export schema, with an app_id column and the cleaned text alongside.
    """
    columns = columns or ColumnMap()
    return pd.DataFrame({
        'app_id': [review.app_id for review in reviews],
        columns.review_id: [review.review_id or '' for review in reviews],
        columns.text: [review.text for review in reviews],
        columns.rating: [str(review.rating) if review.rating is not None else '' for review in reviews],
        columns.timestamp: [review.timestamp or '' for review in reviews],
        clean_text_column: [clean_text(review.text) for review in reviews],
    })


def write_reviews(reviews, path, columns=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    reviews_to_frame(reviews, columns).to_csv(path, index=False, sep=delimiter, encoding=encoding,
                                              lineterminator='\n')
    logger.debug(f"Wrote {len(reviews)} reviews to {path}")


def read_reviews(path, columns=None):
    """
    Load a file written by write_reviews; app ids come from its app_id column.
    """
    columns = columns or ColumnMap()
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Reviews file not found: {path}")
    frame = pd.read_csv(path, sep=delimiter, dtype=str, keep_default_na=False, encoding=encoding)
    for required in ('app_id', columns.text, columns.rating):
        if required not in frame.columns:
            raise SchemaError(required, path)
    return [Review(app_id=record['app_id'],
                   text=record[columns.text],
                   rating=_parse_rating(record[columns.rating]),
                   timestamp=record.get(columns.timestamp) or None,
                   review_id=record.get(columns.review_id) or None)
            for record in frame.to_dict(orient='records')]
