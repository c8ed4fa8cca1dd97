import logging
from pathlib import Path

import numpy as np
import pandas as pd

from components.corpus_system import Review, ColumnMap
from config.corpus_config import delimiter, encoding
from config.lexicon_config import negator_marker

logger = logging.getLogger(__name__)

POSITIVE_WORDS = {
    "good": 0.7, "great": 0.8, "excellent": 1.0, "amazing": 0.6, "love": 0.5, "helpful": 0.6, "useful": 0.3,
    "fast": 0.2, "accurate": 0.4, "best": 1.0, "awesome": 1.0, "perfect": 1.0, "nice": 0.6, "smart": 0.2,
    "easy": 0.4, "wonderful": 1.0, "brilliant": 0.9, "reliable": 0.5, "impressive": 1.0, "fantastic": 0.4,
}

NEGATIVE_WORDS = {
    "bad": -0.7, "terrible": -1.0, "awful": -1.0, "slow": -0.3, "useless": -0.5, "worst": -1.0, "poor": -0.4,
    "wrong": -0.5, "broken": -0.4, "annoying": -0.8, "horrible": -1.0, "crash": -0.5, "disappointing": -0.6,
    "buggy": -0.5, "boring": -1.0, "hate": -0.8, "stupid": -0.8, "inaccurate": -0.4, "laggy": -0.4,
    "frustrating": -0.6,
}

# inside the neutral band on their own
MILD_WORDS = {"okay": 0.05, "fine": 0.08, "average": -0.05, "decent": 0.08}

NEGATORS = ("not", "never", "no", "hardly")

# none of these are lexicon words
NEUTRAL_WORDS = (
    "update", "version", "account", "login", "answer", "question", "feature", "interface", "download", "install",
    "settings", "model", "history", "subscription", "language",
)
NOISE_WORDS = (
    "the", "it", "this", "and", "app", "i", "my", "with", "for", "today", "really", "just", "was", "is", "on",
    "phone", "after", "use",
)

CLASS_KEYWORDS = (
    tuple(NEGATIVE_WORDS),
    NEUTRAL_WORDS + tuple(MILD_WORDS),
    tuple(POSITIVE_WORDS),
)
CLASS_RATINGS = ((1, 2), (3,), (4, 5))
ENDINGS = (".", "!", "", "!!")


def starter_lexicon_text():
    """
    The starter lexicon in the tab-separated lexicon format.
    """
    lines = ["# starter polarity lexicon: word<TAB>polarity, negators marked with " + negator_marker]
    for table in (POSITIVE_WORDS, NEGATIVE_WORDS, MILD_WORDS):
        lines.extend(f"{word}\t{polarity}" for word, polarity in table.items())
    lines.extend(f"{negator_marker}\t{word}" for word in NEGATORS)
    return "\n".join(lines) + "\n"


def write_starter_lexicon(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(starter_lexicon_text(), encoding='utf-8')
    return path


def _class_sizes(n_reviews, weights):
    weights = np.asarray(weights, dtype=np.float64)
    sizes = np.floor(n_reviews * weights / weights.sum()).astype(int)
    sizes[:n_reviews - sizes.sum()] += 1
    return sizes


def _review_text(rng, class_code):
    words = list(rng.choice(CLASS_KEYWORDS[class_code], size=int(rng.integers(2, 4))))
    words += list(rng.choice(NOISE_WORDS, size=int(rng.integers(3, 7))))
    rng.shuffle(words)
    return " ".join(words).capitalize() + ENDINGS[int(rng.integers(len(ENDINGS)))]


def generate_reviews(n_reviews=900, seed=0, app_id="synthetic", weights=(1, 1, 1)):
    """
    Seeded 3-class keyword corpus. Negative and Positive reviews carry two or three lexicon words of their
    class, Neutral reviews only topic and mild words, all padded with noise words. Texts are unique.
    :param n_reviews: number of reviews
    :param seed: generator seed
    :param app_id: recorded on every review
    :param weights: relative Negative, Neutral, Positive class sizes
    :return: list of Review
    """
    rng = np.random.default_rng(seed)
    codes = np.repeat(np.arange(3), _class_sizes(n_reviews, weights))
    codes = codes[rng.permutation(len(codes))]

    seen = set()
    reviews = []
    for index, code in enumerate(codes):
        text = _review_text(rng, code)
        while text in seen:
            text = _review_text(rng, code)
        seen.add(text)
        reviews.append(Review(app_id=app_id,
                              text=text,
                              rating=int(rng.choice(CLASS_RATINGS[code])),
                              timestamp=f"2025-01-{int(rng.integers(1, 29)):02d} 12:00:00",
                              review_id=f"{app_id}-{index:05d}"))
    logger.debug(f"Generated {len(reviews)} synthetic reviews for {app_id}")
    return reviews


def write_export(reviews, path, columns=None):
    """
    Write reviews in the scraper export schema, as ingest reads it.
    """
    columns = columns or ColumnMap()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame({
        columns.review_id: [review.review_id or '' for review in reviews],
        columns.text: [review.text for review in reviews],
        columns.rating: [review.rating if review.rating is not None else '' for review in reviews],
        columns.timestamp: [review.timestamp or '' for review in reviews],
    })
    frame.to_csv(path, index=False, sep=delimiter, encoding=encoding, lineterminator='\n')
    return path
