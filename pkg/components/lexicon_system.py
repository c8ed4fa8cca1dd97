import logging
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

from config.lexicon_config import pos_threshold, neg_threshold, negation_factor, comment_prefix, negator_marker
from utils.exceptions import LexiconParseError
from utils.string_ops import tokenize

logger = logging.getLogger(__name__)


class SentimentLabel(IntEnum):
    NEGATIVE = 0
    NEUTRAL = 1
    POSITIVE = 2

    @property
    def display_name(self):
        return self.name.capitalize()

    @classmethod
    def from_name(cls, name):
        return cls[name.strip().upper()]


@dataclass(frozen=True)
class Lexicon:
    entries: Mapping[str, float] = field(default_factory=dict)
    negators: frozenset = frozenset()
    negation_factor: float = negation_factor
    duplicate_count: int = 0

    def __post_init__(self):
        for word, polarity in self.entries.items():
            if not -1.0 <= polarity <= 1.0:
                raise ValueError(f"Polarity of '{word}' out of range: {polarity}")
        object.__setattr__(self, 'entries', MappingProxyType(dict(self.entries)))
        object.__setattr__(self, 'negators', frozenset(self.negators))

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class LabelRule:
    pos_threshold: float = pos_threshold
    neg_threshold: float = neg_threshold

    def __post_init__(self):
        if not self.neg_threshold < self.pos_threshold:
            raise ValueError(f"neg_threshold ({self.neg_threshold}) must be below pos_threshold "
                             f"({self.pos_threshold})")


def load_lexicon(path, factor=negation_factor):
    """
    Parse a tab-separated lexicon file: `word<TAB>polarity` lines, `#` comments and
    `!negator<TAB>word` lines. A repeated word keeps its last polarity.
    :param path: lexicon file
    :param factor: multiplier applied to a negated word's polarity
    :return: Lexicon
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Lexicon not found: {path}")

    entries = {}
    negators = set()
    duplicates = 0

    with path.open(encoding="utf-8") as handle:
        for line_number, raw_line in enumerate(handle, start=1):
            line = raw_line.strip()
            if not line or line.startswith(comment_prefix):
                continue

            parts = [part.strip() for part in line.split('\t')]
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise LexiconParseError(line_number, f"expected two tab-separated fields, got {line!r}")

            key, value = parts
            if key == negator_marker:
                negators.add(value.lower())
                continue

            try:
                polarity = float(value)
            except ValueError:
                raise LexiconParseError(line_number, f"polarity {value!r} is not a number") from None
            if not -1.0 <= polarity <= 1.0:
                raise LexiconParseError(line_number, f"polarity {polarity} outside [-1, 1]")

            word = key.lower()
            if word in entries:
                duplicates += 1
                logger.warning(f"{path.name}:{line_number}: duplicate entry '{word}', last value wins")
            entries[word] = polarity

    logger.info(f"Loaded lexicon with {len(entries)} entries and {len(negators)} negators from {path}")
    return Lexicon(entries=entries, negators=frozenset(negators), negation_factor=factor,
                   duplicate_count=duplicates)


def score_text(clean, lex):
    """
    Mean polarity over lexicon-matched tokens, clamped to [-1, 1]; 0.0 when nothing matches.
    A matched token right after a negator counts as polarity * negation_factor.
    :param clean: cleaned text
    :param lex: Lexicon
    :return: polarity
    """
    tokens = tokenize(clean)
    total = 0.0
    matched = 0
    for position, token in enumerate(tokens):
        polarity = lex.entries.get(token)
        if polarity is None:
            continue
        if position > 0 and tokens[position - 1] in lex.negators:
            polarity *= lex.negation_factor
        total += polarity
        matched += 1

    if not matched:
        return 0.0
    return max(-1.0, min(1.0, total / matched))


def assign_label(polarity, rule=LabelRule()):
    """
    Threshold a polarity; both thresholds themselves are Neutral.
    """
    if polarity > rule.pos_threshold:
        return SentimentLabel.POSITIVE
    if polarity < rule.neg_threshold:
        return SentimentLabel.NEGATIVE
    return SentimentLabel.NEUTRAL
