import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from config.textenc_config import max_words as default_max_words, max_length as default_max_length, pad_index, \
    oov_index, pad_token, oov_token
from utils.exceptions import InsufficientDataError
from utils.string_ops import tokenize

logger = logging.getLogger(__name__)

RESERVED = 2


@dataclass(frozen=True)
class Vocabulary:
    """
    Frequency-ranked word index. Index 0 is padding, 1 is out-of-vocabulary, real words start at 2.
    """
    index_to_word: tuple
    max_words: int = default_max_words
    max_length: int = default_max_length
    word_to_index: dict = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, 'index_to_word', tuple(self.index_to_word))
        if self.index_to_word[:RESERVED] != (pad_token, oov_token):
            raise ValueError("Vocabulary must start with the padding and out-of-vocabulary tokens")
        if len(self.index_to_word) > self.max_words:
            raise ValueError(f"Vocabulary of {len(self.index_to_word)} entries exceeds max_words={self.max_words}")
        object.__setattr__(self, 'word_to_index',
                           {word: index for index, word in enumerate(self.index_to_word) if index >= RESERVED})

    @property
    def pad_index(self):
        return pad_index

    @property
    def oov_index(self):
        return oov_index

    def __len__(self):
        return len(self.word_to_index)


@dataclass(frozen=True)
class EncodedSequence:
    ids: tuple
    length: int


def build_vocab(corpus, max_words=default_max_words, max_length=default_max_length):
    """
    Rank the words of the training corpus by frequency, ties by first occurrence, and keep the top max_words - 2.
    :param corpus: list of cleaned texts from the training split
    :param max_words: vocabulary capacity including the two reserved indices
    :param max_length: sequence length recorded alongside the vocabulary
    :return: Vocabulary
    """
    if max_words < RESERVED:
        raise ValueError(f"max_words must be at least {RESERVED}, got {max_words}")
    if not corpus:
        raise InsufficientDataError("Cannot build a vocabulary from an empty corpus")

    counter = Counter()
    for text in corpus:
        counter.update(tokenize(text))

    # most_common keeps insertion (first occurrence) order among equal counts
    kept = [word for word, _ in counter.most_common(max_words - RESERVED)] if max_words > RESERVED else []
    vocab = Vocabulary(index_to_word=(pad_token, oov_token, *kept), max_words=max_words, max_length=max_length)
    logger.info(f"Built vocabulary of {len(vocab)} words from {len(counter)} distinct tokens")
    return vocab


def encode(text, vocab):
    """
    Map whitespace tokens to indices, unknown words to the out-of-vocabulary index.
    """
    return [vocab.word_to_index.get(token, oov_index) for token in tokenize(text)]


def pad(ids, max_length=default_max_length):
    """
    Post-pad with the padding index or post-truncate to max_length.
    """
    if max_length < 1:
        raise ValueError(f"max_length must be at least 1, got {max_length}")
    ids = list(ids)
    length = min(len(ids), max_length)
    return EncodedSequence(ids=tuple(ids[:max_length] + [pad_index] * (max_length - length)), length=length)


def encode_batch(texts, vocab, max_length=None):
    """
    Encode and pad a list of texts.
    :return: (ids matrix [N x max_length] int64, true lengths [N] int64)
    """
    max_length = max_length or vocab.max_length
    sequences = [pad(encode(text, vocab), max_length) for text in texts]
    ids = np.array([sequence.ids for sequence in sequences], dtype=np.int64).reshape(len(sequences), max_length)
    lengths = np.array([sequence.length for sequence in sequences], dtype=np.int64)
    return ids, lengths


def save_vocab(vocab, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', encoding='utf-8', newline='\n') as handle:
        handle.write(f"# max_words={vocab.max_words}\n")
        handle.write(f"# max_length={vocab.max_length}\n")
        for index, word in enumerate(vocab.index_to_word):
            handle.write(f"{word}\t{index}\n")
    logger.debug(f"Saved vocabulary to {path}")


def load_vocab(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Vocabulary not found: {path}")

    header = {}
    words = []
    with path.open(encoding='utf-8') as handle:
        for line_number, line in enumerate(handle, start=1):
            line = line.rstrip('\n')
            if line.startswith('# '):
                key, _, value = line[2:].partition('=')
                header[key] = int(value)
                continue
            word, index = line.split('\t')
            if int(index) != len(words):
                raise ValueError(f"{path}:{line_number}: expected index {len(words)}, found {index}")
            words.append(word)

    return Vocabulary(index_to_word=tuple(words), max_words=header.get('max_words', default_max_words),
                      max_length=header.get('max_length', default_max_length))
