import re

# anything outside a-z once lowercased, unicode letters included
NON_ALPHABETIC = re.compile(r'[^a-z]+')


def clean_text(text):
    """
    Normalize review text: lowercase, every run of non-alphabetic characters becomes one space, then trim.
    "Great App!!! v2.0" -> "great app v", "don't" -> "don t", "12345" -> ""
    :param text: raw review text
    :return: cleaned text, possibly empty
    """
    lowercased = text.lower()
    return NON_ALPHABETIC.sub(' ', lowercased).strip()


def tokenize(text):
    """
    Split cleaned text into tokens; the only tokenization used by the pipeline.
    :param text: cleaned text
    :return: list of tokens
    """
    return text.split()
