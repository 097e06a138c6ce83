"""Deterministic review-text normalization and location-vocabulary statistics.

Normalization is lowercase -> punctuation removal (apostrophes inside words
survive, so "didn't" stays one token) -> stopword removal -> Porter stemming
-> stopword removal again (a stem such as "do" must not reappear). The
stopword list ships with the package and is versioned with it.

Review length is the raw whitespace token count of the unnormalized text.
"""

import re
from dataclasses import dataclass
from importlib import resources

_TOKEN_RE = re.compile(r"[a-z0-9]+(?:'[a-z0-9]+)*")

_VOWELS = "aeiou"


def _is_consonant(word, i):
    ch = word[i]
    if ch in _VOWELS:
        return False
    if ch == "y":
        return i == 0 or not _is_consonant(word, i - 1)
    return True


def _measure(stem):
    # number of VC sequences in [C](VC){m}[V]
    m = 0
    prev_cons = None
    for i in range(len(stem)):
        cons = _is_consonant(stem, i)
        if prev_cons is False and cons:
            m += 1
        prev_cons = cons
    return m


def _has_vowel(stem):
    return any(not _is_consonant(stem, i) for i in range(len(stem)))


def _ends_double_consonant(word):
    return len(word) >= 2 and word[-1] == word[-2] and _is_consonant(word, len(word) - 1)


def _ends_cvc(word):
    if len(word) < 3:
        return False
    return (
        _is_consonant(word, len(word) - 3)
        and not _is_consonant(word, len(word) - 2)
        and _is_consonant(word, len(word) - 1)
        and word[-1] not in "wxy"
    )


def _replace_suffix(word, suffix, replacement, min_measure):
    """Apply one (m > min) suffix rule; returns None when the rule misses."""
    if not word.endswith(suffix):
        return None
    stem = word[: len(word) - len(suffix)]
    if _measure(stem) > min_measure:
        return stem + replacement
    return word  # suffix matched, condition failed: rule consumes the step


_STEP2_RULES = (
    ("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
    ("izer", "ize"), ("abli", "able"), ("alli", "al"), ("entli", "ent"),
    ("eli", "e"), ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"),
    ("ator", "ate"), ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
    ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble"),
)

_STEP3_RULES = (
    ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
    ("ical", "ic"), ("ful", ""), ("ness", ""),
)

_STEP4_SUFFIXES = (
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement",
    "ment", "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
)


def porter_stem(word):
    """Porter (1980) stem of a lowercase word; words of length <= 2 pass through."""
    if len(word) <= 2:
        return word

    # step 1a
    if word.endswith("sses"):
        word = word[:-2]
    elif word.endswith("ies"):
        word = word[:-2]
    elif not word.endswith("ss") and word.endswith("s"):
        word = word[:-1]

    # step 1b
    if word.endswith("eed"):
        if _measure(word[:-3]) > 0:
            word = word[:-1]
    else:
        stripped = None
        if word.endswith("ed") and _has_vowel(word[:-2]):
            stripped = word[:-2]
        elif word.endswith("ing") and _has_vowel(word[:-3]):
            stripped = word[:-3]
        if stripped is not None:
            word = stripped
            if word.endswith(("at", "bl", "iz")):
                word += "e"
            elif _ends_double_consonant(word) and word[-1] not in "lsz":
                word = word[:-1]
            elif _measure(word) == 1 and _ends_cvc(word):
                word += "e"

    # step 1c
    if word.endswith("y") and _has_vowel(word[:-1]):
        word = word[:-1] + "i"

    # step 2
    for suffix, repl in _STEP2_RULES:
        out = _replace_suffix(word, suffix, repl, 0)
        if out is not None:
            word = out
            break

    # step 3
    for suffix, repl in _STEP3_RULES:
        out = _replace_suffix(word, suffix, repl, 0)
        if out is not None:
            word = out
            break

    # step 4
    for suffix in _STEP4_SUFFIXES:
        if word.endswith(suffix):
            stem = word[: len(word) - len(suffix)]
            if _measure(stem) > 1 and (suffix != "ion" or (stem and stem[-1] in "st")):
                word = stem
            break

    # step 5a
    if word.endswith("e"):
        stem = word[:-1]
        m = _measure(stem)
        if m > 1 or (m == 1 and not _ends_cvc(stem)):
            word = stem

    # step 5b
    if _measure(word) > 1 and _ends_double_consonant(word) and word.endswith("l"):
        word = word[:-1]

    return word


def _load_wordlist(name):
    text = resources.files("gentnow.data").joinpath(name).read_text(encoding="utf-8")
    words = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip().lower()
        if line:
            words.append(line)
    return words


def load_stopwords():
    return frozenset(_load_wordlist("stopwords_en.txt"))


_STOPWORDS = None


def _stopwords():
    global _STOPWORDS
    if _STOPWORDS is None:
        _STOPWORDS = load_stopwords()
    return _STOPWORDS


@dataclass(frozen=True)
class TokenizedReview:
    raw_word_count: int
    tokens: tuple


def review_length(text):
    """Raw whitespace token count, before any normalization."""
    return len(text.split())


def preprocess(text, stopwords=None):
    """Normalize ``text`` to a TokenizedReview. Deterministic; empty text ok."""
    stop = stopwords if stopwords is not None else _stopwords()
    raw_count = review_length(text)
    words = _TOKEN_RE.findall(text.lower())
    stems = [porter_stem(w) for w in words if w not in stop]
    tokens = tuple(s for s in stems if s not in stop)
    return TokenizedReview(raw_word_count=raw_count, tokens=tokens)


class LocationDictionary:
    """Set of stemmed location terms; membership drives the location features.

    Entries are stemmed with the same Porter stemmer as tokenization when
    loaded, so file contents may be natural words. The packaged default is a
    location-vocabulary approximation meant to be overridden for replication
    against any specific external dictionary.
    """

    def __init__(self, terms):
        self.stems = frozenset(porter_stem(t.strip().lower()) for t in terms if t.strip())
        if not self.stems:
            raise ValueError("location dictionary is empty")

    def __contains__(self, stem):
        return stem in self.stems

    def __len__(self):
        return len(self.stems)

    @classmethod
    def from_file(cls, path):
        with open(path, encoding="utf-8") as fh:
            terms = [ln.split("#", 1)[0].strip() for ln in fh]
        return cls([t for t in terms if t])

    @classmethod
    def default(cls):
        return cls(_load_wordlist("location_words.txt"))


# Location reviews are those where at least this share of normalized tokens
# are location words; the boundary counts as a location review.
LOCATION_REVIEW_THRESHOLD_PCT = 10.0


def location_word_fraction(tok, dictionary):
    """Percentage of normalized tokens that are location words (multiplicity counts)."""
    if not tok.tokens:
        return 0.0
    hits = sum(1 for t in tok.tokens if t in dictionary)
    return 100.0 * hits / len(tok.tokens)


def is_location_review(tok, dictionary):
    return location_word_fraction(tok, dictionary) >= LOCATION_REVIEW_THRESHOLD_PCT


def top_location_words(tokenized_reviews, dictionary, n=10):
    """Most frequent location words with counts; ties break lexicographically."""
    counts = {}
    for tok in tokenized_reviews:
        for t in tok.tokens:
            if t in dictionary:
                counts[t] = counts.get(t, 0) + 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:n]
