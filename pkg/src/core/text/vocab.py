"""Open vocabulary construction.

Comment tokens are counted, then every element is repeatedly split into English
words, suffixes and other known elements; the count of a split element is added to
each of its parts. The vocabulary is the letters, digits and punctuation marks plus
every element whose propagated count reaches the threshold.
"""
import hashlib
import logging
import re
import string
from collections import Counter
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Union

from utils.errors import InputError
from .dictionary import EnglishDictionary
from .tokenize import PUNCTUATION, tokenize_comment

logger = logging.getLogger(__name__)

PAD_TOKEN = '<pad>'
START_TOKEN = '<start>'
END_TOKEN = '<end>'
BEGIN_SPELL_TOKEN = '<begin_spell>'
END_SPELL_TOKEN = '<end_spell>'
SPECIAL_TOKENS = (PAD_TOKEN, START_TOKEN, END_TOKEN, BEGIN_SPELL_TOKEN, END_SPELL_TOKEN)

BASE_SET = tuple(string.ascii_lowercase) + tuple(string.digits) + tuple(PUNCTUATION)

WordCounts = Dict[str, int]

_HEADER_RE = re.compile(r'^#threshold=(\d+) #fingerprint=([0-9a-f]+)$')


def build_word_counts(comments: Iterable[str]) -> WordCounts:
    """Occurrence counts of lowercased comment tokens"""
    counts: Counter = Counter()
    for comment in comments:
        counts.update(tokenize_comment(comment))
    return dict(counts)


def count_mass(counts: Mapping[str, int]) -> int:
    """Total characters represented by the counts; unchanged by splitting"""
    return sum(len(element) * count for element, count in counts.items())


def _min_parse(word: str, is_part: Callable[[str], bool]) -> Optional[List[str]]:
    """Cover ``word`` with the fewest parts accepted by ``is_part``; None if impossible"""
    n = len(word)
    best: List[Optional[List[str]]] = [None] * (n + 1)
    best[0] = []
    for end in range(1, n + 1):
        for start in range(end):
            prefix = best[start]
            if prefix is None:
                continue
            piece = word[start:end]
            if not is_part(piece):
                continue
            if best[end] is None or len(prefix) + 1 < len(best[end]):
                best[end] = prefix + [piece]
    return best[n]


def _suffix_stem_known(element: str, stem: str, dictionary: EnglishDictionary, counts: Mapping[str, int]) -> bool:
    # Words like "string" and "only" keep their ending; "really" still splits
    if element in dictionary:
        return len(stem) >= 4 and stem in dictionary
    return stem in dictionary or stem in counts


def _apply_rules(element: str, dictionary: EnglishDictionary, counts: Mapping[str, int]) -> Optional[List[str]]:
    is_word = element in dictionary

    # English-word decomposition
    if not is_word:
        parse = _min_parse(element, lambda s: len(s) >= 2 and s in dictionary)
        if parse is not None and len(parse) >= 2:
            return parse

    for suffix in ('ing', 'ly'):
        stem = element[:-len(suffix)]
        if element.endswith(suffix) and len(stem) >= 2 and _suffix_stem_known(element, stem, dictionary, counts):
            return [stem, suffix]

    for suffix in ('s', 'd'):
        stem = element[:-1]
        if element.endswith(suffix) and len(stem) >= 2 and stem in counts:
            return [stem, suffix]

    # Decomposition into other elements, which may be non-English
    if not is_word:
        parse = _min_parse(element, lambda s: len(s) >= 2 and s != element and (s in counts or s in dictionary))
        if parse is not None and len(parse) >= 2:
            return parse

    return None


def split_element(element: str, dictionary: EnglishDictionary, counts: Mapping[str, int]) -> List[str]:
    """Split an element by the rules above, recursing into the parts until none applies"""
    parts = _apply_rules(element, dictionary, counts)
    if parts is None:
        return [element]
    result: List[str] = []
    for part in parts:
        result.extend(split_element(part, dictionary, counts))
    return result


def _propagate_once(counts: Mapping[str, int], dictionary: EnglishDictionary) -> WordCounts:
    propagated: Counter = Counter()
    for element in sorted(counts):
        for part in split_element(element, dictionary, counts):
            propagated[part] += counts[element]
    return dict(propagated)


def propagate_counts(counts: Mapping[str, int], dictionary: EnglishDictionary) -> WordCounts:
    """Replace every splittable element by its parts, adding its count to each part.

    Parts introduced by one pass can enable further splits (a new stem for the s/d rule),
    so passes repeat until the counts stop changing; the result propagates to itself.
    """
    current = dict(counts)
    while True:
        propagated = _propagate_once(current, dictionary)
        if propagated == current:
            return propagated
        current = propagated


class Vocabulary:
    """Ordered output elements with special tokens at fixed ids"""

    def __init__(self, elements: Sequence[str], threshold: int = 1,
                 counts: Optional[Mapping[str, int]] = None):
        elements = tuple(elements)
        if elements[:len(SPECIAL_TOKENS)] != SPECIAL_TOKENS:
            raise InputError("vocabulary must begin with the special tokens")
        if len(set(elements)) != len(elements):
            raise InputError("vocabulary elements must be unique")
        if any(not e or any(ch.isspace() for ch in e) for e in elements):
            raise InputError("vocabulary elements must be non-empty and contain no whitespace")
        self.elements = elements
        self.threshold = threshold
        self.counts = dict(counts or {})
        self._ids = {element: i for i, element in enumerate(elements)}
        self._words = frozenset(elements[len(SPECIAL_TOKENS):])
        self.max_element_length = max((len(e) for e in self._words), default=1)
        self.fingerprint = hashlib.sha256('\n'.join(elements).encode('utf-8')).hexdigest()

    pad_id = 0
    start_id = 1
    end_id = 2
    begin_spell_id = 3
    end_spell_id = 4

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, element: str) -> bool:
        """Membership among non-special elements"""
        return element in self._words

    def id_of(self, element: str) -> Optional[int]:
        return self._ids.get(element)

    def element(self, index: int) -> str:
        return self.elements[index]

    def is_special(self, index: int) -> bool:
        return 0 <= index < len(SPECIAL_TOKENS)

    def save(self, path: Union[str, Path]) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(f"#threshold={self.threshold} #fingerprint={self.fingerprint}\n")
            for element in self.elements:
                f.write(element + '\n')
        logger.info(f"Vocabulary of {len(self)} elements written to {path}")

    @classmethod
    def load(cls, path: Union[str, Path]) -> 'Vocabulary':
        path = Path(path)
        with open(path, 'r', encoding='utf-8', newline='\n') as f:
            lines = f.read().split('\n')
        if lines and lines[-1] == '':
            lines.pop()
        if not lines:
            raise InputError(f"vocabulary file {path} is empty")
        match = _HEADER_RE.match(lines[0])
        if not match:
            raise InputError(f"vocabulary file {path} has a malformed header: {lines[0]!r}")
        vocab = cls(lines[1:], threshold=int(match.group(1)))
        if vocab.fingerprint != match.group(2):
            raise InputError(f"vocabulary file {path} does not match its fingerprint")
        return vocab


def build_vocabulary(counts: Mapping[str, int], dictionary: EnglishDictionary, threshold: int,
                     max_size: Optional[int] = None) -> Vocabulary:
    """Specials, then the base set, then propagated elements by descending count"""
    if threshold < 1:
        raise InputError(f"threshold must be at least 1, got {threshold}")

    propagated = propagate_counts(counts, dictionary)
    base = set(BASE_SET)
    selected = [e for e, c in propagated.items() if c >= threshold and e not in base]
    selected.sort(key=lambda e: (-propagated[e], e))
    if max_size is not None:
        selected = selected[:max(0, max_size)]

    elements = list(SPECIAL_TOKENS) + list(BASE_SET) + selected
    vocab = Vocabulary(elements, threshold=threshold,
                       counts={e: propagated.get(e, 0) for e in elements[len(SPECIAL_TOKENS):]})
    logger.info(f"Built vocabulary: {len(selected)} elements at threshold {threshold} "
                f"plus {len(BASE_SET)} base elements")
    return vocab
