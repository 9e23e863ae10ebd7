import logging
from pathlib import Path
from typing import FrozenSet, Iterable, Optional, Union

from utils.errors import InputError

logger = logging.getLogger(__name__)

BUNDLED_WORD_LIST = Path(__file__).parent / 'data' / 'english_words.txt'


class EnglishDictionary:
    """Set of lowercase alphabetic English words"""

    def __init__(self, words: Iterable[str]):
        cleaned = frozenset(w.strip().lower() for w in words if w.strip())
        cleaned = frozenset(w for w in cleaned if w.isascii() and w.isalpha())
        if not cleaned:
            raise InputError("English dictionary is empty")
        self._words: FrozenSet[str] = cleaned

    @classmethod
    def load(cls, path: Optional[Union[str, Path]] = None) -> 'EnglishDictionary':
        """Load a word-list file, one word per line; defaults to the bundled list"""
        path = Path(path) if path else BUNDLED_WORD_LIST
        with open(path, 'r', encoding='utf-8') as f:
            dictionary = cls(f.read().splitlines())
        logger.info(f"Loaded {len(dictionary)} dictionary words from {path}")
        return dictionary

    def __contains__(self, word: str) -> bool:
        return word in self._words

    def __len__(self) -> int:
        return len(self._words)

    def __iter__(self):
        return iter(sorted(self._words))
