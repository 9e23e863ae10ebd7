"""Comment targets: tokenization, spell-span encoding and detokenization."""
from typing import List, Sequence

from utils.errors import EncodingError
from .tokenize import tokenize_comment
from .vocab import Vocabulary

__all__ = ['tokenize_comment', 'greedy_split_word', 'encode_target', 'decode_prediction']


def greedy_split_word(word: str, vocab: Vocabulary) -> List[str]:
    """Cover ``word`` left to right, always taking the longest vocabulary element"""
    parts: List[str] = []
    position = 0
    while position < len(word):
        longest = min(vocab.max_element_length, len(word) - position)
        for size in range(longest, 0, -1):
            piece = word[position:position + size]
            if piece in vocab:
                parts.append(piece)
                position += size
                break
        else:
            raise EncodingError(f"character {word[position]!r} in {word!r} is not in the vocabulary")
    return parts


def encode_target(tokens: Sequence[str], vocab: Vocabulary) -> List[int]:
    """START, one id per in-vocabulary token or a spell span per other token, END"""
    ids = [vocab.start_id]
    for token in tokens:
        if token in vocab:
            ids.append(vocab.id_of(token))
            continue
        parts = greedy_split_word(token, vocab)
        if len(parts) == 1:
            ids.append(vocab.id_of(parts[0]))
            continue
        ids.append(vocab.begin_spell_id)
        ids.extend(vocab.id_of(part) for part in parts)
        ids.append(vocab.end_spell_id)
    ids.append(vocab.end_id)
    return ids


def decode_prediction(ids: Sequence[int], vocab: Vocabulary) -> str:
    """Join predicted elements into a comment, concatenating spell spans into words.

    Malformed spans are repaired: an unclosed span ends with the sequence, a stray
    END_SPELL and a nested BEGIN_SPELL are dropped.
    """
    words: List[str] = []
    spelling = False
    span: List[str] = []
    for index in ids:
        index = int(index)
        if not 0 <= index < len(vocab):
            continue
        if index == vocab.begin_spell_id:
            if not spelling:
                spelling = True
                span = []
            continue
        if index == vocab.end_spell_id:
            if spelling:
                if span:
                    words.append(''.join(span))
                spelling = False
            continue
        if vocab.is_special(index):
            continue
        if spelling:
            span.append(vocab.element(index))
        else:
            words.append(vocab.element(index))
    if spelling and span:
        words.append(''.join(span))
    return ' '.join(words)
