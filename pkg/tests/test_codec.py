import string

import numpy as np
import pytest

from core.text.codec import decode_prediction, encode_target, greedy_split_word, tokenize_comment
from core.text.vocab import BASE_SET, SPECIAL_TOKENS, Vocabulary
from utils.errors import EncodingError


def _spans_balanced(ids, vocab) -> bool:
    open_span = False
    for index in ids:
        if index == vocab.begin_spell_id:
            if open_span:
                return False
            open_span = True
        elif index == vocab.end_spell_id:
            if not open_span:
                return False
            open_span = False
    return not open_span


class TestTokenize:
    def test_lowercases_and_splits_punctuation(self):
        assert tokenize_comment('Returns the FileName.') == ['returns', 'the', 'filename', '.']

    def test_punctuation_runs_become_single_marks(self):
        assert tokenize_comment('a(b, c)!') == ['a', '(', 'b', ',', 'c', ')', '!']

    def test_empty(self):
        assert tokenize_comment('') == []
        assert tokenize_comment('   ') == []


class TestEncodeTarget:
    def test_in_vocabulary_tokens(self, tiny_vocab):
        ids = encode_target(['returns', 'the', 'file', '.'], tiny_vocab)
        assert ids[0] == tiny_vocab.start_id and ids[-1] == tiny_vocab.end_id
        assert [tiny_vocab.element(i) for i in ids[1:-1]] == ['returns', 'the', 'file', '.']

    def test_unknown_word_is_spelled(self, tiny_vocab):
        ids = encode_target(['filename'], tiny_vocab)
        assert ids == [tiny_vocab.start_id, tiny_vocab.begin_spell_id, tiny_vocab.id_of('file'),
                       tiny_vocab.id_of('name'), tiny_vocab.end_spell_id, tiny_vocab.end_id]

    def test_character_level_fallback(self, tiny_vocab):
        ids = encode_target(['fx'], tiny_vocab)
        assert [tiny_vocab.element(i) for i in ids[2:-2]] == ['f', 'x']

    def test_empty_comment(self, tiny_vocab):
        assert encode_target([], tiny_vocab) == [tiny_vocab.start_id, tiny_vocab.end_id]

    def test_uncoverable_character(self, tiny_vocab):
        with pytest.raises(EncodingError):
            encode_target(tokenize_comment('the café'), tiny_vocab)

    def test_greedy_prefers_longest(self):
        vocab = Vocabulary(SPECIAL_TOKENS + BASE_SET + ('re', 'read', 'reader', 'er'))
        assert greedy_split_word('readers', vocab) == ['reader', 's']


class TestDecodePrediction:
    def test_spell_span_joined(self, tiny_vocab):
        v = tiny_vocab
        ids = [v.start_id, v.id_of('returns'), v.id_of('the'), v.begin_spell_id, v.id_of('file'),
               v.id_of('name'), v.end_spell_id, v.id_of('.'), v.end_id]
        assert decode_prediction(ids, v) == 'returns the filename .'

    def test_unclosed_span_closes_at_end(self, tiny_vocab):
        v = tiny_vocab
        ids = [v.id_of('the'), v.begin_spell_id, v.id_of('file'), v.id_of('name')]
        assert decode_prediction(ids, v) == 'the filename'

    def test_stray_end_spell_dropped(self, tiny_vocab):
        v = tiny_vocab
        assert decode_prediction([v.id_of('the'), v.end_spell_id, v.id_of('file')], v) == 'the file'

    def test_nested_begin_spell_dropped(self, tiny_vocab):
        v = tiny_vocab
        ids = [v.begin_spell_id, v.id_of('file'), v.begin_spell_id, v.id_of('name'), v.end_spell_id]
        assert decode_prediction(ids, v) == 'filename'

    def test_out_of_range_ids_skipped(self, tiny_vocab):
        v = tiny_vocab
        assert decode_prediction([v.id_of('the'), len(v) + 3, -1, v.id_of('file')], v) == 'the file'

    def test_specials_produce_no_text(self, tiny_vocab):
        v = tiny_vocab
        assert decode_prediction([v.start_id, v.pad_id, v.end_id], v) == ''


class TestRoundTrip:
    def test_random_comments(self):
        rng = np.random.default_rng(1234)
        alphabet = list(string.ascii_lowercase + string.digits)

        def word():
            return ''.join(rng.choice(alphabet, size=int(rng.integers(1, 9))))

        pool = [word() for _ in range(400)]
        vocab = Vocabulary(SPECIAL_TOKENS + BASE_SET + tuple(sorted(set(pool[:150]) - set(BASE_SET))))
        marks = list(string.punctuation)

        for _ in range(10_000):
            pieces = []
            for _ in range(int(rng.integers(1, 12))):
                if rng.random() < 0.2:
                    pieces.append(str(rng.choice(marks)))
                else:
                    w = str(rng.choice(pool))
                    pieces.append(w.upper() if rng.random() < 0.1 else w)
            tokens = tokenize_comment(' '.join(pieces))
            ids = encode_target(tokens, vocab)
            assert _spans_balanced(ids, vocab)
            assert decode_prediction(ids, vocab) == ' '.join(tokens)
