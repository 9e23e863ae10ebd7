import string

import numpy as np
import pytest

from core.text.codec import greedy_split_word
from core.text.dictionary import EnglishDictionary
from core.text.vocab import (BASE_SET, SPECIAL_TOKENS, Vocabulary, build_vocabulary, build_word_counts,
                             count_mass, propagate_counts, split_element)
from utils.errors import InputError


WORDS = EnglishDictionary(['file', 'reader', 'return', 'frame', 'quick', 'another', 'other', 'an', 'the',
                           'string', 'only', 'thing', 'really', 'real', 'on', 'name', 'size'])


class TestSplitElement:
    def test_compound_of_english_words(self):
        assert split_element('filereader', WORDS, {'filereader': 3}) == ['file', 'reader']

    def test_ing_suffix(self):
        assert split_element('returning', WORDS, {'returning': 2}) == ['return', 'ing']

    def test_plural_suffix_needs_known_stem(self):
        assert split_element('returns', WORDS, {'returns': 5, 'return': 3}) == ['return', 's']
        assert split_element('returns', WORDS, {'returns': 5}) == ['returns']

    def test_non_english_prefix_from_counts(self):
        counts = {'guiframe': 5, 'gui': 6, 'frame': 2}
        assert split_element('guiframe', WORDS, counts) == ['gui', 'frame']

    def test_known_element_is_not_its_own_split(self):
        assert split_element('gui', WORDS, {'gui': 6, 'guiframe': 5}) == ['gui']
        assert split_element('xyzzy', WORDS, {'xyzzy': 3}) == ['xyzzy']

    def test_greedy_split_of_unseen_word(self):
        vocab = Vocabulary(SPECIAL_TOKENS + BASE_SET + ('file', 'not', 'found'))
        assert greedy_split_word('filenotfound', vocab) == ['file', 'not', 'found']

    def test_dictionary_words_are_not_decomposed(self):
        assert split_element('another', WORDS, {'another': 4, 'an': 9, 'other': 2}) == ['another']

    def test_ly_suffix(self):
        assert split_element('quickly', WORDS, {'quickly': 1}) == ['quick', 'ly']
        assert split_element('really', WORDS, {'really': 1}) == ['real', 'ly']

    def test_suffix_needs_a_known_stem(self):
        assert split_element('blorking', WORDS, {'blorking': 3}) == ['blorking']
        assert split_element('blorking', WORDS, {'blorking': 3, 'blork': 1}) == ['blork', 'ing']

    def test_dictionary_words_keep_their_endings(self):
        counts = {'string': 7, 'str': 4, 'only': 3, 'thing': 2, 'th': 1}
        for word in ('string', 'only', 'thing'):
            assert split_element(word, WORDS, counts) == [word]

    def test_short_stems_are_kept(self):
        assert split_element('ing', WORDS, {}) == ['ing']
        assert split_element('as', WORDS, {'a': 10}) == ['as']


class TestBundledDictionary:
    def test_size_and_common_words(self, dictionary):
        assert len(dictionary) >= 9000
        for word in ('gui', 'quick', 'frame', 'file', 'reader', 'return', 'string', 'value'):
            assert word in dictionary
        assert 'filereader' not in dictionary

    def test_words_are_lowercase_alphabetic(self, dictionary):
        assert all(word.isascii() and word.isalpha() and word.islower() for word in dictionary)

    def test_splits_with_bundled_words(self, dictionary):
        assert split_element('filereader', dictionary, {'filereader': 3}) == ['file', 'reader']
        assert split_element('returning', dictionary, {'returning': 2}) == ['return', 'ing']
        assert split_element('quickly', dictionary, {'quickly': 1}) == ['quick', 'ly']
        assert split_element('string', dictionary, {'string': 9, 'str': 9}) == ['string']


def _random_corpus(seed):
    """Counts over random syllable compounds with suffixes, and a dictionary of some compounds"""
    rng = np.random.default_rng(seed)
    letters = list(string.ascii_lowercase)
    syllables = [''.join(rng.choice(letters, size=int(rng.integers(2, 4)))) for _ in range(12)]
    words = {''.join(rng.choice(syllables, size=int(rng.integers(1, 3)))) for _ in range(30)}
    counts = {}
    for _ in range(60):
        element = ''.join(rng.choice(syllables, size=int(rng.integers(1, 5))))
        suffix = rng.choice(['', '', 'ing', 'ly', 's', 'd'])
        counts[element + suffix] = counts.get(element + suffix, 0) + int(rng.integers(1, 20))
    return EnglishDictionary(words), counts


class TestCountPropagation:
    def test_counts_added_to_each_part(self, dictionary):
        propagated = propagate_counts({'filereader': 3, 'file': 2}, dictionary)
        assert propagated == {'file': 5, 'reader': 3}

    def test_non_english_part_collects_counts(self):
        propagated = propagate_counts({'guiframe': 5, 'gui': 6, 'frame': 2}, WORDS)
        assert propagated == {'gui': 11, 'frame': 7}
        vocab = build_vocabulary({'guiframe': 5, 'gui': 6, 'frame': 2}, WORDS, threshold=10)
        assert 'gui' in vocab
        assert 'frame' not in vocab

    def test_parts_from_one_split_enable_another(self):
        # "reader" only appears as a part of "filereader", which makes "readers" splittable
        propagated = propagate_counts({'filereader': 2, 'readers': 3}, WORDS)
        assert propagated == {'file': 2, 'reader': 5, 's': 3}

    @pytest.mark.parametrize('seed', range(100))
    def test_mass_is_conserved(self, seed):
        dictionary, counts = _random_corpus(seed)
        propagated = propagate_counts(counts, dictionary)
        assert count_mass(propagated) == count_mass(counts)

    @pytest.mark.parametrize('seed', range(20))
    def test_propagated_counts_are_a_fixpoint(self, seed):
        dictionary, counts = _random_corpus(seed)
        propagated = propagate_counts(counts, dictionary)
        assert propagate_counts(propagated, dictionary) == propagated

    def test_word_counts_are_lowercased_tokens(self):
        counts = build_word_counts(['Returns the File.', 'the file'])
        assert counts == {'returns': 1, 'the': 2, 'file': 2, '.': 1}


class TestBuildVocabulary:
    def test_layout_and_ordering(self, dictionary):
        counts = {'the': 20, 'name': 12, 'file': 12, 'zebra': 1, 'x': 50}
        vocab = build_vocabulary(counts, dictionary, threshold=10)
        assert vocab.elements[:5] == SPECIAL_TOKENS
        assert vocab.elements[5:5 + len(BASE_SET)] == BASE_SET
        assert vocab.elements[5 + len(BASE_SET):] == ('the', 'file', 'name')
        assert (vocab.pad_id, vocab.start_id, vocab.end_id, vocab.begin_spell_id, vocab.end_spell_id) == \
            (0, 1, 2, 3, 4)
        assert 'zebra' not in vocab

    def test_base_set_is_always_present(self, dictionary):
        vocab = build_vocabulary({}, dictionary, threshold=1)
        assert len(vocab) == len(SPECIAL_TOKENS) + 26 + 10 + len(string.punctuation)
        assert all(ch in vocab for ch in string.ascii_lowercase + string.digits + string.punctuation)

    def test_max_size_keeps_highest_counts(self, dictionary):
        counts = {'the': 30, 'file': 20, 'name': 10}
        vocab = build_vocabulary(counts, dictionary, threshold=1, max_size=2)
        assert vocab.elements[5 + len(BASE_SET):] == ('the', 'file')

    def test_threshold_must_be_positive(self, dictionary):
        with pytest.raises(InputError):
            build_vocabulary({'the': 3}, dictionary, threshold=0)

    @pytest.mark.parametrize('seed', range(20))
    def test_already_split_counts_give_the_same_vocabulary(self, seed):
        dictionary, counts = _random_corpus(seed)
        vocab = build_vocabulary(counts, dictionary, threshold=5)
        again = build_vocabulary(propagate_counts(counts, dictionary), dictionary, threshold=5)
        assert again.elements == vocab.elements
        assert again.counts == vocab.counts

    def test_same_input_serializes_identically(self, tmp_path, dictionary):
        comments = ['Returns the file name.', 'Sets the guiFrame size.', 'Quickly reads the filereader.'] * 4
        paths = []
        for i in range(2):
            vocab = build_vocabulary(build_word_counts(comments), dictionary, threshold=3)
            paths.append(tmp_path / f'vocab{i}.txt')
            vocab.save(paths[-1])
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_specials_are_not_members(self, tiny_vocab):
        assert '<pad>' not in tiny_vocab
        assert tiny_vocab.id_of('<end>') == tiny_vocab.end_id
        assert tiny_vocab.is_special(4) and not tiny_vocab.is_special(5)


class TestVocabularyFile:
    def test_round_trip(self, tmp_path, tiny_vocab):
        path = tmp_path / 'vocab.txt'
        tiny_vocab.save(path)
        loaded = Vocabulary.load(path)
        assert loaded.elements == tiny_vocab.elements
        assert loaded.fingerprint == tiny_vocab.fingerprint

    def test_tampered_file_rejected(self, tmp_path, tiny_vocab):
        path = tmp_path / 'vocab.txt'
        tiny_vocab.save(path)
        path.write_text(path.read_text(encoding='utf-8').replace('\nfile\n', '\nfiles\n'), encoding='utf-8')
        with pytest.raises(InputError):
            Vocabulary.load(path)

    def test_missing_header_rejected(self, tmp_path):
        path = tmp_path / 'vocab.txt'
        path.write_text('\n'.join(SPECIAL_TOKENS) + '\n', encoding='utf-8')
        with pytest.raises(InputError):
            Vocabulary.load(path)

    def test_duplicates_rejected(self):
        with pytest.raises(InputError):
            Vocabulary(SPECIAL_TOKENS + ('a', 'a'))

    def test_must_start_with_specials(self):
        with pytest.raises(InputError):
            Vocabulary(('a', 'b'))
