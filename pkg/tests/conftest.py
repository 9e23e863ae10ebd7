"""Shared fixtures: small vocabularies and models, and the 50-pair overfit run."""
from dataclasses import dataclass
from pathlib import Path
from typing import List

import numpy as np
import pytest

from ai.models.params import EncoderParams, ModelConfig
from ai.training.trainer import EpochSchedule, TrainConfig, TrainResult, TrainSplit, ValidationSplit, train
from core.corpus.pipeline import DatasetRecord
from core.numerics import layers
from core.text.dictionary import EnglishDictionary
from core.text.vocab import BASE_SET, SPECIAL_TOKENS, Vocabulary, build_vocabulary, build_word_counts
from utils.config_manager import ConfigManager

PREFIXES = ['file', 'user', 'line', 'page', 'node']
SUFFIXES = ['name', 'size', 'count', 'path', 'index']

OVERFIT_MODEL = ModelConfig(char_embedding_dim=16, conv_widths=(3, 3), conv_filters=(32, 64),
                            hidden_size=256, decoder_layers=1)
OVERFIT_TRAINING = TrainConfig(schedule=EpochSchedule(200), model=OVERFIT_MODEL, batch_size=32,
                               learning_rate=1e-3, vocab_threshold=2, seed=7)


def accessor_records() -> List[DatasetRecord]:
    """Java getters and setters over 25 compound field names"""
    records = []
    for prefix in PREFIXES:
        for suffix in SUFFIXES:
            camel = prefix.capitalize() + suffix.capitalize()
            field = prefix + suffix.capitalize()
            records.append(DatasetRecord(
                code=f"public int get{camel}() {{ return this.{field}; }}",
                comment=f"Returns the {prefix}{suffix}.", language='java', origin=f'Get{camel}.java'))
            records.append(DatasetRecord(
                code=f"public void set{camel}(int value) {{ this.{field} = value; }}",
                comment=f"Sets the {prefix}{suffix}.", language='java', origin=f'Set{camel}.java'))
    return records


@pytest.fixture(scope='session')
def dictionary():
    return EnglishDictionary.load()


@pytest.fixture
def tiny_vocab():
    return Vocabulary(SPECIAL_TOKENS + BASE_SET + ('the', 'file', 'name', 'returns', 'sets'))


@pytest.fixture
def tiny_model_config():
    return ModelConfig(char_embedding_dim=4, conv_widths=(3, 3), conv_filters=(6, 8), hidden_size=8)


@pytest.fixture
def config():
    """The settings singleton, reset to the shipped defaults around each test"""
    manager = ConfigManager()
    manager.reload()
    yield manager
    manager.reload()


@pytest.fixture
def relu_margin():
    """Smallest |pre-activation| of the encoder's ReLU inputs for ``ids``"""
    def margin(ids, params: EncoderParams) -> float:
        hidden = layers.embed_lookup(params.embedding, ids)
        smallest = np.inf
        for filters, bias in zip(params.conv_filters, params.conv_biases):
            pre = layers.conv1d(hidden, filters, bias)
            smallest = min(smallest, float(np.min(np.abs(pre.data))))
            hidden = layers.relu(pre)
        return smallest
    return margin


@dataclass
class OverfitRun:
    records: List[DatasetRecord]
    vocab: Vocabulary
    result: TrainResult
    checkpoint_dir: Path


def run_overfit(checkpoint_dir=None) -> OverfitRun:
    records = accessor_records()
    vocab = build_vocabulary(build_word_counts(r.comment for r in records), EnglishDictionary.load(),
                             threshold=OVERFIT_TRAINING.vocab_threshold)
    result = train(TrainSplit(records), ValidationSplit(records), vocab, OVERFIT_TRAINING,
                   checkpoint_dir=checkpoint_dir)
    return OverfitRun(records, vocab, result, checkpoint_dir)


@pytest.fixture(scope='session')
def overfit_run(tmp_path_factory):
    return run_overfit(tmp_path_factory.mktemp('overfit') / 'model')
