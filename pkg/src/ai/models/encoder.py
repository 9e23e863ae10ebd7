"""Character-level convolutional code encoder.

Raw UTF-8 bytes are embedded, passed through the conv stack with ReLU,
summed over time and projected to the thought vector. The projection is
squashed with tanh so the thought vector lies in the same (-1, 1) range as
every hidden state the decoder's LSTM produces afterwards.
"""
from typing import List, Sequence

from core.numerics import layers
from core.numerics.tensor import Tensor
from utils.errors import InputError
from .params import PAD_BYTE, EncoderParams


def code_to_ids(code: str, min_length: int = 5) -> List[int]:
    """UTF-8 byte ids, right-padded with PAD_BYTE up to ``min_length``"""
    if not code:
        raise InputError("code must be non-empty")
    ids = list(code.encode('utf-8'))
    if len(ids) < min_length:
        ids.extend([PAD_BYTE] * (min_length - len(ids)))
    return ids


def encode(ids: Sequence[int], params: EncoderParams) -> Tensor:
    """Fixed-size thought vector for a byte-id sequence of any length"""
    hidden = layers.embed_lookup(params.embedding, ids)
    for filters, bias in zip(params.conv_filters, params.conv_biases):
        hidden = layers.relu(layers.conv1d(hidden, filters, bias))
    pooled = layers.sum_over_time_pool(hidden)
    return layers.tanh(layers.dense(pooled, params.dense_weight, params.dense_bias))
