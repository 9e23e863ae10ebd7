"""Model configuration and the flat, ordered parameter store."""
from dataclasses import asdict, dataclass
from typing import Dict, Iterator, List, Mapping, Optional, Tuple

import numpy as np

from core.numerics.tensor import Tensor
from utils.errors import ConfigError, ShapeError

PAD_BYTE = 256
BYTE_VOCAB = 257


@dataclass(frozen=True)
class ModelConfig:
    char_embedding_dim: int = 16
    conv_widths: Tuple[int, ...] = (3, 3)
    conv_filters: Tuple[int, ...] = (64, 128)
    hidden_size: int = 1024
    decoder_layers: int = 1
    init_scale: float = 0.08
    forget_bias: float = 1.0

    def __post_init__(self):
        if len(self.conv_widths) != len(self.conv_filters) or not self.conv_widths:
            raise ConfigError("conv_widths and conv_filters must be non-empty and of equal length")
        if self.decoder_layers not in (1, 2, 3):
            raise ConfigError(f"decoder_layers must be 1, 2 or 3, got {self.decoder_layers}")
        if min(self.conv_widths) < 1 or self.hidden_size < 1 or self.char_embedding_dim < 1:
            raise ConfigError("model dimensions must be positive")

    @property
    def receptive_field(self) -> int:
        """Shortest input every conv layer can still slide over"""
        return sum(w - 1 for w in self.conv_widths) + 1

    @classmethod
    def from_settings(cls, section: Mapping) -> 'ModelConfig':
        defaults = cls()
        return cls(
            char_embedding_dim=int(section.get('char_embedding_dim', defaults.char_embedding_dim)),
            conv_widths=tuple(int(w) for w in section.get('conv_widths', defaults.conv_widths)),
            conv_filters=tuple(int(f) for f in section.get('conv_filters', defaults.conv_filters)),
            hidden_size=int(section.get('hidden_size', defaults.hidden_size)),
            decoder_layers=int(section.get('decoder_layers', defaults.decoder_layers)),
            init_scale=float(section.get('init_scale', defaults.init_scale)),
            forget_bias=float(section.get('forget_bias', defaults.forget_bias)),
        )

    def to_dict(self) -> Dict:
        data = asdict(self)
        data['conv_widths'] = list(self.conv_widths)
        data['conv_filters'] = list(self.conv_filters)
        return data


@dataclass(frozen=True)
class EncoderParams:
    embedding: Tensor
    conv_filters: Tuple[Tensor, ...]
    conv_biases: Tuple[Tensor, ...]
    dense_weight: Tensor
    dense_bias: Tensor


@dataclass(frozen=True)
class LSTMLayerParams:
    weight: Tensor
    bias: Tensor


@dataclass(frozen=True)
class DecoderParams:
    embedding: Tensor
    layers: Tuple[LSTMLayerParams, ...]
    output_weight: Tensor
    output_bias: Tensor

    @property
    def hidden_size(self) -> int:
        return self.output_weight.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.output_weight.shape[1]


def parameter_shapes(config: ModelConfig, vocab_size: int) -> List[Tuple[str, Tuple[int, ...]]]:
    """Canonical declaration order of every parameter with its shape"""
    shapes: List[Tuple[str, Tuple[int, ...]]] = [
        ('encoder.embedding', (BYTE_VOCAB, config.char_embedding_dim)),
    ]
    channels = config.char_embedding_dim
    for k, (width, filters) in enumerate(zip(config.conv_widths, config.conv_filters), start=1):
        shapes.append((f'encoder.conv{k}.filters', (width, channels, filters)))
        shapes.append((f'encoder.conv{k}.bias', (filters,)))
        channels = filters
    shapes.append(('encoder.dense.weight', (channels, config.hidden_size)))
    shapes.append(('encoder.dense.bias', (config.hidden_size,)))

    hidden = config.hidden_size
    shapes.append(('decoder.embedding', (vocab_size, hidden)))
    for k in range(1, config.decoder_layers + 1):
        shapes.append((f'decoder.lstm{k}.weight', (2 * hidden, 4 * hidden)))
        shapes.append((f'decoder.lstm{k}.bias', (4 * hidden,)))
    shapes.append(('decoder.output.weight', (hidden, vocab_size)))
    shapes.append(('decoder.output.bias', (vocab_size,)))
    return shapes


class ModelParams:
    """Named parameter tensors in canonical order; the trainer is the only writer"""

    def __init__(self, config: ModelConfig, vocab_size: int, tensors: Mapping[str, Tensor]):
        self.config = config
        self.vocab_size = vocab_size
        expected = parameter_shapes(config, vocab_size)
        missing = [name for name, _ in expected if name not in tensors]
        if missing:
            raise ShapeError(f"missing parameters: {missing}")
        self._tensors: Dict[str, Tensor] = {}
        for name, shape in expected:
            tensor = tensors[name]
            if tuple(tensor.shape) != tuple(shape):
                raise ShapeError(f"parameter {name} has shape {tensor.shape}, expected {shape}")
            self._tensors[name] = tensor

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def __len__(self) -> int:
        return len(self._tensors)

    def names(self) -> List[str]:
        return list(self._tensors)

    def tensors(self) -> Dict[str, Tensor]:
        return dict(self._tensors)

    def replace(self, updates: Mapping[str, Tensor]) -> 'ModelParams':
        merged = dict(self._tensors)
        merged.update(updates)
        return ModelParams(self.config, self.vocab_size, merged)

    @property
    def encoder(self) -> EncoderParams:
        n = len(self.config.conv_widths)
        return EncoderParams(
            embedding=self['encoder.embedding'],
            conv_filters=tuple(self[f'encoder.conv{k}.filters'] for k in range(1, n + 1)),
            conv_biases=tuple(self[f'encoder.conv{k}.bias'] for k in range(1, n + 1)),
            dense_weight=self['encoder.dense.weight'],
            dense_bias=self['encoder.dense.bias'],
        )

    @property
    def decoder(self) -> DecoderParams:
        return DecoderParams(
            embedding=self['decoder.embedding'],
            layers=tuple(LSTMLayerParams(self[f'decoder.lstm{k}.weight'], self[f'decoder.lstm{k}.bias'])
                         for k in range(1, self.config.decoder_layers + 1)),
            output_weight=self['decoder.output.weight'],
            output_bias=self['decoder.output.bias'],
        )


def _fan_in(name: str, shape: Tuple[int, ...]) -> Optional[int]:
    """Inputs feeding one output unit of an encoder conv or dense layer; None for other weights"""
    if name.startswith('encoder.conv') and name.endswith('.filters'):
        return shape[0] * shape[1]
    if name == 'encoder.dense.weight':
        return shape[0]
    return None


def init_params(config: ModelConfig, vocab_size: int, seed: int = 0,
                dtype=np.float32, rng: Optional[np.random.Generator] = None) -> ModelParams:
    """Zero biases with the forget-gate offset; encoder conv and dense weights uniform with
    variance 1/fan_in; every other weight Uniform(-init_scale, init_scale)"""
    rng = rng if rng is not None else np.random.default_rng(seed)
    hidden = config.hidden_size
    tensors = {}
    for name, shape in parameter_shapes(config, vocab_size):
        if name.endswith('.bias'):
            values = np.zeros(shape, dtype=np.float64)
            if name.startswith('decoder.lstm'):
                values[hidden:2 * hidden] = config.forget_bias
        else:
            fan_in = _fan_in(name, shape)
            limit = np.sqrt(3.0 / fan_in) if fan_in else config.init_scale
            values = rng.uniform(-limit, limit, size=shape)
        tensors[name] = Tensor(values.astype(dtype), name=name)
    return ModelParams(config, vocab_size, tensors)
