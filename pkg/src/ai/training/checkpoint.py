"""Checkpoint directories: ``manifest.json``, ``params.bin`` and a copy of the vocabulary.

``params.bin`` holds every parameter as little-endian float32, concatenated in the
order listed by the manifest, followed by a trailer of the payload length (uint64)
and its CRC-32 (uint32).
"""
import json
import logging
import os
import struct
import zlib
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from ai.models.params import ModelConfig, ModelParams, parameter_shapes
from core.numerics.tensor import Tensor
from core.text.vocab import Vocabulary
from utils.errors import CheckpointFormatError, CompatibilityError

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
MANIFEST_FILE = 'manifest.json'
PARAMS_FILE = 'params.bin'
VOCAB_FILE = 'vocab.txt'
BLOB_DTYPE = np.dtype('<f4')
TRAILER = struct.Struct('<QI')


@dataclass
class CheckpointManifest:
    model: Dict[str, Any]
    vocab_size: int
    vocab_fingerprint: str
    parameters: List[List[Any]] = field(default_factory=list)
    schedule: Dict[str, Any] = field(default_factory=dict)
    val_loss: Optional[float] = None
    seed: int = 0
    training: Dict[str, Any] = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    @classmethod
    def describe(cls, params: ModelParams, vocab: Vocabulary, **extra) -> 'CheckpointManifest':
        return cls(
            model=params.config.to_dict(),
            vocab_size=len(vocab),
            vocab_fingerprint=vocab.fingerprint,
            parameters=[[name, list(params[name].shape)] for name in params],
            **extra,
        )

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'CheckpointManifest':
        try:
            return cls(**data)
        except TypeError as e:
            raise CheckpointFormatError(f"malformed manifest: {e}") from e

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class Checkpoint:
    params: ModelParams
    manifest: CheckpointManifest
    vocab: Optional[Vocabulary] = None


def _write_atomic(path: Path, payload: bytes) -> None:
    tmp = path.with_name(path.name + '.tmp')
    with open(tmp, 'wb') as f:
        f.write(payload)
    os.replace(tmp, path)


def encode_blob(params: ModelParams) -> bytes:
    payload = b''.join(np.ascontiguousarray(params[name].data, dtype=BLOB_DTYPE).tobytes() for name in params)
    return payload + TRAILER.pack(len(payload), zlib.crc32(payload))


def decode_blob(blob: bytes, config: ModelConfig, vocab_size: int) -> ModelParams:
    if len(blob) < TRAILER.size:
        raise CheckpointFormatError(f"parameter blob of {len(blob)} bytes has no trailer")
    payload, trailer = blob[:-TRAILER.size], blob[-TRAILER.size:]
    length, checksum = TRAILER.unpack(trailer)
    if length != len(payload):
        raise CheckpointFormatError(f"parameter blob length {len(payload)} does not match recorded {length}")
    if zlib.crc32(payload) != checksum:
        raise CheckpointFormatError("parameter blob checksum mismatch")

    shapes = parameter_shapes(config, vocab_size)
    expected = sum(int(np.prod(shape)) for _, shape in shapes) * BLOB_DTYPE.itemsize
    if expected != len(payload):
        raise CheckpointFormatError(f"parameter blob holds {len(payload)} bytes, model needs {expected}")

    flat = np.frombuffer(payload, dtype=BLOB_DTYPE)
    tensors = {}
    offset = 0
    for name, shape in shapes:
        count = int(np.prod(shape))
        tensors[name] = Tensor(flat[offset:offset + count].reshape(shape).astype(np.float32), name=name)
        offset += count
    return ModelParams(config, vocab_size, tensors)


def save_checkpoint(params: ModelParams, manifest: CheckpointManifest, path: Union[str, Path],
                    vocab: Optional[Vocabulary] = None) -> Path:
    """Write a checkpoint directory; the blob lands before the manifest that describes it"""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    _write_atomic(path / PARAMS_FILE, encode_blob(params))
    if vocab is not None:
        vocab.save(path / VOCAB_FILE)
    _write_atomic(path / MANIFEST_FILE, json.dumps(manifest.to_dict(), indent=2, sort_keys=True).encode('utf-8'))
    logger.info(f"Checkpoint saved to {path} (val_loss={manifest.val_loss})")
    return path


def load_checkpoint(path: Union[str, Path], vocab: Optional[Vocabulary] = None) -> Checkpoint:
    """Read a checkpoint; ``vocab`` (or the bundled copy) must match the manifest fingerprint"""
    path = Path(path)
    with open(path / MANIFEST_FILE, 'r', encoding='utf-8') as f:
        try:
            manifest = CheckpointManifest.from_dict(json.load(f))
        except json.JSONDecodeError as e:
            raise CheckpointFormatError(f"manifest in {path} is not valid JSON: {e}") from e
    if manifest.format_version != FORMAT_VERSION:
        raise CompatibilityError(f"checkpoint format {manifest.format_version} is not supported")

    if vocab is None and (path / VOCAB_FILE).exists():
        vocab = Vocabulary.load(path / VOCAB_FILE)
    if vocab is not None and vocab.fingerprint != manifest.vocab_fingerprint:
        raise CompatibilityError(f"vocabulary fingerprint {vocab.fingerprint[:12]} does not match "
                                 f"checkpoint {manifest.vocab_fingerprint[:12]}")

    config = ModelConfig.from_settings(manifest.model)
    recorded = [[name, list(shape)] for name, shape in parameter_shapes(config, manifest.vocab_size)]
    if manifest.parameters and manifest.parameters != recorded:
        raise CheckpointFormatError("manifest parameter list does not match the model configuration")

    with open(path / PARAMS_FILE, 'rb') as f:
        params = decode_blob(f.read(), config, manifest.vocab_size)
    logger.info(f"Checkpoint loaded from {path}")
    return Checkpoint(params=params, manifest=manifest, vocab=vocab)
