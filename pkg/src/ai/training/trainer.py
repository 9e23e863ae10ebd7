"""Teacher-forced training with Adam, per-epoch (or per-round) validation and
best-checkpoint retention."""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ai.models.decoder import teacher_forced_loss
from ai.models.encoder import code_to_ids, encode
from ai.models.params import ModelConfig, ModelParams, init_params
from core.corpus.pipeline import DatasetRecord
from core.numerics import layers
from core.numerics.optim import AdamState, adam_step, clip_by_global_norm
from core.numerics.tensor import GradientTape
from core.text.codec import encode_target, tokenize_comment
from core.text.vocab import Vocabulary
from utils.errors import ConfigError, EncodingError, InputError, NumericalError, TrainingDivergenceError
from utils.resources import snapshot
from .checkpoint import Checkpoint, CheckpointManifest, save_checkpoint

logger = logging.getLogger(__name__)

HISTORY_FILE = 'history.csv'
HISTORY_COLUMNS = ['epoch', 'train_loss', 'val_loss']


@dataclass(frozen=True)
class EpochSchedule:
    epochs: int = 25

    @property
    def length(self) -> int:
        return self.epochs


@dataclass(frozen=True)
class RoundSchedule:
    rounds: int = 100
    samples_per_round: int = 100_000
    val_samples: int = 9_600

    @property
    def length(self) -> int:
        return self.rounds


Schedule = Union[EpochSchedule, RoundSchedule]


@dataclass(frozen=True)
class TrainConfig:
    schedule: Schedule = EpochSchedule()
    model: ModelConfig = ModelConfig()
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    clip_norm: float = 5.0
    vocab_threshold: int = 10
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.schedule.length < 1:
            raise ConfigError("training schedule must run at least once")
        if isinstance(self.schedule, RoundSchedule) and self.schedule.samples_per_round < 1:
            raise ConfigError("samples_per_round must be positive")
        if self.batch_size < 1:
            raise ConfigError(f"batch size must be positive, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning rate must be positive, got {self.learning_rate}")

    @classmethod
    def from_settings(cls, training: Mapping, model: Optional[Mapping] = None,
                      vocab: Optional[Mapping] = None) -> 'TrainConfig':
        kind = training.get('schedule', 'epochs')
        if kind == 'epochs':
            schedule = EpochSchedule(int(training.get('epochs', EpochSchedule.epochs)))
        elif kind == 'rounds':
            schedule = RoundSchedule(
                rounds=int(training.get('rounds', RoundSchedule.rounds)),
                samples_per_round=int(training.get('samples_per_round', RoundSchedule.samples_per_round)),
                val_samples=int(training.get('val_samples', RoundSchedule.val_samples)),
            )
        else:
            raise ConfigError(f"unknown training schedule {kind!r}")
        return cls(
            schedule=schedule,
            model=ModelConfig.from_settings(model or {}),
            batch_size=int(training.get('batch_size', cls.batch_size)),
            learning_rate=float(training.get('learning_rate', cls.learning_rate)),
            beta1=float(training.get('beta1', cls.beta1)),
            beta2=float(training.get('beta2', cls.beta2)),
            epsilon=float(training.get('epsilon', cls.epsilon)),
            clip_norm=float(training.get('clip_norm', cls.clip_norm)),
            vocab_threshold=int((vocab or {}).get('threshold', cls.vocab_threshold)),
            seed=int(training.get('seed', cls.seed)),
            workers=int(training.get('workers', cls.workers)),
        )

    def describe(self) -> Dict:
        if isinstance(self.schedule, EpochSchedule):
            schedule = {'kind': 'epochs', 'epochs': self.schedule.epochs}
        else:
            schedule = {'kind': 'rounds', 'rounds': self.schedule.rounds,
                        'samples_per_round': self.schedule.samples_per_round,
                        'val_samples': self.schedule.val_samples}
        return {
            'schedule': schedule,
            'batch_size': self.batch_size,
            'learning_rate': self.learning_rate,
            'beta1': self.beta1,
            'beta2': self.beta2,
            'epsilon': self.epsilon,
            'clip_norm': self.clip_norm,
            'vocab_threshold': self.vocab_threshold,
        }


class _Split:
    """Records of one dataset partition; the subclass names which one"""

    def __init__(self, records: Sequence[DatasetRecord]):
        self.records: Tuple[DatasetRecord, ...] = tuple(records)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[DatasetRecord]:
        return iter(self.records)


class TrainSplit(_Split):
    pass


class ValidationSplit(_Split):
    pass


class TestSplit(_Split):
    pass


@dataclass(frozen=True)
class EncodedPair:
    code_ids: Tuple[int, ...]
    target: Tuple[int, ...]


def encode_split(split: Sequence[DatasetRecord], vocab: Vocabulary,
                 model: ModelConfig) -> Tuple[List[EncodedPair], int]:
    """Encoded pairs and the number of records skipped as unencodable"""
    pairs = []
    skipped = 0
    for record in split:
        try:
            target = encode_target(tokenize_comment(record.comment), vocab)
            code_ids = code_to_ids(record.code, model.receptive_field)
        except (EncodingError, InputError) as e:
            logger.warning(f"Skipping record from {record.origin or 'unknown origin'}: {e}")
            skipped += 1
            continue
        pairs.append(EncodedPair(tuple(code_ids), tuple(target)))
    return pairs, skipped


def pair_loss(pair: EncodedPair, params: ModelParams):
    thought = encode(pair.code_ids, params.encoder)
    return teacher_forced_loss(thought, pair.target, params.decoder)


def validate(pairs: Sequence[EncodedPair], params: ModelParams, workers: int = 1) -> float:
    """Mean teacher-forced cross-entropy over ``pairs`` in nats per token"""
    if not pairs:
        raise InputError("validation set is empty")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            losses = list(executor.map(lambda pair: pair_loss(pair, params).item(), pairs))
    else:
        losses = [pair_loss(pair, params).item() for pair in pairs]
    total = 0.0
    for loss in losses:
        total += loss
    return total / len(losses)


@dataclass
class TrainResult:
    best: Checkpoint
    history: List[Dict[str, float]] = field(default_factory=list)
    final_params: Optional[ModelParams] = None
    skipped: int = 0

    def history_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.history, columns=HISTORY_COLUMNS)


def _batches(order: np.ndarray, batch_size: int) -> Iterator[np.ndarray]:
    for start in range(0, len(order), batch_size):
        yield order[start:start + batch_size]


class _RoundSampler:
    """Draws indices without replacement, reshuffling once a pass is exhausted"""

    def __init__(self, n: int, rng: np.random.Generator):
        self.n = n
        self.rng = rng
        self._queue = np.empty(0, dtype=np.int64)

    def draw(self, count: int) -> np.ndarray:
        chunks = []
        while count > 0:
            if self._queue.size == 0:
                self._queue = self.rng.permutation(self.n)
            take = self._queue[:count]
            self._queue = self._queue[count:]
            chunks.append(take)
            count -= take.size
        return np.concatenate(chunks)


def train_step(params: ModelParams, optimizer: AdamState, batch: Sequence[EncodedPair],
               clip_norm: float) -> Tuple[ModelParams, AdamState, float]:
    """One Adam update on the mean loss of ``batch``"""
    tensors = params.tensors()
    with GradientTape() as tape:
        loss = layers.mean([pair_loss(pair, params) for pair in batch])
    grads = tape.gradient(loss, tensors)
    grads, norm = clip_by_global_norm(grads, clip_norm)
    if not np.isfinite(norm):
        raise NumericalError(f"gradient norm is {norm}")
    updated, optimizer = adam_step(optimizer, grads, tensors)
    return params.replace(updated), optimizer, loss.item()


def train(train_set: TrainSplit, val_set: ValidationSplit, vocab: Vocabulary,
          cfg: TrainConfig = TrainConfig(), checkpoint_dir: Optional[Union[str, Path]] = None,
          params: Optional[ModelParams] = None) -> TrainResult:
    """Train from ``train_set`` and keep the parameters with the lowest validation loss"""
    if not isinstance(train_set, TrainSplit):
        raise InputError(f"train accepts a TrainSplit, got {type(train_set).__name__}")
    if not isinstance(val_set, ValidationSplit):
        raise InputError(f"validation accepts a ValidationSplit, got {type(val_set).__name__}")

    train_pairs, skipped_train = encode_split(train_set, vocab, cfg.model)
    val_pairs, skipped_val = encode_split(val_set, vocab, cfg.model)
    if not train_pairs or not val_pairs:
        raise InputError(f"need non-empty splits, got {len(train_pairs)} train / {len(val_pairs)} validation pairs")
    if isinstance(cfg.schedule, RoundSchedule):
        val_pairs = val_pairs[:cfg.schedule.val_samples]

    rng = np.random.default_rng(cfg.seed)
    if params is None:
        params = init_params(cfg.model, len(vocab), rng=rng)
    optimizer = AdamState.create(params.tensors(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon)
    sampler = _RoundSampler(len(train_pairs), rng)
    out_dir = Path(checkpoint_dir) if checkpoint_dir is not None else None

    logger.info(f"Training on {len(train_pairs)} pairs, validating on {len(val_pairs)} "
                f"({skipped_train + skipped_val} skipped), vocabulary of {len(vocab)}")

    result = TrainResult(best=None, skipped=skipped_train + skipped_val)
    for index in range(1, cfg.schedule.length + 1):
        if isinstance(cfg.schedule, EpochSchedule):
            order = rng.permutation(len(train_pairs))
        else:
            order = sampler.draw(cfg.schedule.samples_per_round)

        total = 0.0
        seen = 0
        try:
            for batch_ids in _batches(order, cfg.batch_size):
                batch = [train_pairs[i] for i in batch_ids]
                params, optimizer, batch_loss = train_step(params, optimizer, batch, cfg.clip_norm)
                total += batch_loss * len(batch)
                seen += len(batch)
            val_loss = validate(val_pairs, params, cfg.workers)
        except NumericalError as e:
            logger.error(f"Training diverged in step {index}: {e}")
            raise TrainingDivergenceError(f"non-finite value during step {index}: {e}",
                                          last_good=result.best) from e

        train_loss = total / seen
        result.history.append({'epoch': index, 'train_loss': train_loss, 'val_loss': val_loss})
        usage = snapshot()
        logger.info(f"Step {index}/{cfg.schedule.length}: train_loss={train_loss:.4f} "
                    f"val_loss={val_loss:.4f}" + (f" {usage.describe()}" if usage else ""))

        if result.best is None or val_loss < result.best.manifest.val_loss:
            manifest = CheckpointManifest.describe(
                params, vocab,
                schedule={'kind': 'epochs' if isinstance(cfg.schedule, EpochSchedule) else 'rounds',
                          'index': index},
                val_loss=val_loss, seed=cfg.seed, training=cfg.describe())
            result.best = Checkpoint(params=params, manifest=manifest, vocab=vocab)
            if out_dir is not None:
                save_checkpoint(params, manifest, out_dir, vocab)
        if out_dir is not None:
            out_dir.mkdir(parents=True, exist_ok=True)
            result.history_frame().to_csv(out_dir / HISTORY_FILE, index=False)

    result.final_params = params
    logger.info(f"Best validation loss {result.best.manifest.val_loss:.4f} "
                f"at step {result.best.manifest.schedule['index']}")
    return result
