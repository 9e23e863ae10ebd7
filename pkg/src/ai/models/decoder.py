"""LSTM comment decoder: single steps, teacher-forced loss and beam search.

The decoder starts from the thought vector (layer-1 hidden state) and the START
token. Beam search keeps the N best extensions of the live hypotheses at every
step; hypotheses that emit END, or reach the length limit, move to a finished
pool and are never extended again. Scores are raw cumulative log-probabilities.
"""
import logging
from dataclasses import dataclass
from typing import Callable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from core.numerics import layers
from core.numerics.tensor import Tensor
from core.text.vocab import Vocabulary
from utils.errors import ConfigError, IndexRangeError, InputError, ShapeError
from .params import DecoderParams

logger = logging.getLogger(__name__)

START_ID = Vocabulary.start_id
END_ID = Vocabulary.end_id

# per-layer (h, c)
DecoderState = Tuple[Tuple[Tensor, Tensor], ...]


@dataclass(frozen=True)
class BeamConfig:
    width: int = 2
    max_length: int = 50

    def __post_init__(self):
        if self.width < 1:
            raise ConfigError(f"beam width must be >= 1, got {self.width}")
        if self.max_length < 1:
            raise ConfigError(f"max output length must be >= 1, got {self.max_length}")

    @classmethod
    def from_settings(cls, section: Mapping) -> 'BeamConfig':
        return cls(width=int(section.get('width', cls.width)),
                   max_length=int(section.get('max_length', cls.max_length)))


@dataclass(frozen=True)
class BeamHypothesis:
    """Generated ids (START excluded) with their cumulative log-probability"""
    tokens: Tuple[int, ...]
    log_prob: float
    state: DecoderState
    finished: bool = False

    def sort_key(self):
        return (-self.log_prob, self.tokens)


def initial_state(thought: Tensor, params: DecoderParams) -> DecoderState:
    hidden = params.hidden_size
    if thought.shape != (hidden,):
        raise ShapeError(f"thought vector {thought.shape} does not match decoder hidden size {hidden}")
    zeros = Tensor.zeros((hidden,), dtype=thought.dtype)
    state = [(thought, zeros)]
    for _ in params.layers[1:]:
        state.append((zeros, zeros))
    return tuple(state)


def step_logits(prev_token: int, state: DecoderState, params: DecoderParams) -> Tuple[Tensor, DecoderState]:
    """Taped forward step: logits over the vocabulary and the next state"""
    if not 0 <= int(prev_token) < params.vocab_size:
        raise IndexRangeError(f"token id {prev_token} outside vocabulary of {params.vocab_size}")
    x = layers.reshape(layers.embed_lookup(params.embedding, [int(prev_token)]), (params.hidden_size,))
    new_state = []
    for layer, (h, c) in zip(params.layers, state):
        h, c = layers.lstm_cell_step(x, h, c, layer.weight, layer.bias)
        new_state.append((h, c))
        x = h
    logits = layers.dense(x, params.output_weight, params.output_bias)
    return logits, tuple(new_state)


def step_log_probs(prev_token: int, state: DecoderState, params: DecoderParams) -> Tuple[np.ndarray, DecoderState]:
    logits, new_state = step_logits(prev_token, state, params)
    return layers.log_softmax(logits.data), new_state


def decoder_step(prev_token: int, state: DecoderState, params: DecoderParams) -> Tuple[np.ndarray, DecoderState]:
    """Next-token probability distribution (float64) and the next state"""
    logits, new_state = step_logits(prev_token, state, params)
    return layers.softmax(logits.data), new_state


def teacher_forced_loss(thought: Tensor, target: Sequence[int], params: DecoderParams) -> Tensor:
    """Mean cross-entropy of predicting target[t+1] from the true target[t]"""
    if len(target) < 2:
        raise InputError(f"target needs at least START and END, got {len(target)} ids")
    state = initial_state(thought, params)
    losses = []
    for current, following in zip(target[:-1], target[1:]):
        logits, state = step_logits(current, state, params)
        losses.append(layers.softmax_cross_entropy(logits, following))
    return layers.mean(losses)


def _top_extensions(log_probs: np.ndarray, base: float, width: int) -> List[Tuple[float, int]]:
    """The ``width`` best (score, token) pairs; equal scores prefer the lower id"""
    if width < log_probs.shape[0]:
        threshold = np.partition(log_probs, -width)[-width]
        candidates = np.flatnonzero(log_probs >= threshold)
    else:
        candidates = np.arange(log_probs.shape[0])
    ranked = sorted(((base + float(log_probs[t]), int(t)) for t in candidates),
                    key=lambda item: (-item[0], item[1]))
    return ranked[:width]


StepCallback = Callable[[int, List[BeamHypothesis]], None]


def beam_search(thought: Tensor, params: DecoderParams, cfg: BeamConfig = BeamConfig(),
                on_step: Optional[StepCallback] = None) -> List[BeamHypothesis]:
    """Finished hypotheses, best first"""
    live = [BeamHypothesis(tokens=(), log_prob=0.0, state=initial_state(thought, params))]
    finished: List[BeamHypothesis] = []

    for step in range(1, cfg.max_length + 1):
        candidates = []
        for hyp in live:
            prev = hyp.tokens[-1] if hyp.tokens else START_ID
            log_probs, state = step_log_probs(prev, hyp.state, params)
            for score, token in _top_extensions(log_probs, hyp.log_prob, cfg.width):
                candidates.append(BeamHypothesis(hyp.tokens + (token,), score, state))
        candidates.sort(key=BeamHypothesis.sort_key)

        survivors = []
        for hyp in candidates[:cfg.width]:
            done = hyp.tokens[-1] == END_ID or step == cfg.max_length
            survivors.append(BeamHypothesis(hyp.tokens, hyp.log_prob, hyp.state, finished=done))
        if on_step is not None:
            on_step(step, survivors)

        finished.extend(h for h in survivors if h.finished)
        live = [h for h in survivors if not h.finished]
        if not live:
            break
        # extending a live hypothesis can only lower its score
        best_finished = max((h.log_prob for h in finished), default=None)
        if best_finished is not None and best_finished >= live[0].log_prob:
            logger.debug(f"Beam search stopped early at step {step}")
            break

    finished.sort(key=BeamHypothesis.sort_key)
    return finished


def beam_search_decode(thought: Tensor, params: DecoderParams, cfg: BeamConfig = BeamConfig()) -> List[int]:
    """Best-scoring finished hypothesis' ids (START excluded, END kept if emitted)"""
    return list(beam_search(thought, params, cfg)[0].tokens)


def greedy_decode(thought: Tensor, params: DecoderParams, max_length: int = 50) -> BeamHypothesis:
    return beam_search(thought, params, BeamConfig(width=1, max_length=max_length))[0]
