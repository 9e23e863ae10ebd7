"""Dense tensors and a define-by-run gradient tape.

A ``Tensor`` is an immutable float array. While a ``GradientTape`` is active on the
current thread, every primitive in ``core.numerics.layers`` appends a record of its
inputs, outputs and backward rule to it. ``backward`` replays the records in reverse
and returns exact gradients accumulated in float64.
"""
import threading
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from utils.errors import NumericalError, TapeUsageError

DEFAULT_DTYPE = np.float32

_local = threading.local()


class Tensor:
    """Immutable n-dimensional float array"""

    __slots__ = ('data', 'name', '__weakref__')

    def __init__(self, data, name: Optional[str] = None, dtype=None):
        if isinstance(data, Tensor):
            data = data.data
        if dtype is None:
            dtype = data.dtype if isinstance(data, np.ndarray) and data.dtype in (np.float32, np.float64) \
                else DEFAULT_DTYPE
        array = np.array(data, dtype=dtype, copy=True)
        if not np.all(np.isfinite(array)):
            raise NumericalError(f"Non-finite value in tensor {name or ''}".strip())
        array.setflags(write=False)
        self.data = array
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return int(self.data.size)

    def numpy(self) -> np.ndarray:
        """Writable copy of the underlying values"""
        return np.array(self.data)

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float('nan')

    @classmethod
    def zeros(cls, shape, dtype=DEFAULT_DTYPE, name: Optional[str] = None) -> 'Tensor':
        return cls(np.zeros(shape, dtype=dtype), name=name)

    def __repr__(self):
        label = f"{self.name}, " if self.name else ""
        return f"Tensor({label}shape={self.shape}, dtype={self.dtype})"


BackwardFn = Callable[[List[np.ndarray]], Sequence[Optional[np.ndarray]]]


@dataclass
class _Record:
    inputs: Tuple[Tensor, ...]
    outputs: Tuple[Tensor, ...]
    backward: BackwardFn


class GradientTape:
    """Ordered record of primitive operations executed inside a ``with`` block"""

    def __init__(self):
        self._records: List[_Record] = []
        self._produced: Dict[int, Tensor] = {}

    def __enter__(self) -> 'GradientTape':
        stack = getattr(_local, 'stack', None)
        if stack is None:
            stack = _local.stack = []
        stack.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _local.stack.pop()
        return False

    def __len__(self):
        return len(self._records)

    def record(self, inputs: Sequence[Tensor], outputs: Sequence[Tensor], backward: BackwardFn) -> None:
        self._records.append(_Record(tuple(inputs), tuple(outputs), backward))
        for out in outputs:
            self._produced[id(out)] = out

    def recorded(self, tensor: Tensor) -> bool:
        return self._produced.get(id(tensor)) is tensor

    def gradient(self, loss: Tensor, sources: Mapping[str, Tensor]) -> Dict[str, np.ndarray]:
        """Gradients of ``loss`` for each named source; unused sources get zeros"""
        grads = backward(self, loss)
        result = {}
        for name, tensor in sources.items():
            grad = grads.get(id(tensor))
            result[name] = np.zeros(tensor.shape, dtype=np.float64) if grad is None else grad
        return result


def active_tape() -> Optional[GradientTape]:
    stack = getattr(_local, 'stack', None)
    return stack[-1] if stack else None


def record_op(inputs: Sequence[Tensor], outputs: Sequence[Tensor], backward_fn: BackwardFn) -> None:
    """Record a primitive on the active tape, if any"""
    tape = active_tape()
    if tape is not None:
        tape.record(inputs, outputs, backward_fn)


def result_dtype(*tensors: Tensor):
    """Widest float type among the inputs"""
    return np.float64 if any(t.dtype == np.float64 for t in tensors) else np.float32


def make_output(values: np.ndarray, dtype, op: str) -> Tensor:
    if not np.all(np.isfinite(values)):
        raise NumericalError(f"{op} produced a non-finite value")
    return Tensor(values, dtype=dtype)


def backward(tape: GradientTape, loss: Tensor) -> Dict[int, np.ndarray]:
    """Reverse-mode pass; returns gradients keyed by tensor identity"""
    if not isinstance(loss, Tensor) or not tape.recorded(loss):
        raise TapeUsageError("loss was not produced by an operation recorded on this tape")
    if loss.size != 1:
        raise TapeUsageError(f"loss must be a scalar, got shape {loss.shape}")

    grads: Dict[int, np.ndarray] = {id(loss): np.ones(loss.shape, dtype=np.float64)}
    for rec in reversed(tape._records):
        upstream = [grads.get(id(out)) for out in rec.outputs]
        if all(g is None for g in upstream):
            continue
        upstream = [np.zeros(out.shape, dtype=np.float64) if g is None else g
                    for g, out in zip(upstream, rec.outputs)]
        input_grads = rec.backward(upstream)
        for tensor, grad in zip(rec.inputs, input_grads):
            if grad is None:
                continue
            key = id(tensor)
            if key in grads:
                grads[key] = grads[key] + grad
            else:
                grads[key] = np.asarray(grad, dtype=np.float64)
    return grads
