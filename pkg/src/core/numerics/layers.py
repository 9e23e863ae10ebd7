"""Primitive operations with hand-written backward rules.

Forward values are computed in float64 and stored in the widest input float type.
"""
from typing import Sequence, Tuple

import numpy as np

from utils.errors import IndexRangeError, ShapeError
from .tensor import Tensor, make_output, record_op, result_dtype


def _f64(t: Tensor) -> np.ndarray:
    return t.data.astype(np.float64, copy=False)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    shifted = z - np.max(z)
    return shifted - np.log(np.sum(np.exp(shifted)))


def softmax(logits: np.ndarray) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    e = np.exp(z - np.max(z))
    return e / np.sum(e)


def embed_lookup(table: Tensor, ids: Sequence[int]) -> Tensor:
    """Rows of ``table`` selected by ``ids``"""
    if table.data.ndim != 2:
        raise ShapeError(f"embedding table must be 2-D, got {table.shape}")
    index = np.asarray(ids, dtype=np.int64).reshape(-1)
    if index.size == 0:
        raise ShapeError("embed_lookup needs at least one id")
    vocab_size = table.shape[0]
    if np.any(index < 0) or np.any(index >= vocab_size):
        bad = index[(index < 0) | (index >= vocab_size)][0]
        raise IndexRangeError(f"id {bad} outside embedding table of {vocab_size} rows")

    out = make_output(table.data[index], table.dtype, 'embed_lookup')

    def backward(grads):
        d_table = np.zeros(table.shape, dtype=np.float64)
        np.add.at(d_table, index, grads[0])
        return [d_table]

    record_op([table], [out], backward)
    return out


def conv1d(inputs: Tensor, filters: Tensor, bias: Tensor) -> Tensor:
    """Valid (unpadded) stride-1 convolution over the time axis"""
    if inputs.data.ndim != 2 or filters.data.ndim != 3 or bias.data.ndim != 1:
        raise ShapeError(f"conv1d expects [L x d_in], [w x d_in x d_out], [d_out]; "
                         f"got {inputs.shape}, {filters.shape}, {bias.shape}")
    length, d_in = inputs.shape
    width, f_in, d_out = filters.shape
    if f_in != d_in or bias.shape[0] != d_out:
        raise ShapeError(f"conv1d channel mismatch: input {inputs.shape}, filters {filters.shape}, bias {bias.shape}")
    if length < width:
        raise ShapeError(f"conv1d input length {length} shorter than filter width {width}")

    steps = length - width + 1
    x = _f64(inputs)
    # [steps, width * d_in] view of every window
    windows = np.lib.stride_tricks.sliding_window_view(x, (width, d_in)).reshape(steps, width * d_in)
    kernel = _f64(filters).reshape(width * d_in, d_out)
    values = windows @ kernel + _f64(bias)
    out = make_output(values, result_dtype(inputs, filters, bias), 'conv1d')

    def backward(grads):
        g = grads[0]
        d_kernel = windows.T @ g
        d_windows = (g @ kernel.T).reshape(steps, width, d_in)
        d_inputs = np.zeros((length, d_in), dtype=np.float64)
        for k in range(width):
            d_inputs[k:k + steps] += d_windows[:, k, :]
        return [d_inputs, d_kernel.reshape(width, d_in, d_out), g.sum(axis=0)]

    record_op([inputs, filters, bias], [out], backward)
    return out


def sum_over_time_pool(inputs: Tensor) -> Tensor:
    """Sum across the time axis; the output length does not depend on the input length"""
    if inputs.data.ndim != 2 or inputs.shape[0] < 1:
        raise ShapeError(f"sum_over_time_pool expects a non-empty [L x d] tensor, got {inputs.shape}")
    out = make_output(_f64(inputs).sum(axis=0), inputs.dtype, 'sum_over_time_pool')
    length = inputs.shape[0]

    def backward(grads):
        return [np.broadcast_to(grads[0], (length, grads[0].shape[0])).copy()]

    record_op([inputs], [out], backward)
    return out


def dense(inputs: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """inputs . weight + bias for a single vector"""
    if inputs.data.ndim != 1 or weight.data.ndim != 2 or bias.data.ndim != 1 \
            or weight.shape[0] != inputs.shape[0] or weight.shape[1] != bias.shape[0]:
        raise ShapeError(f"dense shape mismatch: input {inputs.shape}, weight {weight.shape}, bias {bias.shape}")
    x = _f64(inputs)
    w = _f64(weight)
    out = make_output(x @ w + _f64(bias), result_dtype(inputs, weight, bias), 'dense')

    def backward(grads):
        g = grads[0]
        return [w @ g, np.outer(x, g), g]

    record_op([inputs, weight, bias], [out], backward)
    return out


def lstm_cell_step(x: Tensor, h: Tensor, c: Tensor, weight: Tensor, bias: Tensor) -> Tuple[Tensor, Tensor]:
    """One LSTM step.

    ``weight`` is [(d_x + d_h) x 4 d_h] with gate blocks ordered input, forget,
    candidate, output; ``bias`` is [4 d_h].
    """
    if x.data.ndim != 1 or h.data.ndim != 1 or c.shape != h.shape:
        raise ShapeError(f"lstm_cell_step expects vectors, got x {x.shape}, h {h.shape}, c {c.shape}")
    d_x, d_h = x.shape[0], h.shape[0]
    if weight.shape != (d_x + d_h, 4 * d_h) or bias.shape != (4 * d_h,):
        raise ShapeError(f"lstm weight {weight.shape} / bias {bias.shape} do not fit d_x={d_x}, d_h={d_h}")

    xh = np.concatenate([_f64(x), _f64(h)])
    w = _f64(weight)
    z = xh @ w + _f64(bias)
    i = _sigmoid(z[:d_h])
    f = _sigmoid(z[d_h:2 * d_h])
    g = np.tanh(z[2 * d_h:3 * d_h])
    o = _sigmoid(z[3 * d_h:])
    c_prev = _f64(c)
    c_next = f * c_prev + i * g
    tanh_c = np.tanh(c_next)
    h_next = o * tanh_c

    dtype = result_dtype(x, h, c, weight, bias)
    h_out = make_output(h_next, dtype, 'lstm_cell_step')
    c_out = make_output(c_next, dtype, 'lstm_cell_step')

    def backward(grads):
        dh, dc = grads
        d_o = dh * tanh_c
        dc_total = dc + dh * o * (1.0 - tanh_c ** 2)
        d_i = dc_total * g
        d_g = dc_total * i
        d_f = dc_total * c_prev
        dz = np.concatenate([
            d_i * i * (1.0 - i),
            d_f * f * (1.0 - f),
            d_g * (1.0 - g ** 2),
            d_o * o * (1.0 - o),
        ])
        d_xh = w @ dz
        return [d_xh[:d_x], d_xh[d_x:], dc_total * f, np.outer(xh, dz), dz]

    record_op([x, h, c, weight, bias], [h_out, c_out], backward)
    return h_out, c_out


def softmax_cross_entropy(logits: Tensor, target: int) -> Tensor:
    """-log softmax(logits)[target] as a scalar tensor"""
    if logits.data.ndim != 1:
        raise ShapeError(f"softmax_cross_entropy expects a vector of logits, got {logits.shape}")
    vocab_size = logits.shape[0]
    if not 0 <= int(target) < vocab_size:
        raise IndexRangeError(f"target {target} outside {vocab_size} classes")
    target = int(target)
    log_p = log_softmax(logits.data)
    out = make_output(np.array(-log_p[target]), logits.dtype, 'softmax_cross_entropy')

    def backward(grads):
        d_logits = np.exp(log_p)
        d_logits[target] -= 1.0
        return [d_logits * grads[0]]

    record_op([logits], [out], backward)
    return out


def relu(inputs: Tensor) -> Tensor:
    x = _f64(inputs)
    mask = x > 0
    out = make_output(np.where(mask, x, 0.0), inputs.dtype, 'relu')

    def backward(grads):
        return [grads[0] * mask]

    record_op([inputs], [out], backward)
    return out


def tanh(inputs: Tensor) -> Tensor:
    y = np.tanh(_f64(inputs))
    out = make_output(y, inputs.dtype, 'tanh')

    def backward(grads):
        return [grads[0] * (1.0 - y * y)]

    record_op([inputs], [out], backward)
    return out


def reshape(inputs: Tensor, shape: Tuple[int, ...]) -> Tensor:
    if int(np.prod(shape)) != inputs.size:
        raise ShapeError(f"cannot reshape {inputs.shape} to {shape}")
    out = make_output(inputs.data.reshape(shape), inputs.dtype, 'reshape')
    original = inputs.shape

    def backward(grads):
        return [grads[0].reshape(original)]

    record_op([inputs], [out], backward)
    return out


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ShapeError(f"add shape mismatch: {a.shape} vs {b.shape}")
    out = make_output(_f64(a) + _f64(b), result_dtype(a, b), 'add')

    def backward(grads):
        return [grads[0], grads[0]]

    record_op([a, b], [out], backward)
    return out


def multiply(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ShapeError(f"multiply shape mismatch: {a.shape} vs {b.shape}")
    x, y = _f64(a), _f64(b)
    out = make_output(x * y, result_dtype(a, b), 'multiply')

    def backward(grads):
        return [grads[0] * y, grads[0] * x]

    record_op([a, b], [out], backward)
    return out


def reduce_sum(inputs: Tensor) -> Tensor:
    out = make_output(np.array(_f64(inputs).sum()), inputs.dtype, 'reduce_sum')
    shape = inputs.shape

    def backward(grads):
        return [np.full(shape, float(grads[0]), dtype=np.float64)]

    record_op([inputs], [out], backward)
    return out


def mean(scalars: Sequence[Tensor]) -> Tensor:
    """Arithmetic mean of scalar tensors, summed in the given order"""
    if not scalars:
        raise ShapeError("mean of an empty sequence")
    if any(s.size != 1 for s in scalars):
        raise ShapeError("mean expects scalar tensors")
    count = len(scalars)
    total = 0.0
    for s in scalars:
        total += float(s.data.reshape(-1)[0])
    out = make_output(np.array(total / count), result_dtype(*scalars), 'mean')

    def backward(grads):
        share = float(grads[0]) / count
        return [np.full(s.shape, share, dtype=np.float64) for s in scalars]

    record_op(list(scalars), [out], backward)
    return out
