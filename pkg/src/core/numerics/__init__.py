from .tensor import Tensor, GradientTape, backward, active_tape
from .layers import (
    embed_lookup, conv1d, sum_over_time_pool, dense, lstm_cell_step,
    softmax_cross_entropy, relu, reshape, add, multiply, reduce_sum, mean,
    softmax, log_softmax,
)
from .optim import AdamState, adam_step, clip_by_global_norm, global_norm
