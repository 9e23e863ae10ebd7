import numpy as np
import pytest

from ai.models.encoder import code_to_ids, encode
from ai.models.params import PAD_BYTE, EncoderParams, ModelConfig, init_params
from core.numerics import layers
from core.numerics.gradcheck import check_gradients
from core.numerics.tensor import Tensor
from utils.errors import InputError

GRAD_CONFIG = ModelConfig(char_embedding_dim=3, conv_widths=(3, 2), conv_filters=(4, 3), hidden_size=5,
                          init_scale=0.5)


def _encoder_view(tensors, n_layers=2) -> EncoderParams:
    return EncoderParams(
        embedding=tensors['encoder.embedding'],
        conv_filters=tuple(tensors[f'encoder.conv{k}.filters'] for k in range(1, n_layers + 1)),
        conv_biases=tuple(tensors[f'encoder.conv{k}.bias'] for k in range(1, n_layers + 1)),
        dense_weight=tensors['encoder.dense.weight'],
        dense_bias=tensors['encoder.dense.bias'],
    )


class TestCodeToIds:
    def test_ascii_bytes_padded(self):
        assert code_to_ids('ab', min_length=5) == [97, 98, PAD_BYTE, PAD_BYTE, PAD_BYTE]

    def test_utf8_bytes(self):
        assert code_to_ids('é', min_length=1) == [0xC3, 0xA9]

    def test_long_code_not_truncated(self):
        assert len(code_to_ids('x' * 4096)) == 4096

    def test_empty_code_rejected(self):
        with pytest.raises(InputError):
            code_to_ids('')

    def test_receptive_field(self):
        assert ModelConfig().receptive_field == 5
        assert GRAD_CONFIG.receptive_field == 4


class TestEncode:
    def test_output_dimension_independent_of_length(self):
        config = ModelConfig()
        params = init_params(config, vocab_size=80, seed=0).encoder
        short = encode(code_to_ids('x = 1;' * 17, config.receptive_field)[:100], params)
        long = encode(code_to_ids('int y = 2;' * 100, config.receptive_field)[:1000], params)
        assert short.shape == long.shape == (1024,)

    def test_zero_parameters_give_squashed_dense_bias(self, tiny_model_config):
        params = init_params(tiny_model_config, vocab_size=10, seed=0)
        bias = np.arange(tiny_model_config.hidden_size, dtype=np.float32)
        zeros = {name: Tensor(np.zeros(params[name].shape, dtype=np.float32)) for name in params
                 if name.startswith('encoder.')}
        zeros['encoder.dense.bias'] = Tensor(bias)
        thought = encode(code_to_ids('return x;'), params.replace(zeros).encoder)
        np.testing.assert_allclose(thought.data, np.tanh(bias.astype(np.float64)), rtol=1e-6)

    def test_thought_stays_in_hidden_state_range(self, tiny_model_config):
        params = init_params(tiny_model_config, vocab_size=10, seed=0)
        huge = params['encoder.dense.weight'].numpy() * 1e4
        params = params.replace({'encoder.dense.weight': Tensor(huge)})
        thought = encode(code_to_ids('public int getPageSize() { return this.pageSize; }' * 20), params.encoder)
        assert np.all(np.abs(thought.data) <= 1.0)

    def test_initial_thoughts_are_order_one_and_distinct(self):
        config = ModelConfig(char_embedding_dim=16, conv_widths=(3, 3), conv_filters=(32, 64), hidden_size=256)
        params = init_params(config, vocab_size=10, seed=7).encoder
        getter = encode(code_to_ids('public int getPageSize() { return this.pageSize; }'), params).data
        setter = encode(code_to_ids('public void setNodeIndex(int value) { this.nodeIndex = value; }'), params).data
        for thought in (getter, setter):
            rms = float(np.sqrt(np.mean(thought.astype(np.float64) ** 2)))
            assert 0.05 < rms < 0.95
        assert float(np.sqrt(np.mean((getter.astype(np.float64) - setter) ** 2))) > 0.01

    def test_encoder_weights_scaled_by_fan_in(self):
        config = ModelConfig(char_embedding_dim=16, conv_widths=(3, 3), conv_filters=(32, 64), hidden_size=256)
        params = init_params(config, vocab_size=10, seed=0)
        assert np.abs(params['encoder.conv1.filters'].data).max() <= np.sqrt(3.0 / 48) + 1e-6
        assert np.abs(params['encoder.conv2.filters'].data).max() <= np.sqrt(3.0 / 96) + 1e-6
        assert np.abs(params['encoder.dense.weight'].data).max() <= np.sqrt(3.0 / 64) + 1e-6
        assert np.abs(params['encoder.conv2.filters'].data).max() > config.init_scale
        assert np.abs(params['decoder.lstm1.weight'].data).max() <= config.init_scale

    def test_accepts_arbitrary_bytes(self, tiny_model_config):
        params = init_params(tiny_model_config, vocab_size=10, seed=0).encoder
        junk = bytes(range(256)).decode('latin-1') + '}}}{{ def int class ;;'
        thought = encode(code_to_ids(junk), params)
        assert thought.shape == (tiny_model_config.hidden_size,)
        assert np.all(np.isfinite(thought.data))

    def test_shared_embedding_rows(self, tiny_model_config):
        """Swapping a byte for an unused one with an identical row leaves the output unchanged"""
        params = init_params(tiny_model_config, vocab_size=10, seed=3)
        table = params['encoder.embedding'].numpy()
        table[ord('q')] = table[ord('a')]
        params = params.replace({'encoder.embedding': Tensor(table)})
        code = 'int a = max(a, b);'
        original = encode(code_to_ids(code), params.encoder)
        swapped = encode(code_to_ids(code.replace('a', 'q')), params.encoder)
        np.testing.assert_array_equal(original.data, swapped.data)

    def test_deterministic(self, tiny_model_config):
        params = init_params(tiny_model_config, vocab_size=10, seed=0).encoder
        ids = code_to_ids('while (true) {}')
        np.testing.assert_array_equal(encode(ids, params).data, encode(ids, params).data)


class TestEncoderGradients:
    def test_matches_finite_differences(self, relu_margin):
        checked = 0
        seed = 0
        while checked < 20:
            seed += 1
            assert seed < 500, "could not draw enough inputs away from the ReLU kink"
            rng = np.random.default_rng(seed)
            params = init_params(GRAD_CONFIG, vocab_size=4, dtype=np.float64, rng=rng)
            tensors = {name: params[name] for name in params if name.startswith('encoder.')}
            length = int(rng.integers(4, 21))
            ids = [int(b) for b in rng.integers(0, 257, size=length)]
            if relu_margin(ids, _encoder_view(tensors)) < 1e-3:
                continue
            weights = rng.normal(size=GRAD_CONFIG.hidden_size)

            def fn(p):
                thought = encode(ids, _encoder_view(p))
                return layers.reduce_sum(layers.multiply(thought, Tensor(weights, dtype=np.float64)))

            errors = check_gradients(fn, tensors)
            assert max(errors.values()) < 1e-4, errors
            checked += 1
