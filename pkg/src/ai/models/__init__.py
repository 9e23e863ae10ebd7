from .params import ModelConfig, ModelParams, EncoderParams, DecoderParams, init_params
from .encoder import code_to_ids, encode
from .decoder import (BeamConfig, BeamHypothesis, beam_search, beam_search_decode, decoder_step,
                      greedy_decode, initial_state, teacher_forced_loss)
from .summarizer import CodeSummarizer
