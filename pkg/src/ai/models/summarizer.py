import logging
from typing import List

from core.numerics.tensor import Tensor
from core.text.codec import decode_prediction, encode_target, tokenize_comment
from core.text.vocab import Vocabulary
from utils.errors import CompatibilityError
from .decoder import BeamConfig, beam_search_decode, teacher_forced_loss
from .encoder import code_to_ids, encode
from .params import ModelParams

logger = logging.getLogger(__name__)


class CodeSummarizer:
    """Code in, one-sentence comment out"""

    def __init__(self, params: ModelParams, vocab: Vocabulary):
        if params.vocab_size != len(vocab):
            raise CompatibilityError(
                f"model was built for {params.vocab_size} vocabulary elements, vocabulary has {len(vocab)}")
        self.params = params
        self.vocab = vocab
        self.config = params.config

    def code_ids(self, code: str) -> List[int]:
        return code_to_ids(code, self.config.receptive_field)

    def thought(self, code: str) -> Tensor:
        return encode(self.code_ids(code), self.params.encoder)

    def target(self, comment: str) -> List[int]:
        return encode_target(tokenize_comment(comment), self.vocab)

    def loss(self, code: str, comment: str) -> float:
        """Mean per-token cross-entropy of ``comment`` given ``code``, in nats"""
        return teacher_forced_loss(self.thought(code), self.target(comment), self.params.decoder).item()

    def predict_ids(self, code: str, beam: BeamConfig = BeamConfig()) -> List[int]:
        return beam_search_decode(self.thought(code), self.params.decoder, beam)

    def predict(self, code: str, beam: BeamConfig = BeamConfig()) -> str:
        return decode_prediction(self.predict_ids(code, beam), self.vocab)
