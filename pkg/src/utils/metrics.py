"""Evaluation metrics: unsmoothed BLEU-4 and comment entropy."""
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import InputError
from .logger import get_logger

logger = get_logger(__name__)

MAX_ORDER = 4
UNIFORM_WEIGHTS = (0.25, 0.25, 0.25, 0.25)

Tokens = Sequence[str]


@dataclass
class BleuReport:
    """Per-sentence BLEU-4 components"""
    p_n: List[float]
    w_n: Tuple[float, ...]
    c: int
    r: int
    B: float
    score: float


@dataclass
class EntropyReport:
    """Comment entropy in bits, E = -w * sum(p log2 p)"""
    E: float
    w: float
    V: int
    p: Dict[str, float] = field(default_factory=dict)


def _ngrams(tokens: Tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def modified_precision(pred: Tokens, ref: Tokens, n: int) -> Fraction:
    """Clipped n-gram matches over prediction n-grams; 0/0 is 0"""
    if not 1 <= n <= MAX_ORDER:
        raise InputError(f"n-gram order must be in 1..{MAX_ORDER}, got {n}")
    pred_counts = _ngrams(pred, n)
    total = sum(pred_counts.values())
    if total == 0:
        return Fraction(0)
    ref_counts = _ngrams(ref, n)
    clipped = sum(min(count, ref_counts[gram]) for gram, count in pred_counts.items())
    return Fraction(clipped, total)


def brevity_penalty(c: int, r: int) -> float:
    if c > r:
        return 1.0
    if c == 0:
        return 0.0
    return math.exp(1.0 - r / c)


def bleu_report(pred: Tokens, ref: Tokens, weights: Tuple[float, ...] = UNIFORM_WEIGHTS) -> BleuReport:
    precisions = [modified_precision(pred, ref, n) for n in range(1, MAX_ORDER + 1)]
    c, r = len(pred), len(ref)
    penalty = brevity_penalty(c, r)
    if any(p == 0 for p in precisions) or penalty == 0.0:
        score = 0.0
    else:
        score = penalty * math.exp(sum(w * math.log(p) for w, p in zip(weights, precisions)))
    return BleuReport(p_n=[float(p) for p in precisions], w_n=tuple(weights), c=c, r=r, B=penalty, score=score)


def bleu4(pred: Tokens, ref: Tokens) -> float:
    """Unsmoothed BLEU-4: any zero precision zeroes the score"""
    return bleu_report(pred, ref).score


def corpus_bleu(pairs: Sequence[Tuple[Tokens, Tokens]], mode: str = 'sentence') -> float:
    """BLEU x 100, either the mean of sentence scores or pooled corpus-level counts"""
    if not pairs:
        raise InputError("corpus_bleu needs at least one pair")
    if mode == 'sentence':
        return 100.0 * sum(bleu4(pred, ref) for pred, ref in pairs) / len(pairs)
    if mode != 'corpus':
        raise InputError(f"unknown BLEU mode {mode!r}")

    log_sum = 0.0
    for n in range(1, MAX_ORDER + 1):
        matched = total = 0
        for pred, ref in pairs:
            pred_counts = _ngrams(pred, n)
            ref_counts = _ngrams(ref, n)
            matched += sum(min(k, ref_counts[g]) for g, k in pred_counts.items())
            total += sum(pred_counts.values())
        if matched == 0:
            return 0.0
        log_sum += UNIFORM_WEIGHTS[n - 1] * math.log(matched / total)
    c = sum(len(pred) for pred, _ in pairs)
    r = sum(len(ref) for _, ref in pairs)
    return 100.0 * brevity_penalty(c, r) * math.exp(log_sum)


def comment_entropy(comments: Sequence[Tokens]) -> EntropyReport:
    """Average comment length times the token-distribution entropy in bits"""
    counts: Counter = Counter()
    for tokens in comments:
        counts.update(tokens)
    total = sum(counts.values())
    if total == 0:
        raise InputError("comment_entropy needs at least one non-empty comment")
    average_length = total / len(comments)
    probabilities = {token: count / total for token, count in counts.items()}
    token_entropy = -sum(p * math.log2(p) for p in probabilities.values())
    return EntropyReport(E=average_length * max(token_entropy, 0.0), w=average_length,
                         V=len(counts), p=probabilities)


class SummaryEvaluator:
    """Scores predicted comments against references"""

    def __init__(self, mode: str = 'sentence', workers: int = 1):
        if mode not in ('sentence', 'corpus'):
            raise InputError(f"unknown BLEU mode {mode!r}")
        self.mode = mode
        self.workers = max(1, workers)

    def _reports(self, pairs: Sequence[Tuple[Tokens, Tokens]]) -> List[BleuReport]:
        if self.workers == 1:
            return [bleu_report(pred, ref) for pred, ref in pairs]
        with ThreadPoolExecutor(max_workers=self.workers) as executor:
            return list(executor.map(lambda pair: bleu_report(*pair), pairs))

    def _score(self, pairs) -> Dict:
        reports = self._reports(pairs)
        n = len(reports)
        return {
            'score': corpus_bleu(pairs, self.mode),
            'n_pairs': n,
            'mean_p_n': [sum(rep.p_n[k] for rep in reports) / n for k in range(MAX_ORDER)],
            'mean_B': sum(rep.B for rep in reports) / n,
            'entropy_pred': _entropy_or_zero([pred for pred, _ in pairs]),
            'entropy_ref': _entropy_or_zero([ref for _, ref in pairs]),
        }

    def evaluate(self, predictions: Sequence[Tokens], references: Sequence[Tokens],
                 languages: Optional[Sequence[str]] = None) -> Dict:
        """Metrics report; adds a per-language breakdown when languages are given"""
        if len(predictions) != len(references):
            raise InputError(f"{len(predictions)} predictions but {len(references)} references")
        pairs = list(zip(predictions, references))
        if not pairs:
            raise InputError("nothing to evaluate")
        report = self._score(pairs)

        if languages is not None:
            by_language: Dict[str, List] = {}
            for language, pair in zip(languages, pairs):
                by_language.setdefault(language, []).append(pair)
            report['per_language'] = {
                language: {key: value for key, value in self._score(group).items()
                           if key in ('score', 'n_pairs', 'entropy_ref')}
                for language, group in sorted(by_language.items())
            }
        logger.info(f"Evaluated {report['n_pairs']} pairs: BLEU {report['score']:.2f}")
        return report


def _entropy_or_zero(comments: Sequence[Tokens]) -> float:
    try:
        return comment_entropy(comments).E
    except InputError:
        return 0.0


def evaluate_predictions(predictions: Sequence[Tokens], references: Sequence[Tokens],
                         languages: Optional[Sequence[str]] = None, mode: str = 'sentence',
                         workers: int = 1) -> Dict:
    return SummaryEvaluator(mode, workers).evaluate(predictions, references, languages)
