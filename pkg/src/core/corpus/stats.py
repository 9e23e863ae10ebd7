"""Corpus length distributions, optionally rendered as PNG histograms."""
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Union

import numpy as np
import pandas as pd

from core.text.tokenize import tokenize_comment
from .pipeline import DatasetRecord

logger = logging.getLogger(__name__)

COMMENT_BINS = [0, 5, 10, 15, 20, 25, 30, 40, 50, np.inf]
CODE_BINS = [0, 100, 250, 500, 1000, 2000, 4096, np.inf]


def records_frame(records: Iterable[DatasetRecord]) -> pd.DataFrame:
    rows = [{
        'language': r.language,
        'comment_tokens': len(tokenize_comment(r.comment)),
        'code_chars': len(r.code),
    } for r in records]
    return pd.DataFrame(rows, columns=['language', 'comment_tokens', 'code_chars'])


def _histogram(values: pd.Series, bins: List[float]) -> Dict:
    counts, edges = np.histogram(values.to_numpy(dtype=np.float64), bins=bins)
    labels = [f"{int(lo)}-{'inf' if np.isinf(hi) else int(hi) - 1}" for lo, hi in zip(edges[:-1], edges[1:])]
    return dict(zip(labels, (int(c) for c in counts)))


def _summary(values: pd.Series) -> Dict[str, float]:
    if values.empty:
        return {'count': 0}
    return {
        'count': int(values.count()),
        'mean': float(values.mean()),
        'median': float(values.median()),
        'max': int(values.max()),
    }


def length_histograms(records: Iterable[DatasetRecord]) -> Dict:
    """Comment token-length and code character-length distributions, overall and per language"""
    frame = records_frame(records)
    report = {
        'all': {
            'comment_tokens': {'histogram': _histogram(frame['comment_tokens'], COMMENT_BINS),
                               'summary': _summary(frame['comment_tokens'])},
            'code_chars': {'histogram': _histogram(frame['code_chars'], CODE_BINS),
                           'summary': _summary(frame['code_chars'])},
        },
        'per_language': {},
    }
    for language, group in frame.groupby('language', sort=True):
        report['per_language'][language] = {
            'comment_tokens': _histogram(group['comment_tokens'], COMMENT_BINS),
            'code_chars': _histogram(group['code_chars'], CODE_BINS),
        }
    return report


def plot_length_histograms(records: Iterable[DatasetRecord], out_dir: Union[str, Path]) -> List[Path]:
    """Write comment_lengths.png and code_lengths.png into ``out_dir``"""
    import matplotlib
    matplotlib.use('Agg')
    import matplotlib.pyplot as plt

    frame = records_frame(records)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for column, title, filename in (
            ('comment_tokens', 'Comment length (tokens)', 'comment_lengths.png'),
            ('code_chars', 'Code length (characters)', 'code_lengths.png')):
        fig, ax = plt.subplots(figsize=(6, 4))
        for language, group in frame.groupby('language', sort=True):
            ax.hist(group[column], bins=30, alpha=0.6, label=language)
        ax.set_xlabel(title)
        ax.set_ylabel('Samples')
        if frame['language'].nunique() > 1:
            ax.legend()
        fig.tight_layout()
        path = out_dir / filename
        fig.savefig(path)
        plt.close(fig)
        written.append(path)
        logger.info(f"Wrote {path}")
    return written
