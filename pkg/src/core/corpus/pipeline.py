"""Code/comment pair ingestion: first-sentence extraction, filtering, dedup and splits."""
import json
import logging
import re
from collections import Counter
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from sklearn.model_selection import train_test_split

from core.text.tokenize import tokenize_comment
from utils.errors import InputError

logger = logging.getLogger(__name__)

SENTENCE_BREAKS = ('\n\n', ':param', '@param', '@return', '@rtype')

BLACKLIST = (
    'created by', 'thanks to', 'precondition', 'copyright', 'do not remove',
    ' bug ', ' fix ', '?', '->', '>>>', '(self,',
)

EXTENSION_LANGUAGES = {
    '.java': 'java',
    '.cpp': 'cpp',
    '.cc': 'cpp',
    '.py': 'python',
}

_SCHEME_RE = re.compile(r'^fixed-test:(\d+)$')


@dataclass(frozen=True)
class DatasetRecord:
    """One code/comment pair"""
    code: str
    comment: str
    language: str = 'unknown'
    origin: str = ''

    @classmethod
    def from_dict(cls, data: Mapping) -> 'DatasetRecord':
        if 'code' not in data or 'comment' not in data:
            raise InputError("record needs 'code' and 'comment' fields")
        return cls(
            code=str(data['code']),
            comment=str(data['comment']),
            language=str(data.get('language') or 'unknown'),
            origin=str(data.get('origin') or ''),
        )

    def to_dict(self) -> Dict[str, str]:
        return asdict(self)


class RejectRule(str, Enum):
    BLACKLIST = 'blacklist'
    COMMENT_TOO_SHORT = 'comment-too-short'
    COMMENT_TOO_LONG = 'comment-too-long'
    CODE_TOO_SHORT = 'code-too-short'
    CODE_TOO_LONG = 'code-too-long'
    DUPLICATE = 'duplicate'


@dataclass
class FilterReport:
    """Records rejected per rule and records passed"""
    rejected: Dict[str, int] = field(default_factory=lambda: {rule.value: 0 for rule in RejectRule})
    passed: int = 0

    @property
    def total(self) -> int:
        return self.passed + sum(self.rejected.values())

    def reject(self, rule: RejectRule) -> None:
        self.rejected[rule.value] += 1

    def to_dict(self) -> Dict:
        return {'rejected': dict(self.rejected), 'passed': self.passed, 'total': self.total}


@dataclass(frozen=True)
class CorpusFilterConfig:
    min_comment_tokens: int = 3
    max_comment_tokens: int = 50
    min_code_chars: int = 8
    max_code_chars: int = 4096

    @classmethod
    def from_settings(cls, section: Mapping) -> 'CorpusFilterConfig':
        defaults = cls()
        return cls(**{name: int(section.get(name, getattr(defaults, name)))
                      for name in ('min_comment_tokens', 'max_comment_tokens',
                                   'min_code_chars', 'max_code_chars')})


@dataclass(frozen=True)
class DatasetSplits:
    train: List[DatasetRecord]
    val: List[DatasetRecord]
    test: List[DatasetRecord]


@dataclass(frozen=True)
class IngestResult:
    splits: DatasetSplits
    report: FilterReport


def language_from_path(path: str) -> str:
    """Language tag from a source file extension"""
    return EXTENSION_LANGUAGES.get(Path(path).suffix.lower(), 'unknown')


def extract_first_sentence(comment: str) -> str:
    """Cut at the earliest sentence break; a period is kept, marker strings are not"""
    cut = len(comment)
    period = comment.find('.')
    if period != -1:
        cut = period + 1
    for marker in SENTENCE_BREAKS:
        position = comment.find(marker)
        if position != -1 and position < cut:
            cut = position
    return comment[:cut]


def filter_record(record: DatasetRecord,
                  config: CorpusFilterConfig = CorpusFilterConfig()) -> Optional[RejectRule]:
    """None if the record is accepted, otherwise the first rule that rejects it"""
    lowered = record.comment.lower()
    if any(phrase in lowered for phrase in BLACKLIST):
        return RejectRule.BLACKLIST

    n_tokens = len(tokenize_comment(record.comment))
    if n_tokens < config.min_comment_tokens:
        return RejectRule.COMMENT_TOO_SHORT
    if n_tokens > config.max_comment_tokens:
        return RejectRule.COMMENT_TOO_LONG

    if len(record.code) < config.min_code_chars:
        return RejectRule.CODE_TOO_SHORT
    if len(record.code) > config.max_code_chars:
        return RejectRule.CODE_TOO_LONG
    return None


def deduplicate(records: Iterable[DatasetRecord]) -> List[DatasetRecord]:
    """Drop exact (code, comment) repeats, keeping first occurrences in order"""
    seen = set()
    unique = []
    for record in records:
        key = (record.code, record.comment)
        if key in seen:
            continue
        seen.add(key)
        unique.append(record)
    return unique


def _parse_scheme(scheme: str) -> Optional[int]:
    if scheme == 'ratio':
        return None
    match = _SCHEME_RE.match(scheme)
    if not match:
        raise InputError(f"unknown split scheme {scheme!r}; expected 'ratio' or 'fixed-test:N'")
    return int(match.group(1))


def split_dataset(records: Sequence[DatasetRecord], scheme: str = 'ratio', seed: int = 0) -> DatasetSplits:
    """Seeded partition into train/val/test.

    ``ratio``: 80%/10%/10%. ``fixed-test:N``: N test records, the rest 80%/20% train/val.
    """
    records = list(records)
    n = len(records)
    fixed_test = _parse_scheme(scheme)

    if fixed_test is None:
        # nearest integer, halves rounded up
        n_test = (n + 5) // 10
        n_val = n_test
    else:
        n_test = fixed_test
        n_val = (2 * (n - n_test) + 5) // 10 if n > n_test else 0
    n_train = n - n_test - n_val
    if n_test < 1 or n_val < 1 or n_train < 1:
        raise InputError(f"{n} records are not enough for the '{scheme}' split scheme")

    rest, test = train_test_split(records, test_size=n_test, random_state=seed, shuffle=True)
    train, val = train_test_split(rest, test_size=n_val, random_state=seed + 1, shuffle=True)
    logger.info(f"Split {n} records into {len(train)} train / {len(val)} val / {len(test)} test")
    return DatasetSplits(train=list(train), val=list(val), test=list(test))


def ingest(records: Iterable[DatasetRecord], scheme: str = 'ratio', seed: int = 0,
           config: CorpusFilterConfig = CorpusFilterConfig()) -> IngestResult:
    """First-sentence extraction, filters, exact dedup, then splitting"""
    report = FilterReport()
    accepted: List[DatasetRecord] = []
    for record in records:
        record = DatasetRecord(record.code, extract_first_sentence(record.comment),
                               record.language, record.origin)
        rule = filter_record(record, config)
        if rule is None:
            accepted.append(record)
        else:
            report.reject(rule)

    unique = deduplicate(accepted)
    for _ in range(len(accepted) - len(unique)):
        report.reject(RejectRule.DUPLICATE)
    report.passed = len(unique)
    logger.info(f"Filtering kept {report.passed} of {report.total} records: {report.rejected}")

    return IngestResult(splits=split_dataset(unique, scheme, seed), report=report)


@dataclass(frozen=True)
class LeakageReport:
    test_records: int
    exact_pair_matches: int
    code_matches: int

    @property
    def exact_fraction(self) -> float:
        return self.exact_pair_matches / self.test_records if self.test_records else 0.0

    def to_dict(self) -> Dict:
        return {
            'test_records': self.test_records,
            'exact_pair_matches': self.exact_pair_matches,
            'code_matches': self.code_matches,
            'exact_fraction': self.exact_fraction,
        }


def leakage_report(train: Iterable[DatasetRecord], test: Iterable[DatasetRecord]) -> LeakageReport:
    """Test records whose pair, or whose code alone, also occurs in training"""
    train = list(train)
    pairs = {(r.code, r.comment) for r in train}
    codes = {r.code for r in train}
    test = list(test)
    return LeakageReport(
        test_records=len(test),
        exact_pair_matches=sum((r.code, r.comment) in pairs for r in test),
        code_matches=sum(r.code in codes for r in test),
    )


def read_records(path: Union[str, Path]) -> List[DatasetRecord]:
    """Load JSON-lines records"""
    path = Path(path)
    records = []
    with open(path, 'r', encoding='utf-8') as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                records.append(DatasetRecord.from_dict(json.loads(line)))
            except (json.JSONDecodeError, InputError, AttributeError, TypeError) as e:
                raise InputError(f"{path}:{line_no}: malformed record ({e})") from e
    logger.info(f"Read {len(records)} records from {path}")
    return records


def write_records(path: Union[str, Path], records: Iterable[DatasetRecord]) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, 'w', encoding='utf-8') as f:
        for record in records:
            f.write(json.dumps(record.to_dict(), ensure_ascii=False) + '\n')
            count += 1
    return count


def language_counts(records: Iterable[DatasetRecord]) -> Dict[str, int]:
    return dict(Counter(r.language for r in records))
