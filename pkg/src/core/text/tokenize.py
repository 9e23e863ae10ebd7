import re
import string
from typing import List

PUNCTUATION = string.punctuation  # the 32 ASCII punctuation characters

_TOKEN_RE = re.compile(r"[^\s{p}]+|[{p}]".format(p=re.escape(PUNCTUATION)))


def tokenize_comment(raw: str) -> List[str]:
    """Lowercase, then split into space-separated terms and standalone punctuation marks"""
    if not raw:
        return []
    return _TOKEN_RE.findall(raw.lower())
