"""
Word n-gram and sparse orthogonal n-gram (OSB) baseline features.

The tokenizer is deliberately naive: it reproduces how an ordinary
tokenizer breaks obfuscated spam, which is what the baselines are
measured against. Vocabularies are learned from training documents only
and map features to dense column indices of a scipy CSR matrix.
"""

import itertools
import logging
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType
from typing import FrozenSet, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np
from scipy import sparse

from ._datafiles import iter_entries, read_text, write_atomic
from .errors import DataError

log = logging.getLogger(__name__)

_RUN_RE = re.compile(r"(?:[^\W_]|\.)+")

VOCAB_HEADER = "smsguard-vocab 1"


def tokenize_basic(text: str, tlds: Optional[FrozenSet[str]] = None) -> List[str]:
    """Lowercase and split on everything but letters, digits and dots.

    A dotted run stays one token when a label after its first is a known
    TLD (``spamdomain.com.support``); otherwise it splits at the dots
    (``k.a.r.s`` gives four tokens).
    """
    if tlds is None:
        from .entity import default_tld_tables
        tlds = default_tld_tables().known
    tokens: List[str] = []
    for run in _RUN_RE.findall(text.lower()):
        labels = [label for label in run.split(".") if label]
        if len(labels) > 1 and any(label in tlds for label in labels[1:]):
            tokens.append(".".join(labels))
        else:
            tokens.extend(labels)
    return tokens


def ngrams(tokens: Sequence[str], n_max: int = 2) -> List[str]:
    """Word 1..n_max-grams, joined with ``_``."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    out = []
    for n in range(1, n_max + 1):
        for i in range(len(tokens) - n + 1):
            out.append("_".join(tokens[i:i + n]))
    return out


def osb_grams(tokens: Sequence[str], n: int = 3, window: int = 4) -> List[str]:
    """Ordered token n-tuples spanning at most ``window`` positions.

    Each tuple is labeled with its gap pattern, so ``a b c`` yields
    ``a_b_c:1,1`` and ``a _ c d`` contributes ``a_c_d:2,1``.
    """
    if n < 2:
        raise ValueError("osb n must be >= 2")
    if window < n - 1:
        raise ValueError(f"window {window} cannot hold {n} tokens")
    out = []
    L = len(tokens)
    for i in range(L):
        for rest in itertools.combinations(range(i + 1, min(L, i + window + 1)), n - 1):
            idx = (i,) + rest
            gaps = ",".join(str(b - a) for a, b in zip(idx, idx[1:]))
            out.append("_".join(tokens[j] for j in idx) + ":" + gaps)
    return out


@dataclass(frozen=True)
class VocabModel:
    """Feature → column index map learned from training documents."""

    index: Mapping[str, int]
    kind: str = "ngram"
    cap: int = 50000
    df_min: int = 2

    def __post_init__(self):
        index = dict(self.index)
        if sorted(index.values()) != list(range(len(index))):
            raise DataError("vocabulary indices must be dense from 0")
        object.__setattr__(self, "index", MappingProxyType(index))

    def __len__(self) -> int:
        return len(self.index)

    @classmethod
    def fit(cls, documents: Iterable[Sequence[str]], cap: int = 50000, df_min: int = 2,
            kind: str = "ngram") -> "VocabModel":
        """Keep the ``cap`` features with the highest document frequency.

        Features seen in fewer than ``df_min`` documents are dropped; ties
        in frequency are broken by feature string, and columns are
        assigned in sorted feature order.
        """
        if cap < 1 or df_min < 1:
            raise ValueError("cap and df_min must be >= 1")
        df: Counter = Counter()
        n_docs = 0
        for features in documents:
            df.update(set(features))
            n_docs += 1
        eligible = [(f, c) for f, c in df.items() if c >= df_min]
        eligible.sort(key=lambda fc: (-fc[1], fc[0]))
        kept = sorted(f for f, _ in eligible[:cap])
        log.debug("%s vocabulary: %d of %d features from %d documents",
                  kind, len(kept), len(df), n_docs)
        return cls({f: i for i, f in enumerate(kept)}, kind, cap, df_min)

    def transform(self, documents: Iterable[Sequence[str]]) -> sparse.csr_matrix:
        """Count matrix, one row per document; unknown features are ignored."""
        indptr = [0]
        indices: List[int] = []
        data: List[int] = []
        for features in documents:
            counts = Counter(self.index[f] for f in features if f in self.index)
            for col in sorted(counts):
                indices.append(col)
                data.append(counts[col])
            indptr.append(len(indices))
        return sparse.csr_matrix(
            (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64), indptr),
            shape=(len(indptr) - 1, len(self.index)),
        )

    def dumps(self) -> str:
        lines = [VOCAB_HEADER, f"# kind: {self.kind}", f"# cap: {self.cap}", f"# df_min: {self.df_min}"]
        lines.extend(f"{i}\t{f}" for f, i in sorted(self.index.items(), key=lambda kv: kv[1]))
        return "\n".join(lines) + "\n"

    def save(self, path: Union[str, Path]) -> None:
        write_atomic(path, self.dumps())

    @classmethod
    def load(cls, path: Union[str, Path]) -> "VocabModel":
        text = read_text(path)
        if not text.startswith(VOCAB_HEADER):
            raise DataError(f"{path}: not a vocabulary file")
        meta = dict(
            line[1:].strip().split(":", 1) for line in text.splitlines()
            if line.startswith("# ") and ":" in line
        )
        index = {}
        for lineno, line in iter_entries(text):
            if line == VOCAB_HEADER:
                continue
            col, sep, feature = line.partition("\t")
            if not sep or not col.isdigit():
                raise DataError(f"{path}: line {lineno}: expected index<TAB>feature")
            index[feature] = int(col)
        return cls(
            index,
            kind=meta.get("kind", "ngram").strip(),
            cap=int(meta.get("cap", 50000)),
            df_min=int(meta.get("df_min", 2)),
        )


def ngram_features(tokens: Sequence[str], n_max: int, vocab: VocabModel) -> sparse.csr_matrix:
    """1 × |vocab| counts of the word n-grams of ``tokens``."""
    return vocab.transform([ngrams(tokens, n_max)])


def osb_features(tokens: Sequence[str], n: int, window: int, vocab: VocabModel) -> sparse.csr_matrix:
    """1 × |vocab| counts of the gap-labeled OSB tuples of ``tokens``."""
    return vocab.transform([osb_grams(tokens, n, window)])
