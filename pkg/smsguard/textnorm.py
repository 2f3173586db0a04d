"""
Lexical normalization of SMS-style variants.

Replaces shortenings, contractions and phonetic spellings ("2nite", "u",
"xq") by their canonical words using an exception dictionary. Matching is
an exact lookup of each whitespace token after lowercasing and stripping
surrounding punctuation. Tokens that overlap a URL, email or phone entity
are left untouched, so normalization always runs after entity detection.
"""

import logging
import re
import string
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType
from typing import Dict, List, Mapping, Optional, Tuple, Union

from ._datafiles import iter_entries, read_text, version_of
from .errors import LexiconError

log = logging.getLogger(__name__)

# ASCII punctuation plus the Unicode marks common in Spanish and pasted text
STRIP_CHARS = string.punctuation + "¡¿…“”‘’«»"

_TOKEN_RE = re.compile(r"\S+")


def lexicon_key(token: str) -> str:
    """Return the lookup form of a token: lowercased, punctuation-stripped."""
    return token.lower().strip(STRIP_CHARS)


@dataclass(frozen=True)
class Lexicon:
    """Immutable variant → canonical mapping."""

    entries: Mapping[str, str]
    version: str = "unversioned"

    def __post_init__(self):
        entries = dict(self.entries)
        for variant, canonical in entries.items():
            if not variant or variant != lexicon_key(variant):
                raise LexiconError(f"variant {variant!r} is not in lookup form")
            if not canonical or any(c.isspace() for c in canonical):
                raise LexiconError(f"canonical for {variant!r} must be a single token")
            if lexicon_key(canonical) == variant:
                raise LexiconError(f"{variant!r} maps to itself")
            if lexicon_key(canonical) in entries:
                raise LexiconError(
                    f"chain: {variant!r} -> {canonical!r}, which is itself a variant"
                )
        object.__setattr__(self, "entries", MappingProxyType(entries))

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, variant: str) -> bool:
        return variant in self.entries

    def reverse(self) -> Dict[str, List[str]]:
        """Return canonical → sorted variants, for generating lexical variation."""
        out: Dict[str, List[str]] = {}
        for variant, canonical in self.entries.items():
            out.setdefault(canonical.lower(), []).append(variant)
        return {k: sorted(v) for k, v in sorted(out.items())}


@dataclass(frozen=True)
class Substitution:
    span: Tuple[int, int]
    variant: str
    canonical: str


@dataclass(frozen=True)
class NormalizedText:
    original: str
    normalized: str
    substitutions: Tuple[Substitution, ...] = ()


def load_lexicon(path: Union[str, Path]) -> Lexicon:
    """Load a TAB-separated ``variant<TAB>canonical`` lexicon file.

    Raises:
        LexiconError: missing file, malformed line, duplicate variant, or
                      a variant whose canonical is itself a variant.
    """
    text = read_text(path, LexiconError)
    entries: Dict[str, str] = {}
    origin: Dict[str, int] = {}
    for lineno, line in iter_entries(text):
        parts = [p.strip() for p in line.split("\t")]
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise LexiconError(f"{path}: line {lineno}: expected variant<TAB>canonical")
        key = lexicon_key(parts[0])
        if not key:
            raise LexiconError(f"{path}: line {lineno}: variant {parts[0]!r} is only punctuation")
        if key in entries:
            raise LexiconError(
                f"{path}: line {lineno}: duplicate variant {key!r} (first on line {origin[key]})"
            )
        entries[key] = parts[1]
        origin[key] = lineno

    for key, canonical in entries.items():
        target = lexicon_key(canonical)
        if target in entries:
            raise LexiconError(
                f"{path}: line {origin[key]}: chain {key!r} -> {canonical!r} "
                f"(variant on line {origin[target]})"
            )

    lexicon = Lexicon(entries, version_of(text))
    log.debug("loaded %d lexicon entries from %s (version %s)", len(lexicon), path, lexicon.version)
    return lexicon


def default_lexicon() -> Lexicon:
    """Return the bundled English/Spanish starter lexicon."""
    from ._paths import bundled_path
    return load_lexicon(bundled_path("lexicon.tsv"))


def _protected_spans(entities) -> List[Tuple[int, int]]:
    from .entity import CTA_KINDS
    return sorted(e.span for e in entities if e.kind in CTA_KINDS)


def normalize(text: str, lexicon: Lexicon, entities=None) -> NormalizedText:
    """Rewrite lexicon variants outside URL/email/phone spans.

    ``entities`` is the EntitySet of ``text``; when omitted, entities are
    extracted with the bundled tables. Tokens are rejoined with single
    spaces.
    """
    if entities is None:
        from .entity import extract_entities
        entities = extract_entities(text)
    protected = _protected_spans(entities)

    tokens = []
    subs = []
    for m in _TOKEN_RE.finditer(text):
        token = m.group()
        start, end = m.span()
        if any(s < end and start < e for s, e in protected):
            tokens.append(token)
            continue
        core = token.strip(STRIP_CHARS)
        canonical = lexicon.entries.get(core.lower()) if core else None
        if canonical is None:
            tokens.append(token)
            continue
        lead = len(token) - len(token.lstrip(STRIP_CHARS))
        core_start = start + lead
        subs.append(Substitution((core_start, core_start + len(core)), core, canonical))
        tokens.append(token[:lead] + canonical + token[lead + len(core):])

    return NormalizedText(text, " ".join(tokens), tuple(subs))


def apply_substitutions(original: str, substitutions) -> str:
    """Apply recorded substitutions to ``original`` and collapse whitespace."""
    out = original
    for sub in sorted(substitutions, key=lambda s: s.span[0], reverse=True):
        start, end = sub.span
        if out[start:end] != sub.variant:
            raise LexiconError(f"substitution at {sub.span} does not match {sub.variant!r}")
        out = out[:start] + sub.canonical + out[end:]
    return " ".join(out.split())


def normalize_many(texts, lexicon: Optional[Lexicon], entity_sets=None) -> List[str]:
    """Normalize a batch, returning only the normalized strings.

    A ``None`` lexicon disables normalization and returns the texts
    unchanged.
    """
    if lexicon is None:
        return list(texts)
    if entity_sets is None:
        return [normalize(t, lexicon).normalized for t in texts]
    return [normalize(t, lexicon, e).normalized for t, e in zip(texts, entity_sets)]
