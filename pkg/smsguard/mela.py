"""
MELA feature vectors: 51 message features and 39 domain features.

Message features combine entity counts and positions, lexical shape,
substring-cluster counts, keyword heuristics, and the score of a separate
domain classifier for the message's URL. Slot order is fixed; any layout
change bumps the schema version.
"""

import functools
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import FrozenSet, List, Optional, Sequence, Tuple, Union

import numpy as np

from ._datafiles import read_lines, read_sections
from .cluster import DEFAULT_CLUSTER_COUNT, ClusterMatcher
from .entity import (
    CTA_KINDS,
    EntityKind,
    EntityLexicon,
    EntitySet,
    PositionCode,
    TldTables,
    first_position,
    parse_domain,
    position_code,
)
from .errors import DataError, EntityError, SchemaMismatchError
from .textnorm import STRIP_CHARS, NormalizedText

log = logging.getLogger(__name__)

PathLike = Union[str, Path]

MESSAGE_SCHEMA = "mela-1"
DOMAIN_SCHEMA = "domain-1"

_CLUSTER_SLOTS = [f"SUBSTRING_CLUST_{i}" for i in range(DEFAULT_CLUSTER_COUNT)]

MESSAGE_FEATURES: Tuple[str, ...] = tuple(
    ["NUM_OF_URLS", "NUM_OF_PHONES", "NUM_OF_EMAILS", "URL_POS", "PHONE_POS", "EMAIL_POS",
     "NUMBER_POS", "CONTAINS_FWD", "LENGTH", "WORD_COUNT", "PHONEME_COUNT"]
    + _CLUSTER_SLOTS
    + ["UNSUBSCRIBE", "PHONE_ISFREE", "EMAIL_ISFREE", "URL_ISDOM", "DOMAIN_MELASCORE",
       "DOMAIN_ISSHORT", "NGRAM_ENTROPY", "START_WITHNUMBER", "END_WITHNUMBER", "TOKEN_RATIO",
       "NUM_OF_TIMEX", "NUM_OF_NUMBER", "NUM_OF_CURRENCY", "STARTSWITH_HELLO", "ENDSWITH_CTA",
       "DOMAIN_OBFUSCATION", "HEUR_TWEET", "URL_BADTLD"]
)

DOMAIN_FEATURES: Tuple[str, ...] = tuple(
    ["STARTS_WITH_NUM", "ENDS_WITH_NUM", "CONTAINS_00", "CONTAINS_VV", "CONTAINS_YEAR",
     "CONTAINS_1", "CONTAINS_ZERO", "DIGIT_RATIO", "HYPHEN_COUNT", "LENGTH", "WORD_COUNT",
     "PHONEME_COUNT"]
    + _CLUSTER_SLOTS
    + ["CONTAINSWWW", "BADTLDS", "SUSPTLDS", "NORMALTLDS", "ISSHORT"]
)

MESSAGE_INDEX = {name: i for i, name in enumerate(MESSAGE_FEATURES)}
DOMAIN_INDEX = {name: i for i, name in enumerate(DOMAIN_FEATURES)}

# Score used for URLs when no domain classifier has been trained
NEUTRAL_DOMAIN_SCORE = 0.5
NO_URL_SCORE = -1.0

_VOWEL_GROUP_RE = re.compile(r"[aeiouy]+")
_ALPHA_RUN_RE = re.compile(r"[a-z]+")
_YEAR_RE = re.compile(r"(?:19|20)\d\d")
_TWEET_RE = re.compile(r"(?<!\w)[#@]\w+")


@dataclass(frozen=True)
class MelaVector:
    values: Tuple[float, ...]
    schema_version: str = MESSAGE_SCHEMA

    def __post_init__(self):
        if len(self.values) != len(MESSAGE_FEATURES):
            raise SchemaMismatchError(
                f"message vector has {len(self.values)} slots, expected {len(MESSAGE_FEATURES)}"
            )

    def __getitem__(self, name: str) -> float:
        return self.values[MESSAGE_INDEX[name]]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


@dataclass(frozen=True)
class DomainVector:
    values: Tuple[float, ...]
    schema_version: str = DOMAIN_SCHEMA

    def __post_init__(self):
        if len(self.values) != len(DOMAIN_FEATURES):
            raise SchemaMismatchError(
                f"domain vector has {len(self.values)} slots, expected {len(DOMAIN_FEATURES)}"
            )

    def __getitem__(self, name: str) -> float:
        return self.values[DOMAIN_INDEX[name]]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


@dataclass(frozen=True)
class Keywords:
    """Keyword lists behind the heuristic message features."""

    greetings: FrozenSet[str] = frozenset()
    optout_anywhere: Tuple[str, ...] = ()
    optout_trailing: FrozenSet[str] = frozenset()
    forward_markers: Tuple[str, ...] = ()


def load_keywords(greetings: PathLike, optout: PathLike, forward_markers: PathLike) -> Keywords:
    sections = read_sections(optout)
    return Keywords(
        greetings=frozenset(w.lower() for w in read_lines(greetings)),
        optout_anywhere=tuple(w.lower() for w in sections.get("anywhere", [])),
        optout_trailing=frozenset(w.lower() for w in sections.get("trailing", [])),
        forward_markers=tuple(w.lower() for w in read_lines(forward_markers)),
    )


@functools.lru_cache(maxsize=1)
def default_keywords() -> Keywords:
    from ._paths import bundled_path
    return load_keywords(
        bundled_path("greetings.txt"),
        bundled_path("optout.txt"),
        bundled_path("forward_markers.txt"),
    )


def schema_text(names: Sequence[str]) -> str:
    """``index<TAB>name`` lines describing a feature layout."""
    return "".join(f"{i}\t{name}\n" for i, name in enumerate(names))


# ── Shared lexical helpers ───────────────────────────────────────────


def phoneme_count(text: str) -> int:
    """Syllable estimate: number of vowel groups."""
    return len(_VOWEL_GROUP_RE.findall(text.lower()))


def trigram_entropy(text: str) -> float:
    """Shannon entropy in bits of the character-trigram distribution."""
    if len(text) < 3:
        return 0.0
    grams = Counter(text[i:i + 3] for i in range(len(text) - 2))
    total = sum(grams.values())
    return -sum((c / total) * math.log2(c / total) for c in grams.values())


def token_ratio(text: str) -> float:
    tokens = text.lower().split()
    if not tokens:
        return 0.0
    return len(set(tokens)) / len(tokens)


def _stripped_tokens(text: str) -> List[str]:
    return [t for t in (tok.strip(STRIP_CHARS).lower() for tok in text.split()) if t]


# ── Domain features ──────────────────────────────────────────────────


def _check_matcher(matcher: ClusterMatcher) -> None:
    if matcher.n_clusters != DEFAULT_CLUSTER_COUNT:
        raise SchemaMismatchError(
            f"cluster matcher has {matcher.n_clusters} clusters, feature layout needs "
            f"{DEFAULT_CLUSTER_COUNT}"
        )


def domain_label(registrable_domain: str, tld: str) -> str:
    """The registrable domain with its public suffix removed."""
    domain = registrable_domain.lower().rstrip(".")
    tld = tld.lower().lstrip(".")
    if tld and domain.endswith("." + tld):
        return domain[:-len(tld) - 1]
    return domain.rsplit(".", 1)[0] if "." in domain else domain


def domain_features(registrable_domain: str, tld: str, tables: TldTables,
                    matcher: ClusterMatcher, host: Optional[str] = None) -> DomainVector:
    """Lexical and TLD features of a registrable domain.

    ``host`` is the full host name when known; it only feeds CONTAINSWWW
    and ISSHORT.
    """
    _check_matcher(matcher)
    if not registrable_domain:
        raise EntityError("domain features need a non-empty domain")
    label = domain_label(registrable_domain, tld)
    host = (host or registrable_domain).lower()
    n = len(label)
    digits = sum(c.isdigit() for c in label)
    category = tables.category(tld) if tld else None

    values = [
        float(label[:1].isdigit()),
        float(label[-1:].isdigit()),
        float("00" in label),
        float("vv" in label),
        float(bool(_YEAR_RE.search(label))),
        float("1" in label),
        float("0" in label),
        digits / n if n else 0.0,
        float(label.count("-")),
        float(n),
        float(len(_ALPHA_RUN_RE.findall(label))),
        float(phoneme_count(label)),
    ]
    values.extend(float(c) for c in matcher.count(label))
    values.extend([
        float(host.startswith("www.")),
        float(category == "bad"),
        float(category == "suspicious"),
        float(category == "normal"),
        float(tables.is_shortener(host)),
    ])
    return DomainVector(tuple(values))


def domain_features_for_url(url_canonical: str, tables: TldTables,
                            matcher: ClusterMatcher) -> DomainVector:
    host, registrable, tld = parse_domain(url_canonical)
    return domain_features(registrable or host, tld, tables, matcher, host=host)


def score_domain(forest, v: DomainVector) -> float:
    """Spam probability of a domain: fraction of the forest's trees voting spam."""
    from .model import predict

    if v.schema_version != DOMAIN_SCHEMA or len(v.values) != len(DOMAIN_FEATURES):
        raise SchemaMismatchError(f"not a {DOMAIN_SCHEMA} vector")
    forest.check_schema(DOMAIN_SCHEMA, len(DOMAIN_FEATURES))
    return predict(forest, v.values)


def train_domain_forest(domains: Sequence[str], labels: Sequence[int], params,
                        tables: TldTables, matcher: ClusterMatcher, meta=None):
    """Train the domain classifier on registrable domains (``"cash4cars.tk"``)."""
    from .model import train

    rows = []
    for d in domains:
        host, registrable, tld = parse_domain(d)
        rows.append(domain_features(registrable or host, tld, tables, matcher, host=host).values)
    if not rows:
        raise DataError("no domains to train on")
    return train(np.array(rows), np.asarray(labels), params, DOMAIN_SCHEMA, meta)


# ── Message features ─────────────────────────────────────────────────


@dataclass(frozen=True)
class _UrlInfo:
    entity: object
    host: str
    registrable: str
    tld: str
    score: float


def _score_urls(urls, tables, matcher, domain_forest) -> Optional[_UrlInfo]:
    best = None
    for e in urls:
        try:
            host, registrable, tld = parse_domain(e.canonical)
        except EntityError:
            host, registrable, tld = "", "", ""
        if domain_forest is not None and (registrable or host) and host:
            v = domain_features(registrable or host, tld, tables, matcher, host=host)
            score = score_domain(domain_forest, v)
        else:
            score = NEUTRAL_DOMAIN_SCORE
        if best is None or score > best.score:
            best = _UrlInfo(e, host, registrable, tld, score)
    return best


def _has_forward_marker(tokens: List[str], markers) -> bool:
    for marker in markers:
        if marker.endswith(":"):
            if any(t.startswith(marker) for t in tokens):
                return True
        elif any(t.strip(STRIP_CHARS) == marker for t in tokens):
            return True
    return False


def _has_optout(text_lower: str, keywords: Keywords) -> bool:
    for phrase in keywords.optout_anywhere:
        if re.search(rf"(?<!\w){re.escape(phrase)}(?!\w)", text_lower):
            return True
    tail = _stripped_tokens(text_lower)[-4:]
    return any(t in keywords.optout_trailing for t in tail)


def message_features(msg, norm: NormalizedText, ents: EntitySet, matcher: ClusterMatcher,
                     domain_forest=None, tables: Optional[TldTables] = None,
                     keywords: Optional[Keywords] = None,
                     lexicon: Optional[EntityLexicon] = None) -> MelaVector:
    """The 51-slot MELA vector of one message.

    ``msg`` is a Message or plain text; ``ents`` must come from the
    original text and ``norm`` from normalizing it. Without a domain
    forest every URL scores 0.5.
    """
    from .entity import default_entity_lexicon, default_tld_tables

    _check_matcher(matcher)
    tables = tables or default_tld_tables()
    keywords = keywords or default_keywords()
    lexicon = lexicon or default_entity_lexicon()

    text = getattr(msg, "text", msg)
    normalized = norm.normalized
    n = len(text)
    lower = text.lower()
    raw_tokens = lower.split()

    urls = ents.of_kind(EntityKind.URL)
    phones = ents.of_kind(EntityKind.PHONE)
    emails = ents.of_kind(EntityKind.EMAIL)
    numbers = ents.of_kind(EntityKind.NUMBER)
    top = _score_urls(urls, tables, matcher, domain_forest) if urls else None

    norm_tokens = _stripped_tokens(normalized)
    stripped_end = text.rstrip(" \t\n.!?")

    v = [
        ents.counts[EntityKind.URL],
        ents.counts[EntityKind.PHONE],
        ents.counts[EntityKind.EMAIL],
        position_code(top.entity.span, n) if top else PositionCode.ABSENT,
        first_position(phones, n),
        first_position(emails, n),
        first_position(numbers, n),
        _has_forward_marker(raw_tokens, keywords.forward_markers),
        n,
        len(text.split()),
        phoneme_count(normalized),
    ]
    v.extend(matcher.count(normalized))
    v.extend([
        _has_optout(lower, keywords),
        any(lexicon.phone_is_free(p.canonical) for p in phones),
        any(lexicon.email_is_free(e.canonical) for e in emails),
        bool(top and top.registrable and not tables.is_shortener(top.host)),
        top.score if top else NO_URL_SCORE,
        bool(top and top.host and tables.is_shortener(top.host)),
        trigram_entropy(normalized),
        text.lstrip()[:1].isdigit(),
        stripped_end[-1:].isdigit(),
        token_ratio(normalized),
        ents.counts[EntityKind.TIMEX],
        ents.counts[EntityKind.NUMBER],
        ents.counts[EntityKind.CURRENCY],
        any(t in keywords.greetings for t in norm_tokens[:2]),
        any(e.kind in CTA_KINDS and position_code(e.span, n) == PositionCode.END for e in ents),
        bool(top and top.entity.raw.lower() != top.entity.canonical),
        bool(_TWEET_RE.search(text)),
        bool(top and top.tld and tables.category(top.tld) in ("bad", "suspicious")),
    ])
    return MelaVector(tuple(float(x) for x in v))


def featurize_text(text: str, resources, domain_forest=None, normalize: bool = True) -> MelaVector:
    """Extract entities, normalize and featurize one text with a Resources bundle."""
    from .entity import extract_entities
    from .textnorm import normalize as normalize_text

    ents = extract_entities(text, resources.tld_tables, resources.entity_lexicon)
    if normalize:
        norm = normalize_text(text, resources.lexicon, ents)
    else:
        norm = NormalizedText(text, " ".join(text.split()))
    return message_features(text, norm, ents, resources.matcher, domain_forest,
                            resources.tld_tables, resources.keywords, resources.entity_lexicon)
