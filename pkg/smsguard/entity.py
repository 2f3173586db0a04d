"""
Obfuscation-aware entity extraction.

Detects URLs, phone numbers, emails, temporal expressions, standalone
numbers and currency mentions in short messages, and reports where in the
message each one sits. Detection runs in a fixed order (email, URL, phone,
currency, timex, number) and every detector skips text already claimed by
an earlier one, so entities of different kinds never overlap either.

URL candidates are only accepted when their last label is a real TLD, and
a schemeless candidate whose domain label is an everyday word ("tonight.tk")
needs extra evidence before it counts as a URL. Phone candidates may use
separators and letter/digit look-alikes ("555O5O5O5O").
"""

import enum
import functools
import ipaddress
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterator, List, Optional, Tuple, Union

from ._datafiles import read_lines, read_sections
from .errors import EntityError

log = logging.getLogger(__name__)

PathLike = Union[str, Path]


class EntityKind(str, enum.Enum):
    URL = "url"
    PHONE = "phone"
    EMAIL = "email"
    TIMEX = "timex"
    NUMBER = "number"
    CURRENCY = "currency"


# Call-to-action kinds: never rewritten by normalization
CTA_KINDS = frozenset({EntityKind.URL, EntityKind.PHONE, EntityKind.EMAIL})


class PositionCode(enum.IntEnum):
    ABSENT = -1
    BEGIN = 0
    MIDDLE = 1
    END = 2


@dataclass(frozen=True)
class Entity:
    kind: EntityKind
    raw: str
    canonical: str
    span: Tuple[int, int]

    def __post_init__(self):
        start, end = self.span
        if start < 0 or start >= end:
            raise EntityError(f"invalid span {self.span} for {self.kind.value} entity")


class EntitySet:
    """Entities of one text, ordered by span start, with per-kind counts."""

    __slots__ = ("entities", "counts")

    def __init__(self, entities=()):
        self.entities: Tuple[Entity, ...] = tuple(sorted(entities, key=lambda e: e.span))
        counts = {kind: 0 for kind in EntityKind}
        for e in self.entities:
            counts[e.kind] += 1
        self.counts: Dict[EntityKind, int] = counts

    def __iter__(self) -> Iterator[Entity]:
        return iter(self.entities)

    def __len__(self) -> int:
        return len(self.entities)

    def __eq__(self, other) -> bool:
        return isinstance(other, EntitySet) and self.entities == other.entities

    def __repr__(self) -> str:
        return f"EntitySet({list(self.entities)!r})"

    def of_kind(self, kind: EntityKind) -> List[Entity]:
        return [e for e in self.entities if e.kind is kind]


# ── Tables and word lists ────────────────────────────────────────────


@functools.lru_cache(maxsize=1)
def _psl():
    from publicsuffixlist import PublicSuffixList
    return PublicSuffixList(accept_unknown=False, only_icann=True)


@dataclass(frozen=True)
class TldTables:
    """Categorized TLD sets plus URL-shortener hostnames."""

    bad: FrozenSet[str]
    suspicious: FrozenSet[str]
    normal: FrozenSet[str]
    shorteners: FrozenSet[str] = frozenset()

    def __post_init__(self):
        for name in ("bad", "suspicious", "normal", "shorteners"):
            values = frozenset(v.lower().lstrip(".") for v in getattr(self, name))
            object.__setattr__(self, name, values)
        pairs = (("bad", "suspicious"), ("bad", "normal"), ("suspicious", "normal"))
        for a, b in pairs:
            common = getattr(self, a) & getattr(self, b)
            if common:
                raise EntityError(
                    f"TLD tables overlap: {', '.join(sorted(common))} in both {a} and {b}"
                )

    @property
    def known(self) -> FrozenSet[str]:
        return self.bad | self.suspicious | self.normal

    def category(self, tld: str) -> Optional[str]:
        """Return "bad", "suspicious", "normal" or None for a (possibly multi-label) TLD."""
        tld = tld.lower().lstrip(".")
        for candidate in (tld, tld.rsplit(".", 1)[-1]):
            if candidate in self.bad:
                return "bad"
            if candidate in self.suspicious:
                return "suspicious"
            if candidate in self.normal:
                return "normal"
        return None

    def is_valid_tld(self, label: str) -> bool:
        """True when ``label`` is in the tables or is an IANA top-level domain."""
        label = label.lower()
        if not label or not label.isalnum() or label.isdigit():
            return False
        if label in self.known:
            return True
        return _psl().publicsuffix(label) is not None

    def is_shortener(self, host: str) -> bool:
        host = host.lower()
        if host.startswith("www."):
            host = host[4:]
        return host in self.shorteners


def load_tld_tables(bad: PathLike, suspicious: PathLike, normal: PathLike,
                    shorteners: Optional[PathLike] = None) -> TldTables:
    """Load the three TLD lists and the shortener list."""
    return TldTables(
        bad=frozenset(read_lines(bad, EntityError)),
        suspicious=frozenset(read_lines(suspicious, EntityError)),
        normal=frozenset(read_lines(normal, EntityError)),
        shorteners=frozenset(read_lines(shorteners, EntityError)) if shorteners else frozenset(),
    )


@functools.lru_cache(maxsize=1)
def default_tld_tables() -> TldTables:
    from ._paths import bundled_path
    return load_tld_tables(
        bundled_path("tlds_bad.txt"),
        bundled_path("tlds_suspicious.txt"),
        bundled_path("tlds_normal.txt"),
        bundled_path("shorteners.txt"),
    )


@dataclass(frozen=True)
class EntityLexicon:
    """Closed word and pattern lists used by the detectors."""

    common_words: FrozenSet[str] = frozenset()
    timex_words: FrozenSet[str] = frozenset()
    timex_patterns: Tuple[str, ...] = ()
    currency_symbols: Tuple[str, ...] = ()
    currency_words: FrozenSet[str] = frozenset()
    free_mail: FrozenSet[str] = frozenset()
    tollfree_prefixes: Tuple[str, ...] = ()
    _timex_re: object = field(default=None, init=False, repr=False, compare=False)
    _currency_re: object = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        try:
            timex = [re.compile(p, re.IGNORECASE) for p in self.timex_patterns]
        except re.error as e:
            raise EntityError(f"invalid timex pattern: {e}") from None
        if self.timex_words:
            words = "|".join(re.escape(w) for w in sorted(self.timex_words, key=len, reverse=True))
            timex.append(re.compile(rf"(?<![\w])(?:{words})(?![\w])", re.IGNORECASE))
        object.__setattr__(self, "_timex_re", tuple(timex))
        object.__setattr__(self, "_currency_re", _currency_regex(self.currency_symbols, self.currency_words))

    def phone_is_free(self, digits: str) -> bool:
        if len(digits) == 11 and digits.startswith("1"):
            digits = digits[1:]
        return any(digits.startswith(p) for p in self.tollfree_prefixes)

    def email_is_free(self, address: str) -> bool:
        return address.rsplit("@", 1)[-1].lower() in self.free_mail


def _currency_regex(symbols, words):
    amount = r"\d[\d,]*(?:\.\d+)?"
    parts = []
    if symbols:
        sym = "|".join(re.escape(s) for s in symbols)
        parts.append(rf"(?:{sym})\s?{amount}")
        parts.append(rf"{amount}\s?(?:{sym})")
        parts.append(rf"(?:{sym})")
    if words:
        alt = "|".join(re.escape(w) for w in sorted(words, key=len, reverse=True))
        parts.append(rf"(?<![\w])(?:{amount}\s?)?(?:{alt})(?![\w])")
    if not parts:
        return None
    return re.compile("|".join(parts), re.IGNORECASE)


def load_entity_lexicon(common_words: Optional[PathLike] = None,
                        timex: Optional[PathLike] = None,
                        currency: Optional[PathLike] = None,
                        free_mail: Optional[PathLike] = None,
                        tollfree: Optional[PathLike] = None) -> EntityLexicon:
    """Load detector word lists; omitted lists stay empty."""
    timex_sections = read_sections(timex, EntityError) if timex else {}
    currency_sections = read_sections(currency, EntityError) if currency else {}
    return EntityLexicon(
        common_words=frozenset(w.lower() for w in read_lines(common_words, EntityError)) if common_words else frozenset(),
        timex_words=frozenset(w.lower() for w in timex_sections.get("words", [])),
        timex_patterns=tuple(timex_sections.get("patterns", [])),
        currency_symbols=tuple(currency_sections.get("symbols", [])),
        currency_words=frozenset(w.lower() for w in currency_sections.get("words", [])),
        free_mail=frozenset(w.lower() for w in read_lines(free_mail, EntityError)) if free_mail else frozenset(),
        tollfree_prefixes=tuple(read_lines(tollfree, EntityError)) if tollfree else (),
    )


@functools.lru_cache(maxsize=1)
def default_entity_lexicon() -> EntityLexicon:
    from ._paths import bundled_path
    return load_entity_lexicon(
        common_words=bundled_path("common_words.txt"),
        timex=bundled_path("timex.txt"),
        currency=bundled_path("currency.txt"),
        free_mail=bundled_path("free_mail.txt"),
        tollfree=bundled_path("tollfree_prefixes.txt"),
    )


# ── Position codes ───────────────────────────────────────────────────


def position_code(span: Tuple[int, int], text_length: int) -> PositionCode:
    """Classify a span as Begin, Middle or End of the text by thirds."""
    start, end = span
    if not 0 <= start < end <= text_length:
        raise EntityError(f"span {span} out of bounds for text of length {text_length}")
    if 3 * start < text_length:
        return PositionCode.BEGIN
    if 3 * end > 2 * text_length:
        return PositionCode.END
    return PositionCode.MIDDLE


def first_position(entities: List[Entity], text_length: int) -> PositionCode:
    """Position code of the first entity in the list, Absent when empty."""
    if not entities:
        return PositionCode.ABSENT
    return position_code(entities[0].span, text_length)


# ── URL parsing ──────────────────────────────────────────────────────

_DOT = r"(?:\.|\[\.\]|\(\.\)|\[dot\]|\(dot\))"
_LABEL = r"[A-Za-z0-9](?:[A-Za-z0-9\-]*[A-Za-z0-9])?"
_OBFUSCATED_DOT_RE = re.compile(r"\[\.\]|\(\.\)|\[dot\]|\(dot\)", re.IGNORECASE)
_SCHEME_URL_RE = re.compile(
    rf"(?<![\w])(?P<scheme>https?|ftp)://(?P<host>{_LABEL}(?:{_DOT}{_LABEL})*)(?P<rest>[/?#][^\s]*)?",
    re.IGNORECASE,
)
_BARE_URL_RE = re.compile(
    rf"(?<![\w@.\-/\[\(])(?P<host>{_LABEL}(?:{_DOT}{_LABEL})+)(?P<rest>/[^\s]*)?",
    re.IGNORECASE,
)
_CAPITALIZED_RE = re.compile(r"^[A-Z][a-z]+$")
_SCHEME_PREFIX_RE = re.compile(r"^[a-z][a-z0-9+.\-]*://", re.IGNORECASE)
_HOST_RE = re.compile(rf"^{_LABEL}(?:\.{_LABEL})*$")
_SENTENCE_FINAL_RE = re.compile(r"^\s*(?:[.!?]+(?:\s|$)|$)")
_TRAILING_PUNCT = ".,;:!?)]}'\""


def _split_labels(host_raw: str) -> List[Tuple[str, int, int]]:
    """Split a raw (possibly obfuscated) host into (label, start, end) offsets."""
    out = []
    pos = 0
    for m in re.finditer(_DOT, host_raw, re.IGNORECASE):
        out.append((host_raw[pos:m.start()], pos, m.start()))
        pos = m.end()
    out.append((host_raw[pos:], pos, len(host_raw)))
    return out


def _is_ipv4(host: str) -> bool:
    try:
        return isinstance(ipaddress.ip_address(host), ipaddress.IPv4Address)
    except ValueError:
        return False


def parse_domain(url_canonical: str) -> Tuple[str, str, str]:
    """Split a canonical URL into (host, registrable domain, tld).

    IP hosts have an empty registrable domain and tld. TLDs missing from
    the public-suffix snapshot fall back to the last label.
    """
    rest = _SCHEME_PREFIX_RE.sub("", url_canonical.strip())
    host = re.split(r"[/?#:]", rest, maxsplit=1)[0].lower().rstrip(".")
    if not host or not _HOST_RE.match(host):
        raise EntityError(f"unparsable host in {url_canonical!r}")
    if _is_ipv4(host):
        return host, "", ""
    if "." not in host:
        raise EntityError(f"host {host!r} has no top-level domain")
    psl = _psl()
    tld = psl.publicsuffix(host)
    if tld is None:
        labels = host.split(".")
        return host, ".".join(labels[-2:]), labels[-1]
    if tld == host:
        return host, "", tld
    return host, psl.privatesuffix(host) or "", tld


# ── Extraction ───────────────────────────────────────────────────────

_EMAIL_RE = re.compile(
    r"(?<![\w.+\-])(?P<user>[A-Za-z0-9][A-Za-z0-9._%+\-]*)\s?(?:@|\[at\]|\(at\))\s?"
    rf"(?P<host>{_LABEL}(?:{_DOT}{_LABEL})+)",
    re.IGNORECASE,
)
_PHONE_RE = re.compile(
    r"(?<![0-9])\+?\(?\d[\dOoIlSB().\- ]{5,}[\dOoIlSB](?![A-Za-z0-9])"
)
_PHONE_SEPARATORS = "().- "
_HOMOGLYPHS = str.maketrans({"O": "0", "o": "0", "l": "1", "I": "1", "S": "5", "B": "8"})
_NUMBER_RE = re.compile(r"(?<![\w])\d+(?:[.,]\d+)*(?![\w])")
_MIN_PHONE_DIGITS = 7
_MAX_PHONE_DIGITS = 15


class _Claims:
    """Tracks claimed character ranges so detectors never overlap."""

    def __init__(self):
        self._spans: List[Tuple[int, int]] = []

    def free(self, start: int, end: int) -> bool:
        return not any(s < end and start < e for s, e in self._spans)

    def claim(self, start: int, end: int) -> None:
        self._spans.append((start, end))


def _prev_word(text: str, start: int) -> str:
    before = text[:start].split()
    return before[-1].strip(".,;:!?\"'()").lower() if before else ""


def _accept_host(text: str, start: int, end: int, labels, has_scheme: bool,
                 has_www: bool, has_path: bool, tables: TldTables,
                 lexicon: EntityLexicon) -> bool:
    host = ".".join(l for l, _, _ in labels).lower()
    if _is_ipv4(host):
        return True
    tld = labels[-1][0].lower()
    if not tables.is_valid_tld(tld):
        return False
    if has_scheme or has_www or tables.is_shortener(host):
        return True
    label = labels[-2][0].lower()
    if label not in lexicon.common_words or has_path:
        return True
    # A known word glued to a TLD is a URL only for abused TLDs, and not
    # when it closes a sentence after another known word.
    if tables.category(tld) not in ("bad", "suspicious"):
        return False
    if start > 0 and not text[start - 1].isspace():
        return False
    sentence_final = bool(_SENTENCE_FINAL_RE.match(text[end:]))
    return not (sentence_final and _prev_word(text, start) in lexicon.common_words)


def _url_entity(text: str, m, has_scheme: bool, tables: TldTables,
                lexicon: EntityLexicon, claims: _Claims) -> Optional[Entity]:
    host_raw = m.group("host")
    host_start = m.start("host")
    labels = _split_labels(host_raw)
    if any(not l for l, _, _ in labels):
        return None
    rest = m.group("rest") or ""

    # "spamdomain.com.Support": stop at a valid TLD followed by a capitalized word
    for j in range(1, len(labels) - 1):
        if tables.is_valid_tld(labels[j][0]) and _CAPITALIZED_RE.match(labels[j + 1][0]):
            labels = labels[:j + 1]
            rest = ""
            break
    if len(labels) < 2 and not has_scheme:
        return None

    start = m.start()
    end = host_start + labels[-1][2] + len(rest)
    while end > start and text[end - 1] in _TRAILING_PUNCT:
        end -= 1
        if rest:
            rest = rest[:-1]
    if not claims.free(start, end):
        return None

    has_www = labels[0][0].lower() == "www" and len(labels) > 2
    if not _accept_host(text, start, end, labels, has_scheme, has_www, bool(rest),
                        tables, lexicon):
        return None

    host = ".".join(l for l, _, _ in labels).lower()
    canonical = host + rest.lower()
    if has_scheme:
        canonical = m.group("scheme").lower() + "://" + canonical
    return Entity(EntityKind.URL, text[start:end], canonical, (start, end))


def _phone_entity(text: str, m, claims: _Claims) -> Optional[Entity]:
    raw = m.group()
    # Drop a trailing separated segment made only of look-alike letters ("555 1234 I")
    segments = re.split(r"([().\- ]+)", raw)
    while len(segments) > 2 and not any(c.isdigit() for c in segments[-1]):
        segments = segments[:-2]
    raw = "".join(segments).rstrip(_PHONE_SEPARATORS)
    start = m.start()
    end = start + len(raw)
    digits = "".join(c for c in raw.translate(_HOMOGLYPHS) if c.isdigit())
    if not _MIN_PHONE_DIGITS <= len(digits) <= _MAX_PHONE_DIGITS:
        return None
    if not claims.free(start, end):
        return None
    return Entity(EntityKind.PHONE, raw, digits, (start, end))


def extract_entities(text: str, tables: Optional[TldTables] = None,
                     lexicon: Optional[EntityLexicon] = None) -> EntitySet:
    """Extract all entities of ``text``; bundled tables are used when omitted."""
    if not text:
        return EntitySet()
    tables = tables or default_tld_tables()
    lexicon = lexicon or default_entity_lexicon()
    claims = _Claims()
    found: List[Entity] = []

    def add(entity: Optional[Entity]) -> None:
        if entity is not None:
            claims.claim(*entity.span)
            found.append(entity)

    for m in _EMAIL_RE.finditer(text):
        host = _OBFUSCATED_DOT_RE.sub(".", m.group("host")).lower()
        if not tables.is_valid_tld(host.rsplit(".", 1)[-1]):
            continue
        canonical = f"{m.group('user').lower()}@{host}"
        if claims.free(*m.span()):
            add(Entity(EntityKind.EMAIL, m.group(), canonical, m.span()))

    for m in _SCHEME_URL_RE.finditer(text):
        add(_url_entity(text, m, True, tables, lexicon, claims))
    for m in _BARE_URL_RE.finditer(text):
        add(_url_entity(text, m, False, tables, lexicon, claims))

    for m in _PHONE_RE.finditer(text):
        add(_phone_entity(text, m, claims))

    if lexicon._currency_re is not None:
        for m in lexicon._currency_re.finditer(text):
            if claims.free(*m.span()):
                canonical = re.sub(r"\s+", "", m.group().lower())
                add(Entity(EntityKind.CURRENCY, m.group(), canonical, m.span()))

    for pattern in lexicon._timex_re:
        for m in pattern.finditer(text):
            if m.end() > m.start() and claims.free(*m.span()):
                add(Entity(EntityKind.TIMEX, m.group(), m.group().lower(), m.span()))

    for m in _NUMBER_RE.finditer(text):
        if claims.free(*m.span()):
            add(Entity(EntityKind.NUMBER, m.group(), m.group().replace(",", ""), m.span()))

    return EntitySet(found)
