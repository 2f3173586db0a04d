"""
Deterministic synthetic corpora: labeled messages, sender streams,
domains and a multi-week replay stream.

The generator stands in for private operator traffic. Spam comes from
campaign templates whose slots are filled from synonym lists, rewritten
with SMS variants (the normalization lexicon run in reverse) and
obfuscated in proportion to the campaign's obfuscation level: homoglyph
digits, dot insertion, bracketed dots, mixed-case hosts and a
capitalized word glued after the TLD. Ham comes from conversational
templates. Everything is drawn from one ``random.Random(seed)``, so a
seed fixes the output byte for byte.
"""

import dataclasses
import enum
import logging
import random
import re
import string
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from ._datafiles import iter_entries, read_sections, read_text
from .errors import GenConfigError
from .messages import LabeledMessage, Message
from .model import Label

log = logging.getLogger(__name__)

PathLike = Union[str, Path]

DAY = 86400
WEEK = 7 * DAY

_SLOT_RE = re.compile(r"\{(\w+)\}")
_GENERATED_SLOTS = {"url", "phone", "code", "benign_url", "ham_phone"}
_WORD_HOMOGLYPHS = {"o": "0", "i": "1", "e": "3", "a": "4", "s": "5"}
_PHONE_HOMOGLYPHS = {"0": "O", "1": "l", "5": "S", "8": "B"}
_AREA_CODES = ("213", "305", "312", "415", "469", "512", "555", "646", "702", "818")
_UNIQUE_RETRIES = 50


class CtaKind(str, enum.Enum):
    URL = "url"
    PHONE = "phone"
    IMPLICIT = "implicit"


class SenderStrategy(str, enum.Enum):
    FAST_SINGLE = "fast_single"
    SLOW_DISTRIBUTED = "slow_distributed"


class Targeting(str, enum.Enum):
    RANDOM_UNIFORM = "random_uniform"
    LIST_BASED = "list_based"


@dataclasses.dataclass(frozen=True)
class CampaignSpec:
    name: str
    template: str
    cta_kind: CtaKind
    obfuscation_level: float
    volume: int
    sender_strategy: SenderStrategy
    targeting: Targeting

    def __post_init__(self):
        if self.volume <= 0:
            raise GenConfigError(f"campaign {self.name!r}: volume must be > 0")
        if not 0.0 <= self.obfuscation_level <= 1.0:
            raise GenConfigError(f"campaign {self.name!r}: obfuscation_level must be within [0, 1]")
        slots = set(_SLOT_RE.findall(self.template))
        if self.cta_kind is CtaKind.URL and "url" not in slots:
            raise GenConfigError(f"campaign {self.name!r}: url campaign without a {{url}} slot")
        if self.cta_kind is CtaKind.PHONE and "phone" not in slots:
            raise GenConfigError(f"campaign {self.name!r}: phone campaign without a {{phone}} slot")
        if self.cta_kind is CtaKind.IMPLICIT and slots & {"url", "phone"}:
            raise GenConfigError(f"campaign {self.name!r}: implicit campaign with a url or phone slot")


@dataclasses.dataclass(frozen=True)
class StreamSpec:
    spam_senders: int = 200
    legit_senders: int = 200
    start_ts: int = 1767571200
    days: int = 7
    legit_messages_min: int = 50
    legit_messages_max: int = 80
    us_networks: Tuple[str, ...] = ("att", "verizon", "tmobile")
    foreign_networks: Tuple[str, ...] = ("vodafone", "movistar")
    foreign_spam_rate: float = 0.6
    foreign_legit_rate: float = 0.03


@dataclasses.dataclass(frozen=True)
class GenConfig:
    seed: int
    n_spam: int
    n_ham: int
    campaigns: Tuple[Tuple[CampaignSpec, float], ...]
    ham_templates: Tuple[str, ...]
    synonyms: Dict[str, Tuple[str, ...]]
    domain_stems: Dict[str, Tuple[str, ...]]
    url_rate: float = 0.08
    contraction_rate: float = 0.35
    streams: StreamSpec = StreamSpec()
    n_domains_spam: int = 1000
    n_domains_ham: int = 1000
    weekly_spam_senders: int = 20
    weekly_legit_senders: int = 20
    novel_share: float = 1.0
    novel: Optional[CampaignSpec] = None

    def __post_init__(self):
        if self.n_spam < 0 or self.n_ham < 0:
            raise GenConfigError("n_spam and n_ham must be >= 0")
        if self.n_spam and not self.campaigns:
            raise GenConfigError("spam requested but no campaigns configured")
        if self.campaigns:
            total = sum(w for _, w in self.campaigns)
            if abs(total - 1.0) > 1e-6:
                raise GenConfigError(f"campaign weights sum to {total:.6f}, expected 1")
            if any(w < 0 for _, w in self.campaigns):
                raise GenConfigError("campaign weights must be >= 0")
        if self.n_ham and not self.ham_templates:
            raise GenConfigError("ham requested but no ham templates configured")
        for rate, name in ((self.url_rate, "url_rate"), (self.contraction_rate, "contraction_rate")):
            if not 0.0 <= rate <= 1.0:
                raise GenConfigError(f"{name} must be within [0, 1]")
        templates = [c.template for c, _ in self.campaigns] + list(self.ham_templates)
        if self.novel is not None:
            templates.append(self.novel.template)
        for t in templates:
            for slot in _SLOT_RE.findall(t):
                if slot not in _GENERATED_SLOTS and slot not in self.synonyms:
                    raise GenConfigError(f"template slot {{{slot}}} has no synonym list: {t!r}")

    def with_counts(self, n_spam: Optional[int] = None, n_ham: Optional[int] = None,
                    seed: Optional[int] = None) -> "GenConfig":
        updates = {k: v for k, v in (("n_spam", n_spam), ("n_ham", n_ham), ("seed", seed))
                   if v is not None}
        return dataclasses.replace(self, **updates)

    def with_streams(self, **kwargs) -> "GenConfig":
        return dataclasses.replace(self, streams=dataclasses.replace(self.streams, **kwargs))


# ── Loading ──────────────────────────────────────────────────────────


_TOP_KEYS = {"corpus", "ham", "streams", "domains", "replay", "novel", "campaign"}


def _campaign(table: dict, where: str) -> Tuple[CampaignSpec, float]:
    known = {"name", "template", "cta_kind", "obfuscation_level", "volume",
             "sender_strategy", "targeting", "weight"}
    unknown = set(table) - known
    if unknown:
        raise GenConfigError(f"{where}: unknown keys {', '.join(sorted(unknown))}")
    try:
        spec = CampaignSpec(
            name=str(table["name"]),
            template=str(table["template"]),
            cta_kind=CtaKind(table["cta_kind"]),
            obfuscation_level=float(table.get("obfuscation_level", 0.0)),
            volume=int(table["volume"]),
            sender_strategy=SenderStrategy(table.get("sender_strategy", "fast_single")),
            targeting=Targeting(table.get("targeting", "random_uniform")),
        )
    except KeyError as e:
        raise GenConfigError(f"{where}: missing key {e.args[0]}") from None
    except ValueError as e:
        if isinstance(e, GenConfigError):
            raise
        raise GenConfigError(f"{where}: {e}") from None
    return spec, float(table.get("weight", 0.0))


def _read_list(path: Path) -> Tuple[str, ...]:
    return tuple(line for _, line in iter_entries(read_text(path, GenConfigError)))


def load_genconfig(path: Optional[PathLike] = None) -> GenConfig:
    """Load a generator TOML file; data file names resolve next to it.

    Raises:
        GenConfigError: unreadable file, unknown keys, invalid values.
    """
    from ._paths import bundled_path
    from .config import _parse_toml

    path = Path(path) if path is not None else bundled_path("simgen/genconfig.toml")
    try:
        parsed = _parse_toml(read_text(path, GenConfigError))
    except GenConfigError:
        raise
    except Exception as e:
        raise GenConfigError(f"could not parse {path}: {e}") from e
    unknown = set(parsed) - _TOP_KEYS
    if unknown:
        raise GenConfigError(f"{path}: unknown sections {', '.join(sorted(unknown))}")

    base = path.parent
    corpus = parsed.get("corpus", {})
    ham = parsed.get("ham", {})
    streams = parsed.get("streams", {})
    domains = parsed.get("domains", {})
    replay = parsed.get("replay", {})
    stream_fields = {f.name for f in dataclasses.fields(StreamSpec)}
    if set(streams) - stream_fields:
        raise GenConfigError(f"{path}: unknown [streams] keys {sorted(set(streams) - stream_fields)}")
    streams = {k: tuple(v) if isinstance(v, list) else v for k, v in streams.items()}

    try:
        cfg = GenConfig(
            seed=int(corpus.get("seed", 0)),
            n_spam=int(corpus.get("n_spam", 10000)),
            n_ham=int(corpus.get("n_ham", 10000)),
            campaigns=tuple(_campaign(t, f"{path}: campaign {i}")
                            for i, t in enumerate(parsed.get("campaign", []))),
            ham_templates=_read_list(base / ham.get("templates", "ham_templates.txt")),
            synonyms={k: tuple(v) for k, v in read_sections(
                base / ham.get("synonyms", "synonyms.txt"), GenConfigError).items()},
            domain_stems={k: tuple(v) for k, v in read_sections(
                base / ham.get("domain_stems", "domain_stems.txt"), GenConfigError).items()},
            url_rate=float(ham.get("url_rate", 0.08)),
            contraction_rate=float(ham.get("contraction_rate", 0.35)),
            streams=StreamSpec(**streams),
            n_domains_spam=int(domains.get("n_spam", 1000)),
            n_domains_ham=int(domains.get("n_ham", 1000)),
            weekly_spam_senders=int(replay.get("weekly_spam_senders", 20)),
            weekly_legit_senders=int(replay.get("weekly_legit_senders", 20)),
            novel_share=float(replay.get("novel_share", 1.0)),
            novel=_campaign(parsed["novel"], f"{path}: [novel]")[0] if "novel" in parsed else None,
        )
    except (TypeError, ValueError) as e:
        if isinstance(e, GenConfigError):
            raise
        raise GenConfigError(f"{path}: {e}") from None
    log.debug("loaded generator config %s: %d campaigns", path, len(cfg.campaigns))
    return cfg


def allocate(total: int, weights: Sequence[float]) -> List[int]:
    """Split ``total`` by ``weights`` with the largest-remainder rule."""
    if total <= 0 or not weights:
        return [0] * len(weights)
    wsum = sum(weights)
    exact = [total * w / wsum for w in weights]
    counts = [int(x) for x in exact]
    order = sorted(range(len(weights)), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in order[:total - sum(counts)]:
        counts[i] += 1
    return counts


# ── Text generation ──────────────────────────────────────────────────


@dataclasses.dataclass
class _Segment:
    text: str
    kind: str = "text"


@dataclasses.dataclass(frozen=True)
class _Record:
    ts: int
    sender: str
    recipient: str
    orig_net: str
    dest_net: str
    text: str
    label: Label
    campaign: str
    transforms: Tuple[str, ...]


class _Generator:
    def __init__(self, cfg: GenConfig, resources=None):
        from .resources import default_resources

        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        resources = resources or default_resources()
        self.variants = resources.lexicon.reverse()
        tables = resources.tld_tables
        self.spam_tlds = sorted(t for t in tables.bad | tables.suspicious if t.isalpha() and len(t) >= 2)
        self.normal_tlds = sorted(t for t in tables.normal if t.isalpha())
        self.ham_templates_url = [t for t in cfg.ham_templates if "{benign_url}" in t]
        self.ham_templates_plain = [t for t in cfg.ham_templates if "{benign_url}" not in t]

    # slot values

    def _code(self, n: int = 4) -> str:
        return "".join(self.rng.choice(string.ascii_uppercase + string.digits) for _ in range(n))

    def _path(self) -> str:
        return "".join(self.rng.choice(string.ascii_lowercase + string.digits)
                       for _ in range(self.rng.randint(3, 6)))

    def spam_domain(self) -> str:
        rng = self.rng
        stems = self.cfg.domain_stems.get("spam", ("cash",))
        label = rng.choice(stems)
        roll = rng.random()
        if roll < 0.25:
            label = str(rng.randint(2010, 2026)) + label
        elif roll < 0.45:
            label = label + rng.choice(("4u", "24", "365", "1", "00", "now"))
        elif roll < 0.65:
            label = label + "-" + rng.choice(stems)
        return f"{label}.{rng.choice(self.spam_tlds)}"

    def benign_domain(self) -> str:
        rng = self.rng
        hosts = self.cfg.domain_stems.get("ham", ())
        if hosts and rng.random() < 0.5:
            return rng.choice(hosts)
        stems = self.cfg.domain_stems.get("benign", ("example",))
        label = rng.choice(stems)
        if rng.random() < 0.3:
            label += rng.choice(stems)
        return f"{label}.{rng.choice(self.normal_tlds)}"

    def phone(self) -> str:
        rng = self.rng
        return rng.choice(_AREA_CODES) + str(rng.randint(200, 999)) + f"{rng.randint(0, 9999):04d}"

    def _fill(self, template: str, url_form: str = "scheme") -> List[_Segment]:
        segments: List[_Segment] = []
        pos = 0
        for m in _SLOT_RE.finditer(template):
            if m.start() > pos:
                segments.append(_Segment(template[pos:m.start()]))
            slot = m.group(1)
            if slot == "url":
                segments.append(_Segment(self._spam_url(url_form), "url"))
            elif slot == "phone":
                segments.append(_Segment(self.phone(), "phone"))
            elif slot == "code":
                segments.append(_Segment(self._code()))
            elif slot == "benign_url":
                host = self.benign_domain()
                form = self.rng.choice(("https://{h}/{p}", "www.{h}", "http://{h}/{p}"))
                if host.startswith("www.") or host.count(".") > 1:
                    form = "https://{h}/{p}"
                segments.append(_Segment(form.format(h=host, p=self._path()), "url"))
            elif slot == "ham_phone":
                p = self.phone()
                segments.append(_Segment(f"{p[:3]} {p[3:6]} {p[6:]}", "phone"))
            else:
                segments.append(_Segment(self.rng.choice(self.cfg.synonyms[slot])))
            pos = m.end()
        if pos < len(template):
            segments.append(_Segment(template[pos:]))
        return segments

    def _spam_url(self, form: str) -> str:
        domain, path = self.spam_domain(), self._path()
        return {
            "scheme": f"http://{domain}/{path}",
            "https": f"https://{domain}/{path}",
            "www": f"www.{domain}/{path}",
            "bare_path": f"{domain}/{path}",
            "bare": domain,
        }[form]

    # rewriting

    def _contract(self, segments: List[_Segment], rate: float) -> bool:
        changed = False
        for seg in segments:
            if seg.kind != "text" or rate <= 0:
                continue
            out = []
            for token in re.split(r"(\s+)", seg.text):
                core = token.strip(string.punctuation)
                options = self.variants.get(core.lower()) if core else None
                if options and self.rng.random() < rate:
                    i = token.find(core)
                    token = token[:i] + self.rng.choice(options) + token[i + len(core):]
                    changed = True
                out.append(token)
            seg.text = "".join(out)
        return changed

    def _word_candidates(self, segments, min_len: int):
        found = []
        for si, seg in enumerate(segments):
            if seg.kind != "text":
                continue
            for m in re.finditer(r"[A-Za-z]+", seg.text):
                if len(m.group()) >= min_len:
                    found.append((si, m.start(), m.end()))
        return found

    def _homoglyph_word(self, segments) -> bool:
        cands = [c for c in self._word_candidates(segments, 4)
                 if any(ch.lower() in _WORD_HOMOGLYPHS for ch in segments[c[0]].text[c[1]:c[2]])]
        if not cands:
            return False
        si, a, b = self.rng.choice(cands)
        word = segments[si].text[a:b]
        positions = [i for i, ch in enumerate(word) if ch.lower() in _WORD_HOMOGLYPHS]
        chosen = [i for i in positions if self.rng.random() < 0.6] or [self.rng.choice(positions)]
        chars = list(word)
        for i in chosen:
            chars[i] = _WORD_HOMOGLYPHS[chars[i].lower()]
        segments[si].text = segments[si].text[:a] + "".join(chars) + segments[si].text[b:]
        return True

    def _insert_dots(self, segments) -> bool:
        cands = [c for c in self._word_candidates(segments, 3) if c[2] - c[1] <= 6]
        if not cands:
            return False
        si, a, b = self.rng.choice(cands)
        text = segments[si].text
        segments[si].text = text[:a] + ".".join(text[a:b]) + text[b:]
        return True

    def _obfuscate_url(self, segments, i: int, level: float, force: bool) -> List[str]:
        seg = segments[i]
        done = []
        m = re.match(r"^(?P<scheme>https?://)?(?P<host>[^/]+)(?P<rest>/.*)?$", seg.text)
        scheme, host, rest = m.group("scheme") or "", m.group("host"), m.group("rest") or ""
        use_case = self.rng.random() < level
        use_brackets = self.rng.random() < level
        if force and not (use_case or use_brackets):
            use_case = True
        if use_case and any(c.isalpha() for c in host):
            letters = [j for j, c in enumerate(host) if c.isalpha()]
            upper = {j for j in letters if self.rng.random() < 0.5} or {self.rng.choice(letters)}
            host = "".join(c.upper() if j in upper else c for j, c in enumerate(host))
            done.append("url_case")
        if use_brackets:
            host = host.replace(".", self.rng.choice(("[.]", "(dot)", "[dot]")))
            done.append("url_brackets")
        seg.text = scheme + host + rest
        nxt = segments[i + 1] if i + 1 < len(segments) else None
        if (not scheme and not rest and nxt is not None and nxt.kind == "text"
                and re.match(r"^ [a-z]", nxt.text) and self.rng.random() < level):
            word = re.match(r"^ (\S+)", nxt.text).group(1)
            nxt.text = "." + word.capitalize() + nxt.text[len(word) + 1:]
            done.append("url_capital_tail")
        return done

    def _obfuscate_phone(self, segments, i: int, level: float, force: bool) -> List[str]:
        seg = segments[i]
        done = []
        digits = seg.text
        use_glyphs = self.rng.random() < level
        use_seps = self.rng.random() < level
        eligible = [j for j in range(1, len(digits)) if digits[j] in _PHONE_HOMOGLYPHS]
        if force and not (use_glyphs and eligible) and not use_seps:
            use_glyphs, use_seps = bool(eligible), not eligible
        chars = list(digits)
        if use_glyphs and eligible:
            chosen = [j for j in eligible if self.rng.random() < 0.6] or [self.rng.choice(eligible)]
            for j in chosen:
                chars[j] = _PHONE_HOMOGLYPHS[chars[j]]
            done.append("phone_homoglyph")
        text = "".join(chars)
        if use_seps and len(text) == 10:
            sep = self.rng.choice(("-", ".", " "))
            text = (f"({text[:3]}) {text[3:6]}-{text[6:]}" if self.rng.random() < 0.3
                    else sep.join((text[:3], text[3:6], text[6:])))
            done.append("phone_separators")
        seg.text = text
        prev = segments[i - 1] if i > 0 else None
        if (prev is not None and prev.kind == "text" and prev.text.endswith(" ")
                and prev.text.strip() and self.rng.random() < level / 2):
            prev.text = prev.text.rstrip(" ")
            done.append("phone_glue")
        return done

    def spam_text(self, campaign: CampaignSpec) -> Tuple[str, Tuple[str, ...]]:
        level = campaign.obfuscation_level
        form = "scheme"
        if level > 0:
            form = self.rng.choice(("scheme", "https", "www", "bare_path", "bare"))
        segments = self._fill(campaign.template, form)
        transforms: List[str] = []
        if self._contract(segments, self.cfg.contraction_rate):
            transforms.append("contraction")
        if level > 0:
            if self.rng.random() < level and self._homoglyph_word(segments):
                transforms.append("word_homoglyph")
            if self.rng.random() < level / 2 and self._insert_dots(segments):
                transforms.append("dot_insertion")
        force = level >= 1.0
        for i, seg in enumerate(list(segments)):
            if seg.kind == "url" and level > 0:
                transforms += self._obfuscate_url(segments, i, level, force)
            elif seg.kind == "phone" and level > 0:
                transforms += self._obfuscate_phone(segments, i, level, force)
        if force and campaign.cta_kind is CtaKind.IMPLICIT and not (
                {"word_homoglyph", "dot_insertion"} & set(transforms)):
            if self._homoglyph_word(segments):
                transforms.append("word_homoglyph")
            elif self._insert_dots(segments):
                transforms.append("dot_insertion")
        return "".join(s.text for s in segments), tuple(transforms)

    def ham_text(self) -> Tuple[str, Tuple[str, ...]]:
        rng = self.rng
        pool = self.ham_templates_plain
        if self.ham_templates_url and (not pool or rng.random() < self.cfg.url_rate):
            pool = self.ham_templates_url
        segments = self._fill(rng.choice(pool))
        transforms = ("contraction",) if self._contract(segments, self.cfg.contraction_rate) else ()
        text = "".join(s.text for s in segments)
        if rng.random() < 0.3:
            text = text.capitalize()
        return text, transforms

    def unique_spam(self, campaign: CampaignSpec, seen: set) -> Tuple[str, Tuple[str, ...]]:
        for _ in range(_UNIQUE_RETRIES):
            text, transforms = self.spam_text(campaign)
            if text not in seen:
                seen.add(text)
                return text, transforms
        raise GenConfigError(
            f"campaign {campaign.name!r} cannot produce more unique texts; "
            f"add slots or synonyms to its template"
        )

    # streams

    def sender_id(self, used: set) -> str:
        while True:
            s = "1" + "".join(self.rng.choice(string.digits) for _ in range(10))
            if s not in used:
                used.add(s)
                return s

    def networks(self, foreign_rate: float) -> Tuple[str, str]:
        st = self.cfg.streams
        pool = st.foreign_networks if (st.foreign_networks and self.rng.random() < foreign_rate) \
            else st.us_networks
        return self.rng.choice(pool), self.rng.choice(st.us_networks)

    def spam_sender(self, campaign: CampaignSpec, start: int, span: int, used: set) -> List[_Record]:
        rng = self.rng
        sender = self.sender_id(used)
        orig, _ = self.networks(self.cfg.streams.foreign_spam_rate)
        n = campaign.volume
        if campaign.sender_strategy is SenderStrategy.FAST_SINGLE:
            gaps = [rng.randint(1, 5) for _ in range(n - 1)]
        else:
            gaps = [rng.randint(600, 7200) for _ in range(n - 1)]
        duration = sum(gaps)
        t = start + rng.randint(0, max(0, span - duration - 1))
        if campaign.targeting is Targeting.LIST_BASED:
            base = rng.choice(_AREA_CODES) + str(rng.randint(200, 999))
            first = rng.randint(0, 9999 - n)
            recipients = [f"{base}{first + k:04d}" for k in range(n)]
        else:
            recipients = [self.phone() for _ in range(n)]
        out = []
        for k in range(n):
            text, transforms = self.spam_text(campaign)
            _, dest = self.networks(0.0)
            out.append(_Record(t, sender, recipients[k], orig, dest, text, Label.SPAM,
                               campaign.name, transforms))
            if k < n - 1:
                t += gaps[k]
        return out

    def legit_sender(self, start: int, span: int, used: set) -> List[_Record]:
        rng = self.rng
        st = self.cfg.streams
        sender = self.sender_id(used)
        orig, _ = self.networks(st.foreign_legit_rate)
        contacts = [self.phone() for _ in range(rng.randint(3, 15))]
        n = rng.randint(st.legit_messages_min, st.legit_messages_max)
        stamps = sorted(start + rng.randint(0, span - 1) for _ in range(n))
        out = []
        for t in stamps:
            text, transforms = self.ham_text()
            _, dest = self.networks(0.0)
            out.append(_Record(t, sender, rng.choice(contacts), orig, dest, text, Label.HAM,
                               "", transforms))
        return out

    def stream(self, start: int, span: int, n_spam: int, n_legit: int,
               campaigns: Sequence[Tuple[CampaignSpec, float]], used: set) -> List[_Record]:
        records: List[_Record] = []
        counts = allocate(n_spam, [w for _, w in campaigns])
        for (campaign, _), count in zip(campaigns, counts):
            for _ in range(count):
                records.extend(self.spam_sender(campaign, start, span, used))
        for _ in range(n_legit):
            records.extend(self.legit_sender(start, span, used))
        return records


def _to_messages(records: List[_Record], prefix: str) -> List[LabeledMessage]:
    records = sorted(records, key=lambda r: (r.ts, r.sender, r.recipient, r.text))
    return [
        LabeledMessage(
            Message(f"{prefix}{i:07d}", float(r.ts), r.sender, r.recipient, r.orig_net, r.dest_net, r.text),
            r.label, r.transforms, r.campaign,
        )
        for i, r in enumerate(records, 1)
    ]


# ── Public operations ────────────────────────────────────────────────


def gen_messages(cfg: GenConfig, resources=None) -> List[LabeledMessage]:
    """Labeled spam and ham messages, shuffled; spam texts are unique."""
    gen = _Generator(cfg, resources)
    rng = gen.rng
    items: List[Tuple[str, Label, str, Tuple[str, ...]]] = []
    seen: set = set()
    counts = allocate(cfg.n_spam, [w for _, w in cfg.campaigns])
    for (campaign, _), count in zip(cfg.campaigns, counts):
        for _ in range(count):
            text, transforms = gen.unique_spam(campaign, seen)
            items.append((text, Label.SPAM, campaign.name, transforms))
    for _ in range(cfg.n_ham):
        text, transforms = gen.ham_text()
        items.append((text, Label.HAM, "", transforms))
    rng.shuffle(items)

    start = cfg.streams.start_ts
    out = [
        LabeledMessage(Message.from_text(text, id=f"m{i:07d}"), label, transforms, campaign)
        for i, (text, label, campaign, transforms) in enumerate(items, 1)
    ]
    out = [dataclasses.replace(lm, message=dataclasses.replace(lm.message, timestamp=float(start + i)))
           for i, lm in enumerate(out)]
    log.info("generated %d spam and %d ham messages (seed %d)", cfg.n_spam, cfg.n_ham, cfg.seed)
    return out


def gen_sender_streams(cfg: GenConfig, resources=None) -> List[LabeledMessage]:
    """One timestamp-ordered stream of spammer and legitimate senders.

    ``n_spam`` or ``n_ham`` of zero drops that class of senders.
    """
    gen = _Generator(cfg, resources)
    st = cfg.streams
    n_spam = st.spam_senders if cfg.n_spam else 0
    n_legit = st.legit_senders if cfg.n_ham else 0
    records = gen.stream(st.start_ts, st.days * DAY, n_spam, n_legit, cfg.campaigns, set())
    out = _to_messages(records, "s")
    log.info("generated stream: %d spam senders, %d legit senders, %d messages",
             n_spam, n_legit, len(out))
    return out


def gen_domains(cfg: GenConfig, resources=None) -> List[Tuple[str, Label]]:
    """Unique labeled registrable domains, spam first then ham, shuffled."""
    gen = _Generator(cfg, resources)
    out: List[Tuple[str, Label]] = []
    for n, make, label in ((cfg.n_domains_spam, gen.spam_domain, Label.SPAM),
                           (cfg.n_domains_ham, gen.benign_domain, Label.HAM)):
        seen: set = set()
        misses = 0
        while len(seen) < n and misses < _UNIQUE_RETRIES * max(n, 1):
            d = make()
            if d in seen:
                misses += 1
                continue
            seen.add(d)
            out.append((d, label))
        if len(seen) < n:
            log.warning("only %d unique %s domains could be generated", len(seen), label)
    gen.rng.shuffle(out)
    return out


def gen_replay_stream(cfg: GenConfig, weeks: int = 22, novel_week: Optional[int] = 12,
                      resources=None) -> List[LabeledMessage]:
    """A multi-week labeled stream; the novel campaign appears only in ``novel_week``.

    Weeks are numbered from 0. Every week brings fresh senders drawn from
    the regular campaign mix; the novel week adds
    ``novel_share × weekly_spam_senders`` senders of the novel campaign.
    """
    if weeks < 1:
        raise GenConfigError("weeks must be >= 1")
    if novel_week is not None and not 0 <= novel_week < weeks:
        raise GenConfigError(f"novel_week must be within [0, {weeks})")
    if novel_week is not None and cfg.novel is None:
        raise GenConfigError("generator config has no [novel] campaign")
    gen = _Generator(cfg, resources)
    used: set = set()
    records: List[_Record] = []
    for week in range(weeks):
        start = cfg.streams.start_ts + week * WEEK
        records += gen.stream(start, WEEK, cfg.weekly_spam_senders, cfg.weekly_legit_senders,
                              cfg.campaigns, used)
        if week == novel_week:
            n_novel = max(1, round(cfg.novel_share * cfg.weekly_spam_senders))
            for _ in range(n_novel):
                records += gen.spam_sender(cfg.novel, start, WEEK, used)
    out = _to_messages(records, "r")
    log.info("generated %d-week replay stream with %d messages", weeks, len(out))
    return out
