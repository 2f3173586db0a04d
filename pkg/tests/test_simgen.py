"""Tests for smsguard synthetic corpus generation."""

import dataclasses

import pytest

from smsguard.errors import GenConfigError
from smsguard.model import Label
from smsguard.simgen import (
    DAY,
    WEEK,
    CampaignSpec,
    CtaKind,
    SenderStrategy,
    Targeting,
    allocate,
    gen_domains,
    gen_messages,
    gen_replay_stream,
    gen_sender_streams,
    load_genconfig,
)

OBFUSCATIONS = {"word_homoglyph", "dot_insertion", "url_case", "url_brackets",
                "url_capital_tail", "phone_homoglyph", "phone_separators", "phone_glue"}


def campaign(level=0.0, cta=CtaKind.URL, template="win a {prize} at {url} code {code}",
             strategy=SenderStrategy.FAST_SINGLE, targeting=Targeting.RANDOM_UNIFORM, volume=50):
    return CampaignSpec("test", template, cta, level, volume, strategy, targeting)


def only(cfg, spec, **counts):
    return dataclasses.replace(cfg, campaigns=((spec, 1.0),), **counts)


# ── Messages ─────────────────────────────────────────────────────────


def test_same_seed_same_corpus(genconfig, resources):
    """A seed fixes the corpus exactly."""
    assert gen_messages(genconfig, resources) == gen_messages(genconfig, resources)


def test_different_seed_different_corpus(genconfig, resources):
    """Changing the seed changes the texts."""
    a = [lm.message.text for lm in gen_messages(genconfig, resources)]
    b = [lm.message.text for lm in gen_messages(genconfig.with_counts(seed=4), resources)]
    assert a != b


def test_class_counts(small_corpus):
    """n_spam spam and n_ham ham messages."""
    labels = [lm.label for lm in small_corpus]
    assert labels.count(Label.SPAM) == 120
    assert labels.count(Label.HAM) == 120


def test_spam_texts_unique(small_corpus):
    """No spam text repeats."""
    spam = [lm.message.text for lm in small_corpus if lm.label is Label.SPAM]
    assert len(spam) == len(set(spam))


def test_message_ids_and_timestamps(small_corpus):
    """Ids are sequential and timestamps increase."""
    assert small_corpus[0].message.id == "m0000001"
    stamps = [lm.message.timestamp for lm in small_corpus]
    assert stamps == sorted(stamps)


def test_spam_records_campaign(small_corpus, genconfig):
    """Spam names its campaign; ham names none."""
    names = {c.name for c, _ in genconfig.campaigns}
    for lm in small_corpus:
        if lm.label is Label.SPAM:
            assert lm.campaign in names
        else:
            assert lm.campaign == ""


def test_no_spam(genconfig, resources):
    """n_spam=0 yields a ham-only corpus."""
    items = gen_messages(genconfig.with_counts(n_spam=0, n_ham=30), resources)
    assert len(items) == 30
    assert {lm.label for lm in items} == {Label.HAM}


def test_level_zero_is_clean(genconfig, resources):
    """Obfuscation level 0 applies no obfuscation."""
    cfg = only(genconfig, campaign(0.0), n_spam=40, n_ham=0)
    for lm in gen_messages(cfg, resources):
        assert not set(lm.transforms) & OBFUSCATIONS
        assert "http://" in lm.message.text


def test_level_one_always_obfuscates_url(genconfig, resources):
    """Obfuscation level 1 rewrites every URL."""
    cfg = only(genconfig, campaign(1.0), n_spam=40, n_ham=0)
    for lm in gen_messages(cfg, resources):
        assert {"url_case", "url_brackets"} & set(lm.transforms)


def test_level_one_implicit_campaign(genconfig, resources):
    """An implicit campaign at level 1 still has a word-level obfuscation."""
    spec = campaign(1.0, CtaKind.IMPLICIT, "reply YES for your {prize} today ref {code}")
    cfg = only(genconfig, spec, n_spam=30, n_ham=0)
    for lm in gen_messages(cfg, resources):
        assert {"word_homoglyph", "dot_insertion"} & set(lm.transforms)


def test_exhausted_campaign(genconfig, resources):
    """A template without variety cannot fill a large unique quota."""
    spec = campaign(0.0, CtaKind.IMPLICIT, "reply YES now")
    cfg = dataclasses.replace(only(genconfig, spec, n_spam=5, n_ham=0), contraction_rate=0.0)
    with pytest.raises(GenConfigError, match="unique"):
        gen_messages(cfg, resources)


# ── Sender streams ───────────────────────────────────────────────────


def _by_sender(items):
    out = {}
    for lm in items:
        out.setdefault(lm.message.sender, []).append(lm)
    return out


def test_stream_is_time_ordered(genconfig, resources):
    """The merged stream never goes back in time."""
    items = gen_sender_streams(genconfig, resources)
    stamps = [lm.message.timestamp for lm in items]
    assert stamps == sorted(stamps)


def test_fast_single_senders_are_fast(genconfig, resources):
    """fast_single spammers send every 1 to 5 seconds."""
    cfg = only(genconfig, campaign(0.3, volume=60))
    spam = [lm for lm in gen_sender_streams(cfg, resources) if lm.label is Label.SPAM]
    senders = _by_sender(spam)
    assert len(senders) == cfg.streams.spam_senders
    for msgs in senders.values():
        assert len(msgs) == 60
        span = msgs[-1].message.timestamp - msgs[0].message.timestamp
        assert span <= 5 * 59


def test_list_based_targets_consecutive_numbers(genconfig, resources):
    """list_based spammers walk a block of consecutive numbers."""
    spec = campaign(0.0, targeting=Targeting.LIST_BASED, strategy=SenderStrategy.SLOW_DISTRIBUTED)
    cfg = only(genconfig, spec)
    spam = [lm for lm in gen_sender_streams(cfg, resources) if lm.label is Label.SPAM]
    for msgs in _by_sender(spam).values():
        assert len({m.message.recipient[:6] for m in msgs}) == 1


def test_legit_senders_within_bounds(genconfig, resources):
    """Legit senders send between the configured minimum and maximum."""
    items = gen_sender_streams(genconfig.with_counts(n_spam=0), resources)
    senders = _by_sender(items)
    st = genconfig.streams
    assert len(senders) == st.legit_senders
    for msgs in senders.values():
        assert st.legit_messages_min <= len(msgs) <= st.legit_messages_max
        assert {lm.label for lm in msgs} == {Label.HAM}


def test_stream_stays_within_days(genconfig, resources):
    """Every message falls inside the configured days."""
    st = genconfig.streams
    for lm in gen_sender_streams(genconfig, resources):
        assert st.start_ts <= lm.message.timestamp < st.start_ts + st.days * DAY


# ── Domains ──────────────────────────────────────────────────────────


def test_domains_unique_and_labeled(genconfig, resources):
    """Spam domains use bad or suspicious TLDs; all domains are distinct."""
    cfg = dataclasses.replace(genconfig, n_domains_spam=100, n_domains_ham=100)
    pairs = gen_domains(cfg, resources)
    assert len({d for d, _ in pairs}) == len(pairs)
    tables = resources.tld_tables
    spam = [d for d, label in pairs if label is Label.SPAM]
    assert len(spam) == 100
    for d in spam:
        tld = d.rsplit(".", 1)[1]
        assert tld in tables.bad or tld in tables.suspicious


# ── Replay stream ────────────────────────────────────────────────────


@pytest.fixture(scope="module")
def small_replay(genconfig, resources):
    cfg = dataclasses.replace(genconfig, weekly_spam_senders=2, weekly_legit_senders=2)
    return gen_replay_stream(cfg, weeks=4, novel_week=2, resources=resources)


def test_novel_campaign_only_in_its_week(small_replay, genconfig):
    """The novel campaign's messages all fall in the novel week."""
    start = genconfig.streams.start_ts
    novel = [lm for lm in small_replay if lm.campaign == genconfig.novel.name]
    assert novel
    for lm in novel:
        assert int((lm.message.timestamp - start) // WEEK) == 2


def test_replay_covers_every_week(small_replay, genconfig):
    """Each week has traffic of both classes."""
    start = genconfig.streams.start_ts
    weeks = {}
    for lm in small_replay:
        weeks.setdefault(int((lm.message.timestamp - start) // WEEK), set()).add(lm.label)
    assert weeks == {w: {Label.HAM, Label.SPAM} for w in range(4)}


@pytest.mark.parametrize("kwargs", [{"weeks": 0}, {"weeks": 3, "novel_week": 3}])
def test_replay_invalid_weeks(genconfig, kwargs):
    """Week counts and the novel week are validated."""
    with pytest.raises(GenConfigError):
        gen_replay_stream(genconfig, **kwargs)


def test_replay_needs_novel_campaign(genconfig):
    """A novel week without a [novel] campaign is an error."""
    with pytest.raises(GenConfigError, match="novel"):
        gen_replay_stream(dataclasses.replace(genconfig, novel=None), weeks=3, novel_week=1)


# ── Config ───────────────────────────────────────────────────────────


def test_bundled_config_loads():
    """The bundled generator config validates."""
    cfg = load_genconfig()
    assert len(cfg.campaigns) == 10
    assert all(c.volume >= 50 for c, _ in cfg.campaigns)
    assert cfg.novel.cta_kind is CtaKind.IMPLICIT


def test_weights_must_sum_to_one(genconfig):
    """Campaign weights are a distribution."""
    with pytest.raises(GenConfigError, match="sum"):
        dataclasses.replace(genconfig, campaigns=((campaign(), 0.5),))


def test_unknown_slot_rejected(genconfig):
    """Every template slot needs a synonym list."""
    with pytest.raises(GenConfigError, match="nonsense"):
        only(genconfig, campaign(template="go to {url} for {nonsense}"))


@pytest.mark.parametrize("kwargs, match", [
    ({"cta": CtaKind.URL, "template": "call {phone}"}, r"\{url\} slot"),
    ({"cta": CtaKind.PHONE, "template": "visit {url}"}, r"\{phone\} slot"),
    ({"cta": CtaKind.IMPLICIT, "template": "visit {url}"}, "implicit"),
    ({"volume": 0}, "volume"),
    ({"level": 1.5}, "obfuscation_level"),
])
def test_campaign_validation(kwargs, match):
    """Campaigns must be internally consistent."""
    with pytest.raises(GenConfigError, match=match):
        campaign(**kwargs)


def test_load_rejects_unknown_section(tmp_path):
    """Unknown TOML sections are refused."""
    path = tmp_path / "gen.toml"
    path.write_text("[bogus]\nx = 1\n", encoding="utf-8")
    with pytest.raises(GenConfigError, match="unknown sections"):
        load_genconfig(path)


@pytest.mark.parametrize("total, weights, expected", [
    (10, [0.5, 0.5], [5, 5]),
    (10, [1, 1, 1], [4, 3, 3]),
    (7, [0.1, 0.9], [1, 6]),
    (0, [1.0], [0]),
])
def test_allocate(total, weights, expected):
    """Largest-remainder split, ties to the earlier weight."""
    assert allocate(total, weights) == expected
    assert sum(allocate(total, weights)) == total
