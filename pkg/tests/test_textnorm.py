"""Tests for smsguard lexical normalization."""

import random

import pytest

from smsguard.errors import LexiconError
from smsguard.textnorm import (
    Lexicon,
    apply_substitutions,
    default_lexicon,
    lexicon_key,
    load_lexicon,
    normalize,
    normalize_many,
)


@pytest.fixture
def lex():
    return Lexicon({"c": "see", "u": "you", "2nite": "tonight", "gr8": "great"})


# ── Loading ──────────────────────────────────────────────────────────


def test_load_single_entry(tmp_path):
    """A one-line file loads into a one-entry lexicon."""
    path = tmp_path / "lex.tsv"
    path.write_text("u\tyou\n", encoding="utf-8")
    lexicon = load_lexicon(path)
    assert dict(lexicon.entries) == {"u": "you"}


def test_load_skips_comments_and_blank_lines(tmp_path):
    """Comment and blank lines are ignored; a version comment is recorded."""
    path = tmp_path / "lex.tsv"
    path.write_text("# version: 7\n\n# shortenings\nu\tyou\nr\tare\n", encoding="utf-8")
    lexicon = load_lexicon(path)
    assert len(lexicon) == 2
    assert lexicon.version == "7"


def test_load_duplicate_key_rejected(tmp_path):
    """The same variant twice is an error naming the line."""
    path = tmp_path / "lex.tsv"
    path.write_text("u\tyou\nu\tyour\n", encoding="utf-8")
    with pytest.raises(LexiconError, match="line 2.*duplicate"):
        load_lexicon(path)


def test_load_chain_rejected(tmp_path):
    """A canonical that is itself a variant would need a second pass."""
    path = tmp_path / "lex.tsv"
    path.write_text("2nite\ttonight\ntonight\tnight\n", encoding="utf-8")
    with pytest.raises(LexiconError, match="chain"):
        load_lexicon(path)


def test_load_malformed_line(tmp_path):
    """A line without a TAB reports its line number."""
    path = tmp_path / "lex.tsv"
    path.write_text("u\tyou\nbroken line\n", encoding="utf-8")
    with pytest.raises(LexiconError, match="line 2"):
        load_lexicon(path)


def test_load_missing_file(tmp_path):
    """A missing lexicon file is a LexiconError, not an OSError."""
    with pytest.raises(LexiconError, match="not found"):
        load_lexicon(tmp_path / "nope.tsv")


def test_self_mapping_rejected():
    """An entry may not map a token to itself."""
    with pytest.raises(LexiconError, match="itself"):
        Lexicon({"you": "You"})


def test_bundled_lexicon_is_valid():
    """The bundled starter lexicon satisfies the no-chain invariant."""
    lexicon = default_lexicon()
    assert len(lexicon) >= 250
    for variant, canonical in lexicon.entries.items():
        assert lexicon_key(canonical) not in lexicon.entries, variant


def test_reverse_groups_variants(lex):
    """reverse() maps each canonical word to its sorted variants."""
    rev = Lexicon({"gr8": "great", "gr8t": "great", "u": "you"}).reverse()
    assert rev == {"great": ["gr8", "gr8t"], "you": ["u"]}


# ── normalize ────────────────────────────────────────────────────────


def test_normalize_basic(lex):
    """Every lexicon token is rewritten and recorded."""
    result = normalize("c u 2nite", lex)
    assert result.normalized == "see you tonight"
    assert len(result.substitutions) == 3


def test_normalize_identity(lex):
    """Text without lexicon tokens comes back unchanged."""
    result = normalize("hello world", lex)
    assert result.normalized == "hello world"
    assert result.substitutions == ()


def test_normalize_keeps_punctuation(lex):
    """Surrounding punctuation survives the rewrite."""
    result = normalize("c u 2nite!", lex)
    assert result.normalized == "see you tonight!"


def test_normalize_case_insensitive_lookup(lex):
    """Lookup lowercases the token; the canonical form is used as-is."""
    result = normalize("GR8 news", lex)
    assert result.normalized == "great news"
    assert result.substitutions[0].variant == "GR8"


def test_normalize_skips_url_tokens():
    """Tokens inside a detected URL are never rewritten."""
    lexicon = Lexicon({"2nite": "tonight"})
    result = normalize("visit 2nite.example.com 2nite", lexicon)
    assert result.normalized == "visit 2nite.example.com tonight"
    assert len(result.substitutions) == 1


def test_normalize_collapses_whitespace(lex):
    """Without substitutions the output is the whitespace-collapsed input."""
    assert normalize("  hello   there ", lex).normalized == "hello there"


def test_substitutions_reproduce_normalized(lex):
    """Applying the recorded substitutions to the original gives the output."""
    text = "ok c u 2nite, gr8?"
    result = normalize(text, lex)
    assert apply_substitutions(text, result.substitutions) == result.normalized


def test_normalize_many_without_lexicon():
    """A None lexicon disables normalization."""
    assert normalize_many(["c u"], None) == ["c u"]


# ── Properties ───────────────────────────────────────────────────────


def test_idempotent_and_word_count_preserved(resources):
    """Normalizing twice changes nothing; the token count never changes."""
    rng = random.Random(11)
    vocab = [k for k in resources.lexicon.entries if k.isalpha()][:80]
    vocab += ["hello", "call", "now", "the", "deal"]
    for _ in range(200):
        text = " ".join(rng.choice(vocab) for _ in range(rng.randint(1, 12)))
        once = normalize(text, resources.lexicon)
        twice = normalize(once.normalized, resources.lexicon)
        assert twice.substitutions == ()
        assert len(once.normalized.split()) == len(text.split())
