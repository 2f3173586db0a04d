"""Tests for smsguard CLI."""

import json

import pytest

from smsguard._paths import bundled_path
from smsguard.config import Config
from smsguard.messages import write_domains
from smsguard.model import Label

TINY = "[forest]\nn_trees = 5\n\n[domain]\nn_trees = 3\n"


@pytest.fixture
def tiny_config(run_smsguard):
    """Small forests so CLI training runs stay fast."""
    run_smsguard.home.mkdir(parents=True, exist_ok=True)
    (run_smsguard.home / "config.toml").write_text(TINY, encoding="utf-8")


def test_version_flag(run_smsguard):
    """smsguard --version should print version string and exit 0."""
    result = run_smsguard(["--version"])
    assert result.returncode == 0
    assert "smsguard" in result.stdout


def test_help_flag(run_smsguard):
    """smsguard --help lists the subcommands and exit codes."""
    result = run_smsguard(["--help"])
    assert result.returncode == 0
    assert "train-message" in result.stdout
    assert "exit codes" in result.stdout


def test_no_command_is_usage_error(run_smsguard):
    """Without a command smsguard prints usage and exits 1."""
    result = run_smsguard([])
    assert result.returncode == 1
    assert "usage" in result.stderr


def test_bad_option_exits_1(run_smsguard):
    """argparse errors use the usage exit code, not the data-error code."""
    result = run_smsguard(["evaluate", "x.jsonl", "--normalize", "maybe"])
    assert result.returncode == 1


def test_config_command(run_smsguard):
    """The config command shows sections and the fingerprint."""
    result = run_smsguard(["config"])
    assert result.returncode == 0
    assert "[forest]" in result.stdout
    assert Config().fingerprint() in result.stdout


def test_print_config_fingerprint(run_smsguard):
    """The fingerprint reflects the effective settings, seed included."""
    plain = run_smsguard(["--print-config-fingerprint"])
    seeded = run_smsguard(["--seed", "5", "--print-config-fingerprint"])
    assert plain.stdout.strip() == Config().fingerprint()
    assert seeded.stdout.strip() == Config(general_seed=5).fingerprint()


def test_bad_config_exits_1(run_smsguard):
    """An invalid config file is a configuration error."""
    run_smsguard.home.mkdir(parents=True)
    (run_smsguard.home / "config.toml").write_text("[forest]\nbogus = 1\n", encoding="utf-8")
    result = run_smsguard(["config"])
    assert result.returncode == 1
    assert result.stderr.startswith("smsguard: ")


@pytest.mark.parametrize("what, count, first", [
    ("mela", 51, "0\tNUM_OF_URLS"),
    ("domain", 39, None),
    ("mpa", 60, None),
])
def test_schema_command(run_smsguard, what, count, first):
    """Schema dumps have one line per slot."""
    result = run_smsguard(["schema", "--what", what])
    assert result.returncode == 0
    lines = result.stdout.splitlines()
    assert len(lines) == count
    if first:
        assert lines[0] == first


def test_validate_bundled_clusters(run_smsguard):
    """The bundled cluster set validates."""
    result = run_smsguard(["validate-clusters", bundled_path("clusters.txt")])
    assert result.returncode == 0
    assert "22 clusters" in result.stdout


def test_validate_clusters_wrong_count(run_smsguard):
    """A count mismatch is a data error."""
    result = run_smsguard(["validate-clusters", bundled_path("clusters.txt"), "--count", "5"])
    assert result.returncode == 2


# ── Training and scoring ─────────────────────────────────────────────


def test_missing_model_exits_3(run_smsguard):
    """A missing model file is a model error."""
    result = run_smsguard(["classify", "-", "--model", "absent.bin"], input_data="")
    assert result.returncode == 3
    assert "not found" in result.stderr


def test_single_class_training_exits_2(run_smsguard, tiny_config, write_corpus, small_corpus):
    """Training on ham only is a data error."""
    ham = [lm for lm in small_corpus if lm.label is Label.HAM][:20]
    corpus = write_corpus(ham)
    result = run_smsguard(["train-message", corpus, "-o", "m.bin"])
    assert result.returncode == 2
    assert "no spam examples" in result.stderr


def test_train_classify_dump(run_smsguard, tiny_config, write_corpus, small_corpus, tmp_path):
    """Train a message model, classify with it and dump it as text."""
    corpus = write_corpus(small_corpus)
    trained = run_smsguard(["train-message", corpus, "-o", "m.bin"])
    assert trained.returncode == 0, trained.stderr
    assert (tmp_path / "m.bin").is_file()

    result = run_smsguard(["classify", corpus, "--model", "m.bin", "--costs", "9,1"])
    assert result.returncode == 0, result.stderr
    rows = [json.loads(line) for line in result.stdout.splitlines()]
    assert len(rows) == len(small_corpus)
    assert {r["label"] for r in rows} <= {"ham", "spam"}
    assert all(0.0 <= r["score"] <= 1.0 for r in rows)

    empty = run_smsguard(["classify", "-", "--model", "m.bin"], input_data="")
    assert empty.returncode == 0
    assert empty.stdout == ""

    dump = run_smsguard(["dump-model", "m.bin"])
    assert dump.stdout.startswith("smsguard-forest 1.0\n")


def test_default_model_location(run_smsguard, tiny_config, write_corpus, small_corpus):
    """Without -o the model lands in $SMSGUARD_HOME/models/."""
    result = run_smsguard(["train-message", write_corpus(small_corpus), "--features", "ngram"])
    assert result.returncode == 0, result.stderr
    assert (run_smsguard.home / "models" / "message.bin").is_file()
    assert (run_smsguard.home / "models" / "message.bin.vocab").is_file()


def test_domain_model_is_not_a_message_model(run_smsguard, tiny_config, tmp_path):
    """Classifying with a domain model is a schema mismatch."""
    write_domains([("cash4u.tk", Label.SPAM), ("win-now.top", Label.SPAM),
                   ("google.com", Label.HAM), ("github.com", Label.HAM)], tmp_path / "d.csv")
    trained = run_smsguard(["train-domain", "d.csv", "-o", "d.bin"])
    assert trained.returncode == 0, trained.stderr
    result = run_smsguard(["classify", "-", "--model", "d.bin"], input_data="")
    assert result.returncode == 3


def test_evaluate_ngram(run_smsguard, tiny_config, write_corpus, small_corpus):
    """Cross-validation prints the report table with its settings."""
    corpus = write_corpus(small_corpus)
    result = run_smsguard(["evaluate", corpus, "--features", "ngram", "--k", "3"])
    assert result.returncode == 0, result.stderr
    assert "features: ngram  k: 3" in result.stdout
    assert "macro avg" in result.stdout


def test_evaluate_records(run_smsguard, tiny_config, write_corpus, small_corpus):
    """--records prints one metric per line."""
    corpus = write_corpus(small_corpus)
    result = run_smsguard(["evaluate", corpus, "--features", "sgram", "--k", "2", "--records"])
    assert result.returncode == 0, result.stderr
    assert "macro_f1\t" in result.stdout
    assert "\tfold1" in result.stdout


def test_import_sms_collection(run_smsguard, tmp_path):
    """A label<TAB>text file becomes corpus JSONL plus labels."""
    (tmp_path / "SMSSpamCollection").write_text("ham\tOk lar\nspam\tWIN now\n", encoding="utf-8")
    result = run_smsguard(["import-corpus", "SMSSpamCollection", "-o", "c.jsonl"])
    assert result.returncode == 0, result.stderr
    assert (tmp_path / "c.labels.tsv").read_text(encoding="utf-8") == "sms-00001\tham\nsms-00002\tspam\n"


def test_import_lines_needs_label(run_smsguard, tmp_path):
    """--format lines requires --label."""
    (tmp_path / "t.txt").write_text("hello\n", encoding="utf-8")
    result = run_smsguard(["import-corpus", "t.txt", "--format", "lines", "-o", "c.jsonl"])
    assert result.returncode == 1


def test_import_csv_comments(run_smsguard, tmp_path):
    """--format csv selects text and label columns by name."""
    (tmp_path / "yt.csv").write_text(
        "id,author,content,spam\n7,ann,nice song,0\n8,bot,sub4sub @all #free,1\n", encoding="utf-8")
    result = run_smsguard(["import-corpus", "yt.csv", "--format", "csv", "--text-column", "content",
                           "--label-column", "spam", "--id-column", "id", "--clean-social",
                           "-o", "c.jsonl"])
    assert result.returncode == 0, result.stderr
    assert (tmp_path / "c.labels.tsv").read_text(encoding="utf-8") == "7\tham\n8\tspam\n"
    assert '"text": "sub4sub"' in (tmp_path / "c.jsonl").read_text(encoding="utf-8")


def test_import_csv_needs_one_label_source(run_smsguard, tmp_path):
    """--format csv refuses both --label and --label-column."""
    (tmp_path / "yt.csv").write_text("text,spam\nhi,0\n", encoding="utf-8")
    result = run_smsguard(["import-corpus", "yt.csv", "--format", "csv", "--label", "ham",
                           "--label-column", "spam", "-o", "c.jsonl"])
    assert result.returncode == 1


def test_extract_mela(run_smsguard, tmp_path):
    """extract writes one CSV row per message under the schema header."""
    (tmp_path / "in.jsonl").write_text('{"id": "a", "text": "WIN cash now"}\n', encoding="utf-8")
    result = run_smsguard(["extract", "in.jsonl"])
    assert result.returncode == 0, result.stderr
    header, row = result.stdout.splitlines()
    assert header.split(",")[:2] == ["id", "NUM_OF_URLS"]
    assert len(row.split(",")) == 52


def test_mine_clusters(run_smsguard, write_corpus, small_corpus, tmp_path):
    """Cluster mining writes a reviewable proposal file."""
    corpus = write_corpus(small_corpus)
    result = run_smsguard(["mine-clusters", corpus, "--top-k", "40", "--k", "5", "-o", "p.txt"])
    assert result.returncode == 0, result.stderr
    assert "# proposals: 5" in (tmp_path / "p.txt").read_text(encoding="utf-8")


def test_gen_corpus(run_smsguard, tmp_path):
    """gen-corpus writes the corpus, its labels, domains and streams."""
    result = run_smsguard(["gen-corpus", "-o", "data", "--n-spam", "30", "--n-ham", "30"])
    assert result.returncode == 0, result.stderr
    for name in ("corpus.jsonl", "corpus.labels.tsv", "corpus.transforms.tsv",
                 "domains.csv", "streams.jsonl", "streams.labels.tsv"):
        assert (tmp_path / "data" / name).is_file(), name
    lines = (tmp_path / "data" / "corpus.labels.tsv").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 60
