"""Tests for smsguard message records, labels and corpus imports."""

import bz2
import io
import json

import pytest

from smsguard.errors import MessageError
from smsguard.messages import (
    UNKNOWN_SENDER,
    LabeledMessage,
    Message,
    clean_social_text,
    default_labels_path,
    parse_label,
    read_domains,
    read_labeled,
    read_messages,
    read_csv_corpus,
    read_sms_collection,
    read_text_lines,
    sender_labels,
    write_domains,
    write_labeled,
    write_messages,
)
from smsguard.model import Label


def make(i, sender="15550001111", text="hello", ts=None):
    return Message(f"id{i}", ts or 1_767_571_200.0 + i, sender, "15557654321", "att", "verizon", text)


# ── Message ──────────────────────────────────────────────────────────


@pytest.mark.parametrize("kwargs", [{"timestamp": 0}, {"sender": ""}, {"recipient": ""}])
def test_message_validation(kwargs):
    """Positive timestamps and non-empty routing are required."""
    fields = dict(id="a", timestamp=1.0, sender="s", recipient="r",
                  orig_network="", dest_network="", text="x")
    fields.update(kwargs)
    with pytest.raises(MessageError):
        Message(**fields)


def test_from_text_placeholders():
    """Text-only messages get placeholder routing."""
    m = Message.from_text("hi", id="q")
    assert m.sender == UNKNOWN_SENDER
    assert m.timestamp > 0


@pytest.mark.parametrize("value, expected", [
    ("ham", Label.HAM), ("SPAM", Label.SPAM), (" spam ", Label.SPAM),
    (0, Label.HAM), (1, Label.SPAM), ("1", Label.SPAM),
])
def test_parse_label(value, expected):
    """Names in any case, or 0/1."""
    assert parse_label(value) is expected


@pytest.mark.parametrize("value", ["maybe", 2, True, ""])
def test_parse_label_invalid(value):
    """Anything else is refused."""
    with pytest.raises(MessageError):
        parse_label(value)


# ── JSONL ────────────────────────────────────────────────────────────


def test_write_and_read_messages(tmp_path):
    """Messages written as JSONL read back equal."""
    msgs = [make(0), make(1, text="ünïcode ok")]
    path = tmp_path / "m.jsonl"
    assert write_messages(msgs, path) == 2
    assert read_messages(path) == msgs


def test_integer_timestamps_written_as_int():
    """Whole-second timestamps have no fraction in the file."""
    buf = io.StringIO()
    write_messages([make(0)], buf)
    assert json.loads(buf.getvalue())["ts"] == 1767571200


def test_malformed_lines_skipped(tmp_path, caplog):
    """Bad lines are skipped with a warning by default."""
    path = tmp_path / "m.jsonl"
    path.write_text('{"text": "ok"}\nnot json\n{"id": "x"}\n\n', encoding="utf-8")
    with caplog.at_level("WARNING"):
        msgs = read_messages(path)
    assert [m.text for m in msgs] == ["ok"]
    assert "line 2" in caplog.text


def test_malformed_lines_strict(tmp_path):
    """Under strict a bad line is an error naming the line."""
    path = tmp_path / "m.jsonl"
    path.write_text('{"text": "ok"}\nnot json\n', encoding="utf-8")
    with pytest.raises(MessageError, match="line 2"):
        read_messages(path, strict=True)


def test_routing_required_for_streams():
    """Stream records need ts, sender and recipient."""
    src = io.StringIO('{"text": "hi", "ts": 5}\n')
    with pytest.raises(MessageError, match="sender"):
        read_messages(src, strict=True, routing=True)


def test_missing_file():
    """An unreadable corpus is a message error."""
    with pytest.raises(MessageError, match="cannot read"):
        read_messages("/nonexistent/corpus.jsonl")


# ── Labels ───────────────────────────────────────────────────────────


def test_labels_path():
    """The sidecar sits next to the corpus."""
    assert default_labels_path("/d/corpus.jsonl").name == "corpus.labels.tsv"


def test_labeled_roundtrip(write_corpus):
    """A corpus and its sidecar read back with labels."""
    items = [LabeledMessage(make(0), Label.SPAM), LabeledMessage(make(1), Label.HAM)]
    path = write_corpus(items)
    assert default_labels_path(path).read_text(encoding="utf-8") == "id0\tspam\nid1\tham\n"
    assert read_labeled(path) == items


def test_inline_labels(tmp_path):
    """Without a sidecar, records may carry their own label."""
    path = tmp_path / "c.jsonl"
    path.write_text('{"id": "a", "text": "x", "label": "spam"}\n', encoding="utf-8")
    assert read_labeled(path)[0].label is Label.SPAM


def test_unlabeled_message(tmp_path):
    """A message with no label anywhere is an error."""
    path = tmp_path / "c.jsonl"
    path.write_text('{"id": "a", "text": "x"}\n', encoding="utf-8")
    with pytest.raises(MessageError, match="no label"):
        read_labeled(path)


def test_sidecar_missing_id(tmp_path):
    """Every message needs a row in the sidecar."""
    path = tmp_path / "c.jsonl"
    write_labeled([LabeledMessage(make(0), Label.HAM)], path)
    with open(path, "a", encoding="utf-8") as f:
        f.write('{"id": "extra", "text": "y"}\n')
    with pytest.raises(MessageError, match="extra"):
        read_labeled(path)


def test_duplicate_ids_with_sidecar(tmp_path):
    """Duplicate ids would make sidecar labels ambiguous."""
    path = tmp_path / "c.jsonl"
    write_labeled([LabeledMessage(make(0), Label.HAM), LabeledMessage(make(0), Label.HAM)], path)
    with pytest.raises(MessageError, match="duplicate"):
        read_labeled(path)


def test_bad_sidecar_row(tmp_path):
    """Sidecar rows are id<TAB>label."""
    path = tmp_path / "c.jsonl"
    write_labeled([LabeledMessage(make(0), Label.HAM)], path)
    default_labels_path(path).write_text("id0 ham\n", encoding="utf-8")
    with pytest.raises(MessageError, match="line 1"):
        read_labeled(path)


def test_sender_labels_majority():
    """Senders take their majority label; ties go to spam."""
    items = [
        LabeledMessage(make(0, "a"), Label.SPAM), LabeledMessage(make(1, "a"), Label.SPAM),
        LabeledMessage(make(2, "a"), Label.HAM),
        LabeledMessage(make(3, "b"), Label.HAM),
        LabeledMessage(make(4, "c"), Label.HAM), LabeledMessage(make(5, "c"), Label.SPAM),
    ]
    assert sender_labels(items) == {"a": Label.SPAM, "b": Label.HAM, "c": Label.SPAM}


# ── Imports ──────────────────────────────────────────────────────────


def test_read_sms_collection():
    """label<TAB>text lines with ids in file order."""
    src = io.StringIO("ham\tOk lar...\nspam\tFree entry in 2 a wkly comp\n\n")
    items = read_sms_collection(src)
    assert [lm.label for lm in items] == [Label.HAM, Label.SPAM]
    assert items[1].message.id == "sms-00002"
    assert items[1].message.text == "Free entry in 2 a wkly comp"


def test_read_sms_collection_bad_line():
    """A line without a TAB is an error."""
    with pytest.raises(MessageError, match="line 1"):
        read_sms_collection(io.StringIO("ham Ok lar\n"))


def test_clean_social_text():
    """Hashtags, mentions and a leading RT are stripped."""
    assert clean_social_text("RT @bob: great deal #win today") == ": great deal today"


def test_read_text_lines(tmp_path):
    """One message per non-empty line, all with one label."""
    path = tmp_path / "tweets.txt"
    path.write_text("#ad win big @x\n\nhello world\n", encoding="utf-8")
    items = read_text_lines(path, Label.SPAM, clean_social=True, prefix="tw")
    assert [lm.message.text for lm in items] == ["win big", "hello world"]
    assert items[0].message.id == "tw-00001"


COMMENTS_CSV = (
    "comment_id,author,date,content,is_spam\n"
    "c1,ann,2012-01-17T10:00:00Z,Great video!,false\n"
    "c2,bot42,2012-01-17T10:05:00Z,\"Check out my channel, win $$$ @you #free\",true\n"
    "c3,bob,2012-01-17T10:06:00Z,   ,false\n"
)


def test_read_csv_corpus_by_name(tmp_path):
    """Named columns, custom spam markers, ids, authors and ISO times."""
    path = tmp_path / "comments.csv"
    path.write_text(COMMENTS_CSV, encoding="utf-8")
    items = read_csv_corpus(path, text_column="content", label_column="is_spam",
                            spam_values=["true"], id_column="comment_id", time_column="date",
                            sender_column="author", clean_social=True)
    assert [lm.label for lm in items] == [Label.HAM, Label.SPAM]
    spam = items[1].message
    assert (spam.id, spam.sender) == ("c2", "bot42")
    assert spam.text == "Check out my channel, win $$$"
    assert spam.timestamp == 1_326_794_700.0


def test_read_csv_corpus_by_index_bz2(tmp_path):
    """Headerless compressed input addressed by column index."""
    path = tmp_path / "comments.csv.bz2"
    with bz2.open(path, "wt", encoding="utf-8") as f:
        f.write("hello there;ham\nWIN NOW;spam\n")
    items = read_csv_corpus(path, text_column="0", label_column="1", header=False,
                            delimiter=";", prefix="yt")
    assert [lm.label for lm in items] == [Label.HAM, Label.SPAM]
    assert items[0].message.id == "yt-00001"
    assert items[0].message.sender == UNKNOWN_SENDER


def test_read_csv_corpus_fixed_label(tmp_path):
    """Without a label column every row takes the given label."""
    path = tmp_path / "c.csv"
    path.write_text("text\nfirst\nsecond\n", encoding="utf-8")
    items = read_csv_corpus(path, label=Label.SPAM)
    assert [lm.label for lm in items] == [Label.SPAM, Label.SPAM]


def test_read_csv_corpus_unknown_column(tmp_path):
    """A column missing from the header is named in the error."""
    path = tmp_path / "c.csv"
    path.write_text("body,label\nhi,ham\n", encoding="utf-8")
    with pytest.raises(MessageError, match="no column 'text'"):
        read_csv_corpus(path, label_column="label")


def test_read_csv_corpus_bad_label(tmp_path):
    """Unparseable labels name their line."""
    path = tmp_path / "c.csv"
    path.write_text("text,label\nhi,ham\nyo,maybe\n", encoding="utf-8")
    with pytest.raises(MessageError, match="line 3"):
        read_csv_corpus(path, label_column="label")


def test_read_csv_corpus_label_source_required(tmp_path):
    """Exactly one of a label column or a fixed label."""
    path = tmp_path / "c.csv"
    path.write_text("text\nhi\n", encoding="utf-8")
    with pytest.raises(MessageError, match="exactly one"):
        read_csv_corpus(path)


# ── Domains ──────────────────────────────────────────────────────────


def test_domains_roundtrip(tmp_path):
    """domain,label CSV with a header reads back lowercased."""
    path = tmp_path / "d.csv"
    write_domains([("Cash4Cars.tk", Label.SPAM), ("example.com", Label.HAM)], path)
    assert read_domains(path) == [("cash4cars.tk", Label.SPAM), ("example.com", Label.HAM)]


def test_domains_bad_row(tmp_path):
    """Rows need exactly two columns."""
    path = tmp_path / "d.csv"
    path.write_text("a.com,spam,extra\n", encoding="utf-8")
    with pytest.raises(MessageError, match="domain,label"):
        read_domains(path)
