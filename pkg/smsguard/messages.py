"""
Message records and their on-disk formats.

Corpora and sender streams are JSONL, one message per line, with the
fields ``id, ts, sender, recipient, orig_net, dest_net, text``. Labels
live in a TAB-separated sidecar (``id<TAB>ham|spam``) or, for imported
corpora, in an optional ``label`` field of the record itself.
"""

import bz2
import csv
import gzip
import io
import json
import logging
import re
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Dict, Iterable, Iterator, List, Optional, Tuple, Union

from .errors import MessageError
from .model import Label

log = logging.getLogger(__name__)

PathLike = Union[str, Path]

# Routing placeholders for text-only corpora
UNKNOWN_SENDER = "unknown"
UNKNOWN_RECIPIENT = "0"
UNKNOWN_TIMESTAMP = 1.0

_RECORD_FIELDS = ("id", "ts", "sender", "recipient", "orig_net", "dest_net", "text")


@dataclass(frozen=True)
class Message:
    """One short text with its routing metadata."""

    id: str
    timestamp: float
    sender: str
    recipient: str
    orig_network: str
    dest_network: str
    text: str

    def __post_init__(self):
        if not (self.timestamp > 0):
            raise MessageError(f"message {self.id!r}: timestamp must be > 0, got {self.timestamp!r}")
        if not self.sender:
            raise MessageError(f"message {self.id!r}: empty sender")
        if not self.recipient:
            raise MessageError(f"message {self.id!r}: empty recipient")

    @classmethod
    def from_text(cls, text: str, id: str = "") -> "Message":
        """A message with placeholder routing, for text-only corpora."""
        return cls(id, UNKNOWN_TIMESTAMP, UNKNOWN_SENDER, UNKNOWN_RECIPIENT, "", "", text)


@dataclass(frozen=True)
class LabeledMessage:
    """A message with its ground-truth label.

    ``transforms`` lists the obfuscations a generator applied and
    ``campaign`` names the generating campaign; both are empty for
    imported data.
    """

    message: Message
    label: Label
    transforms: Tuple[str, ...] = ()
    campaign: str = ""


def parse_label(value) -> Label:
    """Accept ``ham``/``spam`` (any case) or 0/1."""
    if isinstance(value, bool):
        raise MessageError(f"invalid label {value!r}")
    if isinstance(value, int) and value in (0, 1):
        return Label(value)
    text = str(value).strip().lower()
    if text in ("ham", "0"):
        return Label.HAM
    if text in ("spam", "1"):
        return Label.SPAM
    raise MessageError(f"invalid label {value!r}; expected ham or spam")


# ── JSONL records ────────────────────────────────────────────────────


def message_from_record(rec: dict, routing: bool = False) -> Message:
    """Build a Message from a decoded JSONL record.

    With ``routing`` the stream fields (ts, sender, recipient) are
    required; otherwise missing ones get placeholders.
    """
    if not isinstance(rec, dict):
        raise MessageError("record is not a JSON object")
    text = rec.get("text")
    if not isinstance(text, str):
        raise MessageError("record has no text field")
    if routing:
        missing = [k for k in ("ts", "sender", "recipient") if rec.get(k) in (None, "")]
        if missing:
            raise MessageError(f"record lacks {', '.join(missing)}")
    try:
        ts = float(rec.get("ts", UNKNOWN_TIMESTAMP))
    except (TypeError, ValueError):
        raise MessageError(f"bad timestamp {rec.get('ts')!r}")
    return Message(
        id=str(rec.get("id", "")),
        timestamp=ts,
        sender=str(rec.get("sender") or UNKNOWN_SENDER),
        recipient=str(rec.get("recipient") or UNKNOWN_RECIPIENT),
        orig_network=str(rec.get("orig_net") or ""),
        dest_network=str(rec.get("dest_net") or ""),
        text=text,
    )


def message_to_record(msg: Message) -> dict:
    ts = int(msg.timestamp) if float(msg.timestamp).is_integer() else msg.timestamp
    values = (msg.id, ts, msg.sender, msg.recipient, msg.orig_network, msg.dest_network, msg.text)
    return dict(zip(_RECORD_FIELDS, values))


def _open_input(source: Union[PathLike, IO[str]]) -> Tuple[IO[str], str, bool]:
    if hasattr(source, "read"):
        return source, getattr(source, "name", "<stream>"), False
    if str(source) == "-":
        return sys.stdin, "<stdin>", False
    try:
        return open(source, "r", encoding="utf-8"), str(source), True
    except OSError as e:
        raise MessageError(f"cannot read {source}: {e}") from e


def iter_records(source: Union[PathLike, IO[str]], strict: bool = False,
                 routing: bool = False) -> Iterator[Tuple[Message, dict]]:
    """Yield ``(message, record)`` pairs from a JSONL source.

    Malformed lines are skipped with a warning, or raise MessageError
    under ``strict``. ``source`` may be a path, ``-`` for stdin, or an
    open text stream (read lazily, so it works on pipes).
    """
    stream, name, owned = _open_input(source)
    try:
        for lineno, line in enumerate(stream, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                msg = message_from_record(rec, routing=routing)
            except (json.JSONDecodeError, MessageError) as e:
                detail = e.msg if isinstance(e, json.JSONDecodeError) else str(e)
                if strict:
                    raise MessageError(f"{name}: line {lineno}: {detail}") from e
                log.warning("%s: line %d: skipped (%s)", name, lineno, detail)
                continue
            yield msg, rec
    except UnicodeDecodeError as e:
        raise MessageError(f"{name}: not valid UTF-8: {e}") from e
    finally:
        if owned:
            stream.close()


def iter_messages(source, strict: bool = False, routing: bool = False) -> Iterator[Message]:
    for msg, _ in iter_records(source, strict=strict, routing=routing):
        yield msg


def read_messages(source, strict: bool = False, routing: bool = False) -> List[Message]:
    return list(iter_messages(source, strict=strict, routing=routing))


def write_messages(messages: Iterable[Message], dest: Union[PathLike, IO[str]]) -> int:
    """Write messages as JSONL; returns the number written."""
    n = 0
    if hasattr(dest, "write"):
        for msg in messages:
            dest.write(json.dumps(message_to_record(msg), ensure_ascii=False) + "\n")
            n += 1
        return n
    with open(dest, "w", encoding="utf-8", newline="\n") as f:
        return write_messages(messages, f)


# ── Labels ───────────────────────────────────────────────────────────


def default_labels_path(corpus: PathLike) -> Path:
    """``corpus.jsonl`` → ``corpus.labels.tsv``."""
    p = Path(corpus)
    return p.with_name(p.stem + ".labels.tsv")


def read_labels(path: PathLike) -> Dict[str, Label]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise MessageError(f"cannot read labels {path}: {e}") from e
    labels: Dict[str, Label] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 2:
            raise MessageError(f"{path}: line {lineno}: expected id<TAB>label")
        try:
            labels[parts[0]] = parse_label(parts[1])
        except MessageError as e:
            raise MessageError(f"{path}: line {lineno}: {e}") from e
    return labels


def write_labels(items: Iterable[Tuple[str, Label]], path: PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for msg_id, label in items:
            f.write(f"{msg_id}\t{Label(label)}\n")


def read_labeled(corpus: PathLike, labels: Optional[PathLike] = None, strict: bool = False,
                 routing: bool = False) -> List[LabeledMessage]:
    """Read a corpus and attach labels from a sidecar or from ``label`` fields.

    The sidecar defaults to ``<corpus>.labels.tsv`` when it exists.

    Raises:
        MessageError: a message without a label, or duplicate ids with a
                      sidecar (labels would be ambiguous).
    """
    if labels is None and str(corpus) != "-" and default_labels_path(corpus).is_file():
        labels = default_labels_path(corpus)
    table = read_labels(labels) if labels is not None else None

    out: List[LabeledMessage] = []
    seen = set()
    for msg, rec in iter_records(corpus, strict=strict, routing=routing):
        if table is not None:
            if msg.id in seen:
                raise MessageError(f"{corpus}: duplicate message id {msg.id!r}")
            seen.add(msg.id)
            if msg.id not in table:
                raise MessageError(f"{corpus}: no label for message {msg.id!r}")
            label = table[msg.id]
        elif "label" in rec:
            label = parse_label(rec["label"])
        else:
            raise MessageError(f"{corpus}: message {msg.id!r} has no label and no sidecar was found")
        out.append(LabeledMessage(msg, label))
    return out


def write_labeled(items: Iterable[LabeledMessage], corpus: PathLike,
                  labels: Optional[PathLike] = None) -> Path:
    """Write corpus JSONL plus its label sidecar; returns the sidecar path."""
    items = list(items)
    labels = Path(labels) if labels is not None else default_labels_path(corpus)
    write_messages((lm.message for lm in items), corpus)
    write_labels(((lm.message.id, lm.label) for lm in items), labels)
    return labels


# ── Imports ──────────────────────────────────────────────────────────


_HASHTAG_RE = re.compile(r"(?<!\w)#\w+")
_MENTION_RE = re.compile(r"(?<!\w)@\w+")
_RETWEET_RE = re.compile(r"^\s*RT\b:?", re.IGNORECASE)


def clean_social_text(text: str) -> str:
    """Strip hashtags, user mentions and a leading RT marker."""
    text = _RETWEET_RE.sub(" ", text)
    text = _HASHTAG_RE.sub(" ", text)
    text = _MENTION_RE.sub(" ", text)
    return " ".join(text.split())


def read_sms_collection(source: Union[PathLike, IO[str]]) -> List[LabeledMessage]:
    """Parse the public SMS spam collection (``ham|spam<TAB>text`` lines).

    Ids are assigned as ``sms-00001`` in file order.
    """
    if hasattr(source, "read"):
        text, name = source.read(), getattr(source, "name", "<stream>")
    else:
        name = str(source)
        try:
            with open(source, "r", encoding="utf-8", errors="replace") as f:
                text = f.read()
        except OSError as e:
            raise MessageError(f"cannot read {source}: {e}") from e

    out: List[LabeledMessage] = []
    for lineno, line in enumerate(io.StringIO(text), 1):
        line = line.rstrip("\r\n")
        if not line.strip():
            continue
        label, sep, body = line.partition("\t")
        if not sep:
            raise MessageError(f"{name}: line {lineno}: expected label<TAB>text")
        try:
            lab = parse_label(label)
        except MessageError as e:
            raise MessageError(f"{name}: line {lineno}: {e}") from e
        msg = Message.from_text(body, id=f"sms-{len(out) + 1:05d}")
        out.append(LabeledMessage(msg, lab))
    log.info("read %d messages from %s", len(out), name)
    return out


def read_text_lines(source: PathLike, label: Label, clean_social: bool = False,
                    prefix: str = "line") -> List[LabeledMessage]:
    """One message per line, all with the same label."""
    try:
        lines = Path(source).read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as e:
        raise MessageError(f"cannot read {source}: {e}") from e
    out: List[LabeledMessage] = []
    for line in lines:
        body = clean_social_text(line) if clean_social else line.strip()
        if body:
            out.append(LabeledMessage(Message.from_text(body, id=f"{prefix}-{len(out) + 1:05d}"), label))
    return out


def _open_text(path: PathLike) -> IO[str]:
    p = Path(path)
    if p.suffix == ".bz2":
        return bz2.open(p, "rt", encoding="utf-8", errors="replace", newline="")
    if p.suffix == ".gz":
        return gzip.open(p, "rt", encoding="utf-8", errors="replace", newline="")
    return open(p, "r", encoding="utf-8", errors="replace", newline="")


def _parse_time(value: str) -> float:
    value = value.strip()
    try:
        return float(value)
    except ValueError:
        pass
    stamp = datetime.fromisoformat(value.replace("Z", "+00:00"))
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return stamp.timestamp()


def _cell(row: List[str], i: Optional[int], name: str, lineno: int) -> str:
    if i is None:
        return ""
    if i >= len(row):
        raise MessageError(f"{name}: line {lineno}: no column {i} in a row of {len(row)}")
    return row[i]


def read_csv_corpus(source: PathLike, text_column: str = "text",
                    label_column: Optional[str] = None, label: Optional[Label] = None,
                    id_column: Optional[str] = None, time_column: Optional[str] = None,
                    sender_column: Optional[str] = None,
                    spam_values: Optional[Iterable[str]] = None,
                    clean_social: bool = False, prefix: str = "row",
                    header: bool = True, delimiter: str = ",") -> List[LabeledMessage]:
    """Read a delimited comment or message dump.

    Columns are header names, or 0-based indices when written as digits
    (always indices with ``header=False``). Labels come from
    ``label_column`` or, without one, ``label`` for every row. With
    ``spam_values`` a label cell is spam when its lowercased value is in
    the set and ham otherwise; without it cells are parsed as ham/spam or
    0/1. Rows with an empty text are skipped. ``.bz2`` and ``.gz`` files
    are decompressed on the fly.

    Raises:
        MessageError: unreadable file, unknown column, bad label or
                      timestamp (naming the line).
    """
    if (label_column is None) == (label is None):
        raise MessageError("give exactly one of a label column or a fixed label")
    spam_set = {v.strip().lower() for v in spam_values} if spam_values is not None else None
    name = str(source)
    out: List[LabeledMessage] = []
    try:
        with _open_text(source) as f:
            reader = csv.reader(f, delimiter=delimiter)
            names: List[str] = []
            if header:
                names = [c.strip().lower() for c in next(reader, [])]

            def index_of(column: Optional[str]) -> Optional[int]:
                if column is None:
                    return None
                key = str(column).strip()
                if key.isdigit():
                    return int(key)
                if not header:
                    raise MessageError(f"{name}: column {column!r} needs a header row; use an index")
                try:
                    return names.index(key.lower())
                except ValueError:
                    raise MessageError(
                        f"{name}: no column {column!r} (have: {', '.join(names)})"
                    ) from None

            text_i, label_i = index_of(text_column), index_of(label_column)
            id_i, time_i, sender_i = index_of(id_column), index_of(time_column), index_of(sender_column)
            for row in reader:
                lineno = reader.line_num
                if not row or not "".join(row).strip():
                    continue
                text, label_cell, msg_id, stamp, sender = (
                    _cell(row, i, name, lineno) for i in (text_i, label_i, id_i, time_i, sender_i)
                )
                body = clean_social_text(text) if clean_social else " ".join(text.split())
                if not body:
                    continue
                try:
                    if label_i is None:
                        lab = label
                    elif spam_set is not None:
                        lab = Label.SPAM if label_cell.strip().lower() in spam_set else Label.HAM
                    else:
                        lab = parse_label(label_cell)
                    ts = _parse_time(stamp) if time_i is not None else UNKNOWN_TIMESTAMP
                    msg = Message(
                        id=msg_id.strip() or f"{prefix}-{len(out) + 1:05d}",
                        timestamp=ts,
                        sender=sender.strip() or UNKNOWN_SENDER,
                        recipient=UNKNOWN_RECIPIENT,
                        orig_network="",
                        dest_network="",
                        text=body,
                    )
                except (ValueError, MessageError) as e:
                    raise MessageError(f"{name}: line {lineno}: {e}") from e
                out.append(LabeledMessage(msg, lab))
    except (OSError, EOFError, csv.Error) as e:
        raise MessageError(f"cannot read {name}: {e}") from e
    log.info("read %d messages from %s", len(out), name)
    return out


def sender_labels(items: Iterable[LabeledMessage]) -> Dict[str, Label]:
    """Label each sender by the majority of its messages (spam wins ties)."""
    votes: Dict[str, List[int]] = {}
    for lm in items:
        v = votes.setdefault(lm.message.sender, [0, 0])
        v[int(lm.label)] += 1
    return {s: Label.SPAM if spam >= ham else Label.HAM for s, (ham, spam) in votes.items()}


# ── Domain lists ─────────────────────────────────────────────────────


def read_domains(path: PathLike) -> List[Tuple[str, Label]]:
    """Read a ``domain,label`` CSV; a header row is optional."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            rows = list(csv.reader(f))
    except (OSError, UnicodeDecodeError) as e:
        raise MessageError(f"cannot read domains {path}: {e}") from e
    out: List[Tuple[str, Label]] = []
    for lineno, row in enumerate(rows, 1):
        if not row or not "".join(row).strip() or row[0].startswith("#"):
            continue
        if lineno == 1 and [c.strip().lower() for c in row] == ["domain", "label"]:
            continue
        if len(row) != 2:
            raise MessageError(f"{path}: line {lineno}: expected domain,label")
        try:
            out.append((row[0].strip().lower(), parse_label(row[1])))
        except MessageError as e:
            raise MessageError(f"{path}: line {lineno}: {e}") from e
    return out


def write_domains(items: Iterable[Tuple[str, Label]], path: PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["domain", "label"])
        for domain, label in items:
            writer.writerow([domain, str(Label(label))])
