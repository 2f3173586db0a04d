"""
Messaging pattern analysis: per-sender windows and their behavioral features.

A WindowAggregator consumes a timestamp-ordered message stream and keeps,
for every sender, the messages of the trailing window span (7 days by
default). Once a sender's window holds ``min_messages`` messages it is
emitted as an immutable SenderWindow, and emitted again after every
``emit_stride`` further messages. ``mpa_features`` turns a window into
the 60-slot vector: nine behavioral slots followed by the MELA vector of
the sender's first message.
"""

import bisect
import hashlib
import logging
import math
import re
import zlib
from collections import Counter, OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ._datafiles import iter_entries, read_text, version_of, write_atomic
from .errors import DataError, SchemaMismatchError, StreamOrderError
from .mela import MESSAGE_FEATURES, MESSAGE_SCHEMA, MelaVector
from .messages import Message

log = logging.getLogger(__name__)

__all__ = [
    "Message", "SenderWindow", "MpaVector", "NetworkEncoder", "WindowAggregator",
    "ShardedAggregator", "recipient_entropy", "sending_frequency", "mpa_features",
    "windows_from_stream", "MPA_FEATURES", "MPA_SCHEMA",
]

MPA_SCHEMA = "mpa-1"
DAY = 86400

BEHAVIOR_FEATURES = (
    "ORIG_NETWORK",
    "DEST_NETWORK",
    "SENDER_NETWORK_IS_NOT_US",
    "DEST_NETWORK_IS_NOT_US",
    "NUM_OF_UNIQUE_RECIPIENTS",
    "RECIPIENT_NUMBER_ENTROPY",
    "NUM_OF_UNIQUE_DEST_NETWORKS",
    "SENDING_FREQUENCY",
    "NUM_OF_UNIQUE_MESSAGES",
)
MPA_FEATURES: Tuple[str, ...] = BEHAVIOR_FEATURES + tuple(
    f"MELA_FEATURE_{i}" for i in range(len(MESSAGE_FEATURES))
)
MPA_INDEX = {name: i for i, name in enumerate(MPA_FEATURES)}

ENTROPY_POSITIONS = 7
_NON_DIGIT_RE = re.compile(r"\D")

Featurizer = Callable[[Message], MelaVector]


@dataclass(frozen=True)
class SenderWindow:
    sender: str
    messages: Tuple[Message, ...]
    window_start: float
    window_end: float
    first_message: Message
    first_message_mela: Optional[MelaVector] = None

    def __len__(self) -> int:
        return len(self.messages)


@dataclass(frozen=True)
class MpaVector:
    values: Tuple[float, ...]
    schema_version: str = MPA_SCHEMA

    def __post_init__(self):
        if len(self.values) != len(MPA_FEATURES):
            raise SchemaMismatchError(
                f"sender vector has {len(self.values)} slots, expected {len(MPA_FEATURES)}"
            )

    def __getitem__(self, name: str) -> float:
        return self.values[MPA_INDEX[name]]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


# ── Window features ──────────────────────────────────────────────────


def _entropy(counts: Iterable[int]) -> float:
    counts = [c for c in counts if c]
    total = sum(counts)
    if total == 0:
        return 0.0
    return -sum((c / total) * math.log2(c / total) for c in counts)


def recipient_entropy(recipients: Sequence[str]) -> float:
    """Mean digit entropy (bits) over the last seven digit positions.

    Computed over unique recipients, right-aligned; a position that no
    recipient reaches is left out of the mean. Empty input gives 0.0.
    """
    unique = {d for d in (_NON_DIGIT_RE.sub("", r) for r in recipients) if d}
    per_position = []
    for pos in range(1, ENTROPY_POSITIONS + 1):
        digits = [r[-pos] for r in unique if len(r) >= pos]
        if digits:
            per_position.append(_entropy(Counter(digits).values()))
    if not per_position:
        return 0.0
    return sum(per_position) / len(per_position)


def sending_frequency(window: SenderWindow) -> float:
    """Messages per second, with a one-second floor on the window length."""
    return len(window.messages) / max(window.window_end - window.window_start, 1.0)


def _unique_text_key(text: str) -> str:
    return " ".join(text.lower().split())


def _dominant(values: Iterable[str]) -> str:
    counts = Counter(v for v in values if v)
    if not counts:
        return ""
    return min(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0]


class NetworkEncoder:
    """Stable integer ids for network names; unknown names encode as 0.

    Ids start at 1 and are assigned in sorted name order, so fitting the
    same set of names always yields the same table.
    """

    def __init__(self, ids: Optional[Dict[str, int]] = None, version: str = ""):
        ids = dict(ids or {})
        if any(i < 1 for i in ids.values()) or len(set(ids.values())) != len(ids):
            raise DataError("network ids must be unique and >= 1")
        self.ids = ids
        self.version = version or self._digest()
        self._warned = set()

    @classmethod
    def fit(cls, names: Iterable[str]) -> "NetworkEncoder":
        unique = sorted({n.strip().lower() for n in names if n and n.strip()})
        return cls({name: i for i, name in enumerate(unique, 1)})

    def _digest(self) -> str:
        body = "\n".join(f"{k}\t{v}" for k, v in sorted(self.ids.items()))
        return "sha256:" + hashlib.sha256(body.encode("utf-8")).hexdigest()[:12]

    def __len__(self) -> int:
        return len(self.ids)

    def encode(self, name: str) -> int:
        key = (name or "").strip().lower()
        if not key:
            return 0
        code = self.ids.get(key)
        if code is None:
            if key not in self._warned:
                self._warned.add(key)
                log.warning("unknown network %r encoded as 0", name)
            return 0
        return code

    def dumps(self) -> str:
        lines = [f"# version: {self.version}"]
        lines.extend(f"{name}\t{i}" for name, i in sorted(self.ids.items(), key=lambda kv: kv[1]))
        return "\n".join(lines) + "\n"

    def save(self, path: Union[str, Path]) -> None:
        write_atomic(path, self.dumps())

    @classmethod
    def load(cls, path: Union[str, Path]) -> "NetworkEncoder":
        text = read_text(path)
        ids: Dict[str, int] = {}
        for lineno, line in iter_entries(text):
            name, sep, value = line.partition("\t")
            if not sep or not value.strip().isdigit():
                raise DataError(f"{path}: line {lineno}: expected name<TAB>id")
            ids[name.strip().lower()] = int(value)
        return cls(ids, version_of(text))

    def __eq__(self, other):
        return isinstance(other, NetworkEncoder) and self.ids == other.ids


def mpa_features(window: SenderWindow, encoder: NetworkEncoder,
                 us_networks: FrozenSet[str] = frozenset()) -> MpaVector:
    """The 60-slot sender vector of a window.

    The sender's network is the most frequent origin network in the
    window, the destination network the most frequent destination (ties
    go to the smaller name). A network counts as non-US when it is named
    and absent from ``us_networks``.

    Raises:
        SchemaMismatchError: the window carries no first-message MELA
                             vector, or one of another schema.
    """
    mela = window.first_message_mela
    if mela is None:
        raise SchemaMismatchError(f"window of sender {window.sender!r} has no first-message MELA vector")
    if mela.schema_version != MESSAGE_SCHEMA:
        raise SchemaMismatchError(
            f"first-message vector has schema {mela.schema_version!r}, expected {MESSAGE_SCHEMA!r}"
        )
    msgs = window.messages
    orig = _dominant(m.orig_network.lower() for m in msgs)
    dest = _dominant(m.dest_network.lower() for m in msgs)
    behavior = [
        encoder.encode(orig),
        encoder.encode(dest),
        bool(orig) and orig not in us_networks,
        bool(dest) and dest not in us_networks,
        len({m.recipient for m in msgs}),
        recipient_entropy([m.recipient for m in msgs]),
        max(1, len({m.dest_network.lower() for m in msgs if m.dest_network})),
        sending_frequency(window),
        len({_unique_text_key(m.text) for m in msgs}),
    ]
    return MpaVector(tuple(float(x) for x in behavior) + tuple(mela.values))


# ── Aggregation ──────────────────────────────────────────────────────


@dataclass
class _SenderState:
    timestamps: List[float] = field(default_factory=list)
    messages: List[Message] = field(default_factory=list)
    first: Optional[Message] = None
    first_mela: Optional[MelaVector] = None
    since_emit: int = 0
    emitted: bool = False


class WindowAggregator:
    """Single-writer sliding-window state machine keyed by sender.

    Messages may arrive up to ``skew_seconds`` behind the sender's newest
    message and are re-sorted into place; anything older raises
    StreamOrderError. ``featurize`` computes the MELA vector of a
    sender's first message; without it windows carry no MELA vector.

    A sender whose newest message has left the window starts over: its
    next message is a new first message. Senders idle for longer than
    the span (plus skew) behind the newest timestamp seen are dropped,
    so memory follows the active senders of a long stream.
    """

    def __init__(self, min_messages: int = 50, span_seconds: float = 7 * DAY,
                 emit_stride: int = 50, skew_seconds: float = 60,
                 featurize: Optional[Featurizer] = None):
        if min_messages < 1 or emit_stride < 1 or span_seconds <= 0 or skew_seconds < 0:
            raise DataError("window parameters must be positive")
        self.min_messages = min_messages
        self.span = span_seconds
        self.emit_stride = emit_stride
        self.skew = skew_seconds
        self.featurize = featurize
        # least recently active sender first
        self._states: "OrderedDict[str, _SenderState]" = OrderedDict()
        self._newest = -math.inf

    @classmethod
    def from_config(cls, config, featurize: Optional[Featurizer] = None) -> "WindowAggregator":
        return cls(
            min_messages=config.mpa_min_messages,
            span_seconds=config.mpa_window_days * DAY,
            emit_stride=config.mpa_emit_stride,
            skew_seconds=config.mpa_skew_seconds,
            featurize=featurize,
        )

    @property
    def n_senders(self) -> int:
        return len(self._states)

    def retained(self, sender: str) -> Tuple[Message, ...]:
        state = self._states.get(sender)
        return tuple(state.messages) if state else ()

    def _set_first(self, state: _SenderState, msg: Message) -> None:
        state.first = msg
        state.first_mela = self.featurize(msg) if self.featurize is not None else None

    def _evict_idle(self) -> None:
        cutoff = self._newest - self.span - self.skew
        while self._states:
            sender, state = next(iter(self._states.items()))
            if state.timestamps[-1] >= cutoff:
                break
            del self._states[sender]
            log.debug("sender %s idle since %.0f, dropped", sender, state.timestamps[-1])

    def ingest(self, msg: Message) -> Optional[SenderWindow]:
        """Add one message; return the sender's window when it is due."""
        ts = msg.timestamp
        if ts > self._newest:
            self._newest = ts
            self._evict_idle()
        state = self._states.get(msg.sender)
        if state is None or state.timestamps[-1] < ts - self.span:
            state = _SenderState()
        self._states[msg.sender] = state
        self._states.move_to_end(msg.sender)

        if state.timestamps and ts < state.timestamps[-1]:
            newest = state.timestamps[-1]
            if ts < newest - self.skew:
                raise StreamOrderError(
                    f"message {msg.id!r} from {msg.sender!r} at {ts} is {newest - ts:.0f}s "
                    f"behind the sender's newest message (skew limit {self.skew:.0f}s)"
                )
            pos = bisect.bisect_right(state.timestamps, ts)
            state.timestamps.insert(pos, ts)
            state.messages.insert(pos, msg)
        else:
            state.timestamps.append(ts)
            state.messages.append(msg)

        if state.first is None or (not state.emitted and ts < state.first.timestamp):
            self._set_first(state, msg)

        cutoff = state.timestamps[-1] - self.span
        drop = bisect.bisect_left(state.timestamps, cutoff)
        if drop:
            del state.timestamps[:drop]
            del state.messages[:drop]

        state.since_emit += 1
        if len(state.messages) < self.min_messages:
            return None
        if state.emitted and state.since_emit < self.emit_stride:
            return None

        state.emitted = True
        state.since_emit = 0
        window = SenderWindow(
            sender=msg.sender,
            messages=tuple(state.messages),
            window_start=state.timestamps[0],
            window_end=state.timestamps[-1],
            first_message=state.first,
            first_message_mela=state.first_mela,
        )
        log.debug("window for %s: %d messages", msg.sender, len(window))
        return window

    def ingest_many(self, messages: Iterable[Message]) -> List[SenderWindow]:
        out = []
        for msg in messages:
            window = self.ingest(msg)
            if window is not None:
                out.append(window)
        return out


def shard_of(sender: str, n_shards: int) -> int:
    """Stable shard index of a sender."""
    return zlib.crc32(sender.encode("utf-8")) % n_shards


class ShardedAggregator:
    """Independent WindowAggregators, one per sender-hash shard.

    Shards share no state, so each can be driven by its own worker; the
    windows emitted are the same as those of one aggregator.
    """

    def __init__(self, n_shards: int, **params):
        if n_shards < 1:
            raise DataError("n_shards must be >= 1")
        self.n_shards = n_shards
        self.shards = [WindowAggregator(**params) for _ in range(n_shards)]

    def ingest(self, msg: Message) -> Optional[SenderWindow]:
        return self.shards[shard_of(msg.sender, self.n_shards)].ingest(msg)

    def partition(self, messages: Iterable[Message]) -> List[List[Message]]:
        parts: List[List[Message]] = [[] for _ in range(self.n_shards)]
        for msg in messages:
            parts[shard_of(msg.sender, self.n_shards)].append(msg)
        return parts

    def ingest_many(self, messages: Iterable[Message]) -> List[SenderWindow]:
        """Drive each shard over its own sub-stream, then merge by window end."""
        windows: List[SenderWindow] = []
        for shard, part in zip(self.shards, self.partition(messages)):
            windows.extend(shard.ingest_many(part))
        windows.sort(key=lambda w: (w.window_end, w.sender))
        return windows


def windows_from_stream(messages: Iterable[Message], **params) -> List[SenderWindow]:
    """Batch mode: sort by timestamp (stable) and aggregate."""
    ordered = sorted(messages, key=lambda m: m.timestamp)
    return WindowAggregator(**params).ingest_many(ordered)
