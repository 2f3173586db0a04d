"""
smsguard - Short-text spam and abusive-sender detection.

Message-level linguistic features (MELA) and per-sender messaging
pattern features (MPA) feed cost-sensitive random forests. Word n-gram
and sparse orthogonal n-gram baselines, a cross-validation and temporal
replay harness, and a synthetic corpus generator come with it.

Usage:
    smsguard gen-corpus -o data/
    smsguard evaluate data/corpus.jsonl --features mela
    smsguard train-message data/corpus.jsonl -o message.bin
    smsguard classify inbox.jsonl --model message.bin
"""

from ._version import BASE_VERSION, VERSION, __version__, get_base_version
from .messages import LabeledMessage, Message
from .model import Label

__all__ = [
    "__version__",
    "get_base_version",
    "VERSION",
    "BASE_VERSION",
    "Label",
    "LabeledMessage",
    "Message",
]
