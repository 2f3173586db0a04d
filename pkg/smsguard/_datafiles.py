"""
Readers for the line-oriented data files bundled with smsguard.

All lists share one format: UTF-8, one entry per line, blank lines and
lines starting with ``#`` ignored. A ``# version: X`` comment anywhere in
the file names its version; files without one are versioned by content
hash. Sectioned files group entries under ``[name]`` headers.
"""

import hashlib
import os
import re
from pathlib import Path
from typing import Dict, List, Type, Union

from .errors import DataError

PathLike = Union[str, Path]

_VERSION_RE = re.compile(r"^#\s*version:\s*(\S+)\s*$")
_SECTION_RE = re.compile(r"^\[([^\[\]]+)\]$")


def read_text(path: PathLike, error: Type[DataError] = DataError) -> str:
    """Read a data file as text, mapping I/O failures to ``error``."""
    p = Path(path)
    try:
        return p.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise error(f"{p}: file not found") from None
    except UnicodeDecodeError as e:
        raise error(f"{p}: not valid UTF-8 ({e.reason} at byte {e.start})") from None
    except OSError as e:
        raise error(f"{p}: {e.strerror}") from None


def write_atomic(path: PathLike, data: Union[str, bytes]) -> None:
    """Write ``data`` to a sibling temp file, then rename it over ``path``.

    Readers see the old file or the new one, never a partial write.
    """
    p = Path(path)
    tmp = p.with_name(p.name + ".tmp")
    if isinstance(data, str):
        data = data.encode("utf-8")
    try:
        with open(tmp, "wb") as f:
            f.write(data)
        os.replace(tmp, p)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


def iter_entries(text: str):
    """Yield ``(line_number, entry)`` for every non-comment, non-blank line."""
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line


def read_lines(path: PathLike, error: Type[DataError] = DataError) -> List[str]:
    """Return the entries of a plain list file."""
    return [line for _, line in iter_entries(read_text(path, error))]


def read_sections(path: PathLike, error: Type[DataError] = DataError) -> Dict[str, List[str]]:
    """Return ``{section: entries}`` of a sectioned file, in file order.

    Entries before the first header are an error; a repeated header
    continues the earlier section.
    """
    sections: Dict[str, List[str]] = {}
    current = None
    for lineno, line in iter_entries(read_text(path, error)):
        m = _SECTION_RE.match(line)
        if m:
            current = m.group(1).strip()
            sections.setdefault(current, [])
            continue
        if current is None:
            raise error(f"{path}: line {lineno}: entry outside any [section]")
        sections[current].append(line)
    return sections


def version_of(text: str) -> str:
    """Return the declared version of file content, or a short content hash."""
    for raw in text.splitlines():
        m = _VERSION_RE.match(raw.strip())
        if m:
            return m.group(1)
    return "sha256:" + hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]
