"""
Substring clusters: mining, grouping, file format, and fast counting.

A cluster set is an ordered list of named groups of lowercase substrings
("money": cash, dinero, dolar ...). Each message gets one count per
cluster: the number of occurrences of the cluster's substrings anywhere
in its lowercased text, infix matches included. Counting runs a single
Aho-Corasick pass over the text however many substrings there are.

Cluster sets are mined from a spam corpus (``mine_substrings``), grouped
into proposals by average-linkage clustering (``cluster_candidates``),
written out for a human to prune, and re-validated before use.

File format (cluster sets, proposals and pruning files)::

    # version: 2026.10-1
    [money]
    cash
    dinero
    -dolar          <- pruning files only: remove a member
    [-casino]       <- pruning files only: drop a whole cluster
    [promo > deals] <- pruning files only: rename
    [money < cash2] <- pruning files only: merge cash2 into money
"""

import functools
import itertools
import logging
import math
import re
from collections import Counter, deque
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from ._datafiles import iter_entries, read_text, version_of, write_atomic
from .errors import ClusterError

log = logging.getLogger(__name__)

PathLike = Union[str, Path]

MIN_SUBSTRING_LEN = 3
DEFAULT_CLUSTER_COUNT = 22

_WORD_RE = re.compile(r"[^\W\d_]+")
_META_RE = re.compile(r"^#\s*([A-Za-z_][\w-]*):\s*(.*)$")


def _lower(text: str) -> str:
    """Lowercase without changing length, so offsets stay comparable."""
    low = text.lower()
    if len(low) == len(text):
        return low
    return "".join(c if len(c.lower()) != 1 else c.lower() for c in text)


# ── ClusterSet ───────────────────────────────────────────────────────


@dataclass(frozen=True)
class ClusterSet:
    """Ordered named substring clusters.

    Construction checks member-level invariants; the cluster count is
    checked against configuration with ``validate``.
    """

    clusters: Tuple[Tuple[str, Tuple[str, ...]], ...]
    version: str = "unversioned"
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        clusters = tuple(
            (str(name).strip(), tuple(str(s).strip().lower() for s in members))
            for name, members in self.clusters
        )
        seen_names = set()
        owner: Dict[str, str] = {}
        for name, members in clusters:
            if not name:
                raise ClusterError("cluster with an empty name")
            if name in seen_names:
                raise ClusterError(f"cluster {name!r} defined twice")
            seen_names.add(name)
            if not members:
                raise ClusterError(f"cluster {name!r} has no substrings")
            for sub in members:
                if len(sub) < MIN_SUBSTRING_LEN:
                    raise ClusterError(
                        f"cluster {name!r}: substring {sub!r} shorter than {MIN_SUBSTRING_LEN}"
                    )
                if sub in owner:
                    where = "twice" if owner[sub] == name else f"also in {owner[sub]!r}"
                    raise ClusterError(f"substring {sub!r} of cluster {name!r} appears {where}")
                owner[sub] = name
        object.__setattr__(self, "clusters", clusters)
        object.__setattr__(self, "metadata", MappingProxyType(dict(self.metadata)))

    def __len__(self) -> int:
        return len(self.clusters)

    @property
    def names(self) -> List[str]:
        return [name for name, _ in self.clusters]

    def members(self, name: str) -> Tuple[str, ...]:
        for n, members in self.clusters:
            if n == name:
                return members
        raise KeyError(name)

    def validate(self, expected_count: int = DEFAULT_CLUSTER_COUNT) -> "ClusterSet":
        """Check the configured cluster count; returns self for chaining."""
        if len(self.clusters) != expected_count:
            raise ClusterError(
                f"cluster set has {len(self.clusters)} clusters, expected {expected_count}"
            )
        return self


def load_cluster_set(path: PathLike, expected_count: Optional[int] = None) -> ClusterSet:
    """Load a cluster set file, optionally checking its cluster count."""
    text = read_text(path, ClusterError)
    sections, metadata = _parse_sections(text, str(path), allow_edits=False)
    cs = ClusterSet(tuple((name, tuple(ops)) for name, ops in sections), version_of(text), metadata)
    if expected_count is not None:
        cs.validate(expected_count)
    log.debug("loaded %d clusters from %s (version %s)", len(cs), path, cs.version)
    return cs


@functools.lru_cache(maxsize=1)
def default_cluster_set() -> ClusterSet:
    """Return the bundled 22-cluster set."""
    from ._paths import bundled_path
    return load_cluster_set(bundled_path("clusters.txt"), DEFAULT_CLUSTER_COUNT)


def format_cluster_set(cs: ClusterSet) -> str:
    lines = [f"# version: {cs.version}"]
    for key, value in cs.metadata.items():
        if key != "version":
            lines.append(f"# {key}: {value}")
    for name, members in cs.clusters:
        lines.append(f"[{name}]")
        lines.extend(members)
    return "\n".join(lines) + "\n"


def write_cluster_set(cs: ClusterSet, path: PathLike) -> None:
    write_atomic(path, format_cluster_set(cs))


def _parse_sections(text: str, source: str, allow_edits: bool):
    """Parse ``[name]`` sections; returns ([(header, lines)], metadata)."""
    metadata: Dict[str, str] = {}
    for raw in text.splitlines():
        m = _META_RE.match(raw.strip())
        if m:
            metadata[m.group(1)] = m.group(2).strip()

    sections: List[Tuple[str, List[str]]] = []
    for lineno, line in iter_entries(text):
        if line.startswith("[") and line.endswith("]"):
            header = line[1:-1].strip()
            if not header:
                raise ClusterError(f"{source}: line {lineno}: empty section header")
            if not allow_edits and (header.startswith("-") or "<" in header or ">" in header):
                raise ClusterError(f"{source}: line {lineno}: edit header [{header}] outside a pruning file")
            sections.append((header, []))
            continue
        if not sections:
            raise ClusterError(f"{source}: line {lineno}: substring outside any [cluster]")
        if not allow_edits and line.startswith("-"):
            raise ClusterError(f"{source}: line {lineno}: deletion {line!r} outside a pruning file")
        sections[-1][1].append(line)
    return sections, metadata


def apply_pruning(cs: ClusterSet, pruning: Union[PathLike, str], from_text: bool = False) -> ClusterSet:
    """Apply a reviewer's pruning file to a cluster set.

    Sections are applied in file order. Member lines add substrings,
    ``-substring`` lines remove them; ``[-name]`` drops a cluster,
    ``[old > new]`` renames one and ``[into < other]`` merges ``other``
    into ``into``. Naming an unknown cluster in a removal, rename or
    merge is an error. The result is re-validated.
    """
    text = pruning if from_text else read_text(pruning, ClusterError)
    source = "<pruning>" if from_text else str(pruning)
    sections, metadata = _parse_sections(text, source, allow_edits=True)

    order = [name for name, _ in cs.clusters]
    members = {name: list(m) for name, m in cs.clusters}

    def require(name):
        if name not in members:
            raise ClusterError(f"{source}: unknown cluster {name!r}")

    for header, lines in sections:
        if header.startswith("-"):
            name = header[1:].strip()
            require(name)
            order.remove(name)
            del members[name]
            if lines:
                raise ClusterError(f"{source}: [{header}] takes no member lines")
            continue
        if ">" in header:
            old, new = (p.strip() for p in header.split(">", 1))
            require(old)
            if new in members:
                raise ClusterError(f"{source}: cannot rename {old!r} to existing {new!r}")
            order[order.index(old)] = new
            members[new] = members.pop(old)
            target = new
        elif "<" in header:
            into, other = (p.strip() for p in header.split("<", 1))
            require(into)
            require(other)
            members[into].extend(s for s in members.pop(other) if s not in members[into])
            order.remove(other)
            target = into
        else:
            target = header
            if target not in members:
                order.append(target)
                members[target] = []
        for line in lines:
            if line.startswith("-"):
                sub = line[1:].strip().lower()
                if sub not in members[target]:
                    raise ClusterError(f"{source}: {sub!r} is not a member of {target!r}")
                members[target].remove(sub)
            else:
                sub = line.lower()
                if sub not in members[target]:
                    members[target].append(sub)

    meta = dict(cs.metadata)
    meta.update(metadata)
    pruned = ClusterSet(
        tuple((name, tuple(members[name])) for name in order),
        meta.get("version", cs.version),
        meta,
    )
    log.info("pruning left %d clusters", len(pruned))
    return pruned


# ── Matching ─────────────────────────────────────────────────────────


@dataclass
class ScanStats:
    """Work counters of a matcher scan."""

    positions: int = 0
    transitions: int = 0


class ClusterMatcher:
    """Aho-Corasick automaton over every substring of a ClusterSet.

    States are integers; ``_goto[s]`` maps a character to the next state,
    ``_fail[s]`` is the failure link and ``_out[s]`` lists the cluster
    index of every pattern ending at ``s``, failure-chain outputs
    included. Immutable after construction.
    """

    def __init__(self, clusters: ClusterSet):
        self.clusters = clusters
        self.n_clusters = len(clusters)
        self.cluster_of: Dict[str, int] = {}
        goto: List[Dict[str, int]] = [{}]
        own: List[List[int]] = [[]]

        for idx, (name, members) in enumerate(clusters.clusters):
            for pattern in members:
                if pattern in self.cluster_of:
                    raise ClusterError(f"duplicate substring {pattern!r} across clusters")
                self.cluster_of[pattern] = idx
                state = 0
                for ch in pattern:
                    nxt = goto[state].get(ch)
                    if nxt is None:
                        nxt = len(goto)
                        goto[state][ch] = nxt
                        goto.append({})
                        own.append([])
                    state = nxt
                own[state].append(idx)

        fail = [0] * len(goto)
        out: List[Tuple[int, ...]] = [()] * len(goto)
        queue = deque()
        for child in goto[0].values():
            queue.append(child)
            out[child] = tuple(own[child])
        while queue:
            state = queue.popleft()
            for ch, child in goto[state].items():
                f = fail[state]
                while f and ch not in goto[f]:
                    f = fail[f]
                target = goto[f].get(ch, 0)
                fail[child] = target if target != child else 0
                out[child] = tuple(own[child]) + out[fail[child]]
                queue.append(child)

        self._goto = goto
        self._fail = fail
        self._out = out

    @property
    def n_states(self) -> int:
        return len(self._goto)

    def count(self, text: str, stats: Optional[ScanStats] = None) -> List[int]:
        """Count cluster hits in ``text`` in a single left-to-right pass."""
        counts = [0] * self.n_clusters
        goto, fail, out = self._goto, self._fail, self._out
        state = 0
        transitions = 0
        low = _lower(text)
        for ch in low:
            while state and ch not in goto[state]:
                state = fail[state]
                transitions += 1
            state = goto[state].get(ch, 0)
            transitions += 1
            for idx in out[state]:
                counts[idx] += 1
        if stats is not None:
            stats.positions += len(low)
            stats.transitions += transitions
        return counts


def build_matcher(clusters: Union[ClusterSet, Sequence[Tuple[str, Sequence[str]]]]) -> ClusterMatcher:
    """Build the counting automaton of a cluster set."""
    if not isinstance(clusters, ClusterSet):
        clusters = ClusterSet(tuple((name, tuple(m)) for name, m in clusters))
    matcher = ClusterMatcher(clusters)
    log.debug("built matcher: %d clusters, %d states", matcher.n_clusters, matcher.n_states)
    return matcher


@functools.lru_cache(maxsize=1)
def default_matcher() -> ClusterMatcher:
    return build_matcher(default_cluster_set())


def count_clusters(matcher: ClusterMatcher, text: str) -> List[int]:
    """Per-cluster occurrence counts of ``text``."""
    return matcher.count(text)


def count_clusters_naive(clusters: ClusterSet, text: str) -> List[int]:
    """Reference counter: scan for every substring separately."""
    low = _lower(text)
    counts = []
    for _, members in clusters.clusters:
        total = 0
        for sub in members:
            pos = low.find(sub)
            while pos != -1:
                total += 1
                pos = low.find(sub, pos + 1)
        counts.append(total)
    return counts


# ── Mining ───────────────────────────────────────────────────────────


def _longest_common_substrings(a: str, b: str) -> List[str]:
    """All distinct common substrings of maximal length."""
    best = 0
    ends: List[int] = []
    prev = [0] * (len(b) + 1)
    for i in range(1, len(a) + 1):
        cur = [0] * (len(b) + 1)
        ai = a[i - 1]
        for j in range(1, len(b) + 1):
            if ai == b[j - 1]:
                v = prev[j - 1] + 1
                cur[j] = v
                if v > best:
                    best = v
                    ends = [i]
                elif v == best:
                    ends.append(i)
        prev = cur
    if best == 0:
        return []
    return sorted({a[i - best:i] for i in ends})


def mine_substrings(corpus: Sequence[str], stopwords: Iterable[str] = (),
                    top_k: int = 200, min_len: int = 4) -> List[Tuple[str, int]]:
    """Mine frequent-word common substrings with their document support.

    Words are maximal letter runs, lowercased, minus stopwords. The
    ``top_k`` most frequent words (ties alphabetical) are compared
    pairwise; every longest common substring of length ``min_len`` or
    more is kept. A substring contained in another kept substring with
    the same support is dropped. Sorted by support, then alphabetically.
    """
    if not corpus:
        raise ClusterError("cannot mine substrings from an empty corpus")
    if top_k < 1:
        raise ClusterError(f"top_k must be >= 1, got {top_k}")
    if min_len < MIN_SUBSTRING_LEN:
        raise ClusterError(f"min_len must be >= {MIN_SUBSTRING_LEN}, got {min_len}")

    stop = {w.lower() for w in stopwords}
    docs = [_lower(t) for t in corpus]
    freq = Counter(w for d in docs for w in _WORD_RE.findall(d) if w not in stop)
    top = [w for w, _ in sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))[:top_k]]

    found = set()
    for a, b in itertools.combinations(top, 2):
        for sub in _longest_common_substrings(a, b):
            if len(sub) >= min_len:
                found.add(sub)

    support = {s: sum(1 for d in docs if s in d) for s in found}
    kept = [
        s for s in found
        if not any(s != o and s in o and support[o] == support[s] for o in found)
    ]
    result = sorted(((s, support[s]) for s in kept), key=lambda p: (-p[1], p[0]))
    log.info("mined %d substrings from %d documents (%d candidate words)",
             len(result), len(docs), len(top))
    return result


def cooccurrence_matrix(corpus: Sequence[str], substrings: Sequence[str]) -> np.ndarray:
    """Document-level co-occurrence counts; the diagonal is document support."""
    docs = [_lower(t) for t in corpus]
    present = np.array([[s in d for s in substrings] for d in docs], dtype=np.int64)
    if present.size == 0:
        return np.zeros((len(substrings), len(substrings)), dtype=np.int64)
    return present.T @ present


# ── Grouping ─────────────────────────────────────────────────────────


@dataclass(frozen=True)
class ClusterProposal:
    name: str
    members: Tuple[Tuple[str, int], ...]
    similarity: float

    @property
    def substrings(self) -> List[str]:
        return [s for s, _ in self.members]


def _trigrams(s: str) -> set:
    if len(s) < 3:
        return {s}
    return {s[i:i + 3] for i in range(len(s) - 2)}


def similarity_matrix(substrings: Sequence[str], cooccurrence, alpha: float = 0.5) -> np.ndarray:
    """alpha * trigram Jaccard + (1 - alpha) * cosine-normalized co-occurrence."""
    n = len(substrings)
    grams = [_trigrams(s) for s in substrings]
    cooc = np.asarray(cooccurrence, dtype=float)
    diag = np.diag(cooc)
    sim = np.ones((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            union = len(grams[i] | grams[j])
            jac = len(grams[i] & grams[j]) / union if union else 0.0
            denom = math.sqrt(diag[i] * diag[j])
            co = min(1.0, cooc[i, j] / denom) if denom > 0 else 0.0
            sim[i, j] = sim[j, i] = alpha * jac + (1.0 - alpha) * co
    return sim


def cluster_candidates(substrings: Sequence, cooccurrence, target_k: int,
                       alpha: float = 0.5) -> List[ClusterProposal]:
    """Group substrings into ``target_k`` proposals by average linkage.

    ``substrings`` holds strings or ``(substring, support)`` pairs; plain
    strings take their support from the co-occurrence diagonal. At each
    step the two groups with the highest mean pairwise similarity merge;
    equal similarities go to the pair whose smallest members sort first.
    """
    items = [s if isinstance(s, tuple) else (s, None) for s in substrings]
    names = [str(s) for s, _ in items]
    n = len(names)
    cooc = np.asarray(cooccurrence, dtype=float)
    if cooc.shape != (n, n):
        raise ClusterError(f"co-occurrence matrix is {cooc.shape}, expected ({n}, {n})")
    if len(set(names)) != n:
        raise ClusterError("duplicate substrings in candidate list")
    if not 1 <= target_k <= n:
        raise ClusterError(f"target_k={target_k} must be between 1 and {n} (number of substrings)")
    if not 0.0 <= alpha <= 1.0:
        raise ClusterError(f"alpha must be within [0, 1], got {alpha}")

    supports = [
        int(sup) if sup is not None else max(1, int(cooc[i, i]))
        for i, (_, sup) in enumerate(items)
    ]
    if any(s <= 0 for s in supports):
        raise ClusterError("support counts must be positive")

    sim = similarity_matrix(names, cooc, alpha)
    groups: Dict[int, List[int]] = {i: [i] for i in range(n)}
    smallest = {i: names[i] for i in range(n)}
    sums = sim.copy()

    while len(groups) > target_k:
        active = sorted(groups)
        sizes = np.array([len(groups[a]) for a in active], dtype=float)
        link = sums[np.ix_(active, active)] / np.outer(sizes, sizes)
        link = np.round(link, 12)
        iu = np.triu_indices(len(active), k=1)
        best = link[iu].max()
        ties = [
            (active[i], active[j])
            for i, j in zip(*iu)
            if link[i, j] == best
        ]
        a, b = min(ties, key=lambda p: tuple(sorted((smallest[p[0]], smallest[p[1]]))))
        sums[a, :] += sums[b, :]
        sums[:, a] = sums[a, :]
        groups[a].extend(groups.pop(b))
        smallest[a] = min(smallest[a], smallest.pop(b))

    ordered = sorted(groups.values(), key=lambda g: min(names[i] for i in g))
    proposals = []
    for rank, group in enumerate(ordered, 1):
        if len(group) == 1:
            score = 1.0
        else:
            pairs = list(itertools.combinations(group, 2))
            score = float(sum(sim[i, j] for i, j in pairs) / len(pairs))
        members = sorted(((names[i], supports[i]) for i in group), key=lambda p: (-p[1], p[0]))
        proposals.append(ClusterProposal(f"cluster_{rank:02d}", tuple(members),
                                         min(1.0, max(0.0, score))))
    return proposals


def format_proposals(proposals: Sequence[ClusterProposal], metadata: Optional[Mapping[str, str]] = None) -> str:
    """Render proposals in cluster-set format, with review notes as comments."""
    lines = []
    for key, value in (metadata or {}).items():
        lines.append(f"# {key}: {value}")
    lines.append(f"# proposals: {len(proposals)}")
    for p in proposals:
        lines.append("")
        lines.append(f"[{p.name}]")
        lines.append(f"# similarity {p.similarity:.4f}, support " +
                     " ".join(f"{s}={n}" for s, n in p.members))
        lines.extend(p.substrings)
    return "\n".join(lines) + "\n"


def write_proposals(proposals: Sequence[ClusterProposal], path: PathLike,
                    metadata: Optional[Mapping[str, str]] = None) -> None:
    write_atomic(path, format_proposals(proposals, metadata))
