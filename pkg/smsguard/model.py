"""
Random forest learner and cost-sensitive decision layer.

Trees are CART classifiers grown with Gini impurity on bootstrap samples,
with a random subset of candidate features at every node. Each tree is
stored as flat numpy arrays (feature, threshold, left, right, class
counts) so that a forest serializes to a compact, portable binary file.

Scores are the fraction of trees voting spam; the decision layer turns a
score into a label with the minimum-expected-cost threshold of a
CostMatrix.

Model file layout (all integers little-endian)::

    b"SGFOREST" u16 major u16 minor
    repeated: 4-byte tag, u64 length, payload
      HEAD  JSON: schema_version, n_features, n_trees, oob_accuracy, meta
      PARM  JSON: ForestParams
      LABL  JSON: class labels
      TREE  u32 n_trees, then per tree u32 n_nodes and the node arrays
"""

import dataclasses
import enum
import io
import json
import logging
import math
import struct
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

from ._datafiles import write_atomic
from .errors import (
    ConfigError,
    ModelFormatError,
    SchemaMismatchError,
    TrainingError,
)

log = logging.getLogger(__name__)

MAGIC = b"SGFOREST"
FORMAT_MAJOR = 1
FORMAT_MINOR = 0
CLASS_LABELS = ("ham", "spam")


class Label(enum.IntEnum):
    HAM = 0
    SPAM = 1

    def __str__(self) -> str:
        return self.name.lower()


@dataclasses.dataclass(frozen=True)
class ForestParams:
    n_trees: int = 500
    max_depth: Optional[int] = None
    min_leaf: int = 1
    features_per_split: Union[str, int] = "sqrt"
    bootstrap: bool = True
    rng_seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        if self.n_trees < 1:
            raise TrainingError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.min_leaf < 1:
            raise TrainingError(f"min_leaf must be >= 1, got {self.min_leaf}")
        if self.max_depth is not None and self.max_depth < 1:
            raise TrainingError(f"max_depth must be >= 1 or None, got {self.max_depth}")
        rule = self.features_per_split
        if isinstance(rule, str) and rule not in ("sqrt", "log2", "all"):
            raise TrainingError(f"unknown features_per_split rule {rule!r}")
        if isinstance(rule, int) and rule < 1:
            raise TrainingError(f"features_per_split must be >= 1, got {rule}")

    def split_features(self, d: int) -> int:
        """Number of candidate features drawn per node for ``d`` features."""
        rule = self.features_per_split
        if rule == "sqrt":
            k = int(math.floor(math.sqrt(d)))
        elif rule == "log2":
            k = int(math.floor(math.log2(d))) if d > 1 else 1
        elif rule == "all":
            k = d
        else:
            k = int(rule)
        return max(1, min(d, k))

    def with_trees(self, n_trees: int) -> "ForestParams":
        return dataclasses.replace(self, n_trees=n_trees)


@dataclasses.dataclass(frozen=True)
class CostMatrix:
    cost_fp: float = 1.0
    cost_fn: float = 1.0

    def __post_init__(self):
        if not (self.cost_fp > 0 and self.cost_fn > 0):
            raise ConfigError(f"costs must be > 0, got fp={self.cost_fp} fn={self.cost_fn}")

    @property
    def threshold(self) -> float:
        return self.cost_fp / (self.cost_fp + self.cost_fn)

    @classmethod
    def parse(cls, text: str) -> "CostMatrix":
        """Parse ``"fp,fn"`` as given on the command line."""
        try:
            fp, fn = (float(p) for p in text.split(","))
        except ValueError:
            raise ConfigError(f"costs must look like FP,FN (e.g. 1,1), got {text!r}") from None
        return cls(fp, fn)


@dataclasses.dataclass(eq=False)
class Tree:
    """One decision tree as parallel node arrays; leaves have feature -1."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    def apply(self, X) -> np.ndarray:
        """Return the leaf index reached by every row of ``X``."""
        n = X.shape[0]
        node = np.zeros(n, dtype=np.int64)
        rows = np.arange(n)
        active = self.feature[node] >= 0
        while active.any():
            r = rows[active]
            nd = node[active]
            f = self.feature[nd]
            if sp.issparse(X):
                vals = np.asarray(X[r, f]).ravel()
            else:
                vals = X[r, f]
            go_left = vals <= self.threshold[nd]
            node[active] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return node

    def spam_votes(self, X) -> np.ndarray:
        leaves = self.apply(X)
        c = self.counts[leaves]
        return c[:, 1] > c[:, 0]


@dataclasses.dataclass(eq=False)
class Forest:
    trees: List[Tree]
    params: ForestParams
    n_features: int
    schema_version: str = ""
    class_labels: Tuple[str, str] = CLASS_LABELS
    oob_accuracy: Optional[float] = None
    meta: Dict[str, str] = dataclasses.field(default_factory=dict)

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def check_schema(self, schema_version: str, n_features: Optional[int] = None) -> None:
        if schema_version and self.schema_version != schema_version:
            raise SchemaMismatchError(
                f"model was trained on schema {self.schema_version!r}, expected {schema_version!r}"
            )
        if n_features is not None and self.n_features != n_features:
            raise SchemaMismatchError(
                f"model expects {self.n_features} features, got {n_features}"
            )

    def predict_many(self, X) -> np.ndarray:
        """Spam-vote fraction for every row of ``X``."""
        X = _as_matrix(X, SchemaMismatchError)
        if X.shape[1] != self.n_features:
            raise SchemaMismatchError(
                f"vector has {X.shape[1]} features, model expects {self.n_features}"
            )
        votes = np.zeros(X.shape[0], dtype=np.int64)
        for tree in self.trees:
            votes += tree.spam_votes(X)
        return votes / len(self.trees)


# ── Training ─────────────────────────────────────────────────────────


def _as_matrix(X, error):
    if sp.issparse(X):
        X = sp.csr_matrix(X, dtype=np.float64)
        data = X.data
    else:
        try:
            X = np.asarray(X, dtype=np.float64)
        except (ValueError, TypeError):
            raise error("feature vectors have inconsistent dimensions or non-numeric values") from None
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.ndim != 2:
            raise error(f"expected a 2-D feature matrix, got {X.ndim} dimensions")
        data = X
    if not np.all(np.isfinite(data)):
        raise error("feature matrix contains non-finite values")
    return X


def _node_block(X, idx: np.ndarray, feats: np.ndarray) -> np.ndarray:
    if sp.issparse(X):
        return X[idx][:, feats].toarray()
    return X[np.ix_(idx, feats)]


def _best_split(block: np.ndarray, y_node: np.ndarray, min_leaf: int):
    """Best Gini split over the columns of ``block``; None when none is valid."""
    n = block.shape[0]
    order = np.argsort(block, axis=0, kind="stable")
    vs = np.take_along_axis(block, order, axis=0)
    ys = y_node[order]
    left_spam = np.cumsum(ys, axis=0)[:-1].astype(np.float64)
    n_left = np.arange(1, n, dtype=np.float64)[:, None]
    n_right = n - n_left
    right_spam = y_node.sum() - left_spam
    p_l = left_spam / n_left
    p_r = right_spam / n_right
    weighted = (n_left * 2.0 * p_l * (1.0 - p_l) + n_right * 2.0 * p_r * (1.0 - p_r)) / n
    valid = (vs[:-1] < vs[1:]) & (n_left >= min_leaf) & (n_right >= min_leaf)
    if not valid.any():
        return None
    weighted = np.where(valid, weighted, np.inf)
    pos, col = np.unravel_index(int(np.argmin(weighted)), weighted.shape)
    lo, hi = vs[pos, col], vs[pos + 1, col]
    threshold = lo + (hi - lo) / 2.0
    if not lo <= threshold < hi:
        threshold = lo
    return int(col), float(threshold)


def _grow_tree(X, y: np.ndarray, params: ForestParams, seed) -> Tuple[Tree, np.ndarray]:
    """Grow one tree; returns it with the out-of-bag row indices."""
    rng = np.random.default_rng(seed)
    n, d = X.shape
    if params.bootstrap:
        sample = rng.integers(0, n, size=n)
        in_bag = np.zeros(n, dtype=bool)
        in_bag[sample] = True
        oob = np.flatnonzero(~in_bag)
    else:
        sample = np.arange(n)
        oob = np.empty(0, dtype=np.int64)
    k = params.split_features(d)

    feature: List[int] = []
    threshold: List[float] = []
    left: List[int] = []
    right: List[int] = []
    counts: List[Tuple[int, int]] = []

    def new_node(idx) -> int:
        spam = int(y[idx].sum())
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append((len(idx) - spam, spam))
        return len(feature) - 1

    stack = [(new_node(sample), sample, 0)]
    while stack:
        node, idx, depth = stack.pop()
        ham, spam = counts[node]
        if ham == 0 or spam == 0 or len(idx) < 2 * params.min_leaf:
            continue
        if params.max_depth is not None and depth >= params.max_depth:
            continue
        perm = rng.permutation(d)
        if sp.issparse(X):
            perm = perm[np.isin(perm, np.unique(X[idx].indices))]
        y_node = y[idx]
        split = None
        for start in range(0, len(perm), k):
            feats = perm[start:start + k]
            found = _best_split(_node_block(X, idx, feats), y_node, params.min_leaf)
            if found is not None:
                split = (int(feats[found[0]]), found[1])
                break
        if split is None:
            continue
        f, thr = split
        col = _node_block(X, idx, np.array([f])).ravel()
        li, ri = idx[col <= thr], idx[col > thr]
        feature[node] = f
        threshold[node] = thr
        left_id = new_node(li)
        right_id = new_node(ri)
        left[node] = left_id
        right[node] = right_id
        stack.append((right_id, ri, depth + 1))
        stack.append((left_id, li, depth + 1))

    tree = Tree(
        feature=np.array(feature, dtype=np.int32),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int32),
        right=np.array(right, dtype=np.int32),
        counts=np.array(counts, dtype=np.int64).reshape(-1, 2),
    )
    return tree, oob


_WORKER_DATA = {}


def _init_worker(X, y, params):
    _WORKER_DATA["args"] = (X, y, params)


def _grow_in_worker(seed):
    X, y, params = _WORKER_DATA["args"]
    return _grow_tree(X, y, params, seed)


def _grow_all(X, y, params: ForestParams) -> List[Tuple[Tree, np.ndarray]]:
    seeds = np.random.SeedSequence(params.rng_seed).spawn(params.n_trees)
    if params.n_jobs > 1 and params.n_trees > 1:
        with ProcessPoolExecutor(max_workers=params.n_jobs, initializer=_init_worker,
                                 initargs=(X, y, params)) as pool:
            return list(pool.map(_grow_in_worker, seeds))
    grown = []
    for i, seed in enumerate(seeds):
        grown.append(_grow_tree(X, y, params, seed))
        log.debug("grew tree %d/%d (%d nodes)", i + 1, params.n_trees, grown[-1][0].n_nodes)
    return grown


def _check_training_set(X, y):
    X = _as_matrix(X, TrainingError)
    y = np.asarray(y)
    if y.ndim != 1 or y.shape[0] != X.shape[0]:
        raise TrainingError(f"{X.shape[0]} vectors but {y.shape[0] if y.ndim else 0} labels")
    if X.shape[0] == 0 or X.shape[1] == 0:
        raise TrainingError("training set is empty")
    if not np.isin(y, (0, 1)).all():
        raise TrainingError("labels must be 0 (ham) or 1 (spam)")
    y = y.astype(np.int64)
    for label in Label:
        if not (y == label).any():
            raise TrainingError(f"training set has no {label} examples; both classes are required")
    return X, y


def _oob_accuracy(y: np.ndarray, spam_votes: np.ndarray, n_votes: np.ndarray) -> Optional[float]:
    seen = n_votes > 0
    if not seen.any():
        return None
    predicted = (2 * spam_votes[seen] >= n_votes[seen]).astype(np.int64)
    return float((predicted == y[seen]).mean())


def train(X, y, params: Optional[ForestParams] = None, schema_version: str = "",
          meta: Optional[Dict[str, str]] = None) -> Forest:
    """Train a forest on feature matrix ``X`` (dense or sparse) and 0/1 labels ``y``.

    Raises:
        TrainingError: a class is missing, dimensions disagree, or values
                       are not finite.
    """
    params = params or ForestParams()
    X, y = _check_training_set(X, y)
    log.info("training %d trees on %d x %d (seed %d)", params.n_trees, X.shape[0], X.shape[1],
             params.rng_seed)
    grown = _grow_all(X, y, params)

    spam_votes = np.zeros(X.shape[0], dtype=np.int64)
    n_votes = np.zeros(X.shape[0], dtype=np.int64)
    for tree, oob in grown:
        if oob.size:
            spam_votes[oob] += tree.spam_votes(X[oob])
            n_votes[oob] += 1

    forest = Forest(
        trees=[tree for tree, _ in grown],
        params=params,
        n_features=int(X.shape[1]),
        schema_version=schema_version,
        oob_accuracy=_oob_accuracy(y, spam_votes, n_votes),
        meta=dict(meta or {}),
    )
    if forest.oob_accuracy is not None:
        log.info("out-of-bag accuracy %.4f", forest.oob_accuracy)
    return forest


def train_examples(examples: Sequence[Tuple[Sequence[float], int]],
                   params: Optional[ForestParams] = None, schema_version: str = "") -> Forest:
    """Train from a list of ``(vector, label)`` pairs."""
    if not examples:
        raise TrainingError("training set is empty")
    lengths = {len(v) for v, _ in examples}
    if len(lengths) != 1:
        raise TrainingError(f"feature vectors have inconsistent lengths {sorted(lengths)}")
    X = np.array([v for v, _ in examples], dtype=np.float64)
    y = np.array([int(label) for _, label in examples])
    return train(X, y, params, schema_version)


def oob_curve(X, y, params: ForestParams, sizes: Sequence[int] = (10, 100, 500)) -> List[Tuple[int, Optional[float]]]:
    """Out-of-bag accuracy of the forest's first N trees, for each N in ``sizes``.

    Tree i is seeded from substream i, so the first N trees of one large
    forest are exactly the forest trained with ``n_trees=N``.
    """
    if not params.bootstrap:
        raise TrainingError("out-of-bag accuracy needs bootstrap sampling")
    X, y = _check_training_set(X, y)
    sizes = sorted(set(int(s) for s in sizes))
    if not sizes or sizes[0] < 1:
        raise TrainingError("tree counts must be >= 1")
    grown = _grow_all(X, y, params.with_trees(sizes[-1]))
    spam_votes = np.zeros(X.shape[0], dtype=np.int64)
    n_votes = np.zeros(X.shape[0], dtype=np.int64)
    curve = []
    wanted = set(sizes)
    for i, (tree, oob) in enumerate(grown, 1):
        if oob.size:
            spam_votes[oob] += tree.spam_votes(X[oob])
            n_votes[oob] += 1
        if i in wanted:
            curve.append((i, _oob_accuracy(y, spam_votes, n_votes)))
            log.info("oob accuracy with %d trees: %s", i, curve[-1][1])
    return curve


# ── Prediction and decisions ─────────────────────────────────────────


def predict(forest: Forest, v) -> float:
    """Fraction of trees voting spam for a single vector."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise SchemaMismatchError(f"expected a single vector, got shape {v.shape}")
    return float(forest.predict_many(v.reshape(1, -1))[0])


def decide(score: float, costs: Optional[CostMatrix] = None) -> Label:
    """Minimum-expected-cost label: spam iff score >= fp / (fp + fn)."""
    costs = costs or CostMatrix()
    if not 0.0 <= score <= 1.0:
        raise ValueError(f"score must be within [0, 1], got {score}")
    return Label.SPAM if score >= costs.threshold else Label.HAM


def decide_many(scores: np.ndarray, costs: Optional[CostMatrix] = None) -> np.ndarray:
    costs = costs or CostMatrix()
    return (np.asarray(scores) >= costs.threshold).astype(np.int64)


# ── Binary format ────────────────────────────────────────────────────

_SECTION = struct.Struct("<4sQ")
_HEADER = struct.Struct("<8sHH")


def _json_bytes(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _params_dict(params: ForestParams) -> dict:
    return dataclasses.asdict(params)


def _params_from(d: dict) -> ForestParams:
    try:
        return ForestParams(**d)
    except (TypeError, TrainingError) as e:
        raise ModelFormatError(f"invalid forest parameters in model: {e}") from None


def serialize(forest: Forest) -> bytes:
    """Encode a forest in the binary model format."""
    out = io.BytesIO()
    out.write(_HEADER.pack(MAGIC, FORMAT_MAJOR, FORMAT_MINOR))

    def section(tag: bytes, payload: bytes):
        out.write(_SECTION.pack(tag, len(payload)))
        out.write(payload)

    section(b"HEAD", _json_bytes({
        "schema_version": forest.schema_version,
        "n_features": forest.n_features,
        "n_trees": forest.n_trees,
        "oob_accuracy": forest.oob_accuracy,
        "meta": forest.meta,
    }))
    section(b"PARM", _json_bytes(_params_dict(forest.params)))
    section(b"LABL", _json_bytes(list(forest.class_labels)))

    trees = io.BytesIO()
    trees.write(struct.pack("<I", forest.n_trees))
    for t in forest.trees:
        trees.write(struct.pack("<I", t.n_nodes))
        trees.write(t.feature.astype("<i4").tobytes())
        trees.write(t.threshold.astype("<f8").tobytes())
        trees.write(t.left.astype("<i4").tobytes())
        trees.write(t.right.astype("<i4").tobytes())
        trees.write(t.counts.astype("<i8").tobytes())
    section(b"TREE", trees.getvalue())
    return out.getvalue()


def _read_trees(payload: bytes, n_features: int) -> List[Tree]:
    view = memoryview(payload)
    try:
        (n_trees,) = struct.unpack_from("<I", view, 0)
        pos = 4
        trees = []
        for _ in range(n_trees):
            (n,) = struct.unpack_from("<I", view, pos)
            pos += 4

            def take(dtype, count):
                nonlocal pos
                size = np.dtype(dtype).itemsize * count
                if pos + size > len(view):
                    raise ModelFormatError("tree section is truncated")
                arr = np.frombuffer(view[pos:pos + size], dtype=dtype).copy()
                pos += size
                return arr

            feature = take("<i4", n).astype(np.int32)
            threshold = take("<f8", n).astype(np.float64)
            left = take("<i4", n).astype(np.int32)
            right = take("<i4", n).astype(np.int32)
            counts = take("<i8", 2 * n).astype(np.int64).reshape(-1, 2)
            trees.append(_checked_tree(Tree(feature, threshold, left, right, counts), n_features))
    except struct.error:
        raise ModelFormatError("tree section is truncated") from None
    if pos != len(view):
        raise ModelFormatError("trailing bytes after tree section")
    return trees


def _checked_tree(tree: Tree, n_features: int) -> Tree:
    n = tree.n_nodes
    if n == 0:
        raise ModelFormatError("tree without nodes")
    internal = tree.feature >= 0
    if (tree.feature[internal] >= n_features).any() or (tree.feature < -1).any():
        raise ModelFormatError("tree references a feature outside the schema")
    if not np.isfinite(tree.threshold).all():
        raise ModelFormatError("tree has a non-finite threshold")
    for child in (tree.left[internal], tree.right[internal]):
        if ((child <= 0) | (child >= n)).any():
            raise ModelFormatError("tree has a child index out of range")
    if (tree.counts < 0).any():
        raise ModelFormatError("tree has negative class counts")
    return tree


def deserialize(data: bytes, expected_schema: Optional[str] = None) -> Forest:
    """Decode a forest; refuses corrupt payloads and newer major versions."""
    if len(data) < _HEADER.size:
        raise ModelFormatError("model payload is empty or truncated")
    magic, major, minor = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise ModelFormatError("not a smsguard model file (bad magic)")
    if major > FORMAT_MAJOR:
        raise ModelFormatError(
            f"model format {major}.{minor} is newer than supported {FORMAT_MAJOR}.{FORMAT_MINOR}"
        )

    sections: Dict[bytes, bytes] = {}
    pos = _HEADER.size
    while pos < len(data):
        if pos + _SECTION.size > len(data):
            raise ModelFormatError("truncated section header")
        tag, length = _SECTION.unpack_from(data, pos)
        pos += _SECTION.size
        if pos + length > len(data):
            raise ModelFormatError(f"section {tag!r} is truncated")
        sections[tag] = data[pos:pos + length]
        pos += length

    for tag in (b"HEAD", b"PARM", b"LABL", b"TREE"):
        if tag not in sections:
            raise ModelFormatError(f"model is missing the {tag.decode()} section")
    try:
        head = json.loads(sections[b"HEAD"])
        params = json.loads(sections[b"PARM"])
        labels = json.loads(sections[b"LABL"])
    except ValueError as e:
        raise ModelFormatError(f"corrupt model header: {e}") from None

    if tuple(labels) != CLASS_LABELS:
        raise ModelFormatError(f"unexpected class labels {labels!r}")
    try:
        n_features = int(head["n_features"])
        trees = _read_trees(sections[b"TREE"], n_features)
        forest = Forest(
            trees=trees,
            params=_params_from(params),
            n_features=n_features,
            schema_version=str(head["schema_version"]),
            class_labels=CLASS_LABELS,
            oob_accuracy=head.get("oob_accuracy"),
            meta=dict(head.get("meta") or {}),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFormatError(f"corrupt model header: {e}") from None
    if forest.n_trees != int(head["n_trees"]) or forest.n_trees == 0:
        raise ModelFormatError("tree count does not match the header")
    if expected_schema is not None:
        forest.check_schema(expected_schema)
    return forest


def save_forest(forest: Forest, path) -> None:
    write_atomic(path, serialize(forest))


def load_forest(path, expected_schema: Optional[str] = None) -> Forest:
    try:
        with open(path, "rb") as f:
            data = f.read()
    except FileNotFoundError:
        raise ModelFormatError(f"model file not found: {path}") from None
    return deserialize(data, expected_schema)


# ── Text dump ────────────────────────────────────────────────────────


def dump_text(forest: Forest) -> str:
    """Lossless, diffable text form of a forest (floats in hex notation)."""
    lines = [
        f"smsguard-forest {FORMAT_MAJOR}.{FORMAT_MINOR}",
        f"schema {json.dumps(forest.schema_version)}",
        f"n_features {forest.n_features}",
        f"labels {' '.join(forest.class_labels)}",
        f"params {json.dumps(_params_dict(forest.params), sort_keys=True)}",
        f"meta {json.dumps(forest.meta, sort_keys=True)}",
        f"oob {'none' if forest.oob_accuracy is None else float(forest.oob_accuracy).hex()}",
    ]
    for i, t in enumerate(forest.trees):
        lines.append(f"tree {i} nodes {t.n_nodes}")
        for j in range(t.n_nodes):
            lines.append(
                f"{j} {int(t.feature[j])} {float(t.threshold[j]).hex()} "
                f"{int(t.left[j])} {int(t.right[j])} {int(t.counts[j, 0])} {int(t.counts[j, 1])}"
            )
    return "\n".join(lines) + "\n"


def parse_text(text: str) -> Forest:
    """Inverse of dump_text."""
    lines = text.splitlines()
    try:
        header = dict(line.split(" ", 1) for line in lines[:7])
        version = header["smsguard-forest"]
        if int(version.split(".")[0]) > FORMAT_MAJOR:
            raise ModelFormatError(f"dump format {version} is newer than supported")
        n_features = int(header["n_features"])
        oob = header["oob"]
        trees = []
        pos = 7
        while pos < len(lines):
            tag, _, _, n = lines[pos].split()
            if tag != "tree":
                raise ModelFormatError(f"line {pos + 1}: expected a tree header")
            n = int(n)
            rows = [lines[pos + 1 + j].split() for j in range(n)]
            pos += 1 + n
            trees.append(_checked_tree(Tree(
                feature=np.array([int(r[1]) for r in rows], dtype=np.int32),
                threshold=np.array([float.fromhex(r[2]) for r in rows], dtype=np.float64),
                left=np.array([int(r[3]) for r in rows], dtype=np.int32),
                right=np.array([int(r[4]) for r in rows], dtype=np.int32),
                counts=np.array([[int(r[5]), int(r[6])] for r in rows], dtype=np.int64).reshape(-1, 2),
            ), n_features))
        return Forest(
            trees=trees,
            params=_params_from(json.loads(header["params"])),
            n_features=n_features,
            schema_version=json.loads(header["schema"]),
            class_labels=tuple(header["labels"].split()),
            oob_accuracy=None if oob == "none" else float.fromhex(oob),
            meta=json.loads(header["meta"]),
        )
    except (KeyError, IndexError, ValueError) as e:
        raise ModelFormatError(f"malformed forest dump: {e}") from None
