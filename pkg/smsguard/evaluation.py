"""
Evaluation harness: confusion metrics, stratified k-fold cross-validation
and week-bucketed temporal replay of a frozen model.

Spam is the positive class. Precision/recall/F1 are reported per class
with macro (primary) and support-weighted averages; false-positive and
false-negative rates are reported on their own and never derived from
precision.
"""

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from sklearn.metrics import confusion_matrix
from sklearn.model_selection import StratifiedGroupKFold, StratifiedKFold

from .errors import EvalError
from .model import CostMatrix

log = logging.getLogger(__name__)

WEEK = 7 * 86400


@dataclass(frozen=True)
class Confusion:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise EvalError(f"confusion counts must be >= 0: {self}")

    def __add__(self, other: "Confusion") -> "Confusion":
        return Confusion(self.tp + other.tp, self.fp + other.fp,
                         self.tn + other.tn, self.fn + other.fn)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_labels(cls, y_true, y_pred) -> "Confusion":
        y_true = np.asarray(y_true, dtype=np.int64)
        y_pred = np.asarray(y_pred, dtype=np.int64)
        if y_true.size == 0:
            return cls()
        (tn, fp), (fn, tp) = confusion_matrix(y_true, y_pred, labels=[0, 1])
        return cls(int(tp), int(fp), int(tn), int(fn))


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class EvalReport:
    """Metrics of one confusion, plus the per-fold breakdown that produced it."""

    confusion: Confusion
    ham: ClassMetrics
    spam: ClassMetrics
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    fp_rate: float
    fn_rate: float
    undefined: Tuple[str, ...] = ()
    folds: Tuple[Confusion, ...] = ()
    fingerprint: str = ""
    title: str = ""

    def with_context(self, folds=None, fingerprint=None, title=None) -> "EvalReport":
        updates = {"folds": tuple(folds) if folds is not None else None,
                   "fingerprint": fingerprint, "title": title}
        return replace(self, **{k: v for k, v in updates.items() if v is not None})

    @property
    def present_f1(self) -> float:
        """Mean F1 over the classes with support; the macro F1 when both are present."""
        present = [m.f1 for m in (self.ham, self.spam) if m.support]
        return sum(present) / len(present) if present else 0.0

    def records(self, scope: str = "all") -> List[Tuple[str, float, str]]:
        """``(name, value, scope)`` triples, one metric each."""
        out = []
        for cls_name, m in (("ham", self.ham), ("spam", self.spam)):
            out += [(f"{cls_name}_precision", m.precision, scope),
                    (f"{cls_name}_recall", m.recall, scope),
                    (f"{cls_name}_f1", m.f1, scope),
                    (f"{cls_name}_support", float(m.support), scope)]
        out += [("macro_precision", self.macro_precision, scope),
                ("macro_recall", self.macro_recall, scope),
                ("macro_f1", self.macro_f1, scope),
                ("weighted_precision", self.weighted_precision, scope),
                ("weighted_recall", self.weighted_recall, scope),
                ("weighted_f1", self.weighted_f1, scope),
                ("fp_rate", self.fp_rate, scope),
                ("fn_rate", self.fn_rate, scope)]
        for i, fold in enumerate(self.folds):
            out.append(("macro_f1", metrics(fold).macro_f1, f"fold{i}"))
        return out

    def format_records(self, scope: str = "all") -> str:
        lines = [f"# config {self.fingerprint}"] if self.fingerprint else []
        lines += [f"{name}\t{value:.6f}\t{where}" for name, value, where in self.records(scope)]
        return "\n".join(lines) + "\n"

    def format(self) -> str:
        """Human-readable report table."""
        c = self.confusion
        lines = []
        if self.title:
            lines.append(self.title)
        if self.fingerprint:
            lines.append(f"config fingerprint: {self.fingerprint}")
        lines.append(f"{'':14}{'precision':>10}{'recall':>10}{'f1':>10}{'support':>10}")
        for name, m in (("ham", self.ham), ("spam", self.spam)):
            lines.append(f"{name:14}{m.precision:>10.4f}{m.recall:>10.4f}{m.f1:>10.4f}{m.support:>10}")
        total = self.ham.support + self.spam.support
        lines.append(f"{'macro avg':14}{self.macro_precision:>10.4f}{self.macro_recall:>10.4f}"
                     f"{self.macro_f1:>10.4f}{total:>10}")
        lines.append(f"{'weighted avg':14}{self.weighted_precision:>10.4f}{self.weighted_recall:>10.4f}"
                     f"{self.weighted_f1:>10.4f}{total:>10}")
        lines.append("")
        lines.append(f"fp rate {self.fp_rate:.4%}   fn rate {self.fn_rate:.4%}")
        lines.append(f"tp {c.tp}  fp {c.fp}  tn {c.tn}  fn {c.fn}")
        if self.folds:
            per_fold = " ".join(f"{metrics(f).macro_f1:.3f}" for f in self.folds)
            lines.append(f"macro f1 per fold: {per_fold}")
        if self.undefined:
            lines.append(f"undefined (reported as 0): {', '.join(self.undefined)}")
        return "\n".join(lines)


def _ratio(num: int, den: int, name: str, undefined: List[str]) -> float:
    if den == 0:
        undefined.append(name)
        return 0.0
    return num / den


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def metrics(c: Confusion) -> EvalReport:
    """Per-class and averaged metrics of a confusion.

    Ratios with a zero denominator are reported as 0 and named in
    ``undefined``.

    Raises:
        EvalError: the confusion is empty.
    """
    if c.total == 0:
        raise EvalError("cannot compute metrics of an empty confusion")
    undefined: List[str] = []
    spam_p = _ratio(c.tp, c.tp + c.fp, "spam_precision", undefined)
    spam_r = _ratio(c.tp, c.tp + c.fn, "spam_recall", undefined)
    ham_p = _ratio(c.tn, c.tn + c.fn, "ham_precision", undefined)
    ham_r = _ratio(c.tn, c.tn + c.fp, "ham_recall", undefined)
    spam = ClassMetrics(spam_p, spam_r, _f1(spam_p, spam_r), c.tp + c.fn)
    ham = ClassMetrics(ham_p, ham_r, _f1(ham_p, ham_r), c.tn + c.fp)
    n = c.total

    def weighted(attr):
        return (getattr(ham, attr) * ham.support + getattr(spam, attr) * spam.support) / n

    return EvalReport(
        confusion=c,
        ham=ham,
        spam=spam,
        macro_precision=(ham.precision + spam.precision) / 2,
        macro_recall=(ham.recall + spam.recall) / 2,
        macro_f1=(ham.f1 + spam.f1) / 2,
        weighted_precision=weighted("precision"),
        weighted_recall=weighted("recall"),
        weighted_f1=weighted("f1"),
        fp_rate=_ratio(c.fp, c.fp + c.tn, "fp_rate", undefined),
        fn_rate=_ratio(c.fn, c.fn + c.tp, "fn_rate", undefined),
        undefined=tuple(undefined),
    )


# ── Cross-validation ─────────────────────────────────────────────────


@dataclass(frozen=True)
class PipelineSpec:
    """Picklable recipe for a fresh, unfitted pipeline."""

    kind: str
    config: object
    normalize: Optional[bool] = None

    def build(self, resources=None, preprocessor=None):
        from .pipeline import build_pipeline
        from .resources import resources_for
        resources = resources or resources_for(self.config)
        return build_pipeline(self.kind, self.config, resources, self.normalize,
                              preprocessor=preprocessor)


def stratified_folds(y, k: int, seed: int,
                     groups: Optional[Sequence] = None) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Seeded stratified ``(train, test)`` index pairs.

    With ``groups`` (one key per example, e.g. the sender of each MPA
    window) every group lands in exactly one test fold, so no group is
    on both sides of a split.

    Raises:
        EvalError: k < 2, a class has fewer than k examples (or groups),
                   or ``groups`` does not line up with ``y``.
    """
    y = np.asarray(y, dtype=np.int64)
    if k < 2:
        raise EvalError(f"k must be >= 2, got {k}")
    if groups is not None:
        groups = np.asarray([str(g) for g in groups])
        if len(groups) != len(y):
            raise EvalError(f"{len(groups)} groups but {len(y)} labels")
    for label, name in ((0, "ham"), (1, "spam")):
        mask = y == label
        count = len(set(groups[mask].tolist())) if groups is not None else int(mask.sum())
        unit = "groups" if groups is not None else "examples"
        if count < k:
            raise EvalError(
                f"{name} has {count} {unit}, fewer than k={k} folds; every fold needs both classes"
            )
    if groups is not None:
        splitter = StratifiedGroupKFold(n_splits=k, shuffle=True, random_state=seed)
        return list(splitter.split(np.zeros(len(y)), y, groups))
    splitter = StratifiedKFold(n_splits=k, shuffle=True, random_state=seed)
    return list(splitter.split(np.zeros(len(y)), y))


def _fold_confusion(pipeline, items, y, train_idx, test_idx, costs) -> Confusion:
    pipeline.fit([items[i] for i in train_idx], y[train_idx])
    _, predicted = pipeline.classify([items[i] for i in test_idx], costs)
    return Confusion.from_labels(y[test_idx], predicted)


_WORKER = {}


def _init_fold_worker(spec: PipelineSpec, items, y, costs):
    _WORKER.update(spec=spec, items=items, y=y, costs=costs)


def _run_fold(task):
    train_idx, test_idx = task
    w = _WORKER
    pipeline = w["spec"].build()
    return _fold_confusion(pipeline, w["items"], w["y"], train_idx, test_idx, w["costs"])


def kfold_cv(items: Sequence, y, spec: PipelineSpec, k: int = 10, seed: int = 0,
             costs: Optional[CostMatrix] = None, n_jobs: int = 1,
             factory: Optional[Callable] = None,
             groups: Optional[Sequence] = None) -> EvalReport:
    """Stratified k-fold cross-validation of a pipeline.

    Every fold fits a fresh pipeline on its training split only. The
    fold confusions are summed into one report. ``factory`` replaces
    ``spec.build`` for in-process runs (tests use it to inject fakes).
    ``groups`` keeps items sharing a key in the same fold; sender
    windows overlap, so MPA evaluation groups them by sender.
    """
    y = np.asarray([int(v) for v in y], dtype=np.int64)
    if len(items) != len(y):
        raise EvalError(f"{len(items)} items but {len(y)} labels")
    folds = stratified_folds(y, k, seed, groups)
    log.info("%d-fold cross-validation of %s over %d items", k, spec.kind, len(y))

    if n_jobs > 1 and factory is None:
        inner = PipelineSpec(spec.kind, spec.config.with_overrides(forest_n_jobs=1), spec.normalize)
        with ProcessPoolExecutor(max_workers=n_jobs, initializer=_init_fold_worker,
                                 initargs=(inner, list(items), y, costs)) as pool:
            confusions = list(pool.map(_run_fold, folds))
    else:
        if factory is None:
            from .pipeline import TextPreprocessor
            from .resources import resources_for
            resources = resources_for(spec.config)
            shared = TextPreprocessor(resources)

            def factory():
                return spec.build(resources, shared)

        confusions = []
        for i, (train_idx, test_idx) in enumerate(folds):
            confusions.append(_fold_confusion(factory(), items, y, train_idx, test_idx, costs))
            log.info("fold %d/%d: macro f1 %.4f", i + 1, k, metrics(confusions[-1]).macro_f1)

    total = sum(confusions, Confusion())
    if total.total != len(y):
        raise EvalError(f"fold confusions cover {total.total} items, expected {len(y)}")
    title = f"features: {spec.kind}  k: {k}  seed: {seed}"
    if groups is not None:
        title += f"  groups: {len(set(map(str, groups)))}"
    if spec.normalize is not None:
        title += f"  normalize: {'on' if spec.normalize else 'off'}"
    return metrics(total).with_context(folds=confusions, fingerprint=spec.config.fingerprint(),
                                       title=title)


# ── Temporal replay ──────────────────────────────────────────────────


@dataclass(frozen=True)
class BucketReport:
    index: int
    start: float
    end: float
    report: EvalReport
    drift: bool = False
    trailing_f1: Optional[float] = None


@dataclass
class ReplayResult:
    buckets: List[BucketReport]
    gaps: List[int]
    overall: Optional[EvalReport]
    bucket_seconds: float
    fingerprint: str = ""
    drift_buckets: List[int] = field(default_factory=list)

    @property
    def mean_f1(self) -> float:
        if not self.buckets:
            return 0.0
        return sum(b.report.macro_f1 for b in self.buckets) / len(self.buckets)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["bucket", "start", "end", "n", "tp", "fp", "tn", "fn", "spam_precision",
                         "spam_recall", "spam_f1", "macro_f1", "fp_rate", "fn_rate", "drift"])
        for b in self.buckets:
            r, c = b.report, b.report.confusion
            writer.writerow([b.index, int(b.start), int(b.end), c.total, c.tp, c.fp, c.tn, c.fn,
                             f"{r.spam.precision:.6f}", f"{r.spam.recall:.6f}", f"{r.spam.f1:.6f}",
                             f"{r.macro_f1:.6f}", f"{r.fp_rate:.6f}", f"{r.fn_rate:.6f}",
                             int(b.drift)])
        return buf.getvalue()

    def format_records(self) -> str:
        lines = [f"# config {self.fingerprint}"] if self.fingerprint else []
        for b in self.buckets:
            lines += [f"{n}\t{v:.6f}\t{w}" for n, v, w in b.report.records(f"bucket{b.index}")]
            lines.append(f"drift\t{int(b.drift)}\tbucket{b.index}")
        for g in self.gaps:
            lines.append(f"gap\t1\tbucket{g}")
        if self.overall is not None:
            lines += [f"{n}\t{v:.6f}\t{w}" for n, v, w in self.overall.records("all")]
        return "\n".join(lines) + "\n"


def temporal_replay(pipeline, stream: Sequence[Tuple[float, object, int]],
                    bucket_seconds: float = WEEK, drift_delta: float = 0.05,
                    costs: Optional[CostMatrix] = None, start: Optional[float] = None,
                    fingerprint: str = "") -> ReplayResult:
    """Score a time-ordered labeled stream with a frozen pipeline, bucket by bucket.

    ``stream`` holds ``(timestamp, item, label)`` triples. A bucket is
    flagged as drift when its F1 falls more than ``drift_delta`` below
    the mean of all earlier buckets. The F1 is averaged over the classes
    present in the bucket, so an all-spam week is judged on spam alone.
    Empty buckets are skipped and recorded in ``gaps``.

    Raises:
        EvalError: the stream is not ordered by timestamp, or the bucket
                   length is not positive.
    """
    if bucket_seconds <= 0:
        raise EvalError("bucket length must be positive")
    stamps = np.asarray([float(t) for t, _, _ in stream], dtype=np.float64)
    if stamps.size and np.any(np.diff(stamps) < 0):
        bad = int(np.argmax(np.diff(stamps) < 0)) + 1
        raise EvalError(f"replay stream is not ordered by time (item {bad} goes back in time)")
    if not stamps.size:
        return ReplayResult([], [], None, bucket_seconds, fingerprint)

    origin = stamps[0] if start is None else float(start)
    if stamps[0] < origin:
        raise EvalError("replay start is after the first item")
    y = np.asarray([int(label) for _, _, label in stream], dtype=np.int64)
    _, predicted = pipeline.classify([item for _, item, _ in stream], costs)
    index = np.floor((stamps - origin) / bucket_seconds).astype(np.int64)

    buckets: List[BucketReport] = []
    gaps: List[int] = []
    history: List[float] = []
    for b in range(int(index[-1]) + 1):
        mask = index == b
        b_start = origin + b * bucket_seconds
        if not mask.any():
            gaps.append(b)
            log.warning("replay bucket %d is empty", b)
            continue
        report = metrics(Confusion.from_labels(y[mask], predicted[mask]))
        trailing = sum(history) / len(history) if history else None
        drift = trailing is not None and report.present_f1 < trailing - drift_delta
        if drift:
            log.warning("bucket %d: f1 %.4f is %.4f below the trailing mean",
                        b, report.present_f1, trailing - report.present_f1)
        buckets.append(BucketReport(b, b_start, b_start + bucket_seconds, report, drift, trailing))
        history.append(report.present_f1)

    overall = metrics(Confusion.from_labels(y, predicted)).with_context(fingerprint=fingerprint)
    result = ReplayResult(buckets, gaps, overall, bucket_seconds, fingerprint,
                          [b.index for b in buckets if b.drift])
    log.info("replayed %d buckets (%d empty), mean macro f1 %.4f",
             len(buckets), len(gaps), result.mean_f1)
    return result


def parse_duration(text: str) -> float:
    """``1w``, ``3d``, ``12h``, ``90m``, ``30s`` or plain seconds → seconds."""
    units = {"w": WEEK, "d": 86400, "h": 3600, "m": 60, "s": 1}
    text = text.strip().lower()
    try:
        if text and text[-1] in units:
            value = float(text[:-1]) * units[text[-1]]
        else:
            value = float(text)
    except ValueError:
        raise EvalError(f"invalid duration {text!r}; use e.g. 1w, 3d, 12h") from None
    if not math.isfinite(value) or value <= 0:
        raise EvalError(f"duration must be positive, got {text!r}")
    return value
