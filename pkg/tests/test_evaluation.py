"""Tests for smsguard metrics, cross-validation and temporal replay."""

import numpy as np
import pytest

from smsguard.config import Config
from smsguard.errors import EvalError
from smsguard.evaluation import (
    WEEK,
    Confusion,
    PipelineSpec,
    kfold_cv,
    metrics,
    parse_duration,
    stratified_folds,
    temporal_replay,
)


class KeywordPipeline:
    """Fake pipeline: spam iff the item contains 'win'."""

    def __init__(self):
        self.trained_on = None
        self.tested_on = []

    def fit(self, items, y):
        self.trained_on = list(items)
        return self

    def classify(self, items, costs=None):
        self.tested_on.extend(items)
        labels = np.array([1 if "win" in item else 0 for item in items], dtype=np.int64)
        return labels.astype(float), labels


class ConstantPipeline:
    """Fake pipeline that calls everything spam."""

    def fit(self, items, y):
        return self

    def classify(self, items, costs=None):
        return np.ones(len(items)), np.ones(len(items), dtype=np.int64)


def balanced_items(n=20):
    items = [f"win prize {i}" for i in range(n)] + [f"lunch at {i}" for i in range(n)]
    return items, [1] * n + [0] * n


# ── Confusion and metrics ────────────────────────────────────────────


def test_confusion_from_labels():
    """Spam is the positive class."""
    c = Confusion.from_labels([1, 0, 1, 0], [1, 1, 0, 0])
    assert c == Confusion(tp=1, fp=1, tn=1, fn=1)


def test_confusion_add_and_negative():
    """Confusions sum cell by cell; negative counts are invalid."""
    assert Confusion(1, 2, 3, 4) + Confusion(1, 1, 1, 1) == Confusion(2, 3, 4, 5)
    with pytest.raises(EvalError):
        Confusion(tp=-1)


def test_metrics_seven_missed_spam():
    """93 caught, 7 missed, no false alarms."""
    r = metrics(Confusion(tp=93, fp=0, tn=100, fn=7))
    assert r.spam.precision == 1.0
    assert r.spam.recall == pytest.approx(0.93)
    assert r.spam.f1 == pytest.approx(0.963, abs=1e-3)
    assert r.ham.precision == pytest.approx(0.935, abs=1e-3)
    assert r.ham.recall == 1.0
    assert r.fp_rate == 0.0
    assert r.fn_rate == pytest.approx(0.07)
    assert r.undefined == ()


def test_metrics_perfect():
    """A perfect classifier scores 1.0 everywhere."""
    r = metrics(Confusion(tp=5, fp=0, tn=5, fn=0))
    assert r.macro_f1 == r.weighted_f1 == 1.0


def test_metrics_coin_flip():
    """One of each cell gives 0.5 across the board."""
    r = metrics(Confusion(1, 1, 1, 1))
    assert r.macro_precision == r.macro_recall == r.macro_f1 == 0.5
    assert r.fp_rate == r.fn_rate == 0.5


def test_metrics_undefined_ratios_reported():
    """Zero denominators report 0 and are named."""
    r = metrics(Confusion(tp=0, fp=0, tn=5, fn=0))
    assert r.spam.precision == 0.0
    assert set(r.undefined) == {"spam_precision", "spam_recall", "fn_rate"}
    assert "undefined" in r.format()


def test_metrics_empty_confusion():
    """An empty confusion has no metrics."""
    with pytest.raises(EvalError, match="empty"):
        metrics(Confusion())


def test_format_records_lines():
    """Records are name<TAB>value<TAB>scope with the config fingerprint first."""
    r = metrics(Confusion(1, 1, 1, 1)).with_context(fingerprint="abc123")
    lines = r.format_records().splitlines()
    assert lines[0] == "# config abc123"
    assert "macro_f1\t0.500000\tall" in lines


# ── Folds and cross-validation ───────────────────────────────────────


def test_stratified_folds_one_of_each():
    """10 ham + 10 spam with k=10: every test fold holds one of each."""
    y = np.array([0] * 10 + [1] * 10)
    folds = stratified_folds(y, 10, seed=0)
    assert len(folds) == 10
    for _, test in folds:
        assert sorted(y[test].tolist()) == [0, 1]


def test_stratified_folds_cover_everything():
    """Test folds partition the data."""
    y = np.array([0, 1] * 15)
    folds = stratified_folds(y, 3, seed=4)
    assert sorted(np.concatenate([t for _, t in folds]).tolist()) == list(range(30))


@pytest.mark.parametrize("k", [1, 11])
def test_stratified_folds_invalid_k(k):
    """k below 2, or above a class's size, is refused."""
    with pytest.raises(EvalError):
        stratified_folds([0] * 10 + [1] * 10, k, seed=0)


def test_grouped_folds_keep_groups_together():
    """Overlapping windows of one sender never straddle train and test."""
    senders = [f"s{i}" for i in range(24)]
    groups = [s for s in senders for _ in range(3 + int(s[1:]) % 4)]
    y = np.array([int(s[1:]) % 2 for s in groups])
    folds = stratified_folds(y, 4, seed=3, groups=groups)
    assert len(folds) == 4
    for train, test in folds:
        assert not {groups[i] for i in train} & {groups[i] for i in test}
    assert sorted(np.concatenate([t for _, t in folds]).tolist()) == list(range(len(y)))


def test_grouped_folds_need_k_groups_per_class():
    """Many windows from few senders do not make enough folds."""
    groups = ["a"] * 10 + ["b"] * 10 + ["c"] * 10 + ["d"] * 10
    y = [1] * 20 + [0] * 20
    with pytest.raises(EvalError, match="groups"):
        stratified_folds(y, 3, seed=0, groups=groups)


def test_grouped_folds_length_mismatch():
    """Groups must line up with labels."""
    with pytest.raises(EvalError, match="groups"):
        stratified_folds([0, 1] * 5, 2, seed=0, groups=["a"] * 3)


def test_kfold_grouped_by_sender():
    """Items of one sender are tested in one fold only."""
    items = [f"win s{i} {j}" if i % 2 else f"lunch s{i} {j}" for i in range(10) for j in range(5)]
    y = [1 if "win" in item else 0 for item in items]
    groups = [item.split()[1] for item in items]
    built = []

    def factory():
        built.append(KeywordPipeline())
        return built[-1]

    report = kfold_cv(items, y, PipelineSpec("mpa", Config()), k=5, factory=factory, groups=groups)
    assert report.macro_f1 == 1.0
    assert "groups: 10" in report.title
    for p in built:
        trained = {item.split()[1] for item in p.trained_on}
        tested = {item.split()[1] for item in p.tested_on}
        assert not trained & tested


def test_kfold_separable():
    """A correct classifier scores macro F1 1.0 over the folds."""
    items, y = balanced_items()
    report = kfold_cv(items, y, PipelineSpec("mela", Config()), k=5, factory=KeywordPipeline)
    assert report.macro_f1 == 1.0
    assert len(report.folds) == 5
    assert report.confusion.total == 40
    assert report.title.startswith("features: mela")
    assert report.fingerprint == Config().fingerprint()


def test_kfold_degenerate_classifier():
    """Calling everything spam gives macro F1 about 0.33 on balanced data."""
    items, y = balanced_items()
    report = kfold_cv(items, y, PipelineSpec("mela", Config()), k=4, factory=ConstantPipeline)
    assert report.macro_f1 == pytest.approx(1 / 3, abs=0.01)


def test_kfold_never_trains_on_test_items():
    """Each fold's pipeline is fitted on its training split only."""
    items, y = balanced_items()
    built = []

    def factory():
        built.append(KeywordPipeline())
        return built[-1]

    kfold_cv(items, y, PipelineSpec("mela", Config()), k=4, seed=2, factory=factory)
    assert len(built) == 4
    for p in built:
        assert not set(p.trained_on) & set(p.tested_on)
    assert sorted(i for p in built for i in p.tested_on) == sorted(items)


def test_kfold_length_mismatch():
    """Items and labels must line up."""
    with pytest.raises(EvalError, match="labels"):
        kfold_cv(["a", "b"], [0], PipelineSpec("mela", Config()), factory=KeywordPipeline)


def test_kfold_same_seed_same_folds():
    """Fold assignment is seeded."""
    items, y = balanced_items()
    spec = PipelineSpec("ngram", Config())
    a = kfold_cv(items, y, spec, k=4, seed=9, factory=ConstantPipeline)
    b = kfold_cv(items, y, spec, k=4, seed=9, factory=ConstantPipeline)
    assert a.folds == b.folds


# ── Temporal replay ──────────────────────────────────────────────────


T0 = 1_767_571_200.0
DAY = 86400


def week_items(week, correct=True):
    """One spam and one ham message in the given week."""
    ts = T0 + week * WEEK + DAY
    if correct:
        return [(ts, "win now", 1), (ts + 1, "lunch", 0)]
    return [(ts, "lunch", 1), (ts + 1, "win now", 0)]


def test_replay_buckets_and_gaps():
    """An empty week is skipped and recorded as a gap."""
    stream = week_items(0) + week_items(2)
    result = temporal_replay(KeywordPipeline(), stream, start=T0)
    assert [b.index for b in result.buckets] == [0, 2]
    assert result.gaps == [1]
    assert result.overall.macro_f1 == 1.0


def test_replay_flags_drift():
    """A bucket well below the trailing mean is flagged."""
    stream = week_items(0) + week_items(1) + week_items(2, correct=False)
    result = temporal_replay(KeywordPipeline(), stream, drift_delta=0.05, start=T0)
    assert result.drift_buckets == [2]
    assert result.buckets[2].trailing_f1 == 1.0
    assert not result.buckets[0].drift


def test_replay_no_drift_when_stable():
    """Steady performance never flags drift."""
    stream = week_items(0) + week_items(1) + week_items(2)
    assert temporal_replay(KeywordPipeline(), stream, start=T0).drift_buckets == []


def test_replay_single_class_week_is_not_drift():
    """A correctly labeled all-spam week is judged on spam only."""
    ts = T0 + 3 * WEEK + DAY
    stream = week_items(0) + week_items(1) + week_items(2) + [(ts, "win now", 1), (ts + 1, "win big", 1)]
    result = temporal_replay(KeywordPipeline(), stream, drift_delta=0.05, start=T0)
    assert result.drift_buckets == []
    assert result.buckets[3].report.macro_f1 == 0.5
    assert result.buckets[3].report.present_f1 == 1.0


def test_replay_single_class_week_still_drifts_when_wrong():
    """An all-spam week that is mostly missed is still flagged."""
    ts = T0 + 2 * WEEK + DAY
    stream = week_items(0) + week_items(1) + [(ts, "win now", 1), (ts + 1, "lunch", 1),
                                              (ts + 2, "dinner", 1)]
    result = temporal_replay(KeywordPipeline(), stream, drift_delta=0.05, start=T0)
    assert result.drift_buckets == [2]


def test_present_f1():
    """Classes without support are left out of the average."""
    assert metrics(Confusion(tp=3, fn=1)).present_f1 == pytest.approx(6 / 7)
    assert metrics(Confusion(tn=4)).present_f1 == 1.0
    assert metrics(Confusion(1, 1, 1, 1)).present_f1 == metrics(Confusion(1, 1, 1, 1)).macro_f1


def test_replay_unordered_stream():
    """Timestamps must not go back in time."""
    stream = week_items(1) + week_items(0)
    with pytest.raises(EvalError, match="not ordered"):
        temporal_replay(KeywordPipeline(), stream)


def test_replay_bad_bucket_length():
    """The bucket length must be positive."""
    with pytest.raises(EvalError):
        temporal_replay(KeywordPipeline(), week_items(0), bucket_seconds=0)


def test_replay_empty_stream():
    """No items, no buckets."""
    result = temporal_replay(KeywordPipeline(), [])
    assert result.buckets == []
    assert result.overall is None
    assert result.mean_f1 == 0.0


def test_replay_csv():
    """One CSV row per non-empty bucket under a fixed header."""
    result = temporal_replay(KeywordPipeline(), week_items(0) + week_items(2), start=T0)
    rows = result.to_csv().splitlines()
    assert rows[0].startswith("bucket,start,end,n,tp,fp,tn,fn")
    assert [r.split(",")[0] for r in rows[1:]] == ["0", "2"]


def test_replay_records_mark_gaps():
    """Record output names drift flags and gaps per bucket."""
    result = temporal_replay(KeywordPipeline(), week_items(0) + week_items(2), start=T0,
                             fingerprint="f00")
    text = result.format_records()
    assert text.startswith("# config f00\n")
    assert "gap\t1\tbucket1" in text
    assert "drift\t0\tbucket2" in text


# ── parse_duration ───────────────────────────────────────────────────


@pytest.mark.parametrize("text, seconds", [
    ("1w", WEEK), ("3d", 3 * DAY), ("12h", 43200), ("90m", 5400), ("30s", 30), ("45", 45),
])
def test_parse_duration(text, seconds):
    """Unit suffixes and plain seconds."""
    assert parse_duration(text) == seconds


@pytest.mark.parametrize("text", ["", "abc", "0", "-1d", "1y"])
def test_parse_duration_invalid(text):
    """Malformed and non-positive durations are refused."""
    with pytest.raises(EvalError):
        parse_duration(text)
