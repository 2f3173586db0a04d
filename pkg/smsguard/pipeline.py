"""
Feature pipelines: featurization state plus a forest, fitted together.

Every fitted state (vocabulary, network dictionary, domain classifier,
main forest) is learned in ``fit`` from the training items only, so a
pipeline can be fitted per cross-validation fold without leaking test
data. A fitted pipeline saves as one model file with sidecars next to it:

    model.bin             main forest (kind and settings in its metadata)
    model.bin.domain.bin  domain classifier of a MELA or MPA pipeline
    model.bin.vocab       vocabulary of an NGRAM or SGRAM pipeline
    model.bin.networks    network dictionary of an MPA pipeline
"""

import enum
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ._version import BASE_VERSION
from .baseline import VocabModel, ngrams, osb_grams, tokenize_basic
from .entity import EntityKind, EntitySet, extract_entities, parse_domain
from .errors import EntityError, ModelFormatError, SchemaMismatchError
from .mela import (
    DOMAIN_FEATURES,
    DOMAIN_SCHEMA,
    MESSAGE_FEATURES,
    MESSAGE_SCHEMA,
    MelaVector,
    domain_features,
    message_features,
)
from .model import CostMatrix, Forest, ForestParams, decide_many, load_forest, save_forest, train
from .mpa import MPA_FEATURES, MPA_SCHEMA, NetworkEncoder, SenderWindow, mpa_features
from .resources import Resources
from .textnorm import NormalizedText, normalize as normalize_text

log = logging.getLogger(__name__)

PathLike = Union[str, Path]


class FeatureSet(str, enum.Enum):
    MELA = "mela"
    NGRAM = "ngram"
    SGRAM = "sgram"
    DOMAIN = "domain"
    MPA = "mpa"

    def __str__(self) -> str:
        return self.value


MESSAGE_FEATURE_SETS = (FeatureSet.MELA, FeatureSet.NGRAM, FeatureSet.SGRAM)


def sidecar(path: PathLike, suffix: str) -> Path:
    return Path(str(path) + suffix)


def _text(item) -> str:
    return getattr(item, "text", item)


class TextPreprocessor:
    """Memoized entity extraction and normalization of message texts.

    Both steps are stateless, so one preprocessor can be shared by every
    fold of a cross-validation run.
    """

    def __init__(self, resources: Resources):
        self.resources = resources
        self._cache: Dict[str, Tuple[EntitySet, NormalizedText]] = {}

    def prepare(self, text: str) -> Tuple[EntitySet, NormalizedText]:
        hit = self._cache.get(text)
        if hit is None:
            r = self.resources
            ents = extract_entities(text, r.tld_tables, r.entity_lexicon)
            hit = (ents, normalize_text(text, r.lexicon, ents))
            self._cache[text] = hit
        return hit


# ── Base ─────────────────────────────────────────────────────────────


class Pipeline:
    """Featurizer plus forest. Subclasses define the feature layout."""

    kind: FeatureSet
    schema: str

    def __init__(self, resources: Resources, params: Optional[ForestParams] = None,
                 meta: Optional[Dict[str, str]] = None):
        self.resources = resources
        self.params = params or ForestParams()
        self.meta = dict(meta or {})
        self.forest: Optional[Forest] = None

    @property
    def n_features(self) -> int:
        raise NotImplementedError

    def _fit_state(self, items: Sequence, y: np.ndarray) -> None:
        """Learn featurization state from training items (default: none)."""

    def features(self, items: Sequence):
        raise NotImplementedError

    def settings(self) -> Dict[str, str]:
        return {}

    def design_matrix(self, items: Sequence, y) -> Tuple[object, np.ndarray]:
        """Fit the featurization state only; return ``(X, y)`` for training."""
        y = np.asarray([int(v) for v in y], dtype=np.int64)
        self._fit_state(items, y)
        return self.features(items), y

    def fit(self, items: Sequence, y) -> "Pipeline":
        X, y = self.design_matrix(items, y)
        meta = {**self.meta, **self.settings(), "kind": str(self.kind)}
        self.forest = train(X, y, self.params, self.schema, meta)
        return self

    def _require_fitted(self) -> Forest:
        if self.forest is None:
            raise ModelFormatError(f"{self.kind} pipeline has not been trained")
        return self.forest

    def scores(self, items: Sequence) -> np.ndarray:
        forest = self._require_fitted()
        if not len(items):
            return np.zeros(0)
        forest.check_schema(self.schema, self.n_features)
        return forest.predict_many(self.features(items))

    def classify(self, items: Sequence, costs: Optional[CostMatrix] = None) -> Tuple[np.ndarray, np.ndarray]:
        """Return ``(scores, labels)``; labels are 0 (ham) / 1 (spam)."""
        s = self.scores(items)
        return s, decide_many(s, costs)

    def save(self, path: PathLike) -> None:
        save_forest(self._require_fitted(), path)
        self._save_sidecars(path)
        log.info("saved %s model to %s", self.kind, path)

    def _save_sidecars(self, path: PathLike) -> None:
        """Write fitted state next to the model file (default: nothing)."""


# ── Message pipelines ────────────────────────────────────────────────


def url_domains(ents: EntitySet) -> List[str]:
    """Registrable domains (host when there is none) of a message's URLs."""
    out = []
    for e in ents.of_kind(EntityKind.URL):
        try:
            host, registrable, _ = parse_domain(e.canonical)
        except EntityError:
            continue
        if registrable or host:
            out.append(registrable or host)
    return out


class MelaPipeline(Pipeline):
    """MELA message features with a domain sub-classifier.

    Without a pre-trained ``domain_forest`` the domain classifier is fitted
    from the URL domains of the training messages, each labeled with its
    message's label. When those domains cover only one class the URLs
    score neutral.
    """

    kind = FeatureSet.MELA
    schema = MESSAGE_SCHEMA

    def __init__(self, resources: Resources, params: Optional[ForestParams] = None,
                 domain_params: Optional[ForestParams] = None, normalize: bool = True,
                 domain_forest: Optional[Forest] = None,
                 preprocessor: Optional[TextPreprocessor] = None, meta=None):
        super().__init__(resources, params, meta)
        self.domain_params = domain_params or ForestParams(n_trees=100, rng_seed=self.params.rng_seed)
        self.normalize = normalize
        self.domain_forest = domain_forest
        self._pretrained_domain = domain_forest is not None
        self.pre = preprocessor or TextPreprocessor(resources)
        if domain_forest is not None:
            domain_forest.check_schema(DOMAIN_SCHEMA, len(DOMAIN_FEATURES))

    @property
    def n_features(self) -> int:
        return len(MESSAGE_FEATURES)

    def settings(self) -> Dict[str, str]:
        return {"normalize": "on" if self.normalize else "off"}

    def _fit_state(self, items, y) -> None:
        if self._pretrained_domain:
            return
        pairs = set()
        for item, label in zip(items, y):
            ents, _ = self.pre.prepare(_text(item))
            pairs.update((d, int(label)) for d in url_domains(ents))
        labels = {label for _, label in pairs}
        if len(labels) < 2:
            log.info("training URLs cover %d class(es); domain scores stay neutral", len(labels))
            self.domain_forest = None
            return
        domains = sorted(pairs)
        X = np.array([self._domain_row(d) for d, _ in domains])
        self.domain_forest = train(
            X, np.array([label for _, label in domains]), self.domain_params, DOMAIN_SCHEMA,
            {"kind": str(FeatureSet.DOMAIN)},
        )
        log.info("domain classifier trained on %d domains", len(domains))

    def _domain_row(self, domain: str):
        r = self.resources
        host, registrable, tld = parse_domain(domain)
        return domain_features(registrable or host, tld, r.tld_tables, r.matcher, host=host).values

    def vector(self, text: str) -> MelaVector:
        r = self.resources
        ents, norm = self.pre.prepare(text)
        if not self.normalize:
            norm = NormalizedText(text, " ".join(text.split()))
        return message_features(text, norm, ents, r.matcher, self.domain_forest,
                                r.tld_tables, r.keywords, r.entity_lexicon)

    def features(self, items) -> np.ndarray:
        rows = [self.vector(_text(item)).values for item in items]
        return np.array(rows, dtype=np.float64).reshape(len(rows), len(MESSAGE_FEATURES))

    def _save_sidecars(self, path) -> None:
        if self.domain_forest is not None:
            save_forest(self.domain_forest, sidecar(path, ".domain.bin"))


class BaselinePipeline(Pipeline):
    """Word n-gram (NGRAM) or sparse orthogonal n-gram (SGRAM) counts."""

    def __init__(self, kind: FeatureSet, resources: Resources, params: Optional[ForestParams] = None,
                 normalize: bool = False, n_max: int = 2, osb_n: int = 3, osb_window: int = 4,
                 cap: int = 50000, df_min: int = 2, vocab: Optional[VocabModel] = None,
                 preprocessor: Optional[TextPreprocessor] = None, meta=None):
        if kind not in (FeatureSet.NGRAM, FeatureSet.SGRAM):
            raise ValueError(f"not a baseline feature set: {kind}")
        super().__init__(resources, params, meta)
        self.kind = kind
        self.schema = f"{kind}-1"
        self.normalize = normalize
        self.n_max = n_max
        self.osb_n = osb_n
        self.osb_window = osb_window
        self.cap = cap
        self.df_min = df_min
        self.vocab = vocab
        self.pre = preprocessor or TextPreprocessor(resources)
        self._tlds = resources.tld_tables.known

    @property
    def n_features(self) -> int:
        return len(self.vocab) if self.vocab is not None else 0

    def settings(self) -> Dict[str, str]:
        return {
            "normalize": "on" if self.normalize else "off",
            "n_max": str(self.n_max),
            "osb_n": str(self.osb_n),
            "osb_window": str(self.osb_window),
        }

    def grams(self, text: str) -> List[str]:
        if self.normalize:
            text = self.pre.prepare(text)[1].normalized
        tokens = tokenize_basic(text, self._tlds)
        if self.kind is FeatureSet.NGRAM:
            return ngrams(tokens, self.n_max)
        return osb_grams(tokens, self.osb_n, self.osb_window)

    def _fit_state(self, items, y) -> None:
        self.vocab = VocabModel.fit((self.grams(_text(i)) for i in items),
                                    cap=self.cap, df_min=self.df_min, kind=str(self.kind))
        if not len(self.vocab):
            log.info("no %s feature reaches df_min=%d; keeping all features", self.kind, self.df_min)
            self.vocab = VocabModel.fit((self.grams(_text(i)) for i in items),
                                        cap=self.cap, df_min=1, kind=str(self.kind))

    def features(self, items):
        if self.vocab is None:
            raise ModelFormatError(f"{self.kind} pipeline has no vocabulary")
        return self.vocab.transform(self.grams(_text(i)) for i in items)

    def _save_sidecars(self, path) -> None:
        self.vocab.save(sidecar(path, ".vocab"))


# ── Domain and sender pipelines ──────────────────────────────────────


class DomainPipeline(Pipeline):
    """The domain classifier on its own, for ``train-domain`` and domain CV."""

    kind = FeatureSet.DOMAIN
    schema = DOMAIN_SCHEMA

    @property
    def n_features(self) -> int:
        return len(DOMAIN_FEATURES)

    def features(self, items) -> np.ndarray:
        r = self.resources
        rows = []
        for d in items:
            host, registrable, tld = parse_domain(d)
            rows.append(domain_features(registrable or host, tld, r.tld_tables, r.matcher, host=host).values)
        return np.array(rows, dtype=np.float64).reshape(len(rows), len(DOMAIN_FEATURES))


class SenderPipeline(Pipeline):
    """MPA sender features over emitted SenderWindows."""

    kind = FeatureSet.MPA
    schema = MPA_SCHEMA

    def __init__(self, resources: Resources, params: Optional[ForestParams] = None,
                 encoder: Optional[NetworkEncoder] = None, domain_forest: Optional[Forest] = None,
                 meta=None):
        super().__init__(resources, params, meta)
        self.encoder = encoder
        self.domain_forest = domain_forest

    @property
    def n_features(self) -> int:
        return len(MPA_FEATURES)

    def _fit_state(self, items: Sequence[SenderWindow], y) -> None:
        names = []
        for w in items:
            for m in w.messages:
                names.extend((m.orig_network, m.dest_network))
        self.encoder = NetworkEncoder.fit(names)

    def features(self, items: Sequence[SenderWindow]) -> np.ndarray:
        if self.encoder is None:
            raise ModelFormatError("sender pipeline has no network dictionary")
        rows = [mpa_features(w, self.encoder, self.resources.us_networks).values for w in items]
        return np.array(rows, dtype=np.float64).reshape(len(rows), len(MPA_FEATURES))

    def featurizer(self, normalize: bool = True) -> "MelaFeaturizer":
        """First-message featurizer for a WindowAggregator."""
        return MelaFeaturizer(self.resources, self.domain_forest, normalize)

    def _save_sidecars(self, path) -> None:
        self.encoder.save(sidecar(path, ".networks"))
        if self.domain_forest is not None:
            save_forest(self.domain_forest, sidecar(path, ".domain.bin"))


class MelaFeaturizer:
    """Message → MelaVector with fixed resources and domain classifier."""

    def __init__(self, resources: Resources, domain_forest: Optional[Forest] = None,
                 normalize: bool = True):
        self._pipeline = MelaPipeline(resources, domain_forest=domain_forest, normalize=normalize)

    def __call__(self, msg) -> MelaVector:
        return self._pipeline.vector(_text(msg))


# ── Construction and persistence ─────────────────────────────────────


def build_pipeline(kind: Union[str, FeatureSet], config, resources: Resources,
                   normalize: Optional[bool] = None, domain_forest: Optional[Forest] = None,
                   preprocessor: Optional[TextPreprocessor] = None) -> Pipeline:
    """An unfitted pipeline configured from ``config``.

    ``normalize`` overrides the ``[normalize]`` setting of the feature set.
    """
    kind = FeatureSet(kind)
    meta = {"config_fingerprint": config.fingerprint(), "smsguard_version": BASE_VERSION,
            **resources.versions()}
    params = config.forest_params()
    if kind is FeatureSet.MELA:
        return MelaPipeline(
            resources, params, config.forest_params(domain=True),
            normalize=config.normalize_mela if normalize is None else normalize,
            domain_forest=domain_forest, preprocessor=preprocessor, meta=meta,
        )
    if kind in (FeatureSet.NGRAM, FeatureSet.SGRAM):
        return BaselinePipeline(
            kind, resources, params,
            normalize=config.normalize_baseline if normalize is None else normalize,
            n_max=config.baseline_ngram_max, osb_n=config.baseline_osb_n,
            osb_window=config.baseline_osb_window, cap=config.baseline_cap,
            df_min=config.baseline_df_min, preprocessor=preprocessor, meta=meta,
        )
    if kind is FeatureSet.DOMAIN:
        return DomainPipeline(resources, config.forest_params(domain=True), meta=meta)
    return SenderPipeline(resources, params, domain_forest=domain_forest, meta=meta)


def _optional_forest(path: Path, schema: str) -> Optional[Forest]:
    return load_forest(path, schema) if path.is_file() else None


def load_pipeline(path: PathLike, resources: Resources,
                  expected: Optional[Union[str, FeatureSet]] = None) -> Pipeline:
    """Load a saved pipeline, dispatching on the kind recorded in the model file.

    Raises:
        ModelFormatError: unreadable model, unknown kind, missing sidecar.
        SchemaMismatchError: the model is of another kind than ``expected``.
    """
    forest = load_forest(path)
    try:
        kind = FeatureSet(forest.meta.get("kind", ""))
    except ValueError:
        raise ModelFormatError(f"{path}: model file does not record a known feature set") from None
    if expected is not None and kind is not FeatureSet(expected):
        raise SchemaMismatchError(f"{path} is a {kind} model, expected {FeatureSet(expected)}")

    meta = forest.meta
    normalize = meta.get("normalize", "off") == "on"
    if kind is FeatureSet.MELA:
        p: Pipeline = MelaPipeline(
            resources, forest.params, normalize=normalize,
            domain_forest=_optional_forest(sidecar(path, ".domain.bin"), DOMAIN_SCHEMA),
        )
    elif kind in (FeatureSet.NGRAM, FeatureSet.SGRAM):
        vocab_path = sidecar(path, ".vocab")
        if not vocab_path.is_file():
            raise ModelFormatError(f"vocabulary sidecar missing: {vocab_path}")
        p = BaselinePipeline(
            kind, resources, forest.params, normalize=normalize,
            n_max=int(meta.get("n_max", 2)), osb_n=int(meta.get("osb_n", 3)),
            osb_window=int(meta.get("osb_window", 4)), vocab=VocabModel.load(vocab_path),
        )
    elif kind is FeatureSet.DOMAIN:
        p = DomainPipeline(resources, forest.params)
    else:
        networks = sidecar(path, ".networks")
        if not networks.is_file():
            raise ModelFormatError(f"network dictionary sidecar missing: {networks}")
        p = SenderPipeline(
            resources, forest.params, encoder=NetworkEncoder.load(networks),
            domain_forest=_optional_forest(sidecar(path, ".domain.bin"), DOMAIN_SCHEMA),
        )
    forest.check_schema(p.schema, p.n_features)
    p.forest = forest
    p.meta = dict(meta)
    return p
