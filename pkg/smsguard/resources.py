"""
The Resources bundle: every data file a featurizer needs, loaded once.

Paths come from the ``[paths]`` section of the config; an empty path
means the file bundled under ``smsguard/data/``.
"""

import functools
import logging
from dataclasses import dataclass
from typing import FrozenSet, Optional

from ._datafiles import read_lines
from ._paths import bundled_path
from .cluster import ClusterMatcher, ClusterSet, build_matcher, load_cluster_set
from .entity import EntityLexicon, TldTables, load_entity_lexicon, load_tld_tables
from .mela import Keywords, load_keywords
from .textnorm import Lexicon, load_lexicon

log = logging.getLogger(__name__)

_BUNDLED = {
    "lexicon": "lexicon.tsv",
    "tld_bad": "tlds_bad.txt",
    "tld_suspicious": "tlds_suspicious.txt",
    "tld_normal": "tlds_normal.txt",
    "shorteners": "shorteners.txt",
    "common_words": "common_words.txt",
    "clusters": "clusters.txt",
    "greetings": "greetings.txt",
    "optout": "optout.txt",
    "forward_markers": "forward_markers.txt",
    "us_networks": "us_networks.txt",
    "timex": "timex.txt",
    "currency": "currency.txt",
    "free_mail": "free_mail.txt",
    "tollfree": "tollfree_prefixes.txt",
    "stopwords": "stopwords.txt",
}


@dataclass(frozen=True)
class Resources:
    lexicon: Lexicon
    tld_tables: TldTables
    entity_lexicon: EntityLexicon
    cluster_set: ClusterSet
    matcher: ClusterMatcher
    keywords: Keywords
    us_networks: FrozenSet[str]
    stopwords: FrozenSet[str]

    def versions(self) -> dict:
        """Versions of the versioned data files, for model metadata."""
        return {"lexicon": self.lexicon.version, "clusters": self.cluster_set.version}


def _path(config, key: str):
    configured = getattr(config, f"paths_{key}", "") if config is not None else ""
    return configured or bundled_path(_BUNDLED[key])


def load_resources(config=None) -> Resources:
    """Load every data file named by ``config`` (bundled files when None).

    Raises:
        DataError subclasses for malformed files; ClusterError when the
        cluster set does not have ``config.cluster_count`` clusters.
    """
    expected = config.cluster_count if config is not None else None
    cluster_set = load_cluster_set(_path(config, "clusters"), expected_count=expected)
    resources = Resources(
        lexicon=load_lexicon(_path(config, "lexicon")),
        tld_tables=load_tld_tables(
            _path(config, "tld_bad"),
            _path(config, "tld_suspicious"),
            _path(config, "tld_normal"),
            _path(config, "shorteners"),
        ),
        entity_lexicon=load_entity_lexicon(
            _path(config, "common_words"),
            _path(config, "timex"),
            _path(config, "currency"),
            _path(config, "free_mail"),
            _path(config, "tollfree"),
        ),
        cluster_set=cluster_set,
        matcher=build_matcher(cluster_set),
        keywords=load_keywords(
            _path(config, "greetings"),
            _path(config, "optout"),
            _path(config, "forward_markers"),
        ),
        us_networks=frozenset(n.lower() for n in read_lines(_path(config, "us_networks"))),
        stopwords=frozenset(w.lower() for w in read_lines(_path(config, "stopwords"))),
    )
    log.debug("loaded resources (lexicon %s, clusters %s)",
              resources.lexicon.version, resources.cluster_set.version)
    return resources


@functools.lru_cache(maxsize=1)
def default_resources() -> Resources:
    """The bundled resources, loaded once per process."""
    return load_resources(None)


def resources_for(config: Optional[object]) -> Resources:
    """Bundled resources when ``config`` names no data paths, else a fresh load."""
    if config is None:
        return default_resources()
    if not any(getattr(config, f"paths_{k}") for k in _BUNDLED):
        bundled = default_resources()
        bundled.cluster_set.validate(config.cluster_count)
        return bundled
    return load_resources(config)
