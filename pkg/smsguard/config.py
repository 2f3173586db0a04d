"""
Configuration management for smsguard.

Loads settings from ~/.smsguard/config.toml (or SMSGUARD_HOME/config.toml,
or an explicit --config path), falls back to defaults when the file doesn't
exist, and supports CLI flag overrides via Config.with_overrides().

Unknown sections or keys, out-of-range values and missing referenced files
are errors. Config.fingerprint() is recorded in every model and report.
"""

import dataclasses
import hashlib
import json
import logging
import sys
from pathlib import Path
from typing import Optional

from ._paths import get_config_path
from .errors import ConfigError

log = logging.getLogger(__name__)


# Default configuration values
_DEFAULTS = {
    "general": {
        "seed": 0,
    },
    "paths": {
        "lexicon": "",
        "tld_bad": "",
        "tld_suspicious": "",
        "tld_normal": "",
        "shorteners": "",
        "common_words": "",
        "clusters": "",
        "greetings": "",
        "optout": "",
        "forward_markers": "",
        "us_networks": "",
        "timex": "",
        "currency": "",
        "free_mail": "",
        "tollfree": "",
        "stopwords": "",
    },
    "forest": {
        "n_trees": 500,
        "max_depth": 0,
        "min_leaf": 1,
        "features_per_split": "sqrt",
        "bootstrap": True,
        "n_jobs": 1,
    },
    "domain": {
        "n_trees": 100,
    },
    "mpa": {
        "min_messages": 50,
        "window_days": 7,
        "emit_stride": 50,
        "skew_seconds": 60,
    },
    "costs": {
        "fp": 1.0,
        "fn": 1.0,
    },
    "eval": {
        "k": 10,
        "drift_delta": 0.05,
        "bucket_days": 7,
        "n_jobs": 1,
    },
    "baseline": {
        "cap": 50000,
        "df_min": 2,
        "ngram_max": 2,
        "osb_n": 3,
        "osb_window": 4,
    },
    "cluster": {
        "count": 22,
        "alpha": 0.5,
        "top_k": 200,
        "min_len": 4,
    },
    "normalize": {
        "mela": True,
        "baseline": False,
    },
}


@dataclasses.dataclass(frozen=True)
class Config:
    """Immutable configuration object.

    Field names are ``<section>_<key>`` of the TOML file.
    """

    general_seed: int = 0

    paths_lexicon: str = ""
    paths_tld_bad: str = ""
    paths_tld_suspicious: str = ""
    paths_tld_normal: str = ""
    paths_shorteners: str = ""
    paths_common_words: str = ""
    paths_clusters: str = ""
    paths_greetings: str = ""
    paths_optout: str = ""
    paths_forward_markers: str = ""
    paths_us_networks: str = ""
    paths_timex: str = ""
    paths_currency: str = ""
    paths_free_mail: str = ""
    paths_tollfree: str = ""
    paths_stopwords: str = ""

    forest_n_trees: int = 500
    forest_max_depth: int = 0
    forest_min_leaf: int = 1
    forest_features_per_split: str = "sqrt"
    forest_bootstrap: bool = True
    forest_n_jobs: int = 1

    domain_n_trees: int = 100

    mpa_min_messages: int = 50
    mpa_window_days: int = 7
    mpa_emit_stride: int = 50
    mpa_skew_seconds: int = 60

    costs_fp: float = 1.0
    costs_fn: float = 1.0

    eval_k: int = 10
    eval_drift_delta: float = 0.05
    eval_bucket_days: int = 7
    eval_n_jobs: int = 1

    baseline_cap: int = 50000
    baseline_df_min: int = 2
    baseline_ngram_max: int = 2
    baseline_osb_n: int = 3
    baseline_osb_window: int = 4

    cluster_count: int = 22
    cluster_alpha: float = 0.5
    cluster_top_k: int = 200
    cluster_min_len: int = 4

    normalize_mela: bool = True
    normalize_baseline: bool = False

    def with_overrides(self, **kwargs) -> "Config":
        """Return a new Config with specified fields overridden.

        Only applies overrides for non-None values, so CLI flags
        that weren't specified don't clobber config file values.
        """
        updates = {k: v for k, v in kwargs.items() if v is not None}
        return dataclasses.replace(self, **updates) if updates else self

    def fingerprint(self) -> str:
        """Return a short stable hash of every setting, seed included."""
        payload = json.dumps(dataclasses.asdict(self), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

    def forest_params(self, domain: bool = False):
        """Build ForestParams for the main forest or the domain sub-classifier."""
        from .model import ForestParams

        split_rule = self.forest_features_per_split
        if split_rule.isdigit():
            split_rule = int(split_rule)
        return ForestParams(
            n_trees=self.domain_n_trees if domain else self.forest_n_trees,
            max_depth=self.forest_max_depth or None,
            min_leaf=self.forest_min_leaf,
            features_per_split=split_rule,
            bootstrap=self.forest_bootstrap,
            rng_seed=self.general_seed,
            n_jobs=self.forest_n_jobs,
        )

    def costs(self):
        """Build the CostMatrix from the [costs] section."""
        from .model import CostMatrix
        return CostMatrix(cost_fp=self.costs_fp, cost_fn=self.costs_fn)


def load_config(config_path: Optional[Path] = None) -> Config:
    """Load config from TOML file, falling back to defaults.

    Args:
        config_path: Explicit path to config file. If None, uses
                     SMSGUARD_HOME/config.toml or ~/.smsguard/config.toml.
                     An explicit path that doesn't exist is an error.

    Returns:
        Config dataclass with merged values.

    Raises:
        ConfigError: unreadable or malformed file, unknown keys, bad
                     value types, or referenced files that don't exist.
    """
    path = config_path or get_config_path()

    if not path.is_file():
        if config_path is not None:
            raise ConfigError(f"config file not found: {path}")
        return Config()

    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"could not read config file {path}: {e}") from e

    try:
        parsed = _parse_toml(text)
    except Exception as e:
        raise ConfigError(f"could not parse config file {path}: {e}") from e

    config = _build_config(parsed, base_dir=path.parent)
    log.debug("loaded config from %s (fingerprint %s)", path, config.fingerprint())
    return config


def _parse_toml(text: str) -> dict:
    """Parse TOML text using tomllib (3.11+) or the tomli backport."""
    if sys.version_info >= (3, 11):
        import tomllib
        return tomllib.loads(text)
    else:
        import tomli
        return tomli.loads(text)


def _build_config(parsed: dict, base_dir: Optional[Path] = None) -> Config:
    """Build a Config from a parsed TOML dict, rejecting unknown keys."""
    for section, values in parsed.items():
        if section not in _DEFAULTS:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(values, dict):
            raise ConfigError(f"[{section}] must be a table")
        for key in values:
            if key not in _DEFAULTS[section]:
                raise ConfigError(f"unknown config key [{section}] {key}")

    def _get(section: str, key: str):
        default = _DEFAULTS[section][key]
        val = parsed.get(section, {}).get(key, default)
        # Type coercion; bool must be checked before int
        if isinstance(default, bool):
            if isinstance(val, str):
                return val.lower() in ("true", "1", "yes", "on")
            return bool(val)
        if isinstance(default, int):
            try:
                return int(val)
            except (ValueError, TypeError):
                raise ConfigError(f"[{section}] {key} must be an integer, got {val!r}")
        if isinstance(default, float):
            try:
                return float(val)
            except (ValueError, TypeError):
                raise ConfigError(f"[{section}] {key} must be a number, got {val!r}")
        return str(val)

    values = {}
    for section, keys in _DEFAULTS.items():
        for key in keys:
            values[f"{section}_{key}"] = _get(section, key)

    for key in _DEFAULTS["paths"]:
        raw = values[f"paths_{key}"]
        if not raw:
            continue
        p = Path(raw).expanduser()
        if not p.is_absolute() and base_dir is not None:
            p = base_dir / p
        if not p.is_file():
            raise ConfigError(f"[paths] {key}: file not found: {p}")
        values[f"paths_{key}"] = str(p.resolve())

    config = Config(**values)
    _validate(config)
    return config


def _validate(config: Config) -> None:
    """Check value ranges that the dataclass types can't express."""
    if config.forest_n_trees < 1 or config.domain_n_trees < 1:
        raise ConfigError("n_trees must be >= 1")
    if config.forest_min_leaf < 1:
        raise ConfigError("[forest] min_leaf must be >= 1")
    rule = config.forest_features_per_split
    if rule not in ("sqrt", "log2", "all") and not rule.isdigit():
        raise ConfigError(
            f"[forest] features_per_split must be sqrt, log2, all or an integer, got {rule!r}"
        )
    if config.costs_fp <= 0 or config.costs_fn <= 0:
        raise ConfigError("[costs] fp and fn must be > 0")
    if config.eval_k < 2:
        raise ConfigError("[eval] k must be >= 2")
    if config.mpa_min_messages < 1 or config.mpa_window_days < 1 or config.mpa_emit_stride < 1:
        raise ConfigError("[mpa] min_messages, window_days and emit_stride must be >= 1")
    if not 0.0 <= config.cluster_alpha <= 1.0:
        raise ConfigError("[cluster] alpha must be within [0, 1]")


def format_config(config: Config, config_path: Optional[Path] = None) -> str:
    """Format config for display (used by the `config` command)."""
    path = config_path or get_config_path()
    lines = [
        f"Config file: {path}",
        f"  exists: {'yes' if path.is_file() else 'no'}",
        f"  fingerprint: {config.fingerprint()}",
    ]
    for section, keys in _DEFAULTS.items():
        lines.append("")
        lines.append(f"[{section}]")
        for key in keys:
            val = getattr(config, f"{section}_{key}")
            if isinstance(val, bool):
                shown = str(val).lower()
            elif section == "paths":
                shown = val or "(bundled)"
            else:
                shown = val
            lines.append(f"  {key} = {shown}")
    return "\n".join(lines)
