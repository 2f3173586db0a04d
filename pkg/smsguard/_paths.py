"""
Centralized path resolution for smsguard.

The data directory (~/.smsguard/) holds the config file and, by default,
trained model files. SMSGUARD_HOME overrides it for testing and custom
installs. Bundled data files (lexicon, TLD tables, cluster set, keyword
lists, generator templates) live inside the package.
"""

import os
from pathlib import Path

_BUNDLED_DIR = Path(__file__).resolve().parent / "data"


def get_data_dir() -> Path:
    """Return the smsguard data directory path.

    Checks SMSGUARD_HOME env var first (for testing and custom installs),
    then falls back to ~/.smsguard/.
    """
    env_dir = os.environ.get("SMSGUARD_HOME")
    if env_dir:
        return Path(env_dir)
    return Path.home() / ".smsguard"


def get_config_path() -> Path:
    """Return the path to the config TOML file."""
    return get_data_dir() / "config.toml"


def get_model_dir() -> Path:
    """Return the default directory for trained model files."""
    return get_data_dir() / "models"


def bundled_path(name: str) -> Path:
    """Return the path of a bundled data file, e.g. ``bundled_path("lexicon.tsv")``."""
    return _BUNDLED_DIR / name
