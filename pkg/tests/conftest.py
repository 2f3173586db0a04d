"""Shared test fixtures for smsguard."""

import os
import subprocess
import sys

import pytest


@pytest.fixture
def smsguard_home(tmp_path, monkeypatch):
    """Provide an isolated ~/.smsguard/ directory for testing.

    Sets SMSGUARD_HOME env var so all smsguard modules use tmp_path.
    Does NOT create the directory.
    """
    home = tmp_path / ".smsguard"
    monkeypatch.setenv("SMSGUARD_HOME", str(home))
    return home


@pytest.fixture
def config_file(smsguard_home):
    """Write arbitrary TOML content to the test config file.

    Returns a helper function. Call it with a TOML string.
    """
    def _write(content: str):
        smsguard_home.mkdir(parents=True, exist_ok=True)
        config_path = smsguard_home / "config.toml"
        config_path.write_text(content, encoding="utf-8")
        return config_path
    return _write


@pytest.fixture(scope="session")
def resources():
    """The bundled resources (lexicon, TLD tables, clusters, keyword lists)."""
    from smsguard.resources import default_resources
    return default_resources()


@pytest.fixture
def small_forest():
    """ForestParams small enough for unit tests."""
    from smsguard.model import ForestParams
    return ForestParams(n_trees=15, rng_seed=7)


@pytest.fixture(scope="session")
def genconfig():
    """The bundled generator config, scaled down for fast tests."""
    from smsguard.simgen import load_genconfig
    cfg = load_genconfig().with_counts(n_spam=120, n_ham=120, seed=3)
    return cfg.with_streams(spam_senders=8, legit_senders=8)


@pytest.fixture(scope="session")
def small_corpus(genconfig):
    """120 spam + 120 ham synthetic labeled messages."""
    from smsguard.simgen import gen_messages
    return gen_messages(genconfig)


@pytest.fixture
def write_corpus(tmp_path):
    """Write labeled messages as corpus JSONL plus label sidecar.

    Returns a helper: write_corpus(items, name="corpus.jsonl") -> path.
    """
    from smsguard.messages import write_labeled

    def _write(items, name="corpus.jsonl"):
        path = tmp_path / name
        write_labeled(items, path)
        return path
    return _write


@pytest.fixture
def run_smsguard(tmp_path):
    """Run smsguard as a subprocess with isolated SMSGUARD_HOME.

    Returns a callable: run_smsguard(args, input_data=None)
    The callable has a .home attribute pointing to the smsguard data dir.
    """
    smsguard_home = tmp_path / ".smsguard"

    def _run(args, input_data=None, timeout=120):
        env = os.environ.copy()
        env["SMSGUARD_HOME"] = str(smsguard_home)
        cmd = [sys.executable, "-m", "smsguard"] + [str(a) for a in args]
        return subprocess.run(
            cmd,
            input=input_data,
            capture_output=True,
            text=True,
            env=env,
            timeout=timeout,
            cwd=str(tmp_path),
        )

    _run.home = smsguard_home
    return _run
