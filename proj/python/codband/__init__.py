"""Collaborative dynamic bandits.

A pool of Bayesian linear bandit models is shared across users under a
Dirichlet-Process prior; users are matched to models by collapsed Gibbs
sampling, abrupt preference changes are caught by a confidence-bound
detector, and arms are selected by Thompson sampling. The heavy lifting
lives in the :mod:`codband._codband` extension; this package adds small
dict-based wrappers around the experiment runner.
"""

import json as _json

from ._codband import *  # noqa: F401,F403
from ._codband import (
    _generate_event_log_json,
    _run_experiment_json,
    _run_grid_json,
    _run_replay_json,
)

__all__ = [name for name in dir() if not name.startswith("_")]


def run_experiment(config: dict) -> dict:
    """Run seeded replications per the config dict; returns the manifest.

    Writes regret.csv and manifest.json under config["out_dir"].
    """
    return _json.loads(_run_experiment_json(_json.dumps(config)))


def run_grid(config: dict) -> dict:
    """Run an environment grid; returns the grid manifest."""
    return _json.loads(_run_grid_json(_json.dumps(config)))


def run_replay(config: dict, log_path: str) -> dict:
    """Replay a logged event stream through the configured policies."""
    return _json.loads(_run_replay_json(_json.dumps(config), log_path))


def generate_event_log(config: dict, events: int = 0) -> str:
    """Write a uniform-random logged stream; returns the log path."""
    return _generate_event_log_json(_json.dumps(config), events)


__all__ += ["run_experiment", "run_grid", "run_replay", "generate_event_log"]

