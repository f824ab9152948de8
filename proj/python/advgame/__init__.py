"""Adversarial scene-manipulation game.

Thin wrappers over the native ``_advgame`` module: scenes, programs,
displacements and results are plain dicts here and JSON text underneath.
"""

import json as _json

from . import _advgame
from ._advgame import (
    AdvgameError,
    calc_reward,
    decode_config,
    encode_config,
    encode_response,
    grid_config_count,
    redaction_findings,
    relative_drop,
    reported_relative_drop,
)

__version__ = _advgame.__version__

__all__ = [
    "AdvgameError",
    "Session",
    "apply_displacement",
    "calc_reward",
    "check_scene",
    "decode_config",
    "encode_config",
    "encode_request",
    "encode_response",
    "execute",
    "grid_config_count",
    "redaction_findings",
    "relative_drop",
    "render_topdown",
    "reported_relative_drop",
    "resolve_config",
    "t_test",
    "transcript_metrics",
]


def _dump(value):
    return value if isinstance(value, str) else _json.dumps(value)


def check_scene(scene, constraints=None):
    """Every constraint violation of a scene; an empty list means valid."""
    return _json.loads(_advgame.check_scene_json(_dump(scene), _dump(constraints or {})))


def execute(program, scene):
    """Ground-truth answer of a program on a scene, or None if undetermined."""
    answer = _advgame.execute_json(_dump(program), _dump(scene))
    return answer or None


def apply_displacement(scene, displacement):
    """Scene with each object moved by its [dx, dy] bin offset (None stays put)."""
    return _json.loads(_advgame.apply_displacement_json(_dump(scene), _dump(displacement)))


def render_topdown(scene):
    """Top-down SVG of a scene."""
    return _advgame.render_topdown_json(_dump(scene))


def encode_request(round_id, scene, question):
    """The exact request line a player receives."""
    return _advgame.encode_request_json(round_id, _dump(scene), list(question))


def t_test(samples, mu0=0.0):
    """One-sided one-sample t-test (alternative: mean > mu0)."""
    return _json.loads(_advgame.t_test_json(list(samples), mu0))


def transcript_metrics(path):
    """Consistency and Drop per phase of an NDJSON transcript."""
    return _json.loads(_advgame.transcript_metrics_json(str(path)))


def resolve_config(overrides=None):
    """Full run configuration with overrides applied and validated."""
    return _json.loads(_advgame.resolve_config_json(_dump(overrides or {})))


class Session:
    """Corpus, player and mini-games for one run configuration."""

    def __init__(self, overrides=None):
        self._native = _advgame.Session(_dump(overrides or {}))

    @property
    def item_count(self):
        return self._native.item_count

    def build(self):
        """Curate (if configured) and draw the mini-games; returns their count."""
        return self._native.build()

    def minigame(self, index):
        return _json.loads(self._native.minigame_json(index))

    def search(self, index):
        """Random-search baseline on one mini-game."""
        return _json.loads(self._native.search_json(index))

    def adversary(self, index):
        """Train a fresh adversary on one mini-game and evaluate it."""
        return _json.loads(self._native.adversary_json(index))

    def exhaustive(self, index, item, movable):
        """Every placement of the movable objects of one item."""
        return _json.loads(self._native.exhaustive_json(index, item, list(movable)))
