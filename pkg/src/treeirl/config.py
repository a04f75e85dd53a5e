"""Flat key/value experiment configuration and the three study presets.

A configuration is a flat ``dict`` of the keys in :data:`DEFAULTS`. Values
come, lowest precedence first, from the defaults, a preset's base, a
``key = value`` config file, and finally command-line flags.
"""
from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from treeirl.irl import METHODS, IrlConfig
from treeirl.learner import LearnerConfig
from treeirl.mdp import TreeSpec


class ConfigError(ValueError):
    """Bad configuration value or unknown key."""


DEFAULTS = {
    "branching": 10,
    "levels": 7,
    "shaky": False,
    "p_random": 0.2,
    "method": "erb_eqb",
    "expert_ratio": 0.5,
    "eta_q": 0.01,
    "eta_pi": 0.01,
    "eta_r": 0.01,
    "alpha": 1.0,
    "alpha_eqb": 1.0,
    "gamma": 1.0,
    "epochs": 500,
    "inner_steps": 10,
    "sac_updates": 1,
    "batch_size": 64,
    "buffer_capacity": 100_000,
    "n_demos": 1,
    "eval_episodes": 10,
    "logit_init_scale": 0.01,
    "seeds": 5,
    "master_seed": 0,
}

_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def _coerce(key: str, value):
    if key not in DEFAULTS:
        raise ConfigError(f"unknown config key {key!r}")
    if key == "alpha_eqb" and isinstance(value, str) and value.strip().lower() == "auto":
        return "auto"
    if key == "method":
        value = str(value).strip().replace("-", "_")
        if value not in METHODS:
            raise ConfigError(f"method must be one of {', '.join(METHODS)}, got {value!r}")
        return value
    kind = type(DEFAULTS[key])
    try:
        if kind is bool:
            if isinstance(value, bool):
                return value
            text = str(value).strip().lower()
            if text in _BOOL_TRUE:
                return True
            if text in _BOOL_FALSE:
                return False
            raise ValueError(text)
        if kind is int:
            f = float(value)
            if f != int(f):
                raise ValueError(value)
            return int(f)
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key}: {value!r}") from None


def normalize_key(key: str) -> str:
    return key.strip().replace("-", "_")


def parse_config_text(text: str, allow_lists: bool = False) -> dict:
    """Parse ``key = value`` lines; with ``allow_lists``, ``a, b, c`` becomes a list."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = normalize_key(key)
        if allow_lists and "," in value:
            out[key] = [_coerce(key, v.strip()) for v in value.split(",") if v.strip()]
        else:
            out[key] = _coerce(key, value.strip())
    return out


def read_config_file(path, allow_lists: bool = False) -> dict:
    with open(path) as fh:
        return parse_config_text(fh.read(), allow_lists)


def split_grid(layer: dict) -> tuple:
    """Separate list-valued keys (grid axes) from scalar ones."""
    scalars = {k: v for k, v in layer.items() if not isinstance(v, list)}
    axes = {k: v for k, v in layer.items() if isinstance(v, list)}
    return scalars, axes


def grid(base: dict, axes: dict) -> list:
    flats = [base]
    for key, values in axes.items():
        flats = [merge(f, {key: v}) for f in flats for v in values]
    return flats


def merge(*layers: dict) -> dict:
    flat = dict(DEFAULTS)
    for layer in layers:
        for key, value in layer.items():
            if value is None:
                continue
            key = normalize_key(key)
            flat[key] = _coerce(key, value)
    return flat


def matched_eqb_alpha(alpha: float, n_actions: int) -> float:
    """EQB entropy weight whose two-way entropy matches a uniform ``n_actions`` policy."""
    return alpha * math.log(n_actions) / math.log(2.0)


def derive_seed(master_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1)[0])


def seed_list(flat: dict) -> list:
    return [derive_seed(flat["master_seed"], i) for i in range(flat["seeds"])]


def build_config(flat: dict, seed: int = 0) -> IrlConfig:
    try:
        tree = TreeSpec(branching=flat["branching"], levels=flat["levels"], shaky=flat["shaky"],
                        p_random=flat["p_random"])
        alpha_eqb = flat["alpha_eqb"]
        if alpha_eqb == "auto":
            n_actions = tree.branching + (1 if tree.shaky else 0)
            alpha_eqb = matched_eqb_alpha(flat["alpha"], n_actions)
        learner = LearnerConfig(gamma=flat["gamma"], alpha=flat["alpha"], alpha_eqb=alpha_eqb,
                                eta_q=flat["eta_q"], eta_pi=flat["eta_pi"])
        return IrlConfig(
            method=flat["method"], tree=tree, learner=learner, epochs=flat["epochs"],
            inner_steps=flat["inner_steps"], sac_updates=flat["sac_updates"],
            batch_size=flat["batch_size"], expert_ratio=flat["expert_ratio"],
            eta_r=flat["eta_r"], buffer_capacity=flat["buffer_capacity"],
            n_demos=flat["n_demos"], eval_episodes=flat["eval_episodes"],
            logit_init_scale=flat["logit_init_scale"], seed=seed,
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def expand(flat_configs: Iterable[dict]) -> list:
    """One :class:`IrlConfig` per (flat config, seed), config-major order.

    Grid points that describe the same run (e.g. the baseline under several
    expert ratios it ignores) are kept once, at their first position.
    """
    out, seen = [], set()
    for flat in flat_configs:
        for seed in seed_list(flat):
            cfg = build_config(flat, seed)
            key = (cfg.config_id, seed)
            if key not in seen:
                seen.add(key)
                out.append(cfg)
    return out


# Desk-scale bases for the three studies. Anything here can still be
# overridden by a config file or a flag. The shaky tree has cycles (the
# parent action), so its studies discount; with gamma = 1 the per-step
# entropy bonus makes wandering upward look better than descending.
_SHAKY_TREE = {"branching": 3, "levels": 6, "shaky": True, "gamma": 0.9,
               "eta_pi": 0.01, "eta_r": 0.05, "alpha_eqb": "auto"}

PRESET_BASES = {
    "fig2": {"levels": 4, "epochs": 400, "alpha_eqb": "auto"},
    "shaky": {**_SHAKY_TREE, "epochs": 100},
    "ratios": {**_SHAKY_TREE, "epochs": 60, "method": "erb"},
}

PRESET_GRIDS = {
    "fig2": {"branching": [10, 15], "eta_pi": [0.01, 0.001, 0.0001],
             "method": ["baseline", "erb", "erb_eqb"]},
    "shaky": {"method": ["bc", "baseline", "erb", "erb_eqb"]},
    "ratios": {"expert_ratio": [0.0, 0.25, 0.5, 0.75, 1.0]},
}

PRESETS = tuple(PRESET_BASES)


def preset_grid(name: str, overrides: dict = (), file_layer: dict = ()) -> list:
    """Flat configs for a preset, grid keys varied in row-major order.

    A scalar (file or flag) naming a grid key pins that axis; a list in the
    file layer replaces it. Flags beat the file.
    """
    if name not in PRESET_BASES:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    overrides = {normalize_key(k): v for k, v in dict(overrides).items() if v is not None}
    file_scalars, file_axes = split_grid({normalize_key(k): v for k, v in dict(file_layer).items()})
    base = merge(PRESET_BASES[name], file_scalars, overrides)
    axes = {**PRESET_GRIDS[name], **file_axes}
    pinned = set(file_scalars) | set(overrides)
    axes = {k: v for k, v in axes.items() if k not in pinned}
    return grid(base, axes)
