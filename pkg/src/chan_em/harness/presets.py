"""Built-in experiment presets mirroring the reference study setups.

Each preset is a complete, JSON-ready config dict. Desk scale keeps 1e5
observed slots per channel so every preset runs in seconds; --paper-scale
bumps that to 1e6. Master seeds are fixed constants so that preset runs are
reproducible byte for byte.
"""

from __future__ import annotations

import copy
from typing import Any

# the eight starting points of the reference convergence study
STUDY_STARTS = [
    {"alpha": 0.1, "beta": 0.6},
    {"alpha": 0.2, "beta": 0.7},
    {"alpha": 0.3, "beta": 0.1},
    {"alpha": 0.4, "beta": 0.5},
    {"alpha": 0.6, "beta": 0.5},
    {"alpha": 0.7, "beta": 0.7},
    {"alpha": 0.8, "beta": 0.5},
    {"alpha": 0.9, "beta": 0.8},
]

# five-channel field scenario: channels, one start per channel
FIELD_CHANNELS = [
    {"alpha": 0.8, "beta": 0.3},
    {"alpha": 0.2, "beta": 0.9},
    {"alpha": 0.4, "beta": 0.1},
    {"alpha": 0.7, "beta": 0.5},
    {"alpha": 0.9, "beta": 0.6},
]
FIELD_STARTS = [
    {"alpha": 0.6, "beta": 0.5},
    {"alpha": 0.4, "beta": 0.8},
    {"alpha": 0.1, "beta": 0.3},
    {"alpha": 0.8, "beta": 0.3},
    {"alpha": 0.7, "beta": 0.4},
]

DESK_SLOTS = 100_000
PAPER_SLOTS = 1_000_000


def _single_channel_base(output_dir: str) -> dict[str, Any]:
    return {
        "true_params": [{"alpha": 0.8, "beta": 0.3}],
        "schedule": {"kind": "fixed", "skip": 4},
        "observed_slots": DESK_SLOTS,
        "starts": list(STUDY_STARTS),
        "em": {
            "max_iterations": 100,
            "param_tolerance": 0.0,
            "clamp_epsilon": 1e-9,
            "record_trajectory": True,
        },
        "master_seed": 15,
        "output_dir": output_dir,
    }


def build_presets() -> dict[str, dict[str, Any]]:
    fig3 = _single_channel_base("out/paper-fig3")
    table1 = _single_channel_base("out/paper-table1")
    fig4 = _single_channel_base("out/paper-fig4")
    fig4["grid"] = {"step": 0.02, "bounds": [0.0, 1.0]}
    fig5 = {
        "true_params": [dict(c) for c in FIELD_CHANNELS],
        "schedule": {"kind": "random-uniform", "support": [1, 2, 3, 4, 5, 6]},
        "observed_slots": DESK_SLOTS,
        "starts": [dict(s) for s in FIELD_STARTS],
        "em": {
            "max_iterations": 1000,
            "param_tolerance": 0.0,
            "clamp_epsilon": 1e-9,
            "record_trajectory": True,
        },
        "master_seed": 20,
        "output_dir": "out/paper-fig5",
    }
    return {
        "paper-fig3": fig3,
        "paper-table1": table1,
        "paper-fig4": fig4,
        "paper-fig5": fig5,
    }


PRESETS = build_presets()

PRESET_NAMES = tuple(sorted(PRESETS))


def preset_config(name: str, paper_scale: bool = False) -> dict[str, Any]:
    """Deep copy of a preset dict, optionally at full 1e6-observation scale."""
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}")
    out = copy.deepcopy(PRESETS[name])
    if paper_scale:
        out["observed_slots"] = PAPER_SLOTS
    return out
