"""Canned experiment bundles behind the `figures` CLI subcommand.

Each preset is a base scenario plus sweep axes; running one writes the
usual sweep layout (cells/ plus summary.csv) that the plotting tool reads.
The full scale (16 tastes, 6 active, 8008 users) reproduces the reference
experiments; desk scale (12/4, 495 users) is for quick smoke runs.
"""

from __future__ import annotations

from dataclasses import replace

from .harness import InjectionSpec, ScenarioConfig

PRESET_IDS = ("fig2", "fig3", "fig4", "fig5a", "fig5b", "fig6")

_FULL = dict(dim=16, ones=6, users=None)
_DESK = dict(dim=12, ones=4, users=None)


def preset(preset_id: str, scale: str = "full", repetitions: int | None = None,
           seed: int = 1,
           steps: int | None = None) -> tuple[ScenarioConfig, list[tuple[str, list]]]:
    """(base config, sweep axes) for a named experiment bundle."""
    if preset_id not in PRESET_IDS:
        raise ValueError(f"unknown preset {preset_id!r}; choose from {PRESET_IDS}")
    if scale not in ("full", "desk"):
        raise ValueError("scale must be 'full' or 'desk'")
    scale_kwargs = _FULL if scale == "full" else _DESK
    base = ScenarioConfig(steps=steps or 800, repetitions=repetitions or 10,
                          seed=seed, **scale_kwargs)

    if preset_id == "fig2":
        # Rewiring-strategy comparison predates the decay mechanism.
        base = replace(base, decay=0.0)
        axes = [("strategy", ["optimal", "random", "bara"])]
    elif preset_id == "fig3":
        axes = [("q", [5, 10, 20, 50]),
                ("lambda", [0.02, 0.05, 0.1, 0.2, 0.5])]
    elif preset_id == "fig4":
        # Injection lands at step 500 of the 800-step run; scaled down
        # proportionally when a shorter smoke run is requested.
        base = replace(base, injection=InjectionSpec(count=10,
                                                     step=base.steps * 5 // 8,
                                                     quality=1.5))
        axes = [("lambda", [0.0, 0.1, 4.0])]
    elif preset_id in ("fig5a", "fig5b"):
        if preset_id == "fig5b":
            full_b = dict(dim=24, ones=6, users=8008)
            base = replace(base, **(full_b if scale == "full" else {}))
        axes = [("delta", [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]),
                ("recommender", ["adaptive", "random", "absPop", "relPop"])]
    else:  # fig6
        axes = [("noise", [0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0])]
    return base, axes
