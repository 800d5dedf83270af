"""Rollouts, closed-loop episodes and experiment suites.

Only the vectorised engine is imported eagerly; the episode and suite
layers depend on the learning package (which itself uses the engine), so
their names resolve on first access.
"""

from importlib import import_module

from .engine import BatchResult, episode_steps, rollout_batch, rollout_batch_reference

_LAZY = {
    "EpisodeError": "episode",
    "EpisodeOptions": "episode",
    "Metrics": "episode",
    "Trajectory": "episode",
    "initial_tau": "episode",
    "recompute_clearance": "episode",
    "run_episode": "episode",
    "DeadZoneResult": "suites",
    "SuiteResult": "suites",
    "baseline_collides": "suites",
    "compare_dead_zone": "suites",
    "evaluate_suite": "suites",
    "gen_familiar_suite": "suites",
    "gen_novel_suite": "suites",
    "steering_profile": "suites",
}


def __getattr__(name):
    if name in _LAZY:
        return getattr(import_module(f".{_LAZY[name]}", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


__all__ = ["BatchResult", "episode_steps", "rollout_batch", "rollout_batch_reference",
           *sorted(_LAZY)]
