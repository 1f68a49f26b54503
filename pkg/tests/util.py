"""Hand-rolled builders shared across test modules."""

from __future__ import annotations

from scenemine.categories import DEFAULT_REGISTRY
from scenemine.scenario_set import ScenarioSet
from scenemine.tracklog import ObjectState, TrackedObject, TrackLog

T0 = 1_000_000_000
DT = 100_000_000
BOX = (4.0, 2.0, 1.6)


def stamps(n: int) -> tuple[int, ...]:
    return tuple(T0 + i * DT for i in range(n))


def state(x, y, heading=0.0, vx=0.0, vy=0.0, z=0.0):
    return ObjectState((x, y, z), heading, (vx, vy, 0.0), BOX)


def obj(track_id, category, states_by_ts):
    return TrackedObject(track_id, DEFAULT_REGISTRY.category(category), states_by_ts)


def static_obj(track_id, category, x, y, heading=0.0, n=2, vx=0.0, vy=0.0):
    """An object that sits at (x, y) for the first n shared frames."""
    return obj(track_id, category, {ts: state(x, y, heading, vx, vy) for ts in stamps(n)})


def make_log(objects, n=2, log_id="log-test"):
    return TrackLog.build(log_id, stamps(n), objects)


def sset(entries) -> ScenarioSet:
    return ScenarioSet({t: frozenset(ts) for t, ts in entries.items()})


def as_dict(s: ScenarioSet) -> dict[str, set[int]]:
    """ScenarioSet -> plain {track: set(ts)} dict, the shape the oracles speak."""
    return {t: set(s.timestamps_for(t)) for t in s.tracks()}
