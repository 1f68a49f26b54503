"""Independent reference implementations the test suite checks against.

Deliberately written with different machinery than the package: complex
arithmetic instead of rotation matrices, exhaustive enumeration instead of
assignment solvers, plain quantifier loops instead of indexes. Slow but
transparently faithful to the definitions; only ever run on small inputs.
"""

from __future__ import annotations

import cmath
import itertools
import math

NS = 1_000_000_000
MOVING = 0.5


def to_frame(observer, target):
    """Target offset rotated into the observer's body frame via complex division."""
    d = complex(target.position[0] - observer.position[0], target.position[1] - observer.position[1])
    z = d / cmath.exp(1j * observer.heading)
    return z.real, z.imag


def classify(observer, target, long_half=math.pi / 4, lat_half=math.pi / 4):
    lon, lat = to_frame(observer, target)
    if lon == 0.0 and lat == 0.0:
        return None
    theta = math.atan2(lat, lon)
    if abs(theta) <= long_half:
        return "forward"
    if math.pi - abs(theta) <= long_half:
        return "backward"
    if abs(theta - math.pi / 2) <= lat_half:
        return "left"
    if abs(theta + math.pi / 2) <= lat_half:
        return "right"
    return None


def bearing(observer, target):
    d = complex(target.position[0] - observer.position[0], target.position[1] - observer.position[1])
    return abs(cmath.phase(d * cmath.exp(-1j * observer.heading)))


def velocity_bearing(observer, target):
    d = complex(target.position[0] - observer.position[0], target.position[1] - observer.position[1])
    v = complex(observer.velocity[0], observer.velocity[1])
    return abs(cmath.phase(d * cmath.exp(-1j * cmath.phase(v))))


def planar_distance(a, b):
    return math.hypot(a.position[0] - b.position[0], a.position[1] - b.position[1])


def speed(state):
    return math.hypot(state.velocity[0], state.velocity[1])


_AXIS_TURN = {"forward": 0.0, "left": math.pi / 2, "backward": math.pi, "right": -math.pi / 2}


def segment_crosses(track_state, prev_state, next_state, direction, band, extent):
    base = complex(track_state.position[0], track_state.position[1])
    axis = cmath.exp(1j * (track_state.heading + _AXIS_TURN[direction]))
    z0 = (complex(prev_state.position[0], prev_state.position[1]) - base) / axis
    z1 = (complex(next_state.position[0], next_state.position[1]) - base) / axis
    o0, o1 = z0.imag, z1.imag
    if o0 == 0.0 and o1 == 0.0:
        return False
    if o0 * o1 > 0.0:
        return False
    if abs(o0) > band or abs(o1) > band:
        return False
    t = o0 / (o0 - o1)
    along = z0.real + t * (z1.real - z0.real)
    return 0.0 <= along <= extent


# ---------------------------------------------------------------------------
# Scenario predicates as plain quantifier loops over (track, timestamp) pairs.
# Each takes and returns {track_id: set(timestamps)} dicts.


def pairs(entries):
    return {(track, ts) for track, stamps in entries.items() for ts in stamps}


def from_pairs(kept):
    out = {}
    for track, ts in kept:
        out.setdefault(track, set()).add(ts)
    return out


def _state(log, track, ts):
    obj = log.objects.get(track)
    return None if obj is None else obj.states.get(ts)


def _present(log, entries):
    """(track, ts, state) for every candidate pair that exists in the log."""
    for t, ts in sorted(pairs(entries)):
        st = _state(log, t, ts)
        if st is not None:
            yield t, ts, st


def _others_at(log, entries, ts, excluding):
    found = []
    for other, stamps in entries.items():
        if other == excluding or ts not in stamps:
            continue
        st = _state(log, other, ts)
        if st is not None:
            found.append((other, st))
    return found


def get_objects_of_category(log, name):
    return {
        obj.track_id: set(obj.states)
        for obj in log.objects.values()
        if obj.category.name == name
    }


def has_objects_in_relative_direction(
    log, track, related, direction, min_number=1, max_number=math.inf,
    within_distance=50.0, lateral_thresh=math.inf,
):
    kept = set()
    for t, ts, me in _present(log, track):
        count = 0
        for _o, st in _others_at(log, related, ts, t):
            lon, lat = to_frame(me, st)
            if math.hypot(lon, lat) > within_distance:
                continue
            orth = lat if direction in ("forward", "backward") else lon
            if abs(orth) > lateral_thresh:
                continue
            if classify(me, st) == direction:
                count += 1
        if min_number <= count <= max_number:
            kept.add((t, ts))
    return from_pairs(kept)


def being_crossed_by(log, track, related, direction="forward", lateral_band=5.0, forward_extent=10.0):
    kept = set()
    stamps = list(log.timestamps)
    for t, ts, me in _present(log, track):
        i = stamps.index(ts)
        segments = []
        if i > 0:
            segments.append((stamps[i - 1], ts))
        if i + 1 < len(stamps):
            segments.append((ts, stamps[i + 1]))
        hit = False
        for other, other_stamps in related.items():
            if other == t:
                continue
            for ts_a, ts_b in segments:
                if ts_a not in other_stamps or ts_b not in other_stamps:
                    continue
                st_a, st_b = _state(log, other, ts_a), _state(log, other, ts_b)
                if st_a is None or st_b is None:
                    continue
                if segment_crosses(me, st_a, st_b, direction, lateral_band, forward_extent):
                    hit = True
        if hit:
            kept.add((t, ts))
    return from_pairs(kept)


def heading_in_relative_direction_to(log, track, related, direction):
    kept = set()
    for t, ts, me in _present(log, track):
        if speed(me) < MOVING:
            continue
        hit = False
        for _o, st in _others_at(log, related, ts, t):
            if speed(st) < MOVING:
                continue
            delta = abs(
                cmath.phase(
                    complex(me.velocity[0], me.velocity[1])
                    / complex(st.velocity[0], st.velocity[1])
                )
            )
            if direction == "same" and delta < math.pi / 4:
                hit = True
            elif direction == "opposite" and delta > 3 * math.pi / 4:
                hit = True
            elif direction == "perpendicular" and abs(delta - math.pi / 2) <= math.pi / 4:
                hit = True
        if hit:
            kept.add((t, ts))
    return from_pairs(kept)


def facing_toward(log, track, related, within_angle=math.pi / 8, max_distance=50.0):
    kept = set()
    for t, ts, me in _present(log, track):
        for _o, st in _others_at(log, related, ts, t):
            if planar_distance(me, st) > max_distance or planar_distance(me, st) == 0.0:
                continue
            if bearing(me, st) <= within_angle:
                kept.add((t, ts))
                break
    return from_pairs(kept)


def heading_toward(log, track, related, within_angle=math.pi / 8, minimum_speed=0.5, max_distance=50.0):
    kept = set()
    for t, ts, me in _present(log, track):
        if speed(me) < minimum_speed or speed(me) == 0.0:
            continue
        for _o, st in _others_at(log, related, ts, t):
            if planar_distance(me, st) > max_distance or planar_distance(me, st) == 0.0:
                continue
            if velocity_bearing(me, st) <= within_angle:
                kept.add((t, ts))
                break
    return from_pairs(kept)


def near_objects(log, track, related, distance_thresh=10.0, min_objects=1):
    kept = set()
    for t, ts, me in _present(log, track):
        close = [1 for _o, st in _others_at(log, related, ts, t) if planar_distance(me, st) <= distance_thresh]
        if len(close) >= min_objects:
            kept.add((t, ts))
    return from_pairs(kept)


def has_velocity(log, track, min_velocity=0.0, max_velocity=math.inf):
    kept = {(t, ts) for t, ts, st in _present(log, track) if min_velocity <= speed(st) <= max_velocity}
    return from_pairs(kept)


def decelerating(log, track, min_decel=4.0):
    stamps = list(log.timestamps)
    kept = set()
    for t, ts, me in _present(log, track):
        i = stamps.index(ts)
        if i == 0:
            continue
        prev = _state(log, t, stamps[i - 1])
        if prev is None:
            continue
        dv = speed(me) - speed(prev)
        if dv / ((ts - stamps[i - 1]) / NS) <= -min_decel:
            kept.add((t, ts))
    return from_pairs(kept)


def scenario_and(a, b):
    return from_pairs(pairs(a) & pairs(b))


def scenario_or(a, b):
    return from_pairs(pairs(a) | pairs(b))


def scenario_not(base, s):
    return from_pairs(pairs(base) - pairs(s))


def followed_by(log, first, second, within_seconds, cross_track=False):
    window = int(round(within_seconds * NS))
    kept = set()
    for t, ts in pairs(second):
        if cross_track:
            earlier = [e for _t2, e in pairs(first)]
        else:
            earlier = sorted(first.get(t, ()))
        if any(0 < ts - e <= window for e in earlier):
            kept.add((t, ts))
    return from_pairs(kept)


ORACLE_PREDICATES = {
    "get_objects_of_category": get_objects_of_category,
    "has_objects_in_relative_direction": has_objects_in_relative_direction,
    "being_crossed_by": being_crossed_by,
    "heading_in_relative_direction_to": heading_in_relative_direction_to,
    "facing_toward": facing_toward,
    "heading_toward": heading_toward,
    "near_objects": near_objects,
    "has_velocity": has_velocity,
    "decelerating": decelerating,
    "scenario_and": scenario_and,
    "scenario_or": scenario_or,
    "scenario_not": scenario_not,
    "followed_by": followed_by,
}


# ---------------------------------------------------------------------------
# HOTA by exhaustive matching enumeration (inputs must stay tiny).


def _similarity(a, b):
    return max(0.0, 1.0 - math.dist(a, b) / 2.0)


def _matchings(pred_ids, gt_ids, eligible):
    """Every one-to-one matching over eligible pairs, as sorted tuples."""
    results = set()
    gt_list = list(gt_ids)
    for choice in itertools.product([None, *range(len(gt_list))], repeat=len(pred_ids)):
        used = [g for g in choice if g is not None]
        if len(used) != len(set(used)):
            continue
        matching = []
        ok = True
        for p, gi in zip(pred_ids, choice):
            if gi is None:
                continue
            pair = (p, gt_list[gi])
            if pair not in eligible:
                ok = False
                break
            matching.append(pair)
        if ok:
            results.add(tuple(sorted(matching)))
    return results


def _best_matching(pred_ids, gt_ids, eligible):
    best = None
    best_total = -1.0
    for matching in sorted(_matchings(pred_ids, gt_ids, eligible)):
        total = sum(eligible[p] for p in matching)
        if total > best_total + 1e-9:
            best, best_total = matching, total
        # sorted iteration means the first optimum seen is the lex-smallest
    return best or ()


def hota(pred, gt, alphas):
    """pred/gt: {track: {ts: (x, y, z)}}. Returns (score, per-alpha list)."""
    pred = {p: dict(v) for p, v in pred.items() if v}
    gt = {g: dict(v) for g, v in gt.items() if v}
    total_pred = sum(len(v) for v in pred.values())
    total_gt = sum(len(v) for v in gt.values())
    if total_pred == 0 and total_gt == 0:
        return 1.0, [(a, 1.0) for a in alphas]

    frames = sorted({ts for v in pred.values() for ts in v} | {ts for v in gt.values() for ts in v})
    per_alpha = []
    for alpha in alphas:
        co = {}
        tp = 0
        for ts in frames:
            pred_here = sorted(p for p, v in pred.items() if ts in v)
            gt_here = sorted(g for g, v in gt.items() if ts in v)
            eligible = {}
            for p in pred_here:
                for g in gt_here:
                    s = _similarity(pred[p][ts], gt[g][ts])
                    if s >= alpha:
                        eligible[(p, g)] = s
            for pair in _best_matching(pred_here, gt_here, eligible):
                co[pair] = co.get(pair, 0) + 1
                tp += 1
        fn, fp = total_gt - tp, total_pred - tp
        assoc = sum(c * c / (len(pred[p]) + len(gt[g]) - c) for (p, g), c in co.items())
        denom = tp + fn + fp
        per_alpha.append((alpha, math.sqrt(assoc / denom) if denom else 1.0))
    return sum(s for _, s in per_alpha) / len(per_alpha), per_alpha


def f1(tp, fp, fn):
    if tp == fp == fn == 0:
        return 1.0
    return 2 * tp / (2 * tp + fp + fn)


def timestamp_f1(pred_pairs, gt_pairs):
    tp = len(pred_pairs & gt_pairs)
    return f1(tp, len(pred_pairs) - tp, len(gt_pairs) - tp)
