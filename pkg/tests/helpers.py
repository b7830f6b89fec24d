"""Shared generators for randomized tests."""

import math

import numpy as np

from pwlearn import evaluate, from_points


def random_function(rng, max_knots=20, min_gap=0.0):
    """Random knot set; optionally reject coordinate gaps below min_gap."""
    while True:
        k = int(rng.integers(2, max_knots + 1))
        us = np.sort(rng.random(k))
        if np.unique(us).size != k:
            continue
        if min_gap and (
            np.diff(us).min() < min_gap or us[0] < min_gap or 1 - us[-1] < min_gap
        ):
            continue
        vs = rng.normal(0.0, 1.0, size=k)
        return from_points(zip(us, vs))


def random_midpoint_insertion(rng):
    """Dyadic knot set plus a midpoint insertion (S, x, y).

    Midpoints of dyadic knots are exact doubles, so the equidistance
    hypothesis holds exactly. The inserted value is kept at least 0.25 away
    from the function, and levels stay at most 6, so the energy difference
    (which cancels two O(energy) quantities) retains enough digits to be
    compared at 1e-10 relative.
    """
    while True:
        level = int(rng.integers(2, 7))
        n = 1 << level
        take = rng.random(n + 1) < 0.5
        us = [k / n for k in range(n + 1) if take[k]]
        if len(us) < 2:
            continue
        vs = rng.normal(0.0, 0.5, size=len(us))
        S = list(zip(us, (float(v) for v in vs)))
        j = int(rng.integers(0, len(us) - 1))
        x = (us[j] + us[j + 1]) / 2.0
        base = evaluate(from_points(S), x)
        magnitude = 0.25 + abs(float(rng.normal(0.0, 1.0)))
        sign = 1.0 if rng.random() < 0.5 else -1.0
        return S, x, base + math.copysign(magnitude, sign)
