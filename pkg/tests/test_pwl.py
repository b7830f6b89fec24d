import json
import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from pwlearn import (
    DomainError,
    DuplicateConflict,
    PreconditionError,
    derivative_norm,
    energy,
    energy_increment,
    evaluate,
    from_points,
    function_from_json,
    function_to_json,
    integrate_energy_oracle,
    is_member,
)

from helpers import random_function, random_midpoint_insertion

ZERO = from_points([])
TENT = from_points([(0.0, 0.0), (0.5, 0.5), (1.0, 0.0)])
RAMP = from_points([(0.0, 0.0), (1.0, 1.0)])


class TestFromPoints:
    def test_empty_is_zero_function(self):
        f = from_points([])
        assert f.knots == []
        for x in (0.0, 0.3, 1.0):
            assert evaluate(f, x) == 0.0

    def test_sorts_unordered_input(self):
        f = from_points([(0.75, 3.0), (0.25, 1.0)])
        assert f.knots == [(0.25, 1.0), (0.75, 3.0)]

    def test_conflicting_duplicate_raises(self):
        with pytest.raises(DuplicateConflict):
            from_points([(0.5, 1.0), (0.5, 2.0)])

    def test_equal_duplicates_collapse(self):
        f = from_points([(0.5, 1.0), (0.5, 1.0), (0.2, 0.0)])
        assert f.knots == [(0.2, 0.0), (0.5, 1.0)]

    def test_coordinate_outside_unit_interval(self):
        with pytest.raises(DomainError):
            from_points([(1.5, 0.0)])
        with pytest.raises(DomainError):
            from_points([(-0.1, 0.0)])
        with pytest.raises(DomainError):
            from_points([(math.nan, 0.0)])


class TestEvaluate:
    def test_clamps_and_interpolates(self):
        f = from_points([(0.25, 1.0), (0.75, 3.0)])
        assert evaluate(f, 0.1) == 1.0
        assert evaluate(f, 0.5) == 2.0
        assert evaluate(f, 0.9) == 3.0

    def test_point_outside_domain(self):
        with pytest.raises(DomainError):
            evaluate(TENT, 1.5)
        with pytest.raises(DomainError):
            evaluate(TENT, -0.01)

    def test_exact_at_knots(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            f = random_function(rng)
            for u, v in f.knots:
                assert evaluate(f, u) == v

    def test_callable_alias(self):
        assert TENT(0.25) == evaluate(TENT, 0.25)

    def test_single_knot_is_constant(self):
        f = from_points([(0.5, 0.3)])
        assert evaluate(f, 0.0) == 0.3
        assert evaluate(f, 0.5) == 0.3
        assert evaluate(f, 1.0) == 0.3

    def test_continuity(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            f = random_function(rng)
            max_slope = derivative_norm(f, math.inf)
            for _ in range(20):
                x = float(rng.random())
                h = float(10.0 ** -rng.integers(3, 9))
                for x2 in (min(x + h, 1.0), max(x - h, 0.0)):
                    gap = abs(evaluate(f, x) - evaluate(f, x2))
                    assert gap <= max_slope * abs(x2 - x) + 1e-12


class TestEnergy:
    def test_zero_function(self):
        assert energy(ZERO) == 0.0
        assert energy(from_points([(0.3, 5.0)])) == 0.0

    def test_tent(self):
        assert energy(TENT) == 1.0

    def test_scaled_tent_matches_closed_form_and_oracle(self):
        # Tent of height c has two slopes +-2c over total length 1: energy 4c^2.
        for c in (0.1, 0.5, 1.0, 2.5):
            f = from_points([(0.0, 0.0), (0.5, c), (1.0, 0.0)])
            assert energy(f) == pytest.approx(4 * c * c, rel=1e-15)
            oracle = integrate_energy_oracle(f, 10_000)
            assert oracle == pytest.approx(4 * c * c, rel=1e-9)

    def test_matches_oracle_on_random_functions(self):
        # Oracle cell-straddling error scales like cell_width/knot_gap, so a
        # 1/32 minimum gap keeps n=1e6 well inside the 1e-4 tolerance.
        rng = np.random.default_rng(3)
        for _ in range(12):
            f = random_function(rng, max_knots=12, min_gap=1 / 32)
            exact = energy(f)
            approx = integrate_energy_oracle(f, 10**6)
            assert approx == pytest.approx(exact, rel=1e-4)


class TestEnergyOracle:
    def test_zero_function(self):
        assert integrate_energy_oracle(ZERO, 100) == 0.0

    def test_constant_slope_exact_even_for_coarse_grids(self):
        assert integrate_energy_oracle(RAMP, 10) == 1.0

    def test_tent_converges(self):
        assert integrate_energy_oracle(TENT, 10**6) == pytest.approx(1.0, abs=1e-3)

    def test_rejects_bad_subdivision(self):
        with pytest.raises(DomainError):
            integrate_energy_oracle(TENT, 0)


class TestDerivativeNorm:
    def test_unit_ramp(self):
        assert derivative_norm(RAMP, 2.0) == 1.0

    def test_tent_sup_norm(self):
        assert derivative_norm(TENT, math.inf) == 1.0

    def test_derived_two_norm(self):
        # Slope 2 over length 1/4, then flat: (2^2 * 0.25)^(1/2) = 1.
        f = from_points([(0.0, 0.0), (0.25, 0.5), (1.0, 0.5)])
        assert derivative_norm(f, 2.0) == 1.0
        # Independent check: Riemann sum of the squared difference quotients.
        xs = np.linspace(0.0, 1.0, 10**5 + 1)
        ys = np.interp(xs, f.us, f.vs)
        riemann = float(np.sum(np.diff(ys) ** 2 / np.diff(xs)))
        assert riemann ** 0.5 == pytest.approx(1.0, rel=1e-3)

    def test_rejects_small_q(self):
        with pytest.raises(DomainError):
            derivative_norm(TENT, 0.5)

    def test_few_knots_have_zero_norm(self):
        assert derivative_norm(ZERO, 2.0) == 0.0
        assert derivative_norm(from_points([(0.5, 3.0)]), math.inf) == 0.0

    def test_monotone_in_q(self):
        rng = np.random.default_rng(19)
        orders = (1.0, 1.5, 2.0, 3.0, 7.0, math.inf)
        for _ in range(40):
            f = random_function(rng)
            norms = [derivative_norm(f, q) for q in orders]
            for lo, hi in zip(norms, norms[1:]):
                assert lo <= hi * (1 + 1e-12) + 1e-12


class TestIsMember:
    def test_zero_function(self):
        assert is_member(ZERO, 2.0)

    def test_exactly_on_the_boundary(self):
        assert is_member(TENT, math.inf, 0.0)

    def test_slightly_too_steep(self):
        f = from_points([(0.0, 0.0), (0.5, 0.6), (1.0, 0.0)])
        assert not is_member(f, math.inf, 0.0)
        assert is_member(f, math.inf, 0.25)


class TestEnergyIncrement:
    def test_midpoint_of_flat_segment(self):
        for c in (0.0, 0.25, 1.0, -3.0):
            got = energy_increment([(0.0, 0.0), (1.0, 0.0)], 0.5, c)
            assert got == pytest.approx(4 * c * c, rel=1e-15)

    def test_point_already_on_the_function(self):
        got = energy_increment([(0.0, 0.0), (0.5, 0.5), (1.0, 0.0)], 0.25, 0.25)
        assert got == 0.0

    def test_requires_equidistant_neighbors(self):
        S = [(0.0, 0.0), (1.0, 0.0)]
        with pytest.raises(PreconditionError):
            energy_increment(S, 0.3, 1.0)
        # within tolerance is fine
        energy_increment(S, 0.5 + 1e-13, 1.0)

    def test_rejects_outside_span_or_on_knot(self):
        S = [(0.25, 0.0), (0.75, 0.0)]
        with pytest.raises(PreconditionError):
            energy_increment(S, 0.1, 1.0)
        with pytest.raises(PreconditionError):
            energy_increment(S, 0.9, 1.0)
        with pytest.raises(PreconditionError):
            energy_increment(S, 0.25, 1.0)
        with pytest.raises(PreconditionError):
            energy_increment([], 0.5, 1.0)

    def test_matches_direct_energy_difference(self):
        rng = np.random.default_rng(23)
        for _ in range(300):
            S, x, y = random_midpoint_insertion(rng)
            inc = energy_increment(S, x, y)
            direct = energy(from_points(S + [(x, y)])) - energy(from_points(S))
            assert inc == pytest.approx(direct, rel=1e-10)


class TestJsonFormat:
    def test_round_trip(self):
        text = function_to_json(TENT)
        doc = json.loads(text)
        assert doc == {"knots": [[0.0, 0.0], [0.5, 0.5], [1.0, 0.0]]}
        again = function_from_json(text)
        assert again == TENT

    def test_reader_applies_construction_rules(self):
        f = function_from_json('{"knots": [[0.75, 3], [0.25, 1]]}')
        assert f.knots == [(0.25, 1.0), (0.75, 3.0)]
        with pytest.raises(DuplicateConflict):
            function_from_json('{"knots": [[0.5, 1], [0.5, 2]]}')

    @pytest.mark.parametrize(
        "text",
        [
            "not json",
            "[]",
            '{"knots": 3}',
            '{"knots": [[0.5]]}',
            '{"knots": [[0.5, "a"]]}',
            '{"knots": [[true, 1.0]]}',
            '{"other": []}',
        ],
    )
    def test_malformed_documents(self, text):
        with pytest.raises(DomainError):
            function_from_json(text)


coords = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
values = st.floats(min_value=-100.0, max_value=100.0, allow_nan=False)


@given(st.dictionaries(coords, values, max_size=16), coords)
def test_evaluate_stays_between_extreme_values(points, x):
    f = from_points(points.items())
    y = evaluate(f, x)
    if points:
        assert min(points.values()) <= y <= max(points.values())
    else:
        assert y == 0.0


@given(st.dictionaries(coords, values, min_size=1, max_size=16))
def test_energy_nonnegative_and_norm_consistent(points):
    us = sorted(points)
    assume(all(b - a >= 1e-6 for a, b in zip(us, us[1:])))
    f = from_points(points.items())
    j = energy(f)
    assert j >= 0.0
    two_norm = derivative_norm(f, 2.0)
    assert j == pytest.approx(two_norm * two_norm, rel=1e-9, abs=1e-12)
