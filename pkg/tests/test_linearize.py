from collections import namedtuple
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from p2hgrid.linearize import (
    evaluate_piecewise,
    evaluate_quadratic,
    fill_segments,
    linearize,
    max_overestimate,
)

Gen = namedtuple("Gen", "id a b c pmin pmax")
SEGMENT_COUNTS = (1, 2, 10, 50)


def random_generators(n, seed=7):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        pmin = float(rng.choice([0.0, rng.uniform(0, 300)]))
        out.append(Gen(f"r{i}", float(rng.uniform(0, 0.05)), float(rng.uniform(5, 120)),
                       float(rng.uniform(0, 2000)), pmin, pmin + float(rng.uniform(1, 700))))
    return out


def exact_cost(g, p):
    # rational arithmetic as an independent reference for the quadratic
    a, b, c, p = (Fraction(v) for v in (g.a, g.b, g.c, p))
    return float(a * p * p + b * p + c)


@pytest.mark.parametrize("k", SEGMENT_COUNTS)
def test_breakpoints_interiors_and_slopes(k):
    for g in random_generators(100):
        pw = linearize(g, k)
        bps = pw.breakpoints
        assert len(bps) == k + 1
        assert bps[0] == g.pmin and bps[-1] == g.pmax
        for p in bps:
            ref = exact_cost(g, p)
            assert abs(evaluate_piecewise(pw, p) - ref) <= 1e-9 * abs(ref)
        for lo, hi in zip(bps[:-1], bps[1:]):
            for frac in (0.1, 0.5, 0.9):
                p = lo + frac * (hi - lo)
                assert evaluate_piecewise(pw, p) >= exact_cost(g, p) - 1e-9 * exact_cost(g, p)
        assert all(s2 >= s1 for s1, s2 in zip(pw.slopes, pw.slopes[1:]))


def test_overestimate_bound_attained_at_midpoints():
    for g in random_generators(20, seed=1):
        for k in SEGMENT_COUNTS:
            pw = linearize(g, k)
            mid = 0.5 * (pw.breakpoints[0] + pw.breakpoints[1])
            gap = evaluate_piecewise(pw, mid) - exact_cost(g, mid)
            assert gap == pytest.approx(max_overestimate(g, k), rel=1e-6, abs=1e-6)


def test_linear_cost_is_exact_everywhere():
    g = Gen("lin", 0.0, 30.0, 100.0, 10.0, 90.0)
    pw = linearize(g, 5)
    for p in np.linspace(10, 90, 33):
        assert evaluate_piecewise(pw, p) == pytest.approx(exact_cost(g, p), rel=1e-12)


def test_fixed_output_unit_has_no_segments():
    g = Gen("must_run", 0.01, 20.0, 50.0, 40.0, 40.0)
    pw = linearize(g, 10)
    assert pw.segments == ()
    assert evaluate_piecewise(pw, 40.0) == pytest.approx(exact_cost(g, 40.0))


@pytest.mark.parametrize("k", [0, -1, 2.5])
def test_bad_segment_count(k):
    with pytest.raises(ValueError):
        linearize(Gen("g", 0.01, 1, 0, 0, 10), k)


def test_rejects_nonconvex_and_out_of_range():
    with pytest.raises(ValueError, match="non-convex"):
        linearize(Gen("g", -0.01, 1, 0, 0, 10))
    g = Gen("g", 0.01, 1, 0, 5, 10)
    with pytest.raises(ValueError):
        evaluate_quadratic(g, 11)
    with pytest.raises(ValueError):
        evaluate_piecewise(linearize(g, 2), 4)


@settings(max_examples=200, deadline=None)
@given(a=st.floats(0, 0.1), b=st.floats(0, 100), pmin=st.floats(0, 500), span=st.floats(0.5, 1000),
       k=st.integers(1, 60), frac=st.floats(0, 1))
def test_fill_is_greedy_and_sums_to_output(a, b, pmin, span, k, frac):
    g = Gen("h", a, b, 10.0, pmin, pmin + span)
    pw = linearize(g, k)
    p = pmin + frac * span
    fills = fill_segments(pw, p)
    assert sum(fills) == pytest.approx(p - pmin, abs=1e-9 * (1 + p))
    # once a segment is partly used, every later segment is empty
    partial = [i for i, (f, s) in enumerate(zip(fills, pw.segments)) if f < s.width_mw - 1e-12]
    if partial:
        assert all(f == 0 for f in fills[partial[0] + 1:])
    assert evaluate_piecewise(pw, p) >= exact_cost(g, p) - 1e-9 * (1 + exact_cost(g, p))
