import math

import numpy as np
import pytest

import oracles
from nablafrac.errors import NablaFracError, NodesOutOfOrder, NoPredecessor
from nablafrac.fracops import (
    caputo_nabla,
    caputo_values,
    caputo_via_rl,
    frac_integral,
    frac_integral_values,
    rl_nabla,
    rl_values,
)
from nablafrac.nabla import GridFunction
from nablafrac.timescale import Interval, Point, TimeScale, build_grid

Z8 = build_grid(TimeScale.integers(0, 8), 1.0)


def z_function(seed):
    vals = np.random.default_rng(seed).integers(-5, 6, size=9).astype(float)
    return GridFunction(Z8, vals), lambda s: float(vals[s])


def test_integral_of_one_on_integers():
    f = GridFunction(Z8, np.ones(9))
    assert frac_integral(f, 0.5, 0, 3) == pytest.approx(1.288866871884469, abs=1e-14)


@pytest.mark.parametrize("w", [0.25, 0.5, 0.75])
@pytest.mark.parametrize("seed", range(3))
def test_point_and_vector_forms_agree(w, seed):
    f, _ = z_function(seed)
    J = frac_integral_values(f, w, 0).values
    C = caputo_values(f, w, 0).values
    R = rl_values(f, w, 0).values
    for t in range(1, 9):
        assert J[t] == pytest.approx(frac_integral(f, w, 0, t), abs=1e-13)
        assert C[t] == pytest.approx(caputo_nabla(f, w, 0, t), abs=1e-13)
        assert R[t] == pytest.approx(rl_nabla(f, w, 0, t), abs=1e-13)


@pytest.mark.parametrize("w,u", [(0.25, 0.5), (0.5, 0.25), (0.3, 0.3)])
def test_composition_matches_double_sum(w, u):
    f, fs = z_function(7)
    inner = frac_integral_values(f, u, 0)
    for t in range(1, 9):
        got = frac_integral(inner, w, 0, t)
        assert got == pytest.approx(oracles.z_composed_integral(fs, w, u, 0, t), abs=1e-12)


def test_caputo_annihilates_constants_on_mixed_scale():
    ts = TimeScale([Interval(0, 1), Point(1.3), Interval(2, 2.5), Point(4)])
    g = build_grid(ts, 0.01)
    f = GridFunction(g, np.full(len(g), 3.7))
    assert np.max(np.abs(caputo_values(f, 0.4, 0.0).values)) == 0.0
    assert rl_nabla(f, 0.4, 0.0, 4.0) != 0.0


@pytest.mark.parametrize("w", [0.3, 0.5, 0.8])
@pytest.mark.parametrize("beta", [1.0, 2.0])
def test_integral_of_powers_converges_at_order_one_plus_w(w, beta):
    errs = []
    for mesh in (1e-2, 5e-3):
        g = build_grid(TimeScale.interval(0, 1), mesh)
        f = GridFunction.sample(g, lambda t: t**beta)
        errs.append(abs(frac_integral(f, w, 0, 1) - oracles.power_integral(1, 0, w, beta)))
    assert errs[1] < 1e-3
    assert errs[0] / errs[1] > 0.8 * 2 ** (1 + w)


@pytest.mark.parametrize("w", [0.3, 0.5, 0.8])
def test_integral_of_constant_is_exact(w):
    g = build_grid(TimeScale.interval(0, 1), 1e-2)
    f = GridFunction(g, np.ones(len(g)))
    assert frac_integral(f, w, 0, 1) == pytest.approx(oracles.power_integral(1, 0, w), abs=1e-14)


def test_caputo_of_linear_is_exact():
    g = build_grid(TimeScale.interval(0, 1), 1e-3)
    f = GridFunction.sample(g, lambda t: math.gamma(1.5) * t)
    c = caputo_values(f, 0.5, 0.0).values
    assert np.max(np.abs(c - np.sqrt(g.nodes))) < 1e-12


def test_caputo_via_rl_agrees_away_from_base_point():
    g = build_grid(TimeScale.interval(0, 1), 1e-3)
    f = GridFunction.sample(g, lambda t: np.sin(2 * t) + t**2)
    for theta in (0.25, 0.5, 1.0):
        a = caputo_nabla(f, 0.5, 0.0, theta)
        b = caputo_via_rl(f, 0.5, 0.0, theta)
        assert abs(a - b) < 5e-3


def test_caputo_via_rl_boundary_layer_shrinks():
    # the two discretisations differ by O(mesh^(1-w)) at the first node
    gaps = []
    for mesh in (4e-3, 1e-3):
        g = build_grid(TimeScale.interval(0, 1), mesh)
        f = GridFunction.sample(g, lambda t: t)
        t1 = g.nodes[1]
        gaps.append(abs(caputo_nabla(f, 0.5, 0.0, t1) - caputo_via_rl(f, 0.5, 0.0, t1)))
    assert gaps[1] == pytest.approx(gaps[0] / 2, rel=1e-9)


def test_semigroup_holds_in_the_continuous_limit():
    errs = []
    for mesh in (1e-2, 2.5e-3):
        g = build_grid(TimeScale.interval(0, 1), mesh)
        f = GridFunction.sample(g, np.cos)
        lhs = frac_integral(frac_integral_values(f, 0.4, 0.0), 0.3, 0.0, 1.0)
        rhs = frac_integral(f, 0.7, 0.0, 1.0)
        errs.append(abs(lhs - rhs))
    assert errs[1] < errs[0] / 2 and errs[1] < 1e-4


def test_rl_inverts_integral_in_the_continuous_limit():
    errs = []
    for mesh in (1e-2, 2.5e-3):
        g = build_grid(TimeScale.interval(0, 1), mesh)
        f = GridFunction.sample(g, lambda t: 1 + t)
        back = rl_values(frac_integral_values(f, 0.5, 0.0), 0.5, 0.0).values
        i = g.index(0.5)
        errs.append(float(np.max(np.abs(back[i:] - f.values[i:]))))
    assert errs[1] < errs[0] and errs[1] < 1e-2


def test_errors():
    f, _ = z_function(0)
    with pytest.raises(NablaFracError):
        frac_integral(f, 1.0, 0, 3)
    with pytest.raises(NablaFracError):
        caputo_nabla(f, 0.0, 0, 3)
    with pytest.raises(NodesOutOfOrder):
        frac_integral(f, 0.5, 4, 3)
    with pytest.raises(NoPredecessor):
        rl_nabla(f, 0.5, 3, 3)
    assert frac_integral(f, 0.5, 3, 3) == 0.0
