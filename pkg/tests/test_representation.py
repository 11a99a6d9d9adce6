from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from filtration_lab import (
    AdaptedProcess,
    FiniteProbSpace,
    Filtration,
    Partition,
    PredictableProcess,
    direct_sum_check,
    doob_decomposition,
    integral_norm,
    prp_check,
    quadratic_covariation,
    represent,
    stable_space,
    strongly_orthogonal,
    vector_integral,
)
from filtration_lab.errors import DimMismatch, NotMartingale, NotStronglyOrthogonal
from filtration_lab.representation import spanning_indicators
from helpers import adapted, filtered_spaces, one_step, predictable, shipped


def coin():
    sp, f = one_step(["u", "d"], ["1/2", "1/2"])
    return sp, f, AdaptedProcess(f, [[0, 0], [1, -1]], name="M")


def s2():
    scn = shipped("product_coins.json").enlargement
    m, n = scn.drivers
    m.name, n.name = "M", "N"
    return scn.space, scn.joint, m, n


def test_vector_integral_of_coin():
    sp, f, m = coin()
    xi = PredictableProcess(f, [[0, 0], [3, 3]])
    assert list(vector_integral(xi, m).terminal) == [3, -3]
    assert integral_norm(xi, m, sp.measure) == 9
    zero = PredictableProcess.zeros(f)
    assert list(vector_integral(zero, m).terminal) == [0, 0]
    assert integral_norm(zero, m, sp.measure) == 0
    one = PredictableProcess(f, [[0, 0], [1, 1]])
    assert (vector_integral(one, m).values == (m - m).values + m.centered().values).all()


def test_vector_integral_dimension_mismatch():
    sp, f, m = coin()
    with pytest.raises(DimMismatch):
        vector_integral(PredictableProcess(f, np.zeros((2, 2, 2), dtype=int)), m)


def test_stable_space_dimensions_on_product_coins():
    sp, g, m, n = s2()
    assert stable_space([m], sp.measure, g).dim == 5
    mn = quadratic_covariation(m, n)
    assert stable_space([m, n, mn], sp.measure, g).dim == 15
    assert stable_space([mn, n, m], sp.measure, g).dim == 15


def test_stable_space_requires_martingales():
    sp, f = one_step(["u", "d"], ["3/5", "2/5"])
    with pytest.raises(NotMartingale):
        stable_space([AdaptedProcess(f, [[0, 0], [1, -1]])], sp.measure, f)


def test_prp_on_coin_and_product_coins():
    sp, f, m = coin()
    res = prp_check([m], sp.measure, f)
    assert res and (res.dim, res.target) == (1, 1)
    sp, g, m, n = s2()
    assert prp_check([m], sp.measure, g).dim == 5 and not prp_check([m], sp.measure, g)
    assert prp_check([m, n, quadratic_covariation(m, n)], sp.measure, g)


def test_direct_sum_of_product_coins():
    sp, g, m, n = s2()
    rep = direct_sum_check([[m], [n]], sp.measure, g)
    assert rep.ok and rep.dims == [5, 5] and rep.joint_dim == 10 and rep.max_cross == 0
    assert direct_sum_check([[m]], sp.measure, g).ok


def test_direct_sum_rejects_correlated_coins():
    scn = shipped("correlated_coins.json").enlargement
    with pytest.raises(NotStronglyOrthogonal) as exc:
        direct_sum_check([[scn.drivers[0]], [scn.drivers[1]]], scn.space.measure, scn.joint)
    assert exc.value.witness["value"] == F(1, 5)


def test_represent_constant_and_driver():
    sp, f, m = coin()
    r = represent(np.array([F(5), F(5)], dtype=object), [[m]], sp.measure, f)
    assert r.constant == 5 and r.residual_sq == 0
    assert all(v == 0 for v in r.integrands[0].values.reshape(-1))
    r = represent(m.terminal, [[m]], sp.measure, f)
    assert r.residual_sq == 0 and list(r.integrands[0].values[1, :, 0]) == [1, 1]


def test_represent_indicators_on_product_coins():
    sp, g, m, n = s2()
    fam = [[m], [n], [quadratic_covariation(m, n)]]
    for h in spanning_indicators(g):
        r = represent(h, fam, sp.measure, g)
        assert r.residual_sq == 0
        total = r.constant + sum(p for p in r.parts)
        assert (total == h).all()


def test_minimum_norm_integrand_vanishes_on_degenerate_blocks():
    # generator moves only on the left branch at t=2
    sp = FiniteProbSpace.uniform(["uu", "ud", "du", "dd"])
    f = Filtration(sp, [Partition.trivial(sp), Partition(sp, [o[0] for o in sp.outcomes]), Partition.discrete(sp)])
    m = AdaptedProcess(f, [[0] * 4, [0] * 4, [1, -1, 0, 0]], name="m")
    r = represent(m.terminal * 2, [[m]], sp.measure, f)
    assert r.residual_sq == 0
    assert list(r.integrands[0].values[2, :, 0]) == [2, 2, 0, 0]


@settings(max_examples=40, deadline=None)
@given(filtered_spaces(max_T=3), st.data())
def test_isometry_and_projection(space_f, data):
    sp, f = space_f
    x = data.draw(adapted(f))
    m = doob_decomposition(x, sp.measure, f).martingale_part
    xi = data.draw(predictable(f))
    integral = vector_integral(xi, m)
    assert integral_norm(xi, m, sp.measure, f) == sp.measure.expect(integral.terminal ** 2)
    h = np.array([F(v) for v in data.draw(st.lists(st.integers(-5, 5), min_size=sp.n, max_size=sp.n))], dtype=object)
    r = represent(h, [[m]], sp.measure, f)
    space = stable_space([m], sp.measure, f)
    centred = h - sp.measure.expect(h)
    proj = space.projection(centred)
    assert r.residual_sq == sp.measure.expect(centred * centred) - sp.measure.expect(proj * proj)
    # reordering generators never changes the span
    y = doob_decomposition(data.draw(adapted(f, name="y")), sp.measure, f).martingale_part
    assert stable_space([m, y], sp.measure, f).dim == stable_space([y, m], sp.measure, f).dim


@settings(max_examples=30, deadline=None)
@given(filtered_spaces(max_T=2), st.data())
def test_prp_implies_zero_residuals(space_f, data):
    sp, f = space_f
    x = data.draw(adapted(f, dim=2))
    m = doob_decomposition(x, sp.measure, f).martingale_part
    if prp_check(m, sp.measure, f):
        for h in spanning_indicators(f):
            assert represent(h, [m], sp.measure, f).residual_sq == 0


@settings(max_examples=30, deadline=None)
@given(st.data())
def test_integral_orthogonal_to_strongly_orthogonal_martingales(data):
    sp, g, m, n = s2()
    xi = data.draw(predictable(g))
    integral = vector_integral(xi, m)
    assert strongly_orthogonal(m, n, sp.measure, g)
    eta = data.draw(predictable(g))
    other = vector_integral(eta, n)
    assert sp.measure.expect(integral.terminal * other.terminal) == 0
    total = integral + other
    lhs = sp.measure.expect(total.terminal ** 2)
    assert lhs == integral_norm(xi, m, sp.measure, g) + integral_norm(eta, n, sp.measure, g)
