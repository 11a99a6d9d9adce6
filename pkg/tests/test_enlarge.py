import itertools
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from filtration_lab import (
    AdaptedProcess,
    EnlargementScenario,
    FiniteProbSpace,
    Filtration,
    Partition,
    bracket_family,
    bracket_vector,
    iterated_bracket,
    join,
    multiplicity,
    quadratic_covariation,
    theorem34_verify,
    theorem42_verify,
)
from filtration_lab.errors import BadIndexSet, CapExceeded, HypothesisFailed, NotMartingale
from filtration_lab.scenario import generate, parse_scenario
from helpers import coin_product, shipped


def test_theorem34_on_product_coins():
    rep = theorem34_verify(shipped("product_coins.json").enlargement)
    assert rep.ok
    assert rep["i1"].verdict
    i3 = rep["i3"].evidence
    assert i3["dims"] == [5, 5, 5] and i3["joint_dim"] == 15 and i3["max_residual"] == 0
    i4 = rep["i4"].evidence
    assert i4["q_equals_p"] and i4["dims"] == [5, 5, 5]
    assert [c.claim for c in rep.claims] == ["A1", "A2", "A3", "i1", "i2", "i3", "i4"]


def test_theorem34_drifted_margin_reweights_to_uniform():
    scn = shipped("product_coins_drifted.json").enlargement
    rep = theorem34_verify(scn)
    assert rep.ok
    i4 = rep["i4"].evidence
    assert not i4["q_equals_p"]
    assert i4["restriction_f_gap"] == 0 and i4["restriction_h_gap"] == 0
    assert i4["dims"] == [5, 5, 5]


def test_theorem34_correlated_coins_fails_a3():
    with pytest.raises(HypothesisFailed) as exc:
        theorem34_verify(shipped("correlated_coins.json").enlargement)
    err = exc.value
    assert err.hypothesis == "A3"
    assert err.witness["value"] == F(1, 5)
    assert not err.report.ok and not err.report["A3"].verdict


def test_theorem34_rejects_incomplete_margin():
    # a trinomial margin driven by one scalar has no representation property
    labels = [a + b for a in "xyz" for b in "ud"]
    sp = FiniteProbSpace.uniform(labels)
    f = Filtration(sp, [Partition.trivial(sp), Partition(sp, [o[0] for o in labels])])
    h = Filtration(sp, [Partition.trivial(sp), Partition(sp, [o[1] for o in labels])])
    x = AdaptedProcess(f, [[0] * 6, [{"x": 1, "y": 0, "z": -1}[o[0]] for o in labels]])
    y = AdaptedProcess(h, [[0] * 6, [1 if o[1] == "u" else -1 for o in labels]])
    with pytest.raises(HypothesisFailed) as exc:
        theorem34_verify(EnlargementScenario(sp, [f, h], [x, y]))
    assert exc.value.hypothesis == "A1"


def test_bracket_vector_ordering_is_row_major():
    sp, fs, xs = coin_product(4)
    g = join(*fs)
    m = AdaptedProcess.stack([xs[0], xs[1]], name="M")
    n = AdaptedProcess.stack([xs[2], xs[3]], name="N")
    fam = bracket_vector(m, n, sp.measure, g)
    assert fam.keys == [(0, 0), (0, 1), (1, 0), (1, 1)]
    for (i, j), b in zip(fam.keys, fam.processes):
        assert (b.values == quadratic_covariation(xs[i], xs[2 + j]).values).all()


def test_bracket_vector_with_constant_is_zero():
    sp, fs, xs = coin_product(2)
    g = join(*fs)
    fam = bracket_vector(xs[0], AdaptedProcess.constant(g, 3), sp.measure, g)
    assert all(v == 0 for v in fam.processes[0].values.reshape(-1))


def test_bracket_vector_requires_martingales():
    sp, fs, xs = coin_product(2, p=F(3, 5))
    with pytest.raises(NotMartingale):
        bracket_vector(xs[0], xs[1], sp.measure, join(*fs))


def test_iterated_bracket_products():
    sp, fs, xs = coin_product(3)
    b = iterated_bracket(xs, [0, 1, 2])
    prod = xs[0].scalar_increments() * xs[1].scalar_increments() * xs[2].scalar_increments()
    assert (b.scalar_increments() == prod).all()
    assert (iterated_bracket(xs, [0, 1]).values == quadratic_covariation(xs[0], xs[1]).values).all()
    flat = [xs[0], AdaptedProcess.constant(xs[1].filtration, 2), xs[2]]
    assert all(v == 0 for v in iterated_bracket(flat, [0, 1, 2]).values.reshape(-1))


@pytest.mark.parametrize("idx", [[0], [1, 0], [0, 0], [0, 5], []])
def test_iterated_bracket_bad_index_sets(idx):
    sp, fs, xs = coin_product(3)
    with pytest.raises(BadIndexSet):
        iterated_bracket(xs, idx)


def test_bracket_family_order():
    sp, fs, xs = coin_product(3)
    fam = bracket_family(xs)
    assert fam.keys == [(0,), (1,), (2,), (0, 1), (0, 2), (1, 2), (0, 1, 2)]


def test_theorem42_three_coins_gram_identity():
    sp, fs, xs = coin_product(3)
    rep = theorem42_verify(EnlargementScenario(sp, fs, xs))
    assert rep.ok
    j3 = rep["j3"].evidence
    assert j3["basis_size"] == 7 and j3["dims"] == [1] * 7 and j3["total_dim"] == 7
    assert j3["max_orthogonality_violation"] == 0
    fam = bracket_family(xs)
    terminal = np.stack([p.terminal for p in fam.processes])
    gram = (terminal * sp.weights[None, :]) @ terminal.T
    assert (gram == np.eye(7, dtype=int)).all()


def test_theorem42_two_filtrations_matches_theorem34():
    scn = shipped("product_coins.json").enlargement
    r42 = theorem42_verify(scn)
    r34 = theorem34_verify(scn)
    assert r42["j3"].evidence["total_dim"] == r34["i3"].evidence["joint_dim"] == 15


def test_theorem42_correlated_coins_fail_c2():
    scn = shipped("correlated_coins.json").enlargement
    with pytest.raises(HypothesisFailed) as exc:
        theorem42_verify(scn)
    assert exc.value.hypothesis == "C2"
    assert exc.value.witness["value"] == F(1, 5)
    assert exc.value.report["C1"].verdict


def test_theorem42_caps_d():
    sp, fs, xs = coin_product(3)
    with pytest.raises(CapExceeded):
        theorem42_verify(EnlargementScenario(sp, fs, xs), d_cap=2)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_multiplicity_of_coin_joins(d):
    sp, fs, xs = coin_product(d)
    res = multiplicity(join(*fs), sp.measure)
    assert res.value == 2 ** d - 1 and res.ok
    assert res.direct_sum.dims == [1] * (2 ** d - 1)


def test_multiplicity_binary_tree_and_product_coins():
    sp, fs, xs = coin_product(1)
    assert multiplicity(fs[0], sp.measure).value == 1
    scn = shipped("product_coins.json").enlargement
    res = multiplicity(scn.joint, scn.space.measure)
    assert res.value == 3 and res.ok and sum(res.direct_sum.dims) == 15


@settings(max_examples=15, deadline=None)
@given(st.lists(st.integers(2, 3), min_size=1, max_size=3), st.data())
def test_multiplicity_of_mixed_branching_products(branchings, data):
    symbols = "abc"
    labels = ["".join(c) for c in itertools.product(*[symbols[:k] for k in branchings])]
    raw = data.draw(st.lists(st.integers(1, 5), min_size=len(labels), max_size=len(labels)))
    sp = FiniteProbSpace(labels, [F(r, sum(raw)) for r in raw])
    fs = [Filtration(sp, [Partition.trivial(sp), Partition(sp, [o[i] for o in labels])]) for i in range(len(branchings))]
    res = multiplicity(join(*fs) if len(fs) > 1 else fs[0], sp.measure)
    assert res.value == int(np.prod(branchings)) - 1
    assert res.ok


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["0", "1/2"]))
def test_theorem34_holds_on_generated_scenarios(seed, drift):
    scn = parse_scenario(generate(seed, d=2, steps=1, drift_scale=drift))
    rep = theorem34_verify(scn.enlargement)
    assert rep.ok, rep


def test_staggered_drivers_need_no_bracket():
    # F moves at t=1, H at t=2: ΔM ΔN vanishes pathwise
    labels = [a + b for a in "ud" for b in "ud"]
    sp = FiniteProbSpace.uniform(labels)
    a = Partition(sp, [o[0] for o in labels])
    f = Filtration(sp, [Partition.trivial(sp), a, a])
    h = Filtration(sp, [Partition.trivial(sp), Partition.trivial(sp), Partition(sp, [o[1] for o in labels])])
    x = AdaptedProcess(f, [[0] * 4, [1 if o[0] == "u" else -1 for o in labels]] * 1 + [[1 if o[0] == "u" else -1 for o in labels]])
    y = AdaptedProcess(h, [[0] * 4, [0] * 4, [1 if o[1] == "u" else -1 for o in labels]])
    rep = theorem34_verify(EnlargementScenario(sp, [f, h], [x, y]))
    assert rep.ok
    assert rep["i3"].evidence["dims"] == [1, 2, 0]
