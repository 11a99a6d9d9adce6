from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from filtration_lab import (
    FiniteProbSpace,
    Filtration,
    Measure,
    Partition,
    conditional_expectation,
    density_process,
    doob_decomposition,
    independent,
    join,
    radon_nikodym,
)
from filtration_lab.errors import HorizonMismatch, InvalidFiltration, InvalidMeasure, InvalidPartition, MismatchedSpace
from helpers import filtered_spaces, one_step


def test_weights_must_be_positive_and_normalised():
    with pytest.raises(InvalidMeasure):
        FiniteProbSpace(["a", "b"], ["1/2", "1/3"])
    with pytest.raises(InvalidMeasure):
        FiniteProbSpace(["a", "b"], ["1", "0"])
    with pytest.raises(InvalidMeasure):
        FiniteProbSpace(["a", "a"], ["1/2", "1/2"])
    with pytest.raises(InvalidMeasure):
        FiniteProbSpace(["a", "b"], [0.5, 0.499])


def test_float_weights_within_tolerance_are_accepted():
    sp = FiniteProbSpace(["a", "b"], [0.5, 0.5 + 1e-12])
    assert not sp.exact


def test_exact_mode_is_inferred():
    assert FiniteProbSpace(["a", "b"], ["1/2", "1/2"]).exact
    assert FiniteProbSpace(["a", "b"], {"a": F(1, 3), "b": F(2, 3)}).exact
    assert not FiniteProbSpace(["a", "b"], [0.25, 0.75]).exact


def test_conditional_expectation_weighted_average():
    sp = FiniteProbSpace(["a", "b", "c"], ["1/2", "1/4", "1/4"])
    part = Partition.from_blocks(sp, [["a"], ["b", "c"]])
    out = conditional_expectation(np.array([F(4), F(0), F(8)], dtype=object), part, sp.measure)
    assert list(out) == [4, 4, 4]


def test_conditional_expectation_extremes():
    sp = FiniteProbSpace(["a", "b", "c"], ["1/2", "1/4", "1/4"])
    rv = np.array([F(1), F(2), F(7)], dtype=object)
    assert list(conditional_expectation(rv, Partition.trivial(sp), sp.measure)) == [F(11, 4)] * 3
    assert list(conditional_expectation(rv, Partition.discrete(sp), sp.measure)) == list(rv)


def test_partition_validation():
    sp = FiniteProbSpace.uniform(["a", "b", "c"])
    with pytest.raises(InvalidPartition):
        Partition.from_blocks(sp, [["a"], ["a", "b", "c"]])
    with pytest.raises(InvalidPartition):
        Partition.from_blocks(sp, [["a"], ["b"]])
    with pytest.raises(InvalidPartition):
        Partition(sp, [0, 1])


def test_filtration_errors_name_the_time():
    sp = FiniteProbSpace.uniform(["uu", "ud", "du", "dd"])
    p1 = Partition.from_blocks(sp, [["uu", "ud"], ["du", "dd"]])
    p2 = Partition.from_blocks(sp, [["uu", "du"], ["ud", "dd"]])
    with pytest.raises(InvalidFiltration) as exc:
        Filtration(sp, [Partition.trivial(sp), p1, p2])
    assert exc.value.witness == {"t": 2}
    with pytest.raises(InvalidFiltration) as exc:
        Filtration(sp, [p1, p1])
    assert exc.value.witness == {"t": 0}


def test_join_of_coordinate_filtrations_is_the_product():
    sp = FiniteProbSpace.uniform(["uu", "ud", "du", "dd"])
    f = Filtration(sp, [Partition.trivial(sp), Partition(sp, [o[0] for o in sp.outcomes])])
    h = Filtration(sp, [Partition.trivial(sp), Partition(sp, [o[1] for o in sp.outcomes])])
    g = join(f, h)
    assert g[1] == Partition.discrete(sp)
    assert join(f, Filtration.trivial(sp, 1)) == f
    assert join(f, f) == f


def test_join_needs_equal_horizons_and_spaces():
    sp = FiniteProbSpace.uniform(["a", "b"])
    f1 = Filtration(sp, [Partition.trivial(sp), Partition.discrete(sp)])
    f2 = Filtration(sp, [Partition.trivial(sp), Partition.discrete(sp), Partition.discrete(sp)])
    with pytest.raises(HorizonMismatch):
        join(f1, f2)
    other = FiniteProbSpace.uniform(["x", "y"])
    with pytest.raises(MismatchedSpace):
        join(f1, Filtration(other, [Partition.trivial(other), Partition.discrete(other)]))


def test_independence_witness_for_correlated_coins():
    sp = FiniteProbSpace(["uu", "ud", "du", "dd"], ["3/10", "1/5", "1/5", "3/10"])
    f = Filtration(sp, [Partition.trivial(sp), Partition(sp, [o[0] for o in sp.outcomes])])
    h = Filtration(sp, [Partition.trivial(sp), Partition(sp, [o[1] for o in sp.outcomes])])
    res = independent(f, h, sp.measure)
    assert not res
    assert res.witness["joint"] == F(3, 10)
    assert res.witness["product"] == F(1, 4)
    assert independent(f, Filtration.trivial(sp, 1), sp.measure)


def test_radon_nikodym_ratio_and_reciprocal():
    sp = FiniteProbSpace.uniform(["a", "b"])
    q = Measure(sp, [F(3, 5), F(2, 5)])
    assert list(radon_nikodym(q, sp.measure)) == [F(6, 5), F(4, 5)]
    prod = radon_nikodym(q, sp.measure) * radon_nikodym(sp.measure, q)
    assert list(prod) == [1, 1]
    assert list(radon_nikodym(sp.measure, sp.measure)) == [1, 1]


def test_density_process_of_biased_coin():
    sp, f = one_step(["u", "d"], ["3/5", "2/5"])
    px = Measure(sp, ["1/2", "1/2"])
    L = density_process(px, sp.measure, f)
    assert list(L.scalar_values()[0]) == [1, 1]
    assert list(L.terminal) == [F(5, 6), F(5, 4)]


@settings(max_examples=60, deadline=None)
@given(filtered_spaces(max_T=3), st.data())
def test_tower_property(space_f, data):
    sp, f = space_f
    rv = np.array([F(v) for v in data.draw(st.lists(st.integers(-9, 9), min_size=sp.n, max_size=sp.n))], dtype=object)
    for s in range(f.horizon + 1):
        for t in range(s, f.horizon + 1):
            fine = conditional_expectation(rv, f[t], sp.measure)
            assert list(conditional_expectation(fine, f[s], sp.measure)) == list(conditional_expectation(rv, f[s], sp.measure))
    part = f[f.horizon]
    ce = conditional_expectation(rv, part, sp.measure)
    for block in part.blocks:
        ind = np.zeros(sp.n, dtype=int)
        ind[block] = 1
        assert sp.measure.expect(rv * ind) == sp.measure.expect(ce * ind)


@settings(max_examples=40, deadline=None)
@given(filtered_spaces(max_T=2), st.data())
def test_join_lattice_laws(space_f, data):
    sp, f = space_f
    T = f.horizon

    def random_coarsening():
        parts = [Partition.trivial(sp)]
        for t in range(1, T + 1):
            keep = data.draw(st.booleans())
            parts.append(f[t] if keep else parts[-1])
        return Filtration(sp, parts)

    a, b, c = random_coarsening(), random_coarsening(), random_coarsening()
    assert join(a, b) == join(b, a)
    assert join(join(a, b), c) == join(a, join(b, c))
    assert join(a, a) == a
    g = join(a, b)
    assert g.refines(a) and g.refines(b)
    assert independent(a, b, sp.measure).ok == independent(b, a, sp.measure).ok


@settings(max_examples=40, deadline=None)
@given(filtered_spaces(max_T=3), st.data())
def test_density_process_is_positive_martingale(space_f, data):
    sp, f = space_f
    raw = data.draw(st.lists(st.integers(1, 9), min_size=sp.n, max_size=sp.n))
    q = Measure(sp, [F(r, sum(raw)) for r in raw])
    L = density_process(q, sp.measure, f)
    vals = L.scalar_values()
    assert all(v == 1 for v in vals[0])
    assert all(v > 0 for v in vals.reshape(-1))
    assert all(sp.measure.expect(vals[t]) == 1 for t in range(f.horizon + 1))
    drift = doob_decomposition(L, sp.measure, f).drift_part.values
    assert all(v == 0 for v in drift.reshape(-1))
