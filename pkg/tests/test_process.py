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
    doob_decomposition,
    is_martingale,
    join,
    predictable_covariation,
    quadratic_covariation,
    strongly_orthogonal,
)
from filtration_lab.errors import NotAdapted, NotMartingale, NotPredictable
from filtration_lab.process import covariation_increments
from helpers import adapted, coin_product, filtered_spaces, one_step, space_and_process


def s3():
    sp, f = one_step(["u", "d"], ["3/5", "2/5"])
    return sp, f, AdaptedProcess(f, [[0, 0], [1, -1]], name="X")


def test_adaptedness_is_enforced_with_witness():
    sp, f = one_step(["u", "d"], ["1/2", "1/2"])
    with pytest.raises(NotAdapted) as exc:
        AdaptedProcess(f, [[0, 1], [1, -1]])
    assert exc.value.witness["t"] == 0


def test_predictability_is_enforced():
    sp, f = one_step(["u", "d"], ["1/2", "1/2"])
    with pytest.raises(NotPredictable):
        PredictableProcess(f, [[0, 0], [1, 2]])
    PredictableProcess(f, [[0, 0], [2, 2]])


def test_doob_decomposition_of_biased_coin():
    sp, f, x = s3()
    dec = doob_decomposition(x, sp.measure, f)
    assert list(dec.drift_part.increments()[1, :, 0]) == [F(1, 5), F(1, 5)]
    assert list(dec.martingale_part.increments()[1, :, 0]) == [F(4, 5), F(-6, 5)]


def test_doob_decomposition_trivial_cases():
    sp, f = one_step(["u", "d"], ["1/2", "1/2"])
    walk = AdaptedProcess(f, [[0, 0], [1, -1]])
    assert all(v == 0 for v in doob_decomposition(walk, sp.measure).drift_part.values.reshape(-1))
    ramp = AdaptedProcess(f, [[0, 0], [3, 3]])
    assert all(v == 0 for v in doob_decomposition(ramp, sp.measure).martingale_part.values.reshape(-1))


def test_martingale_check_witness():
    sp, f, x = s3()
    res = is_martingale(x, sp.measure, f)
    assert not res
    assert res.witness["t"] == 1 and res.witness["value"] == F(1, 5)
    sp2, f2 = one_step(["u", "d"], ["1/2", "1/2"])
    assert is_martingale(AdaptedProcess(f2, [[0, 0], [1, -1]]), sp2.measure, f2)


def test_brackets_of_symmetric_walk():
    sp, fs, xs = coin_product(2)
    g = join(*fs)
    walk = AdaptedProcess(g, np.stack([xs[0].values[0], xs[0].values[1]]))
    assert list(quadratic_covariation(walk, walk).terminal) == [1] * 4
    const = AdaptedProcess.constant(g, 7)
    assert all(v == 0 for v in quadratic_covariation(walk, const).values.reshape(-1))
    assert list(predictable_covariation(walk, walk, sp.measure, g).terminal) == [1] * 4


def test_predictable_covariation_of_biased_coin():
    sp, f, x = s3()
    m = doob_decomposition(x, sp.measure, f).martingale_part
    assert list(predictable_covariation(m, m, sp.measure, f).terminal) == [F(24, 25)] * 2


def test_strong_orthogonality_of_coins():
    sp, fs, xs = coin_product(2)
    g = join(*fs)
    assert strongly_orthogonal(xs[0], xs[1], sp.measure, g)
    assert not strongly_orthogonal(xs[0], xs[0], sp.measure, g)


def test_strong_orthogonality_needs_martingales():
    sp, f, x = s3()
    with pytest.raises(NotMartingale):
        strongly_orthogonal(x, x, sp.measure, f)


def test_correlated_coins_covariation():
    sp = FiniteProbSpace(["uu", "ud", "du", "dd"], ["3/10", "1/5", "1/5", "3/10"])
    fa = Filtration(sp, [Partition.trivial(sp), Partition(sp, [o[0] for o in sp.outcomes])])
    fb = Filtration(sp, [Partition.trivial(sp), Partition(sp, [o[1] for o in sp.outcomes])])
    a = AdaptedProcess(fa, [[0] * 4, [1 if o[0] == "u" else -1 for o in sp.outcomes]])
    b = AdaptedProcess(fb, [[0] * 4, [1 if o[1] == "u" else -1 for o in sp.outcomes]])
    g = join(fa, fb)
    res = strongly_orthogonal(a, b, sp.measure, g)
    assert not res and res.witness["value"] == F(1, 5)


@settings(max_examples=60, deadline=None)
@given(space_and_process())
def test_doob_decomposition_properties(spx):
    sp, f, x = spx
    dec = doob_decomposition(x, sp.measure, f)
    recon = dec.initial[None] + dec.martingale_part.values + dec.drift_part.values
    assert (recon == x.values).all()
    assert is_martingale(dec.martingale_part, sp.measure, f)
    PredictableProcess(f, dec.drift_part.values)  # validates predictability
    again = doob_decomposition(dec.martingale_part, sp.measure, f)
    assert all(v == 0 for v in again.drift_part.values.reshape(-1))


@settings(max_examples=50, deadline=None)
@given(filtered_spaces(), st.data())
def test_bracket_identities(space_f, data):
    sp, f = space_f
    x = data.draw(adapted(f, name="x"))
    y = data.draw(adapted(f, name="y"))
    xy = quadratic_covariation(x, y)
    assert (xy.values == quadratic_covariation(y, x).values).all()
    pol = (quadratic_covariation(x + y, x + y).values - quadratic_covariation(x - y, x - y).values) / 4
    assert (pol == xy.values).all()
    comp = predictable_covariation(x, y, sp.measure, f)
    assert is_martingale(xy - comp, sp.measure, f)
    mx = doob_decomposition(x, sp.measure, f).martingale_part
    my = doob_decomposition(y, sp.measure, f).martingale_part
    lhs = sp.measure.expect(mx.terminal * my.terminal) - mx.values[0, 0, 0] * my.values[0, 0, 0]
    assert lhs == sp.measure.expect(quadratic_covariation(mx, my).terminal)
    assert strongly_orthogonal(mx, my, sp.measure, f).ok == strongly_orthogonal(my, mx, sp.measure, f).ok


@settings(max_examples=30, deadline=None)
@given(space_and_process(dim=2))
def test_covariation_matrix_is_symmetric_psd(spx):
    sp, f, x = spx
    m = doob_decomposition(x, sp.measure, f).martingale_part
    cov = covariation_increments(m, sp.measure, f)
    assert (cov == np.swapaxes(cov, 2, 3)).all()
    c = cov.astype(float)
    eig = np.linalg.eigvalsh(c[1:].reshape(-1, 2, 2))
    assert (eig > -1e-12).all()
