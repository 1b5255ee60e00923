import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pressurelab import systems
from pressurelab.ldp import (
    DECAY_TOO_FAST,
    ConstraintSet,
    contraction_report,
    estimate_nu_n,
    observable_potential,
    rate_function,
)
from pressurelab.manifold import basis_for

ALPHA = np.round(np.arange(-1.2, 1.2001, 0.1), 12)
BETA = np.arange(-4, 4.001, 0.25)


@pytest.fixture(scope="module")
def table():
    d = systems.make_doubling()
    return rate_function(d, systems.ZERO, [1], ALPHA, BETA, range(8, 17), 50_000, 0)


def test_constraint_set_validation():
    with pytest.raises(ValueError):
        ConstraintSet([1], [(0.5, 0.2)])
    with pytest.raises(ValueError):
        ConstraintSet([1, 2], [(0, 1)])
    with pytest.raises(ValueError):
        ConstraintSet([], [])
    cs = ConstraintSet([1, 2], [(-np.inf, 0.0), (0.1, 0.2)])
    np.testing.assert_array_equal(cs.contains([[-5.0, 0.15], [0.1, 0.15], [0.0, 0.3]]), [True, False, False])
    assert not ConstraintSet.nothing([1]).contains([0.0])


def test_whole_space(doubling):
    est = estimate_nu_n(doubling, systems.ZERO, ConstraintSet.whole([1]), range(4, 11), 5000, 0)
    np.testing.assert_array_equal(est.nu, 1.0)
    assert abs(est.slope) < 1e-14 and est.status == "ok"


def test_empty_set(doubling):
    est = estimate_nu_n(doubling, systems.ZERO, ConstraintSet.nothing([1]), range(4, 11), 5000, 0)
    np.testing.assert_array_equal(est.nu, 0.0)
    assert est.slope is None and est.status == DECAY_TOO_FAST
    assert est.decay_rate is None


def test_region_with_equilibrium_moment(doubling, table):
    cs = ConstraintSet([1], [(-0.5, 0.5)])
    est = estimate_nu_n(doubling, systems.ZERO, cs, range(6, 17), 50_000, 1)
    rep = contraction_report(est, table, cs)
    assert abs(rep.J_region) <= 0.02
    assert abs(est.slope) <= 0.02
    assert rep.abs_gap <= 0.04


def test_far_region_decays_too_fast(doubling, table):
    cs = ConstraintSet([1], [(0.9, 1.0)])
    est = estimate_nu_n(doubling, systems.ZERO, cs, range(6, 25, 2), 100_000, 1)
    assert est.counts[-1] == 0
    assert est.status == DECAY_TOO_FAST
    rep = contraction_report(est, table, cs)
    assert rep.status == DECAY_TOO_FAST
    assert rep.decay_rate is None and rep.abs_gap is None


def test_far_region_slope_is_negative(doubling):
    est = estimate_nu_n(doubling, systems.ZERO, ConstraintSet([1], [(0.3, 1.0)]), range(6, 17), 100_000, 2)
    assert est.status == "ok"
    assert est.slope < 0.02
    assert np.all((est.nu >= 0) & (est.nu <= 1))


def test_sparse_counts_drop_out_of_fit(doubling):
    est = estimate_nu_n(doubling, systems.ZERO, ConstraintSet([1], [(0.8, 1.0)]), range(4, 13), 20_000, 0)
    assert all(c >= 30 for n, c in zip(est.n, est.counts) if n in est.fit_n)
    assert len(est.fit_n) < len(est.n)
    assert est.status == "partial"


def test_table_minimum_at_equilibrium(table):
    alpha, J = table.minimum()
    assert J <= 0.02 and abs(alpha[0]) <= 0.1 + 1e-12


def test_table_nonnegative_and_convex(table):
    assert table.values.min() >= -0.02
    assert table.second_differences().min() >= -1e-9


def test_table_caps_unreachable_moments(table):
    out = np.abs(table.alpha[:, 0]) > 1 + 1e-12
    assert out.any()
    np.testing.assert_array_equal(table.capped, out)
    assert np.all(table.values[out] >= table.cap)


def test_table_zero_beta_is_exact(table):
    j0 = int(np.flatnonzero(table.beta[:, 0] == 0)[0])
    assert table.Q[j0] == 0.0


def test_region_missing_grid(table):
    with pytest.raises(ValueError):
        table.region_minimum(ConstraintSet([1], [(0.31, 0.39)]))


@pytest.mark.parametrize("beta", [[0, 0.25, 0.5], [-0.5, 0.5], [-1, -0.5, 0, 0.5, 1], [-1, 0.25, 0, 1]])
def test_beta_grid_validation(doubling, beta):
    with pytest.raises(ValueError):
        rate_function(doubling, systems.ZERO, [1], [0.0], beta, range(4, 8), 100, 0)


def test_two_observable_table(doubling):
    axis = np.linspace(-0.5, 0.5, 5)
    t = rate_function(doubling, systems.ZERO, [1, 2], axis, np.arange(-1, 1.001, 0.25), range(6, 11), 5000, 0)
    assert t.alpha.shape == (25, 2) and t.beta.shape == (81, 2)
    assert t.second_differences().min() >= -1e-9
    assert t.minimum()[1] <= 0.02


def test_observable_potential(basis1):
    pot = observable_potential(basis1, [1, 2], [2.0, -1.0])
    x = np.array([[0.2]])
    assert pot(x)[0] == pytest.approx(2 * np.cos(0.4 * np.pi) - np.sin(0.4 * np.pi), abs=1e-15)
    assert pot.bound == 3.0


def test_tilt_moves_mass_onto_target(doubling, table):
    i = int(np.argmin(np.abs(table.alpha[:, 0] - 0.3)))
    tilt = observable_potential(basis_for(1, 1), [1], table.beta_argmax[i])
    cs = ConstraintSet([1], [(0.2, 0.4)])
    est = estimate_nu_n(doubling, tilt, cs, range(4, 25, 4), 50_000, 1)
    assert est.nu[-1] > est.nu[0]
    assert np.all(np.diff(est.nu) >= -0.02)
    # complementary region loses the mass the target gains
    rest = estimate_nu_n(doubling, tilt, ConstraintSet([1], [(-1, 0.2)]), range(4, 25, 4), 50_000, 1)
    assert rest.nu[-1] < rest.nu[0]


@settings(max_examples=15, deadline=None)
@given(st.floats(-1, 1), st.floats(0, 1), st.floats(0, 0.5), st.floats(0, 0.5), st.integers(0, 2**20))
def test_nested_sets_are_monotone(lo, width, grow_lo, grow_hi, seed):
    d = systems.make_expanding_circle(2, 0.05)
    g = systems.trig_potential({"cos1": 0.5})
    inner = ConstraintSet([1], [(lo, lo + width)])
    outer = ConstraintSet([1], [(lo - grow_lo, lo + width + grow_hi)])
    a = estimate_nu_n(d, g, inner, range(3, 9), 3000, seed)
    b = estimate_nu_n(d, g, outer, range(3, 9), 3000, seed)
    assert np.all(a.nu <= b.nu)
    assert np.all(a.counts <= b.counts)
