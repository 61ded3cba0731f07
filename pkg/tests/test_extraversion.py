import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from stimsim.dde import GridError, TimeGrid, dense_eval
from stimsim.extraversion import (
    DynamicsParams,
    PersonalityProfile,
    _fast_rhs,
    canonical_profiles,
    rhs,
    simulate,
    summary_metrics,
)
from stimsim.pk import StimulantParams, drug_level, shifted_drug_level

STIM = StimulantParams(1.0, 0.0121, 0.0071)
DYN = DynamicsParams()
GRID = TimeGrid(0.0, 725.0, 0.01)
EXTRO, AMBI, INTRO = canonical_profiles()

# peak of y before the inhibitor starts; q does not act until t = 345
Y_PEAK_TIME = 161.102720748076


@pytest.fixture(scope="module")
def runs():
    return {p.label: simulate(p, STIM, DYN, GRID) for p in canonical_profiles()}


def level_inverse(target, lo=0.0, hi=106.0):
    """Time on the rising branch where the plasma level equals target."""
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if drug_level(mid, STIM) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_profiles():
    assert [(p.label, p.b, p.y0) for p in canonical_profiles()] == [
        ("extrovert", 0.5, 0.5), ("ambivert", 1.0, 1.0), ("introvert", 1.5, 1.5),
    ]
    with pytest.raises(ValueError):
        PersonalityProfile("x", 0.0)
    with pytest.raises(ValueError):
        PersonalityProfile("x", 1.0, y0=2.0)
    assert PersonalityProfile("x", 1.0, y0=2.0, expert=True).y0 == 2.0
    with pytest.raises(ValueError):
        PersonalityProfile.canonical("neurotic")


@pytest.mark.parametrize("kw", [dict(a=0), dict(p=-1), dict(q=-0.1), dict(tau=-1), dict(t0=-5)])
def test_dynamics_validation(kw):
    with pytest.raises(ValueError):
        DynamicsParams(**kw)


def test_rhs_before_intake():
    assert rhs(3.0, 0.5, 0.5, STIM, DYN, EXTRO) == 0.0


def test_rhs_excitation_branch():
    t = DYN.t0 + level_inverse(0.4)
    assert shifted_drug_level(t, DYN.t0, STIM) == pytest.approx(0.4, abs=1e-12)
    assert rhs(t, 0.5, 123.0, STIM, DYN, EXTRO) == pytest.approx(0.64, abs=1e-10)


def test_rhs_inhibition_branch():
    t = DYN.t0 + level_inverse(0.4)
    tau = t - DYN.t0 - level_inverse(0.3)
    dyn = DynamicsParams(tau=tau)
    assert t > dyn.t0 + dyn.tau
    assert rhs(t, 0.5, 1.2, STIM, dyn, EXTRO) == pytest.approx(0.613, abs=1e-10)


def test_rhs_continuous_at_inhibitor_onset():
    t = DYN.t0 + DYN.tau
    first = DYN.a * (EXTRO.b - 2.0) + DYN.p / EXTRO.b * shifted_drug_level(t, DYN.t0, STIM)
    assert rhs(t, 2.0, 3.0, STIM, DYN, EXTRO) == first
    assert shifted_drug_level(t - DYN.tau, DYN.t0, STIM) == 0.0
    right = rhs(t + 1e-9, 2.0, 3.0, STIM, DYN, EXTRO)
    assert right == pytest.approx(first, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 725), st.floats(-50, 50), st.floats(-50, 50), st.sampled_from(canonical_profiles()))
def test_fast_rhs_matches_reference(t, y, yd, prof):
    f = _fast_rhs(STIM, DYN, prof)
    assert f(t, y, yd) == pytest.approx(rhs(t, y, yd, STIM, DYN, prof), rel=1e-13, abs=1e-13)


def test_series_share_grid(runs):
    r = runs["extrovert"]
    for s in (r.y, r.s, r.excitation, r.inhibition, r.balance):
        assert s.grid == GRID and len(s) == 72501


def test_no_drug_equilibrium():
    stim = StimulantParams(0.0, 0.0121, 0.0071)
    for prof in canonical_profiles():
        r = simulate(prof, stim, DYN, GRID)
        assert np.max(np.abs(r.y.values - prof.b)) <= 1e-9
        assert not np.any(r.excitation.values) and not np.any(r.inhibition.values)


def test_peak_time_matches_oracles(runs):
    m = summary_metrics(runs["extrovert"])
    assert m.peak_y - 0.5 > 0
    assert m.peak_y_time == pytest.approx(float(oracles.linear_peak_time(0.5)), abs=1e-4)
    assert m.peak_y_time == pytest.approx(Y_PEAK_TIME, abs=1e-4)


def test_peak_time_matches_euler_reference():
    t, y = oracles.euler_dde(0.5, h=0.001, t_end=300.0)
    k = int(np.argmax(y))
    m = summary_metrics(simulate(EXTRO, STIM, DYN, GRID))
    assert abs(t[k] - m.peak_y_time) < 0.05
    assert y[k] - 0.5 == pytest.approx(m.peak_excursion, rel=1e-3)


def test_peak_ordering(runs):
    ex = {k: summary_metrics(r).peak_excursion for k, r in runs.items()}
    assert ex["extrovert"] > ex["ambivert"] > ex["introvert"] > 0


def test_excitation_values(runs):
    e_ex = runs["extrovert"].excitation
    e_in = runs["introvert"].excitation
    t = runs["extrovert"].times
    assert np.all(e_ex.values[t < DYN.t0] == 0)
    k = GRID.node_index(DYN.t0 + 120)
    assert e_ex.values[k] == pytest.approx(0.74520, abs=2e-4)
    late = t > DYN.t0
    np.testing.assert_allclose(e_ex.values[late] / e_in.values[late], 3.0, rtol=1e-12)


def test_inhibition_values(runs):
    t = runs["introvert"].times
    onset = DYN.t0 + DYN.tau
    for r in runs.values():
        assert np.all(r.inhibition.values[t <= onset] == 0)
        assert r.inhibition.values.max() > 0
    r = runs["introvert"]
    k = GRID.node_index(onset + 120)
    y_lag = float(oracles.linear_excursion(120, 1.5)) + 1.5
    expected = 1.5 * 0.15 * float(oracles.level(120)) * y_lag
    assert r.inhibition.values[k] == pytest.approx(expected, rel=1e-8)
    # b*q prefactor: introvert 3x extrovert once divided by s_lag*y_lag
    late = t > onset + 1
    for rr in (r, runs["extrovert"]):
        s_lag = shifted_drug_level(t[late] - DYN.tau, DYN.t0, STIM)
        y_lag = dense_eval(rr.y, t[late] - DYN.tau - DYN.t0)
        np.testing.assert_allclose(rr.inhibition.values[late] / (s_lag * y_lag), rr.profile.b * DYN.q, rtol=1e-12)


def test_balance(runs):
    for r in runs.values():
        t = r.times
        e, i, bal = r.excitation.values, r.inhibition.values, r.balance.values
        assert np.all(bal[t < DYN.t0] == 0)
        window = (t > DYN.t0) & (t < DYN.t0 + DYN.tau)
        np.testing.assert_array_equal(bal[window], e[window])
        assert np.max(np.abs(bal + i - e)) <= 1e-12
        np.testing.assert_array_equal(r.balance_about_tonic, r.profile.b + bal)


def test_linear_reduction_against_closed_form():
    dyn = DynamicsParams(q=0.0)
    for prof in canonical_profiles():
        r = simulate(prof, STIM, dyn, GRID)
        idx = np.arange(0, len(r.y), 2500)
        ref = np.array([float(oracles.linear_excursion(t, prof.b)) for t in r.times[idx]]) + prof.b
        assert np.max(np.abs(r.y.values[idx] - ref)) <= 1e-6
        assert abs(r.y.values[-1] - (prof.b + float(oracles.linear_excursion(725, prof.b)))) <= 1e-6


def test_grid_must_align():
    with pytest.raises(GridError):
        simulate(EXTRO, STIM, DYN, TimeGrid(0, 725, 0.3))
    with pytest.raises(GridError):
        simulate(EXTRO, STIM, DYN, TimeGrid(1, 725, 0.01))


def test_metrics_no_drug():
    r = simulate(AMBI, StimulantParams(0.0, 0.0121, 0.0071), DYN, TimeGrid(0, 725, 0.05))
    m = summary_metrics(r)
    assert m.peak_excursion == 0
    assert m.return_time == 0
    assert not m.negative_y


def test_metrics_default_run_flags_negative(runs):
    m = summary_metrics(runs["extrovert"])
    assert m.negative_y
    assert m.undershoot_min < 0


def test_return_time_when_curve_settles():
    # weak drive, no opponent: y rises a little and relaxes back inside the band
    dyn = DynamicsParams(p=0.004, q=0.0)
    r = simulate(AMBI, STIM, dyn, GRID)
    m = summary_metrics(r)
    assert m.peak_y_time < m.return_time < 725
    t, y = r.times, r.y.values
    assert np.all(np.abs(y[t >= m.return_time + 0.01] - 1.0) <= 0.05)
    k = np.searchsorted(t, m.return_time) - 1
    assert abs(y[k] - 1.0) >= 0.05 - 1e-9


def test_metrics_stable_under_refinement():
    fine = TimeGrid(0, 725, 0.005)
    dyn = DynamicsParams(p=0.004)
    for d in (DYN, dyn):
        for prof in (EXTRO, INTRO):
            a = summary_metrics(simulate(prof, STIM, d, GRID))
            b = summary_metrics(simulate(prof, STIM, d, fine))
            for name in ("peak_y", "peak_y_time", "peak_excursion", "undershoot_min", "return_time"):
                assert abs(getattr(a, name) - getattr(b, name)) < 1e-5, name
