import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqdesign.core import DesignKind, Panel, PanelMeta
from seqdesign.dgp import CarryoverKind, CovariateDrift, DgpConfig, simulate_panel
from seqdesign.estimators import EstimatorKind, diff_in_means, estimate, fwl_decompose, stack
from seqdesign.harness import preset_fig5, run_sweep
from seqdesign.stats import CollinearityError, DegenerateOutcome

FIG5_DGP = preset_fig5().dgp


def panel_from(design, z1, z2, y1, y2, x1=None, x2=None):
    n = len(z1)
    z2 = np.asarray(z2, dtype=float)
    exited = np.isnan(z2)
    return Panel(
        unit_id=np.arange(n),
        x_t1=np.zeros(n) if x1 is None else x1,
        x_t2=np.zeros(n) if x2 is None else x2,
        z_t1=z1,
        z_t2=z2,
        y_t1=y1,
        y_t2=np.where(exited, np.nan, y2),
        exited=exited,
        meta=PanelMeta(DesignKind(design)),
    )


# -- stacking -------------------------------------------------------------------


@pytest.mark.parametrize("design", [DesignKind.CWSD, DesignKind.PRE_POST, DesignKind.SEQUENTIAL_RANDOMIZATION])
def test_stack_has_two_rows_per_unit(design):
    panel, _, _ = simulate_panel(DgpConfig(n=37), design, np.random.default_rng(0))
    s = stack(panel)
    assert s.X.shape == (74, 4)
    np.testing.assert_array_equal(s.X[:37, 2], 1.0)
    np.testing.assert_array_equal(s.X[37:, 2], 0.0)
    np.testing.assert_array_equal(s.unit_id[:37], s.unit_id[37:])


def test_between_subjects_stack_is_period_one_only():
    panel, _, _ = simulate_panel(DgpConfig(n=30), DesignKind.BETWEEN_SUBJECTS, np.random.default_rng(0))
    s = stack(panel)
    assert len(s.y) == 30 and s.is_t1.all()
    assert fwl_decompose(panel).q == 1.0
    with pytest.raises(DegenerateOutcome):
        estimate(panel, EstimatorKind.DIFF_IN_MEANS_T2)


def test_stack_drops_exited_units():
    panel = panel_from(
        "selective",
        z1=[1, 1, 0, 0, 0],
        z2=[np.nan, np.nan, 1, 0, 1],
        y1=[1.0, 2, 3, 4, 5],
        y2=[0.0, 0, 6, 7, 8],
    )
    s = stack(panel)
    assert len(s.y) == 8
    np.testing.assert_array_equal(s.y[5:], [6, 7, 8])


def test_cwsd_stack_is_balanced_in_each_period():
    panel, _, _ = simulate_panel(DgpConfig(n=10_000), DesignKind.CWSD, np.random.default_rng(1))
    s = stack(panel)
    assert abs(s.z[s.is_t1].mean() - 0.5) < 0.02
    assert s.z[s.is_t1].mean() + s.z[~s.is_t1].mean() == pytest.approx(1.0)


# -- individual estimators -------------------------------------------------------


def test_diff_in_means_example():
    r = diff_in_means([6.0, 6.0, 1.0, 1.0], [1, 1, 0, 0])
    assert r.tau_hat == 5.0 and r.se == 0.0


def test_diff_in_means_welch_se():
    y1, y0 = np.array([3.0, 5.0, 10.0]), np.array([1.0, 2.0])
    r = diff_in_means(np.r_[y1, y0], [1, 1, 1, 0, 0])
    assert r.se == pytest.approx(np.sqrt(y1.var(ddof=1) / 3 + y0.var(ddof=1) / 2))


def test_diff_in_means_needs_two_per_group():
    with pytest.raises(DegenerateOutcome):
        diff_in_means([1.0, 2.0, 3.0], [1, 0, 0])


def test_period2_estimators_on_empty_arm_are_degenerate():
    panel = panel_from("prepost", z1=[0, 0, 0, 0], z2=[1, 1, 1, 1], y1=[1.0, 2, 3, 4], y2=[1.0, 2, 3, 5])
    with pytest.raises(DegenerateOutcome):
        estimate(panel, EstimatorKind.DIFF_IN_MEANS_T1)
    with pytest.raises(DegenerateOutcome):
        estimate(panel, EstimatorKind.DIFF_IN_MEANS_T2)


def test_t2_fixed_effect_is_collinear_under_cwsd():
    panel, _, _ = simulate_panel(DgpConfig(n=50), DesignKind.CWSD, np.random.default_rng(2))
    with pytest.raises(CollinearityError):
        estimate(panel, EstimatorKind.T2_FIXED_EFFECT)


def test_noise_control_depends_on_rng_and_others_do_not():
    panel, _, _ = simulate_panel(FIG5_DGP.replace(n=200), DesignKind.CWSD, np.random.default_rng(3))
    a = estimate(panel, EstimatorKind.NOISE_CONTROL, np.random.default_rng(1)).tau_hat
    b = estimate(panel, EstimatorKind.NOISE_CONTROL, np.random.default_rng(2)).tau_hat
    assert a != b
    for kind in (EstimatorKind.NO_CONTROL, EstimatorKind.DIRECT_CONTROL, EstimatorKind.PROPENSITY_SCORE):
        assert estimate(panel, kind, np.random.default_rng(1)).tau_hat == estimate(panel, kind, np.random.default_rng(2)).tau_hat
    with pytest.raises(ValueError):
        estimate(panel, EstimatorKind.NOISE_CONTROL)


def test_propensity_with_constant_score_reduces_to_no_control():
    # every CWSD unit is seen once treated and once not, so the score is exactly 1/2 at gamma = 0
    panel, _, _ = simulate_panel(FIG5_DGP.replace(n=300, gamma=0.0), DesignKind.CWSD, np.random.default_rng(4))
    ps = estimate(panel, EstimatorKind.PROPENSITY_SCORE)
    nc = estimate(panel, EstimatorKind.NO_CONTROL)
    assert ps.tau_hat == pytest.approx(nc.tau_hat, abs=1e-10)


def test_estimate_result_to_dict():
    panel, _, _ = simulate_panel(DgpConfig(n=20), DesignKind.BETWEEN_SUBJECTS, np.random.default_rng(5))
    d = estimate(panel, EstimatorKind.DIFF_IN_MEANS_T1).to_dict()
    assert set(d) == {"estimator", "tau_hat", "se", "n_used"} and d["n_used"] == 20


# -- Monte Carlo behaviour -------------------------------------------------------


def test_all_pooled_estimators_unbiased_without_carryover():
    cfg = preset_fig5().replace(gamma_grid=(0.0, 0.0, 1), reps=100, n=300)
    for row in run_sweep(cfg).rows:
        assert abs(row.mean - 1.0) <= 3 * row.mc_se, row


def test_no_control_cancels_under_treatment_shift_at_gamma_two():
    # tau - beta2*gamma/2 = 1 - 1 = 0
    cfg = preset_fig5().replace(gamma_grid=(2.0, 2.0, 1), reps=100, n=300, estimators=("no_control",))
    row = run_sweep(cfg).rows[0]
    assert abs(row.mean) <= 3 * row.mc_se


def test_period2_difference_unbiased_under_sequential_randomization_without_carryover():
    cfg = DgpConfig(beta1=4.0, n=200)
    est = []
    for r in range(200):
        panel, _, _ = simulate_panel(cfg, DesignKind.SEQUENTIAL_RANDOMIZATION, np.random.default_rng(r))
        est.append(estimate(panel, EstimatorKind.DIFF_IN_MEANS_T2).tau_hat)
    est = np.array(est)
    assert abs(est.mean() - 4.0) <= 3 * est.std(ddof=1) / np.sqrt(len(est))


# -- FWL decomposition -----------------------------------------------------------


def test_fwl_single_period_has_full_weight():
    panel, _, _ = simulate_panel(DgpConfig(n=40), DesignKind.SEQUENTIAL_RANDOMIZATION, np.random.default_rng(6))
    s = stack(panel)
    dec = fwl_decompose(s.subset(s.is_t1))
    assert dec.q == 1.0
    assert np.isnan(dec.tau_t2_component)
    assert dec.tau_t1_component == pytest.approx(dec.tau_pooled, abs=1e-12)
    assert dec.identity_residual <= 1e-12


def test_fwl_mirrored_periods_split_evenly():
    z1 = np.array([1, 0, 1, 0, 1, 0])
    x = np.array([0.3, -0.1, 1.2, 0.4, -0.8, 0.5])
    panel = panel_from("cwsd", z1=z1, z2=1 - z1, y1=z1 + x, y2=(1 - z1) + x + 0.5, x1=x, x2=x)
    dec = fwl_decompose(panel)
    assert dec.q == pytest.approx(0.5, abs=1e-12)
    assert dec.identity_residual <= 1e-10


design_st = st.sampled_from(list(DesignKind))
kind_st = st.sampled_from(list(CarryoverKind))


@settings(max_examples=60, deadline=None)
@given(design=design_st, kind=kind_st, seed=st.integers(0, 2**32 - 1), n=st.sampled_from([20, 100]))
def test_fwl_identity_property(design, kind, seed, n):
    drift = CovariateDrift.TREATMENT_SHIFT if kind is CarryoverKind.COVARIATE_MEDIATED else CovariateDrift.INDEPENDENT_INCREMENT
    cfg = DgpConfig(carryover=kind, covariate_drift=drift, gamma=0.7, n=n)
    panel, _, _ = simulate_panel(cfg, design, np.random.default_rng(seed))
    try:
        dec = fwl_decompose(panel)
    except (CollinearityError, DegenerateOutcome):
        return
    assert 0.0 <= dec.q <= 1.0
    assert dec.identity_residual <= 1e-8


# -- collider ---------------------------------------------------------------------


def test_collider_is_biased_and_direct_control_is_not():
    cfg = FIG5_DGP.replace(n=500, gamma=0.0)
    col, dc = [], []
    for r in range(200):
        panel, _, _ = simulate_panel(cfg, DesignKind.CWSD, np.random.default_rng(r))
        col.append(estimate(panel, EstimatorKind.COLLIDER_CONDITIONED).tau_hat)
        dc.append(estimate(panel, EstimatorKind.DIRECT_CONTROL).tau_hat)
    col, dc = np.array(col), np.array(dc)
    assert col.mean() == pytest.approx(1.5, abs=0.05)
    assert abs(dc.mean() - 1.0) <= 3 * dc.std(ddof=1) / np.sqrt(len(dc))
