import numpy as np
import pytest

from lrsim.genmodel import ConfigError, ScoreKind
from lrsim.lrsystems import (
    LOG10_E,
    NONTRIVIAL,
    SPECIFIC_SOURCE,
    CaseView,
    PathOracleConfig,
    SystemId,
    log_lr_batch,
)
from lrsim.oracle import (
    InsufficientPathsError,
    compare_closed_vs_oracle,
    default_evidence_grid,
    path_oracle,
    path_oracle_lr,
)
from tests.conftest import make_world

FAST = PathOracleConfig(n_paths=200_000)


def _closed_log10(system, view, world):
    theta = (np.array([view.theta_r]) if system in SPECIFIC_SOURCE else None)
    return float(log_lr_batch(system, np.array([view.x_mean]),
                              np.array([view.y_mean]), world,
                              theta_r=theta)[0]) * LOG10_E


@pytest.mark.parametrize("system", sorted(NONTRIVIAL, key=lambda s: s.value))
def test_oracle_tracks_closed_form(system):
    world = make_world()
    view = default_evidence_grid(system, world)[4]
    comp = compare_closed_vs_oracle(system, view, world, FAST, seed=0)
    # 4 SE at desk scale keeps the rate of false alarms negligible while
    # still catching any recipe that samples the wrong distribution
    assert comp.abs_diff_log10 < max(4.0 * comp.se_log10, 0.02)


def test_unit_lr_system_oracle_is_near_one():
    world = make_world()
    view = CaseView(x_mean=0.4, y_mean=0.1, theta_r=0.2)
    est = path_oracle(SystemId.SSXASLR, view, world,
                      PathOracleConfig(n_paths=100_000), seed=0)
    assert 0.8 < est.lr < 1.25


def test_oracle_is_deterministic():
    world = make_world()
    view = default_evidence_grid(SystemId.CSSLR, world)[3]
    a = path_oracle(SystemId.CSSLR, view, world, FAST, seed=9)
    b = path_oracle(SystemId.CSSLR, view, world, FAST, seed=9)
    assert a.log10_lr == b.log10_lr
    assert a.se_log10 == b.se_log10


def test_oracle_seed_changes_draws():
    world = make_world()
    view = default_evidence_grid(SystemId.CSSLR, world)[3]
    a = path_oracle(SystemId.CSSLR, view, world, FAST, seed=1)
    b = path_oracle(SystemId.CSSLR, view, world, FAST, seed=2)
    assert a.log10_lr != b.log10_lr


def test_feature_bin_width_insensitivity():
    world = make_world()
    view = default_evidence_grid(SystemId.CSFLR, world)[4]
    wide = path_oracle(SystemId.CSFLR, view, world,
                       PathOracleConfig(n_paths=400_000, bin_width=0.1), seed=3)
    narrow = path_oracle(SystemId.CSFLR, view, world,
                         PathOracleConfig(n_paths=400_000, bin_width=0.05),
                         seed=3)
    se = np.hypot(wide.se_log10, narrow.se_log10)
    assert abs(wide.log10_lr - narrow.log10_lr) < max(4.0 * se, 0.05)


def test_anchor_tolerance_insensitivity():
    world = make_world()
    view = default_evidence_grid(SystemId.CSYASLR, world)[4]
    loose = path_oracle(SystemId.CSYASLR, view, world,
                        PathOracleConfig(n_paths=400_000,
                                         anchor_tolerance=0.05), seed=4)
    tight = path_oracle(SystemId.CSYASLR, view, world,
                        PathOracleConfig(n_paths=400_000,
                                         anchor_tolerance=0.025), seed=4)
    se = np.hypot(loose.se_log10, tight.se_log10)
    assert abs(loose.log10_lr - tight.log10_lr) < max(4.0 * se, 0.05)


def test_absolute_score_oracle():
    world = make_world(score_kind=ScoreKind.AbsoluteDifference)
    view = CaseView(x_mean=0.9, y_mean=0.2)
    comp = compare_closed_vs_oracle(SystemId.CSSLR, view, world, FAST, seed=5)
    assert comp.abs_diff_log10 < max(4.0 * comp.se_log10, 0.02)


def test_insufficient_accepted_paths_raises():
    world = make_world()
    # an anchor far in the tail leaves nothing inside the window
    view = CaseView(x_mean=0.0, y_mean=30.0)
    cfg = PathOracleConfig(n_paths=2_000)
    with pytest.raises(InsufficientPathsError):
        path_oracle(SystemId.CSYASLR, view, world, cfg, seed=0)


def test_path_oracle_lr_wrapper():
    world = make_world()
    view = CaseView(x_mean=0.3, y_mean=0.1)
    lr = path_oracle_lr(SystemId.CSSLR, view, world, FAST, seed=6)
    closed = 10.0 ** _closed_log10(SystemId.CSSLR, view, world)
    assert lr == pytest.approx(closed, rel=0.15)


def test_oracle_estimate_fields():
    world = make_world()
    view = default_evidence_grid(SystemId.SSSLR, world)[0]
    est = path_oracle(SystemId.SSSLR, view, world, FAST, seed=7)
    assert est.n_paths == FAST.n_paths
    assert est.se_log10 > 0
    assert np.isfinite(est.log10_lr)
    assert est.accepted_num > 0 and est.accepted_den > 0


def test_default_grid_shapes():
    world = make_world()
    for system in NONTRIVIAL:
        grid = default_evidence_grid(system, world)
        assert len(grid) == 9
        has_theta = [v.theta_r is not None for v in grid]
        if system in SPECIFIC_SOURCE:
            assert all(has_theta)
        else:
            assert not any(has_theta)


def test_oracle_config_validation():
    with pytest.raises(ConfigError):
        PathOracleConfig(n_paths=10).validate()
    with pytest.raises(ConfigError):
        PathOracleConfig(bin_width=0.0).validate()
    with pytest.raises(ConfigError):
        PathOracleConfig(anchor_tolerance=-1.0).validate()
    with pytest.raises(ConfigError):
        PathOracleConfig(bandwidth_factor=0.0).validate()
