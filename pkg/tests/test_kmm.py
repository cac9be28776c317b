import numpy as np
import pytest

from moment_forge.datagen import gen_mean, gen_network_iv
from moment_forge.errors import ConfigError
from moment_forge.kmm import (
    KMMConfig,
    build_components,
    expand_grid,
    fit_kmm,
    fit_kmm_selected,
    score_fit,
)
from moment_forge.models import mean_model


def _mean_cfg(**overrides):
    base = dict(
        model=mean_model(1),
        divergence="chi2",
        reference="empirical",
        instrument="const",
        n_rff=16,
        batch_n1=60,
        batch_n2=60,
        lr_theta=0.1,
        lr_beta=0.1,
        max_iters=300,
        eval_every=100,
        metric="moment_norm",
        seed=0,
    )
    base.update(overrides)
    return KMMConfig(**base)


def test_build_components_wiring():
    train = gen_mean(60, seed=0)
    instr, ref, obj_cfg, gda_cfg = build_components(train, _mean_cfg())
    assert instr.kind == "const"
    assert obj_cfg.epsilon == 1.0
    assert obj_cfg.rff_map.num_features == 16
    assert gda_cfg.anneal is None
    assert ref.sample(5, np.random.default_rng(0)).shape == (5, 1)


def test_build_components_rejects_bad_kinds():
    train = gen_mean(40, seed=0)
    with pytest.raises(ConfigError, match="instrument"):
        build_components(train, _mean_cfg(instrument="poly"))
    with pytest.raises(ConfigError, match="reference"):
        build_components(train, _mean_cfg(reference="gmm"))
    with pytest.raises(ConfigError, match="needs a dataset with z"):
        build_components(train, _mean_cfg(instrument="rff"))


def test_anneal_start_wiring():
    train = gen_mean(40, seed=0)
    cfg = _mean_cfg(epsilon=0.01, anneal_start=1.0, anneal_gamma=0.9)
    _, _, obj_cfg, gda_cfg = build_components(train, cfg)
    assert obj_cfg.epsilon == 1.0
    assert gda_cfg.anneal is not None
    assert gda_cfg.anneal.floor == 0.01
    # start == target degenerates to a flat schedule
    flat = _mean_cfg(epsilon=0.5, anneal_start=0.5)
    _, _, obj_flat, gda_flat = build_components(train, flat)
    assert obj_flat.epsilon == 0.5 and gda_flat.anneal is None


def test_anneal_start_validation():
    train = gen_mean(40, seed=0)
    with pytest.raises(ConfigError, match="below target"):
        build_components(train, _mean_cfg(epsilon=1.0, anneal_start=0.1, anneal_gamma=0.9))
    with pytest.raises(ConfigError, match="anneal_gamma"):
        build_components(train, _mean_cfg(epsilon=0.1, anneal_start=1.0, anneal_gamma=1.0))


def test_legacy_anneal_floor():
    train = gen_mean(40, seed=0)
    cfg = _mean_cfg(epsilon=2.0, anneal_gamma=0.5, anneal_floor=0.25)
    _, _, obj_cfg, gda_cfg = build_components(train, cfg)
    assert obj_cfg.epsilon == 2.0
    assert gda_cfg.anneal.floor == 0.25


def test_fit_kmm_recovers_mean():
    train = gen_mean(200, seed=1, mu=1.2)
    res = fit_kmm(train, _mean_cfg(batch_n1=200, batch_n2=200, max_iters=600))
    assert res.theta[0] == pytest.approx(train.x.mean(), abs=1e-4)


def test_theta_init_modes():
    train = gen_mean(120, seed=2, mu=2.0)
    warm = fit_kmm(train, _mean_cfg(batch_n1=120, batch_n2=120, theta_init="ols", max_iters=0))
    # with zero iterations the warm start is returned untouched: the sample mean
    assert warm.theta[0] == pytest.approx(train.x.mean(), rel=1e-12)
    cold = fit_kmm(train, _mean_cfg(batch_n1=120, batch_n2=120, max_iters=0))
    assert cold.theta[0] == 0.0
    with pytest.raises(ConfigError, match="theta_init"):
        fit_kmm(train, _mean_cfg(theta_init="random"))


def test_score_fit_metrics():
    class Shim:
        theta = np.array([0.3])

    cfg = _mean_cfg()
    val = gen_mean(80, seed=5, mu=1.0)
    score = score_fit(cfg, Shim, val, metric="moment_norm")
    assert score == pytest.approx(abs(val.x.mean() - 0.3), rel=1e-12)

    from moment_forge.models import linear_iv_model

    iv_val = gen_network_iv("linear", 150, seed=4)
    iv_cfg = _mean_cfg(model=linear_iv_model(1, 1))
    x = np.column_stack([iv_val.x[:, 0], iv_val.x[:, 1], iv_val.z])
    from moment_forge.data import Dataset

    ds = Dataset(x=x, z=iv_val.z)
    for metric in ("hsic", "mmr"):
        assert np.isfinite(score_fit(iv_cfg, Shim, ds, metric=metric))
    with pytest.raises(ConfigError, match="metric"):
        score_fit(cfg, Shim, val, metric="aic")


def test_expand_grid_product_and_validation():
    base = _mean_cfg()
    cells = expand_grid(base, {"epsilon": [1.0, 0.1], "lam": [0.0, 1e-2, 1.0]})
    assert len(cells) == 6
    assert all(isinstance(c, KMMConfig) for c in cells)
    assert {(c.epsilon, c.lam) for c in cells} == {(e, l) for e in (1.0, 0.1) for l in (0.0, 1e-2, 1.0)}
    # untouched fields carry over
    assert all(c.max_iters == base.max_iters for c in cells)
    with pytest.raises(ConfigError, match="grid key"):
        expand_grid(base, {"epsilonn": [1.0]})


def test_fit_kmm_selected_without_grid():
    train = gen_mean(100, seed=6, mu=0.7)
    val = gen_mean(100, seed=7, mu=0.7)
    base = _mean_cfg(batch_n1=100, batch_n2=100, max_iters=500)
    res, cfg, grid_res = fit_kmm_selected(train, val, base, metric="moment_norm")
    assert grid_res is None
    assert cfg is base
    # the returned theta is the checkpoint that minimizes the validation metric
    assert score_fit(cfg, res, val, "moment_norm") == pytest.approx(min(res.metric_values), rel=1e-9)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")  # inf propagation flags the diverged cell
def test_fit_kmm_selected_with_grid():
    train = gen_mean(100, seed=8, mu=0.7)
    val = gen_mean(100, seed=9, mu=0.7)
    res, cfg, grid_res = fit_kmm_selected(
        train, val, _mean_cfg(batch_n1=100, batch_n2=100, max_iters=400),
        grid={"epsilon": [1.0, 0.1]}, metric="moment_norm",
    )
    assert grid_res is not None and len(grid_res.report) == 2
    assert cfg.epsilon in (1.0, 0.1)
    assert np.isfinite(res.theta[0])
