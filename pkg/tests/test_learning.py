import logging
import warnings

import numpy as np
import pytest

from dmpavoid.learning.chain import (OutsideHullWarning, RegressorChain, UntrainedChainError,
                                     chain_nmse, predict_chain)
from dmpavoid.learning.dataset import (CSV_HEADER, Dataset, GridAxis, ParamGrid, explore_scenario,
                                       gen_dataset, read_csv, replay_sample, scenario_obstacle,
                                       split_dataset, write_csv)
from dmpavoid.learning.mlp import MLPRegressor, nmse, train_mlp
from dmpavoid.sim.engine import rollout_batch

# -- nmse -------------------------------------------------------------------


def test_nmse_examples():
    rng = np.random.default_rng(0)
    truth = rng.normal(size=200)
    assert nmse(truth, truth) == 0.0
    assert nmse(np.full_like(truth, truth.mean()), truth) == pytest.approx(1.0, rel=1e-12)
    c = 0.3
    assert nmse(truth + c, truth) == pytest.approx(c ** 2 / truth.var(), rel=1e-12)


def test_nmse_errors():
    with pytest.raises(ValueError):
        nmse([1.0, 1.0], [2.0, 2.0])
    with pytest.raises(ValueError):
        nmse([1.0], [1.0])
    with pytest.raises(ValueError):
        nmse([1.0, 2.0, 3.0], [1.0, 2.0])


# -- single regressors ------------------------------------------------------


def test_mlp_constant_target():
    X = np.random.default_rng(1).uniform(size=(60, 3))
    net = train_mlp(X, np.full(60, 4.2), seed=0)
    assert net.train_nmse == pytest.approx(0.0)
    np.testing.assert_allclose(net.predict(X), 4.2, rtol=1e-9)


def test_mlp_linear_target_generalises():
    rng = np.random.default_rng(2)
    X = rng.uniform(-1, 1, size=(300, 3))
    y = 1.5 * X[:, 0] - 0.7 * X[:, 1] + 0.2 * X[:, 2] + 3.0
    net = train_mlp(X[:200], y[:200], seed=0, max_epochs=300)
    assert nmse(net.predict(X[200:]), y[200:]) < 1e-3


def test_mlp_needs_enough_samples():
    with pytest.raises(ValueError, match="at least 50"):
        train_mlp(np.zeros((20, 2)), np.arange(20.0))


def test_mlp_output_range_and_positivity():
    rng = np.random.default_rng(3)
    X = rng.uniform(size=(80, 2))
    y = np.exp(3 * X[:, 0]) + 0.1
    net = train_mlp(X, y, seed=1, max_epochs=50, log_target=True)
    far = rng.uniform(-50, 50, size=(500, 2))
    raw = net.forward_scaled(net.scale_inputs(far))
    assert np.all((raw > 0) & (raw < 1))
    p = net.predict(far)
    assert np.all(p > 0)
    assert np.all((p >= y.min() - 1e-12) & (p <= y.max() + 1e-12))


def test_mlp_scaling_is_invertible():
    net = MLPRegressor.init((2, 4, 1), np.random.default_rng(0), log_target=True)
    y = np.array([0.5, 2.0, 40.0])
    net.fit_scaling(np.zeros((3, 2)), y)
    s = net.scale_target(y)
    np.testing.assert_allclose(s[[0, 2]], [0.05, 0.95])
    np.testing.assert_allclose(net.unscale_target(s), y, rtol=1e-12)


def test_mlp_jacobian_matches_finite_differences():
    rng = np.random.default_rng(4)
    net = MLPRegressor.init((3, 5, 4, 1), rng)
    Xs = rng.uniform(-1, 1, size=(7, 3))
    theta = net.get_flat()
    _, J = net.jacobian_scaled(Xs)

    def f(th):
        net.set_flat(th)
        return net.forward_scaled(Xs)

    eps = 1e-6
    num = np.column_stack([(f(theta + eps * e) - f(theta - eps * e)) / (2 * eps)
                           for e in np.eye(theta.size)])
    net.set_flat(theta)
    np.testing.assert_allclose(J, num, atol=1e-8)


def test_mlp_dict_roundtrip():
    rng = np.random.default_rng(5)
    X = rng.uniform(size=(60, 2))
    net = train_mlp(X, X.sum(axis=1) + 1, seed=0, max_epochs=5)
    back = MLPRegressor.from_dict(net.to_dict())
    np.testing.assert_array_equal(back.predict(X), net.predict(X))


# -- dataset ----------------------------------------------------------------


def test_param_grid_axes():
    g = ParamGrid()
    assert g.cells().shape == (50 ** 3, 3)
    a = g.alpha.values()
    assert a[0] == pytest.approx(1.0) and a[-1] == pytest.approx(1000.0)
    np.testing.assert_allclose(np.diff(np.log(a)), np.log(1000.0) / 49)
    np.testing.assert_allclose(g.bounds(), [[1, 1000], [0.05, np.pi / 2], [1, 500]])
    with pytest.raises(ValueError):
        GridAxis(0.0, 1.0, 3, log=True).values()
    with pytest.raises(ValueError):
        GridAxis(1.0, 2.0, 0).values()


def test_narrow_weak_cell_collides_and_is_excluded():
    lp = (0.1, 0.1)
    cells = np.array([[1.0, 0.5, 500.0], [100.0, 0.5, 5.0]])
    res = rollout_batch([0, 0, 0], [1, 0, 0], [scenario_obstacle(lp)], cells[:, 0], cells[:, 1],
                        cells[:, 2])
    assert res.collided[0]
    part = explore_scenario(lp, cells)
    assert len(part) == 1
    assert part.kappa[0] == 5.0


def test_smallest_ellipse_retained_with_positive_clearance():
    part = explore_scenario((0.025, 0.025), np.array([[50.0, 0.8, 20.0]]))
    assert len(part) == 1
    assert part.clearance[0] > 0


def test_dataset_rows_replay(small_data):
    assert len(small_data) > 100
    rng = np.random.default_rng(0)
    for i in rng.choice(len(small_data), 25, replace=False):
        s = small_data[i]
        clearance, collided = replay_sample(s)
        assert not collided
        assert clearance == pytest.approx(s.clearance, abs=1e-6)
        assert min(s.lambda_p) > 0 and s.clearance > 0 and min(s.targets) > 0


def test_gen_dataset_deterministic_and_jobs_invariant():
    grid = ParamGrid.uniform(5)
    a = gen_dataset(3, grid, seed=9)
    b = gen_dataset(3, grid, seed=9, jobs=2)
    for f in ("lp", "clearance", "alpha", "psi", "kappa", "scenario"):
        np.testing.assert_array_equal(getattr(a, f), getattr(b, f))
    assert np.all((a.lp >= 0.025) & (a.lp <= 0.25))


def test_gen_dataset_skips_hopeless_scenario(caplog):
    # the start point lies inside every one of these ellipses
    with caplog.at_level(logging.WARNING, logger="dmpavoid.learning.dataset"):
        data = gen_dataset(2, ParamGrid.uniform(3), semi_axis_range=(0.55, 0.6), seed=0)
    assert len(data) == 0
    assert "skipped" in caplog.text


def test_split_sizes_and_union():
    n = 100
    d = Dataset(np.ones((n, 2)), np.arange(1.0, n + 1), np.ones(n), np.ones(n), np.ones(n))
    tr, te = split_dataset(d, 0.7, seed=3)
    assert (len(tr), len(te)) == (70, 30)
    assert sorted(np.concatenate([tr.clearance, te.clearance])) == list(d.clearance)
    tr2, _ = split_dataset(d, 0.7, seed=3)
    np.testing.assert_array_equal(tr.clearance, tr2.clearance)
    with pytest.raises(ValueError):
        split_dataset(d, 1.0)


def test_csv_roundtrip(tmp_path, small_data):
    p = tmp_path / "d.csv"
    write_csv(small_data, p)
    lines = p.read_text().splitlines()
    assert lines[0] == "# format_version=1"
    assert lines[1] == ",".join(CSV_HEADER)
    back = read_csv(p)
    for f in ("lp", "clearance", "alpha", "psi", "kappa"):
        np.testing.assert_array_equal(getattr(back, f), getattr(small_data, f))


@pytest.mark.parametrize("text", [
    "lp1,lp2\n1,2\n",
    "lp1,lp2,clearance,alpha,psi,kappa\n1,2,x,4,5,6\n",
    "lp1,lp2,clearance,alpha,psi,kappa\n1,2,-3,4,5,6\n",
    "# format_version=99\nlp1,lp2,clearance,alpha,psi,kappa\n",
])
def test_csv_malformed(tmp_path, text):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(ValueError):
        read_csv(p)


# -- chain ------------------------------------------------------------------


def test_chain_untrained_and_variant_checks():
    with pytest.raises(UntrainedChainError):
        predict_chain(RegressorChain("rc"), [0.1, 0.1])
    with pytest.raises(ValueError):
        RegressorChain("other")


def test_chain_predictions(small_chains, small_data):
    rc = small_chains["rc-delta"]
    H = small_data.features(True)
    out = predict_chain(rc, H)
    assert out.shape == (len(small_data), 3)
    assert np.all(out > 0)
    grid = ParamGrid.uniform(8)
    for j, ax in enumerate((grid.kappa, grid.psi, grid.alpha)):
        assert np.all((out[:, j] >= ax.low - 1e-9) & (out[:, j] <= ax.high + 1e-9))
    np.testing.assert_array_equal(predict_chain(rc, H[0]), predict_chain(rc, H[0]))
    np.testing.assert_array_equal(predict_chain(rc, H[0]), out[0])
    with pytest.raises(ValueError):
        predict_chain(rc, [0.1, 0.1])


def test_chain_order_feeds_predictions(small_chains):
    rc = small_chains["rc"]
    h = np.array([0.1, 0.12])
    k, p, a = predict_chain(rc, h)
    assert rc.models[0].predict(h[None])[0] == k
    assert rc.models[1].predict(np.r_[h, np.log(k)][None])[0] == p
    assert rc.models[2].predict(np.r_[h, np.log(k), np.log(p)][None])[0] == a


def test_chain_warns_outside_hull(small_chains):
    rc = small_chains["rc"]
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        predict_chain(rc, rc.h_min + 0.5 * (rc.h_max - rc.h_min))
    with pytest.warns(OutsideHullWarning):
        out = predict_chain(rc, rc.h_max * 3)
    assert np.all(out > 0)


def test_chain_save_load(tmp_path, small_chains, small_data):
    rc = small_chains["rc-delta"]
    p = tmp_path / "m.json"
    rc.save(p)
    back = RegressorChain.load(p)
    H = small_data.features(True)
    np.testing.assert_array_equal(predict_chain(back, H), predict_chain(rc, H))
    assert back.variant == "rc-delta"


def test_chain_load_rejects_other_version(tmp_path, small_chains):
    d = small_chains["rc"].to_dict()
    d["format_version"] = 7
    with pytest.raises(ValueError, match="format_version"):
        RegressorChain.from_dict(d)


def test_chain_nmse_keys(small_chains, small_data):
    tf = chain_nmse(small_chains["rc-delta"], small_data)
    ch = chain_nmse(small_chains["rc-delta"], small_data, chained=True)
    assert set(tf) == set(ch) == {"Y1", "Y2", "Y3"}
    assert tf["Y1"] == ch["Y1"]  # the first link has no upstream input


def test_median_descriptor_achieves_requested_clearance(desk_chains, desk_data):
    rc = desk_chains["rc-delta"]
    h = np.median(desk_data.lp, axis=0)
    kappa, psi, alpha = predict_chain(rc, np.r_[h, 0.15])
    res = rollout_batch([0, 0, 0], [1, 0, 0], [scenario_obstacle(h)], alpha, psi, kappa)
    assert not res.collided[0]
    assert res.clearance[0] == pytest.approx(0.15, abs=0.05)
