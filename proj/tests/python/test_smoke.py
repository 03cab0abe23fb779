import math

import numpy as np
import pytest

import topnrank as tr


def small_dataset():
    rows = []
    rng = np.random.default_rng(3)
    for u in range(12):
        for i in rng.choice(25, size=10, replace=False):
            rows.append((f"u{u}", f"i{i}", float(rng.integers(1, 6))))
    return tr.Dataset.from_ratings(rows, threshold=4.0)


def test_dataset_and_split():
    ds = small_dataset()
    assert ds.n_users == 12
    assert ds.n_interactions == 120
    train, test = ds.split(seed=5)
    assert train.n_interactions == test.n_interactions == 60
    assert train.item_ids == ds.item_ids
    assert all(w in (1.0, -1.0) for _, _, w, _ in ds.user(0))


def test_ndcg_three_items():
    value = tr.ndcg_at_n([0.9, 0.5, 0.1], [1, 0, 1], cutoff=3)
    expected = (1 / math.log(2) + 1 / math.log(4)) / (1 / math.log(2) + 1 / math.log(3))
    assert value == pytest.approx(expected, abs=1e-12)
    assert tr.ndcg_at_n([0.9, 0.5, 0.1], [1, 0, 1], cutoff=3, log_base=2.0) == pytest.approx(value, abs=1e-12)
    assert tr.ndcg_at_n([0.3, 0.2], [0, 0], cutoff=2) is None


def test_init_model_statistics():
    model = tr.init_model(300, 300, 10, seed=11)
    b = tr.relu_init_width(10)
    scores = model.user_factors @ model.item_factors.T
    assert scores.mean() == pytest.approx(10 * b * b / 4, rel=0.05)
    assert model.user_factors.min() >= 0.0 and model.item_factors.max() < b


def test_fast_step_matches_generic_step():
    ds = small_dataset()
    start = tr.init_model(ds.n_users, ds.n_items, 4, seed=2)
    fast, generic = start.copy(), start.copy()
    batch = list(range(ds.n_users))
    fast_ops = tr.sgd_step(fast, ds, batch, tr.TrainConfig(k=4, algorithm="fast-relu"))
    generic_ops = tr.sgd_step(generic, ds, batch, tr.TrainConfig(k=4, algorithm="generic"))
    np.testing.assert_allclose(fast.user_factors, generic.user_factors, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(fast.item_factors, generic.item_factors, rtol=1e-9, atol=1e-12)
    assert fast_ops["pair_evals"] == 0 and generic_ops["pair_evals"] > 0


def test_gradient_against_finite_differences():
    ds = small_dataset()
    model = tr.init_model(ds.n_users, ds.n_items, 3, seed=4)
    config = tr.TrainConfig(k=3, smoothing="sigmoid")
    _, du, _ = tr.loss_and_gradient(model, ds, config)
    h = 1e-5
    for u, t in [(0, 0), (3, 2), (7, 1)]:
        plus, minus = model.copy(), model.copy()
        up, um = plus.user_factors, minus.user_factors
        up[u, t] += h
        um[u, t] -= h
        plus.user_factors, minus.user_factors = up, um
        numeric = (tr.objective(plus, ds, config) - tr.objective(minus, ds, config)) / (2 * h)
        assert du[u, t] == pytest.approx(numeric, rel=1e-4, abs=1e-8)


def test_train_evaluate_and_checkpoint(tmp_path):
    ds = small_dataset()
    train, test = ds.split(seed=1)
    model, log = tr.train(train, tr.TrainConfig(k=4, max_iters=5, lr=0.01, track_full_loss=True))
    assert len(log["iterations"]) <= 5
    assert log["stop_reason"] in ("max_iters", "converged")
    report = tr.evaluate(model, test, cutoffs=[1, 5])
    assert report["cutoffs"] == [1, 5]
    assert all(0.0 <= m <= 1.0 for m in report["mean"])
    path = tmp_path / "model.tnrk"
    tr.save_model(path, model, train)
    assert tr.load_model(path) == model


def test_errors_surface_as_python_exceptions(tmp_path):
    with pytest.raises(ValueError):
        tr.TrainConfig(smoothing="sigmoid", algorithm="fast-relu")
    with pytest.raises(TypeError):
        tr.TrainConfig(colour="blue")
    bad = tmp_path / "bad.csv"
    bad.write_text("userId,movieId,rating\n1,2,nope\n")
    with pytest.raises(tr.ParseError):
        tr.Dataset.from_file(bad)
    with pytest.raises(tr.IoError):
        tr.load_model(tmp_path / "missing.tnrk")


def test_benchmark_rows():
    rows = tr.benchmark_scaling([10, 20], n_users=4, k=3, trials=1)
    assert [r["algorithm"] for r in rows] == ["generic", "fast-relu", "generic", "fast-relu"]
    assert rows[2]["counters"]["pair_evals"] == 4 * 4 * 20 * 19
