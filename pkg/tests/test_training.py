import math

import numpy as np
import pytest

from featattn import model as nn
from featattn.data import Cohort, PlantedSignal, default_schema, generate_synthetic_cohort, standardize
from featattn.errors import DegenerateCohortError, DomainError, ParameterError, ShapeError
from featattn.numerics import RandomSource
from featattn.training import (
    AdamState,
    LogisticModel,
    TrainConfig,
    adam_step,
    bce_loss,
    evaluate,
    metrics_from_predictions,
    minibatches,
    train,
    train_logistic_baseline,
)

from conftest import random_scaled_values


def separable_split(n=200, seed=0):
    """Label equals the PTA flag: separable by one embedding row."""
    s = default_schema()
    rng = RandomSource(seed)
    v = random_scaled_values(s, n, rng)
    y = v[:, s.index("PTA")].astype(np.int64)
    c = Cohort(s, v, y, scaled=True)
    return c.subset(np.arange(0, 160)), c.subset(np.arange(160, n))


class TestBce:
    def test_perfect(self):
        assert bce_loss([1.0, 0.0], [1, 0]) <= -math.log(1 - 1e-7) + 1e-15

    def test_half(self):
        assert abs(bce_loss([0.5] * 4, [0, 1, 1, 0]) - math.log(2)) < 1e-15

    def test_formula(self):
        assert abs(bce_loss([0.9], [0]) - 2.302585092994046) < 1e-12

    def test_saturated_is_finite(self):
        assert math.isfinite(bce_loss([0.0, 1.0], [1, 0]))

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            bce_loss([0.5, 0.5], [1])


class TestAdam:
    def test_zero_gradient(self):
        w = {"a": np.array([1.0, -2.0])}
        st = AdamState()
        adam_step(w, {"a": np.array([3.0, 3.0])}, st, 0.1)
        before = w["a"].copy()
        m_before = st.m["a"].copy()
        adam_step(w, {"a": np.zeros(2)}, st, 0.0)
        np.testing.assert_array_equal(w["a"], before)
        np.testing.assert_allclose(st.m["a"], 0.9 * m_before)

    def test_zero_gradient_from_start(self):
        w = {"a": np.array([1.0, -2.0])}
        adam_step(w, {"a": np.zeros(2)}, AdamState(), 0.1)
        np.testing.assert_array_equal(w["a"], [1.0, -2.0])

    def test_constant_gradient_step_tends_to_lr(self):
        w = {"a": np.zeros(3)}
        g = {"a": np.array([0.5, -2.0, 1e-3])}
        st = AdamState()
        for _ in range(2000):
            prev = w["a"].copy()
            adam_step(w, g, st, 0.01)
        step = w["a"] - prev
        np.testing.assert_allclose(step, -0.01 * np.sign(g["a"]), rtol=1e-4)

    def test_first_step_is_lr(self):
        # bias correction makes the first step exactly lr * g/|g| (up to eps)
        w = {"a": np.zeros(2)}
        adam_step(w, {"a": np.array([4.0, -0.25])}, AdamState(), 0.001)
        np.testing.assert_allclose(w["a"], [-0.001, 0.001], rtol=1e-7)

    def test_flat_matches_per_array(self, schema):
        p1 = nn.init_params(schema, nn.ModelConfig(), RandomSource(0))
        p2 = p1.copy()
        rng = RandomSource(1)
        s1, s2 = AdamState(), AdamState()
        for _ in range(3):
            g = {k: rng.gaussian(size=v.shape) for k, v in p1.weights.items()}
            adam_step(p1.weights, g, s1, 0.01)
            adam_step(p2.weights, g, s2, 0.01, flat=p2.flat)
        np.testing.assert_allclose(p2.flat, p1.flat, rtol=0, atol=1e-15)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            adam_step({"a": np.zeros(2)}, {"a": np.zeros(3)}, AdamState(), 0.1)


class TestMinibatches:
    def test_cover_every_index_once(self):
        b = minibatches(101, 10, RandomSource(0))
        assert sorted(np.concatenate(b).tolist()) == list(range(101))
        assert all(len(x) >= 2 for x in b)
        assert len(b[-1]) == 11


class TestTrain:
    def test_separable_reaches_full_accuracy(self):
        tr, va = separable_split()
        _, _, rep = train(tr, va, TrainConfig(epochs=100, seed=0))
        assert rep.column("train_acc").max() == 1.0
        assert rep.final_train.accuracy == 1.0

    def test_zero_learning_rate(self):
        tr, va = separable_split()
        cfg = TrainConfig(epochs=3, lr=0.0, dropout=0.0)
        params, _, rep = train(tr, va, cfg)
        init = nn.init_params(tr.schema, cfg.model_config(), RandomSource(0).spawn())
        np.testing.assert_array_equal(params.flat, init.flat)
        # batch-norm running statistics still move, but with no weight change the
        # curves settle once they converge; the weights themselves never move
        assert len(rep.records) == 3

    def test_deterministic_report(self):
        tr, va = separable_split()
        cfg = TrainConfig(epochs=5, seed=4)
        p1, _, r1 = train(tr, va, cfg)
        p2, _, r2 = train(tr, va, cfg)
        assert r1.curves_csv() == r2.curves_csv()
        assert p1.flat.tobytes() == p2.flat.tobytes()

    def test_record_count_and_ranges(self):
        tr, va = separable_split()
        _, _, rep = train(tr, va, TrainConfig(epochs=7))
        assert [r.epoch for r in rep.records] == list(range(1, 8))
        for col in ("train_acc", "val_acc"):
            v = rep.column(col)
            assert np.all((v >= 0) & (v <= 1))
        assert rep.curves_csv().splitlines()[0] == "epoch,train_loss,train_acc,val_loss,val_acc"

    def test_patience_stops_early(self):
        tr, va = separable_split()
        _, _, rep = train(tr, va, TrainConfig(epochs=200, lr=0.0, patience=2))
        assert len(rep.records) < 200

    def test_loss_decreases_on_planted_signal(self):
        from featattn import pipeline

        c = generate_synthetic_cohort(default_schema(), 300, PlantedSignal({"Diabetes": 3.0}), RandomSource(1))
        _, rep, _ = pipeline.run(c, TrainConfig(epochs=30))
        loss = rep.column("train_loss")
        assert np.median(loss[-10:]) < np.median(loss[:10])

    def test_degenerate(self):
        tr, va = separable_split()
        one_class = tr.subset(np.flatnonzero(tr.labels == 1))
        with pytest.raises(DegenerateCohortError):
            train(one_class, va, TrainConfig(epochs=1))

    def test_invalid_config(self):
        with pytest.raises(ParameterError):
            TrainConfig(epochs=0)
        with pytest.raises(ParameterError):
            TrainConfig(val_fraction=1.0)
        assert TrainConfig.from_dict(TrainConfig(hidden=(4,)).to_dict()) == TrainConfig(hidden=(4,))


class TestEvaluate:
    def test_all_correct(self):
        m = metrics_from_predictions([0.9, 0.1, 0.8], [1, 0, 1])
        assert (m.accuracy, m.sensitivity, m.specificity) == (1.0, 1.0, 1.0)

    def test_half_counts_as_positive(self):
        y = np.array([1, 0, 0, 1, 1])
        m = metrics_from_predictions(np.full(5, 0.5), y)
        assert m.accuracy == y.mean()
        assert m.fn == 0 and m.tn == 0

    def test_random_model_random_labels(self, schema, default_params):
        rng = RandomSource(12)
        c = Cohort(schema, random_scaled_values(schema, 1000, rng), rng.integers(0, 2, size=1000), scaled=True)
        m = evaluate(default_params, None, c)
        assert abs(m.accuracy - 0.5) < 0.05
        assert m.accuracy == (m.tp + m.tn) / m.n

    def test_raw_cohort_uses_stats(self, default_params):
        c = generate_synthetic_cohort(default_schema(), 100, PlantedSignal(), RandomSource(0))
        scaled, stats = standardize(c)
        assert evaluate(default_params, stats, c) == evaluate(default_params, None, scaled)
        with pytest.raises(DomainError):
            evaluate(default_params, None, c)

    def test_empty(self, schema, default_params):
        with pytest.raises(DomainError):
            evaluate(default_params, None, Cohort(schema, np.empty((0, 23)), [], scaled=True))


class TestLogisticBaseline:
    def test_separable(self):
        tr, va = separable_split()
        model, rep = train_logistic_baseline(tr, va, TrainConfig(epochs=100, lr=0.05))
        assert rep.final_train.accuracy == 1.0
        assert rep.final_val.accuracy == 1.0
        assert isinstance(model, LogisticModel)
        assert rep.model_kind == "logistic"

    def test_gradients_match_finite_differences(self, schema):
        from featattn.numerics import finite_diff_grad
        from featattn.training import bce_loss as loss

        rng = RandomSource(3)
        m = LogisticModel.init(schema, rng)
        m.weights["W"][:] = rng.gaussian(0, 0.3, size=m.weights["W"].shape)
        x = random_scaled_values(schema, 7, rng)
        y = np.array([1, 0, 1, 1, 0, 0, 1.0])
        g = m.gradients(x, y)
        for key in ("W", "b"):
            def f(z, key=key):
                old = m.weights[key].copy()
                m.weights[key][:] = z
                out = loss(m.predict_proba(x), y, 1e-300)
                m.weights[key][:] = old
                return out

            num = finite_diff_grad(f, m.weights[key].copy())
            np.testing.assert_allclose(g[key], num, rtol=1e-6, atol=1e-9)
