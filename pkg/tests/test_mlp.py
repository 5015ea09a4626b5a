import numpy as np
import pytest

from folkdsp import mlp
from folkdsp.errors import DataError, SchemaError, ShapeError, TrainingDiverged

from conftest import finite_difference_worst_error


def toy_two_cluster(seed=0, margin=3.0):
    """10 linearly separable points in 26-D, 5 per class."""
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(+margin, 0.3, (5, 26)), rng.normal(-margin, 0.3, (5, 26))])
    return X, [0] * 5 + [1] * 5


class TestInit:
    def test_deterministic(self):
        a = mlp.init(9)
        b = mlp.init(9)
        for wa, wb in zip(a.weights, b.weights):
            assert np.array_equal(wa, wb)

    def test_layer_shapes(self):
        model = mlp.init(0)
        assert [w.shape for w in model.weights] == [(26, 256), (256, 128), (128, 64), (64, 6)]

    def test_biases_zero(self):
        model = mlp.init(0)
        assert all(np.all(b == 0.0) for b in model.biases)

    def test_glorot_bounds(self):
        model = mlp.init(3)
        for w in model.weights:
            bound = np.sqrt(6.0 / sum(w.shape))
            assert np.max(np.abs(w)) <= bound


class TestForward:
    def test_zero_parameters_give_uniform(self):
        model = mlp.init(0)
        for w in model.weights:
            w[:] = 0.0
        probs = mlp.forward(model, np.zeros(26))
        assert probs == pytest.approx(np.full(6, 1 / 6), abs=1e-12)

    def test_logit_shift_invariance(self):
        model = mlp.init(1)
        x = np.random.default_rng(2).normal(0, 1, 26)
        before = mlp.forward(model, x)
        model.biases[-1] += 10.0  # constant added to every output logit
        after = mlp.forward(model, x)
        assert np.max(np.abs(before - after)) < 1e-12

    def test_matches_exp_sum_oracle(self):
        model = mlp.init(4, layer_sizes=(26, 8, 8, 6))
        x = np.random.default_rng(5).normal(0, 1, 26)
        h = x
        for w, b in zip(model.weights[:-1], model.biases[:-1]):
            h = np.maximum(0.0, h @ w + b)
        logits = h @ model.weights[-1] + model.biases[-1]
        oracle = np.exp(logits) / np.exp(logits).sum()
        assert mlp.forward(model, x) == pytest.approx(oracle, abs=1e-12)

    def test_large_logits_stay_finite(self):
        model = mlp.init(0)
        model.biases[-1][:] = [500.0, -500.0, 0.0, 0.0, 0.0, 0.0]
        probs = mlp.forward(model, np.zeros(26))
        assert np.all(np.isfinite(probs))
        assert probs.sum() == pytest.approx(1.0, abs=1e-9)

    def test_nonfinite_input_rejected(self):
        model = mlp.init(0)
        bad = np.zeros(26)
        bad[0] = np.inf
        with pytest.raises(DataError):
            mlp.forward(model, bad)

    def test_wrong_width_rejected(self):
        with pytest.raises(ShapeError):
            mlp.forward(mlp.init(0), np.zeros(7))


class TestGradients:
    def test_matches_central_differences(self):
        model = mlp.init(3, layer_sizes=(26, 8, 8, 6))
        rng = np.random.default_rng(3)
        X = rng.normal(0.0, 1.0, (5, 26))
        y = np.array([0, 1, 2, 3, 4])
        worst = finite_difference_worst_error(model, X, y, h=1e-5)
        assert worst < 1e-4

    def test_loss_non_increasing_small_steps(self):
        X, y_labels = toy_two_cluster()
        model = mlp.init(0, layer_sizes=(26, 16, 16, 2), class_order=(0, 1))
        y = np.array(y_labels)
        losses = [mlp.cross_entropy(model, X, y)]
        for _ in range(10):
            gw, gb = mlp.gradients(model, X, y)
            for w, g in zip(model.weights, gw):
                w -= 1e-4 * g
            for b, g in zip(model.biases, gb):
                b -= 1e-4 * g
            losses.append(mlp.cross_entropy(model, X, y))
        assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))


class TestTrain:
    def test_toy_convergence(self):
        X, y = toy_two_cluster()
        model = mlp.init(0, class_order=tuple(range(6)))
        config = mlp.TrainConfig(epochs=200, batch_size=16, learning_rate=1e-3, seed=0)
        _, report = mlp.train(model, (X, y), (X, y), config)
        assert report.train_loss[-1] < 0.1

    def test_zero_learning_rate_is_identity(self):
        X, y = toy_two_cluster()
        model = mlp.init(1, class_order=tuple(range(6)))
        before = [w.copy() for w in model.weights] + [b.copy() for b in model.biases]
        trained, _ = mlp.train(model, (X, y), (X, y), mlp.TrainConfig(epochs=5, learning_rate=0.0, seed=0))
        after = trained.weights + trained.biases
        for a, b in zip(before, after):
            assert np.array_equal(a, b)

    def test_deterministic_reports(self):
        X, y = toy_two_cluster(seed=2)
        config = mlp.TrainConfig(epochs=20, batch_size=4, learning_rate=1e-3, seed=5)
        _, r1 = mlp.train(mlp.init(3, class_order=tuple(range(6))), (X, y), (X, y), config)
        _, r2 = mlp.train(mlp.init(3, class_order=tuple(range(6))), (X, y), (X, y), config)
        assert r1.train_loss == r2.train_loss
        assert r1.val_loss == r2.val_loss
        assert r1.val_accuracy == r2.val_accuracy
        assert r1.best_epoch == r2.best_epoch

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")  # overflow is the point
    def test_divergence_raises_with_epoch(self):
        X, y = toy_two_cluster()
        model = mlp.init(0, class_order=tuple(range(6)))
        config = mlp.TrainConfig(epochs=10, batch_size=4, learning_rate=1e18, seed=0)
        with pytest.raises(TrainingDiverged) as err:
            mlp.train(model, (X * 1e6, y), (X, y), config)
        assert err.value.epoch >= 1

    def test_best_epoch_checkpoint_returned(self):
        X, y = toy_two_cluster(seed=4)
        config = mlp.TrainConfig(epochs=30, batch_size=4, learning_rate=1e-3, seed=1)
        trained, report = mlp.train(mlp.init(2, class_order=tuple(range(6))), (X, y), (X, y), config)
        best_val = min(report.val_loss)
        assert report.val_loss[report.best_epoch - 1] == best_val
        got = mlp.cross_entropy(trained, X, np.array(y))
        assert got == pytest.approx(best_val, rel=1e-9)

    def test_unknown_label_rejected(self):
        X, y = toy_two_cluster()
        model = mlp.init(0, class_order=(10, 11))
        with pytest.raises(ShapeError):
            mlp.train(model, (X, y), (X, y), mlp.TrainConfig(epochs=1))


class TestPredict:
    def test_tie_breaks_to_first_class(self):
        model = mlp.init(0, class_order=("Bambuco", "Carranga", "Cumbia", "Joropo", "Pasillo", "Vallenato"))
        for w in model.weights:
            w[:] = 0.0
        label, probs = mlp.predict(model, np.zeros(26))
        assert label == "Bambuco"
        assert probs.sum() == pytest.approx(1.0, abs=1e-9)

    def test_one_hot_logits(self):
        model = mlp.init(0)
        for w in model.weights:
            w[:] = 0.0
        model.biases[-1][:] = [0, 0, 0, 50, 0, 0]
        label, probs = mlp.predict(model, np.zeros(26))
        assert label == 3
        assert probs[3] > 0.999999


class TestSerialization:
    def test_roundtrip(self, tmp_path):
        model = mlp.init(6, layer_sizes=(26, 8, 8, 6), class_order=tuple("abcdef"))
        path = tmp_path / "mlp.json"
        mlp.save_mlp(model, path, extra={"k": 1})
        loaded, extra = mlp.load_mlp(path)
        assert extra == {"k": 1}
        assert loaded.layer_sizes == model.layer_sizes
        assert loaded.class_order == model.class_order
        x = np.random.default_rng(0).normal(0, 1, 26)
        assert mlp.forward(loaded, x) == pytest.approx(mlp.forward(model, x), abs=0)

    def test_unknown_schema_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"schema": "folkdsp-mlp/default"}')
        with pytest.raises(SchemaError):
            mlp.load_mlp(path)

    def test_report_csv(self, tmp_path):
        X, y = toy_two_cluster()
        _, report = mlp.train(
            mlp.init(0, class_order=tuple(range(6))), (X, y), (X, y), mlp.TrainConfig(epochs=3)
        )
        path = tmp_path / "report.csv"
        mlp.report_to_csv(report, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "epoch,train_loss,val_loss,val_acc"
        assert len(lines) == 4
