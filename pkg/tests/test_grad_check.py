import sys
import unittest
from pathlib import Path

import numpy as np

top_dir = Path(__file__).parent.parent

sys.path.append(str(top_dir))
from components.grad_check_system import grad_check, relative_error
from components.models_system import ModelSpec, build
from utils.exceptions import GradientCheckError

TOY_CNN = ModelSpec(kind="cnn", max_words=10, embedding_dim=4, max_length=7, filters=3, kernel_size=3,
                    dense_units=5)
TOY_BILSTM = ModelSpec(kind="bilstm", max_words=10, embedding_dim=4, max_length=5, units=4, dense_units=5)


def toy_batch(spec, seed=0):
    rng = np.random.default_rng(seed)
    return rng.integers(0, spec.max_words, size=(2, spec.max_length)), np.array([0, 2])


class TestGradCheck(unittest.TestCase):
    def test_cnn(self):
        model = build(TOY_CNN, seed=3)
        report = grad_check(model, toy_batch(TOY_CNN))
        self.assertTrue(report.passed, f"worst block {report.worst_block}: {report.worst_error:.3e}")
        self.assertEqual(set(report.errors), set(model.parameters()))

    def test_bilstm(self):
        model = build(TOY_BILSTM, seed=4)
        report = grad_check(model, toy_batch(TOY_BILSTM, seed=1))
        self.assertTrue(report.passed, f"worst block {report.worst_block}: {report.worst_error:.3e}")
        self.assertIn("bilstm.reverse_recurrent_weights", report.errors)

    def test_bilstm_max_pooling(self):
        spec = ModelSpec(kind="bilstm", max_words=10, embedding_dim=4, max_length=5, units=4, dense_units=5,
                         bilstm_pooling="max")
        report = grad_check(build(spec, seed=5), toy_batch(spec, seed=2))
        self.assertTrue(report.passed, f"worst block {report.worst_block}: {report.worst_error:.3e}")

    def test_zero_loss_batch(self):
        model = build(TOY_CNN, seed=6)
        model.parameters()["output.bias"][:] = [0.0, 0.0, 60.0]
        ids, _ = toy_batch(TOY_CNN)
        loss = model.loss_and_gradients(ids, np.array([2, 2]), training=False)
        self.assertLess(loss, 1e-20)
        for name, grad in model.gradients().items():
            self.assertLess(np.abs(grad).max(), 1e-15, name)

    def test_failure_names_worst_block(self):
        model = build(TOY_CNN, seed=7)
        original = model.loss_and_gradients

        def broken(*args, **kwargs):
            loss = original(*args, **kwargs)
            model.gradients()["output.bias"][:] *= 3.0
            return loss

        model.loss_and_gradients = broken
        with self.assertRaises(GradientCheckError) as ctx:
            grad_check(model, toy_batch(TOY_CNN))
        self.assertEqual(ctx.exception.worst_block, "output.bias")

    def test_relative_error(self):
        self.assertEqual(relative_error(np.zeros(3), np.zeros(3)), 0.0)
        self.assertAlmostEqual(relative_error(np.ones(2), np.ones(2) * 1.01), 0.01 / 2.01, places=12)


if __name__ == '__main__':
    unittest.main()
