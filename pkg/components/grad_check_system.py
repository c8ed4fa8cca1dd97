import logging
from dataclasses import dataclass, field

import numpy as np

from utils.exceptions import GradientCheckError

logger = logging.getLogger(__name__)

STEP = 1e-5
NORM_FLOOR = 1e-8


@dataclass
class GradCheckReport:
    tolerance: float
    errors: dict = field(default_factory=dict)
    analytic_norms: dict = field(default_factory=dict)

    @property
    def worst_block(self):
        return max(self.errors, key=self.errors.get) if self.errors else None

    @property
    def worst_error(self):
        return self.errors[self.worst_block] if self.errors else 0.0

    @property
    def passed(self):
        return self.worst_error <= self.tolerance


def relative_error(analytic, numeric):
    """
    Norm-based relative error between two gradient blocks; blocks that are both near zero compare as equal.
    """
    difference = np.linalg.norm(analytic - numeric)
    scale = max(np.linalg.norm(analytic) + np.linalg.norm(numeric), NORM_FLOOR)
    return float(difference / scale)


def grad_check(model, batch, tolerance=1e-4, seed=0, step=STEP, raise_on_failure=True):
    """
    Compare the model's hand-written gradients with central finite differences, block by block.
    Dropout stays active with a generator re-seeded for every evaluation, so each pass sees the same mask.
    :param model: SentimentModel (anything with parameters(), gradients(), loss_and_gradients())
    :param batch: (ids [B x L], targets [B])
    :param tolerance: largest accepted relative error per block
    :param seed: seed for the dropout generator
    :param step: finite-difference step h
    :param raise_on_failure: raise GradientCheckError naming the worst block when above tolerance
    :return: GradCheckReport
    """
    ids, targets = batch

    def loss_at():
        return model.loss_and_gradients(ids, targets, training=True, rng=np.random.default_rng(seed))

    loss_at()
    analytic = {name: grad.copy() for name, grad in model.gradients().items()}

    report = GradCheckReport(tolerance=tolerance)
    for name, param in model.parameters().items():
        numeric = np.zeros_like(param)
        flat_param = param.reshape(-1)
        flat_numeric = numeric.reshape(-1)
        for index in range(flat_param.size):
            original = flat_param[index]
            flat_param[index] = original + step
            loss_plus = loss_at()
            flat_param[index] = original - step
            loss_minus = loss_at()
            flat_param[index] = original
            flat_numeric[index] = (loss_plus - loss_minus) / (2.0 * step)

        report.errors[name] = relative_error(analytic[name], numeric)
        report.analytic_norms[name] = float(np.linalg.norm(analytic[name]))
        logger.debug(f"Gradient check {name}: relative error {report.errors[name]:.3e}")

    # leave the model's gradients as the analytic ones
    loss_at()

    logger.info(f"Gradient check worst block {report.worst_block}: {report.worst_error:.3e}")
    if raise_on_failure and not report.passed:
        raise GradientCheckError(report.worst_block, report.worst_error, tolerance)
    return report
