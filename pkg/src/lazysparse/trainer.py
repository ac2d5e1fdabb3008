"""Logistic-regression trainers: lazy (O(p) per example) and dense baselines.

Update convention shared by every trainer: at step ``t`` the touched
coordinates get the loss-gradient step at rate ``eta(t)``, and the
regularization step ``t`` is applied to *all* coordinates afterwards.
The lazy trainer defers that regularization until a coordinate is next
touched (or flushed); the dense trainers apply it to every coordinate at
the start of step ``t + 1``. The two orderings perform the same per
coordinate arithmetic and differ only in how the regularization of an
untouched stretch is grouped.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from .data import Dataset, SparseExample
from .errors import ContractViolation
from .kernels import (
    Algo,
    Penalty,
    RegConfig,
    lazy_elastic_fobos,
    lazy_elastic_sgd,
    lazy_identity,
    lazy_l1_sgd,
    lazy_l2sq_fobos,
    lazy_l2sq_sgd,
    select_kernel,
    validate_config,
)
from .schedule import Schedule, ScheduleCache

__all__ = [
    "TrainReport",
    "TrainerState",
    "sigmoid",
    "predict_proba",
    "objective",
    "train",
    "train_dense",
    "dense_regularizer",
]

log = logging.getLogger(__name__)


def sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _log1pexp(z: float) -> float:
    # log(1 + e^z) without overflow
    if z > 0:
        return z + math.log1p(math.exp(-z))
    return math.log1p(math.exp(z))


@dataclass
class TrainReport:
    epochs_run: int
    final_loss: float
    nonzero_weights: int
    per_example_seconds: float
    flush_count: int
    steps: int = 0
    # weight-table element reads + writes made inside training steps (flushes excluded)
    step_touches: int = 0
    max_step_touches: int = 0
    flush_touches: int = 0

    def summary(self) -> str:
        return (
            f"epochs={self.epochs_run} final_loss={self.final_loss:.17g} "
            f"nonzeros={self.nonzero_weights} per_example_seconds={self.per_example_seconds:.6g} "
            f"flush_count={self.flush_count}"
        )


# Hot-loop form of each kernel: every lazy update is
#   sgn(w) * [|w| * M(k-1)/M(psi-1) - l1 * M(k-1) * (Q(k-1) - Q(psi-1))]_+
# for a product table M and a sum table Q; modes drop the unused parts.
_NONE, _SUM_ONLY, _PRODUCT_ONLY, _AFFINE = range(4)
_INLINE = {
    lazy_identity: (_NONE, None, None),
    lazy_l1_sgd: (_SUM_ONLY, None, "S"),
    lazy_l2sq_sgd: (_PRODUCT_ONLY, "P", None),
    lazy_elastic_sgd: (_AFFINE, "P", "B"),
    lazy_l2sq_fobos: (_PRODUCT_ONLY, "Phi", None),
    lazy_elastic_fobos: (_AFFINE, "Phi", "Beta"),
}


class TrainerState:
    """Weights, per-coordinate timestamps and the schedule cache of the lazy trainer.

    ``psi[j] == t`` means ``w[j]`` holds every regularization step before
    ``t``; steps ``t .. clock-1`` are still pending.
    """

    def __init__(self, d: int, cfg: RegConfig, sched: Schedule, flush_budget: int | None = None):
        validate_config(cfg, sched)
        if flush_budget is not None and flush_budget < 1:
            raise ContractViolation(f"flush_budget must be positive, got {flush_budget}")
        self.d = d
        self.cfg = cfg
        self.sched = sched
        self.flush_budget = flush_budget
        self.kernel, tables = select_kernel(cfg)
        self._mode, self._product, self._sum = _INLINE[self.kernel]
        self.cache = ScheduleCache(sched, cfg.lambda2, tables)
        self.w = [0.0] * d
        self.psi = [0] * d
        self.clock = 0
        # coordinates that may hold a nonzero weight; zero is absorbing, so
        # flushing only has to visit these
        self.support: set[int] = set()
        self.since_flush = 0
        self.flush_count = 0
        self.step_touches = 0
        self.max_step_touches = 0
        self.flush_touches = 0

    def bring_current(self, j: int, k: int | None = None) -> float:
        """Apply the pending regularization of coordinate ``j`` up to step ``k``."""
        k = self.clock if k is None else k
        if not (self.psi[j] <= k <= self.clock):
            raise ContractViolation(f"cannot bring {j} from {self.psi[j]} to {k} (clock {self.clock})")
        wj = self.w[j]
        if wj != 0.0:
            wj = self.kernel(wj, self.psi[j], k, self.cfg, self.cache)
            self.w[j] = wj
        self.psi[j] = k
        return wj

    def pending(self) -> int:
        """Total count of deferred single-step updates on nonzero weights."""
        clock = self.clock
        return sum(clock - self.psi[j] for j in self.support if self.w[j] != 0.0)

    def predict(self, x: SparseExample) -> float:
        """P(y = +1 | x), bringing the features of ``x`` current first."""
        s = 0.0
        for j, v in zip(x.indices, x.values):
            s += self.bring_current(j) * v
        return sigmoid(s)

    def sgd_step(self, x: SparseExample, y: int) -> None:
        """One example: bring its features current, then take the loss-gradient step.

        The catch-up uses the same arithmetic as ``self.kernel`` with the
        step-``t`` table entries hoisted out of the feature loop.
        """
        t = self.clock
        w, psi, cache = self.w, self.psi, self.cache
        mode = self._mode
        idx, vals = x.indices, x.values
        s = 0.0
        # A zero weight stays zero under every penalty here, so only nonzero
        # weights need catching up. psi is written in the gradient loop below.
        if mode == _NONE:
            for j, v in zip(idx, vals):
                s += w[j] * v
        else:
            base = cache.base
            jt = t - base
            if mode == _PRODUCT_ONLY:
                M = getattr(cache, self._product)
                Mk = M[jt]
                for j, v in zip(idx, vals):
                    wj = w[j]
                    if wj != 0.0:
                        i = psi[j] - base
                        if i != jt:
                            wj = wj * (Mk / M[i])
                            w[j] = wj
                        s += wj * v
            elif mode == _SUM_ONLY:
                Q = getattr(cache, self._sum)
                Qk = Q[jt]
                l1 = self.cfg.lambda1
                for j, v in zip(idx, vals):
                    wj = w[j]
                    if wj != 0.0:
                        i = psi[j] - base
                        if i != jt:
                            if wj > 0.0:
                                m = wj - l1 * (Qk - Q[i])
                                wj = m if m > 0.0 else 0.0
                            else:
                                m = -wj - l1 * (Qk - Q[i])
                                wj = -m if m > 0.0 else 0.0
                            w[j] = wj
                        s += wj * v
            else:
                M = getattr(cache, self._product)
                Q = getattr(cache, self._sum)
                Mk, Qk = M[jt], Q[jt]
                l1Mk = self.cfg.lambda1 * Mk  # same rounding as l1 * Mk * (...)
                for j, v in zip(idx, vals):
                    wj = w[j]
                    if wj != 0.0:
                        i = psi[j] - base
                        if i != jt:
                            if wj > 0.0:
                                m = wj * (Mk / M[i]) - l1Mk * (Qk - Q[i])
                                wj = m if m > 0.0 else 0.0
                            else:
                                m = -wj * (Mk / M[i]) - l1Mk * (Qk - Q[i])
                                wj = -m if m > 0.0 else 0.0
                            w[j] = wj
                        s += wj * v
        if not math.isfinite(s):
            raise ContractViolation(f"non-finite margin {s!r} at step {t}")
        coef = self.sched.rate(t) * y * sigmoid(-y * s)
        for j, v in zip(idx, vals):
            w[j] += coef * v
            psi[j] = t
        self.support.update(idx)

        touches = 2 * len(idx)
        self.step_touches += touches
        if touches > self.max_step_touches:
            self.max_step_touches = touches
        self.clock = t + 1
        self.since_flush += 1
        cache.extend_to(t)
        if cache.needs_rebase or (
            self.flush_budget is not None and self.since_flush >= self.flush_budget
        ):
            self.flush()

    def flush(self) -> None:
        """Bring every weight current to ``clock`` and restart the cache there."""
        k = self.clock
        w, psi, kernel, cfg, cache = self.w, self.psi, self.kernel, self.cfg, self.cache
        emptied = []
        for j in self.support:
            wj = w[j]
            if wj != 0.0 and psi[j] != k:
                wj = kernel(wj, psi[j], k, cfg, cache)
                w[j] = wj
                self.flush_touches += 2
            if wj == 0.0:
                emptied.append(j)
        self.support.difference_update(emptied)
        self.psi = [k] * self.d
        cache.rebase(k)
        self.since_flush = 0
        self.flush_count += 1

    def weights(self) -> np.ndarray:
        return np.array(self.w, dtype=np.float64)


def predict_proba(weights, x: SparseExample) -> float:
    s = 0.0
    for j, v in zip(x.indices, x.values):
        s += float(weights[j]) * v
    return sigmoid(s)


def objective(dataset: Dataset, weights, cfg: RegConfig) -> float:
    """Mean logistic loss plus ``lambda1*||w||_1 + lambda2/2*||w||^2``."""
    w = np.asarray(weights, dtype=np.float64)
    loss = 0.0
    for ex in dataset:
        s = 0.0
        for j, v in zip(ex.indices, ex.values):
            s += w[j] * v
        loss += _log1pexp(-ex.label * s)
    loss = loss / dataset.n if dataset.n else 0.0
    return loss + cfg.lambda1 * float(np.abs(w).sum()) + 0.5 * cfg.lambda2 * float(w @ w)


def _epoch_orders(n: int, epochs: int, rng_seed: int):
    rng = np.random.default_rng(rng_seed)
    for _ in range(epochs):
        yield rng.permutation(n).tolist()


def _check_inputs(dataset: Dataset, epochs: int):
    if dataset.n == 0:
        raise ContractViolation("dataset is empty")
    if epochs < 0:
        raise ContractViolation(f"epochs must be >= 0, got {epochs}")


def train(
    dataset: Dataset,
    cfg: RegConfig,
    sched: Schedule,
    epochs: int = 1,
    flush_budget: int | None = None,
    rng_seed: int = 0,
):
    """Lazy SGD/FoBoS training. Returns ``(weights, TrainReport)``.

    ``flush_budget`` caps the steps between flushes; ``None`` means one
    epoch. Every epoch ends with a flush, and so does training.
    """
    _check_inputs(dataset, epochs)
    state = TrainerState(dataset.d, cfg, sched, flush_budget)
    examples = dataset.examples
    start = time.perf_counter()
    for epoch, order in enumerate(_epoch_orders(dataset.n, epochs, rng_seed)):
        step = state.sgd_step
        for i in order:
            ex = examples[i]
            step(ex, ex.label)
        if epoch < epochs - 1 and state.since_flush:
            state.flush()
    state.flush()
    elapsed = time.perf_counter() - start
    weights = state.weights()
    report = TrainReport(
        epochs_run=epochs,
        final_loss=objective(dataset, weights, cfg),
        nonzero_weights=int(np.count_nonzero(weights)),
        per_example_seconds=elapsed / max(1, state.clock),
        flush_count=state.flush_count,
        steps=state.clock,
        step_touches=state.step_touches,
        max_step_touches=state.max_step_touches,
        flush_touches=state.flush_touches,
    )
    log.debug("lazy train: %s", report)
    return weights, report


def dense_regularizer(cfg: RegConfig, sched: Schedule, vectorized: bool = False):
    """Return ``f(w, t) -> new weights`` applying regularization step ``t`` to every coordinate.

    Each branch is the per-coordinate arithmetic of
    :func:`~lazysparse.kernels.step_sgd_elastic` /
    :func:`~lazysparse.kernels.step_fobos_elastic`, specialised so the
    O(d) sweep stays a single comprehension over a list. With
    ``vectorized`` the same element-wise operations run as numpy ufuncs
    on an array; every operation is correctly rounded either way, so both
    forms produce identical bits. ``None`` when there is no regularization.
    """
    rate = sched.rate
    l1, l2 = cfg.lambda1, cfg.lambda2
    penalty = cfg.penalty
    if penalty is Penalty.NONE:
        return None
    sgd = cfg.algo is Algo.SGD

    if vectorized:
        def reg(w, t):
            eta = rate(t)
            if penalty is Penalty.L2SQ:
                return w * (1.0 - eta * l2) if sgd else w / (1.0 + eta * l2)
            b = eta * l1
            if sgd:
                m = np.abs(w) - b if penalty is Penalty.L1 else (1.0 - eta * l2) * np.abs(w) - b
            else:
                m = (np.abs(w) - b) / (1.0 + eta * l2)
            return np.where(m > 0.0, np.copysign(m, w), 0.0)
        return reg

    if sgd:
        if penalty is Penalty.L2SQ:
            def reg(w, t):
                a = 1.0 - rate(t) * l2
                return [v * a for v in w]
        elif penalty is Penalty.L1:
            def reg(w, t):
                b = rate(t) * l1
                return [v - b if v > b else (v + b if -v > b else 0.0) for v in w]
        else:
            def reg(w, t):
                eta = rate(t)
                a, b = 1.0 - eta * l2, eta * l1
                return [
                    (m if (m := a * v - b) > 0.0 else 0.0)
                    if v > 0.0
                    else (-m if (m := a * -v - b) > 0.0 else 0.0)
                    for v in w
                ]
    else:
        if penalty is Penalty.L2SQ:
            def reg(w, t):
                c = 1.0 + rate(t) * l2
                return [v / c for v in w]
        else:
            def reg(w, t):
                eta = rate(t)
                b, c = eta * l1, 1.0 + eta * l2
                return [
                    ((v - b) / c if v > b else 0.0)
                    if v > 0.0
                    else ((-v - b) / -c if -v > b else 0.0)
                    for v in w
                ]
    return reg


def train_dense(
    dataset: Dataset,
    cfg: RegConfig,
    sched: Schedule,
    epochs: int = 1,
    rng_seed: int = 0,
    sparse_predictions: bool = True,
    vectorized: bool = False,
):
    """Baseline trainer that regularizes all ``d`` weights every step.

    Same visiting order and arithmetic as :func:`train`. With
    ``sparse_predictions`` the margin uses only the example's nonzeros,
    otherwise it sweeps all ``d`` coordinates of a densified row.

    ``vectorized`` runs the O(d) parts as numpy array operations; the
    result is bit-identical to the pure-Python sweep. Use it to check
    equivalence quickly, not to benchmark against :func:`train`.
    """
    _check_inputs(dataset, epochs)
    validate_config(cfg, sched)
    d = dataset.d
    reg = dense_regularizer(cfg, sched, vectorized)
    rate = sched.rate
    examples = dataset.examples
    w = np.zeros(d) if vectorized else [0.0] * d
    t = 0
    step_touches = max_touches = 0
    start = time.perf_counter()
    for order in _epoch_orders(dataset.n, epochs, rng_seed):
        for i in order:
            ex = examples[i]
            idx, vals, y = ex.indices, ex.values, ex.label
            touches = 0
            if reg is not None and t > 0:
                w = reg(w, t - 1)
                touches += 2 * d
            s = 0.0
            if sparse_predictions:
                for j, v in zip(idx, vals):
                    s += float(w[j]) * v
                touches += len(idx)
            elif vectorized:
                xd = np.zeros(d)
                xd[list(idx)] = vals
                prod = (w * xd).tolist()
                # terms off the support are exact zeros and leave a running sum unchanged
                for j in idx:
                    s += prod[j]
                touches += d
            else:
                xd = [0.0] * d
                for j, v in zip(idx, vals):
                    xd[j] = v
                for wj, xj in zip(w, xd):
                    s += wj * xj
                touches += d
            if not math.isfinite(s):
                raise ContractViolation(f"non-finite margin {s!r} at step {t}")
            coef = rate(t) * y * sigmoid(-y * s)
            for j, v in zip(idx, vals):
                w[j] = float(w[j]) + coef * v
            touches += 2 * len(idx)
            step_touches += touches
            if touches > max_touches:
                max_touches = touches
            t += 1
    if reg is not None and t > 0:
        w = reg(w, t - 1)
    elapsed = time.perf_counter() - start
    weights = np.array(w, dtype=np.float64)
    report = TrainReport(
        epochs_run=epochs,
        final_loss=objective(dataset, weights, cfg),
        nonzero_weights=int(np.count_nonzero(weights)),
        per_example_seconds=elapsed / max(1, t),
        flush_count=0,
        steps=t,
        step_touches=step_touches,
        max_step_touches=max_touches,
    )
    log.debug("dense train (sparse_predictions=%s): %s", sparse_predictions, report)
    return weights, report
