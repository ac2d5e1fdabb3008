"""Scalar regularization updates: one dense step, and many lazy steps in O(1).

A coordinate whose feature is absent from the current example only feels
the regularizer. Under SGD with elastic net one such step is

    w <- sgn(w) * [(1 - eta*l2) * |w| - eta*l1]_+

and under FoBoS it is the proximal step

    w <- sgn(w) * [(|w| - eta*l1) / (1 + eta*l2)]_+

Both are affine in |w| with a positive slope and a non-positive offset,
so once the unclamped value goes negative it stays negative. That makes a
single clamp at the end of a run of steps exact, and the composed affine
map only needs the prefix tables of :class:`~lazysparse.schedule.ScheduleCache`.

All lazy kernels bring a weight last current at step ``psi`` up to step
``k``; i.e. they apply the regularization of steps ``psi .. k-1``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import ContractViolation, InvalidRate, OutOfRange
from .schedule import Schedule

__all__ = [
    "Algo",
    "Penalty",
    "RegConfig",
    "validate_config",
    "step_sgd_elastic",
    "step_fobos_elastic",
    "fobos_prox_objective",
    "lazy_identity",
    "lazy_l1_sgd",
    "lazy_l2sq_sgd",
    "lazy_elastic_sgd",
    "lazy_l2sq_fobos",
    "lazy_elastic_fobos",
    "sequential_oracle",
    "select_kernel",
    "LOOKUPS_PER_CALL",
]


class Algo(enum.Enum):
    SGD = "sgd"
    FOBOS = "fobos"


class Penalty(enum.Enum):
    NONE = "none"
    L1 = "l1"
    L2SQ = "l2sq"
    ELASTIC = "elastic"


@dataclass(frozen=True)
class RegConfig:
    """Regularization strengths and the update rule that applies them.

    The objective is ``loss + lambda1 * ||w||_1 + lambda2 / 2 * ||w||_2^2``.
    """

    algo: Algo = Algo.SGD
    lambda1: float = 0.0
    lambda2: float = 0.0

    def __post_init__(self):
        if not isinstance(self.algo, Algo):
            object.__setattr__(self, "algo", Algo(self.algo))
        for name in ("lambda1", "lambda2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ContractViolation(f"{name} must be finite and >= 0, got {value!r}")

    @property
    def penalty(self) -> Penalty:
        if self.lambda1 > 0 and self.lambda2 > 0:
            return Penalty.ELASTIC
        if self.lambda1 > 0:
            return Penalty.L1
        if self.lambda2 > 0:
            return Penalty.L2SQ
        return Penalty.NONE


def validate_config(cfg: RegConfig, sched: Schedule) -> None:
    """Reject SGD configurations whose L2 factor ``1 - eta*l2`` can reach zero.

    Schedules never increase, so checking ``eta0`` covers every step.
    """
    if cfg.algo is Algo.SGD and cfg.lambda2 > 0 and sched.eta0 * cfg.lambda2 >= 1.0:
        raise InvalidRate(
            f"SGD positivity constraint violated: eta0*l2 = {sched.eta0 * cfg.lambda2:g} "
            "must be < 1"
        )


def _shrink(w: float, magnitude: float) -> float:
    if magnitude <= 0.0:
        return 0.0
    return magnitude if w > 0 else -magnitude


def step_sgd_elastic(w: float, t: int, cfg: RegConfig, sched: Schedule) -> float:
    eta = sched.rate(t)
    factor = 1.0 - eta * cfg.lambda2
    if factor <= 0.0:
        raise InvalidRate(f"eta*l2 = {eta * cfg.lambda2:g} >= 1 at step {t}")
    if w == 0.0:
        return 0.0
    return _shrink(w, factor * abs(w) - eta * cfg.lambda1)


def step_fobos_elastic(w: float, t: int, cfg: RegConfig, sched: Schedule) -> float:
    """Closed-form minimizer of :func:`fobos_prox_objective` around ``w``."""
    if w == 0.0:
        return 0.0
    eta = sched.rate(t)
    return _shrink(w, (abs(w) - eta * cfg.lambda1) / (1.0 + eta * cfg.lambda2))


def fobos_prox_objective(
    w_candidate: float, w_half: float, t: int, cfg: RegConfig, sched: Schedule
) -> float:
    eta = sched.rate(t)
    return (
        0.5 * (w_candidate - w_half) ** 2
        + eta * cfg.lambda1 * abs(w_candidate)
        + 0.5 * eta * cfg.lambda2 * w_candidate * w_candidate
    )


# Each lazy kernel reads at most this many cache entries, whatever k - psi is.
LOOKUPS_PER_CALL = 4


def _offsets(w, psi, k, cache, table):
    """Return positions in ``table`` of the prefix values at ``psi - 1`` and ``k - 1``."""
    if psi > k:
        raise ContractViolation(f"psi={psi} > k={k}")
    if not math.isfinite(w):
        raise ContractViolation(f"non-finite weight {w!r}")
    base = cache.base
    if psi < base or k - base >= len(table):
        raise OutOfRange(
            f"lazy range [{psi}, {k}) needs cache over [{psi - 1}, {k - 1}], "
            f"have [{base - 1}, {base + len(table) - 2}]"
        )
    return psi - base, k - base


def lazy_identity(w, psi, k, cfg, cache):
    if psi > k:
        raise ContractViolation(f"psi={psi} > k={k}")
    return w


def lazy_l1_sgd(w, psi, k, cfg, cache):
    S = cache.S
    i, j = _offsets(w, psi, k, cache, S)
    if i == j or w == 0.0:
        return w
    return _shrink(w, abs(w) - cfg.lambda1 * (S[j] - S[i]))


def lazy_l2sq_sgd(w, psi, k, cfg, cache):
    P = cache.P
    i, j = _offsets(w, psi, k, cache, P)
    if i == j:
        return w
    return w * (P[j] / P[i])


def lazy_elastic_sgd(w, psi, k, cfg, cache):
    P, B = cache.P, cache.B
    i, j = _offsets(w, psi, k, cache, B)
    if i == j or w == 0.0:
        return w
    pk = P[j]
    return _shrink(w, abs(w) * (pk / P[i]) - cfg.lambda1 * pk * (B[j] - B[i]))


def lazy_l2sq_fobos(w, psi, k, cfg, cache):
    Phi = cache.Phi
    i, j = _offsets(w, psi, k, cache, Phi)
    if i == j:
        return w
    return w * (Phi[j] / Phi[i])


def lazy_elastic_fobos(w, psi, k, cfg, cache):
    Phi, Beta = cache.Phi, cache.Beta
    i, j = _offsets(w, psi, k, cache, Beta)
    if i == j or w == 0.0:
        return w
    phik = Phi[j]
    return _shrink(w, abs(w) * (phik / Phi[i]) - cfg.lambda1 * phik * (Beta[j] - Beta[i]))


def sequential_oracle(w: float, psi: int, k: int, cfg: RegConfig, sched: Schedule) -> float:
    """Apply the dense single-step rule for steps ``psi .. k-1`` one at a time."""
    if psi > k:
        raise ContractViolation(f"psi={psi} > k={k}")
    step = step_sgd_elastic if cfg.algo is Algo.SGD else step_fobos_elastic
    for t in range(psi, k):
        w = step(w, t, cfg, sched)
    return w


_KERNELS = {
    (Algo.SGD, Penalty.NONE): (lazy_identity, ("S",)),
    (Algo.SGD, Penalty.L1): (lazy_l1_sgd, ("S",)),
    (Algo.SGD, Penalty.L2SQ): (lazy_l2sq_sgd, ("P",)),
    (Algo.SGD, Penalty.ELASTIC): (lazy_elastic_sgd, ("P", "B")),
    (Algo.FOBOS, Penalty.NONE): (lazy_identity, ("S",)),
    (Algo.FOBOS, Penalty.L1): (lazy_elastic_fobos, ("Phi", "Beta")),
    (Algo.FOBOS, Penalty.L2SQ): (lazy_l2sq_fobos, ("Phi",)),
    (Algo.FOBOS, Penalty.ELASTIC): (lazy_elastic_fobos, ("Phi", "Beta")),
}


def select_kernel(cfg: RegConfig):
    """Return ``(kernel, tables)``: the lazy update for ``cfg`` and the cache tables it reads."""
    return _KERNELS[cfg.algo, cfg.penalty]
