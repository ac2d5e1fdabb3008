"""Learning-rate schedules and the append-only caches behind O(1) lazy updates.

Every lazy update needs a partial sum or a partial product of per-step
quantities over an arbitrary step range ``[psi, k)``. The cache stores
prefix values, so each range becomes one division or one subtraction:

    S(t)    = S(t-1) + eta(t)                      S(-1)    = 0
    P(t)    = (1 - eta(t) * l2) * P(t-1)           P(-1)    = 1
    B(t)    = B(t-1) + eta(t) / P(t)               B(-1)    = 0
    Phi(t)  = Phi(t-1) / (1 + eta(t) * l2)         Phi(-1)  = 1
    Beta(t) = Beta(t-1) + eta(t) / Phi(t-1)        Beta(-1) = 0

Indices are relative to ``base``, the global step at which the cache was
last rebased. Rates are always evaluated at the *global* step.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import ContractViolation, InvalidRate, OutOfRange

__all__ = [
    "ScheduleKind",
    "Schedule",
    "ScheduleCache",
    "eta_at",
    "TABLES",
    "UNDERFLOW_FLOOR",
]

TABLES = ("S", "P", "B", "Phi", "Beta")

# Rebase once a decaying product drops below this.
UNDERFLOW_FLOOR = 1e-100


class ScheduleKind(enum.Enum):
    CONSTANT = "constant"
    INVERSE_T = "inv"
    INVERSE_SQRT_T = "invsqrt"


@dataclass(frozen=True)
class Schedule:
    """Learning-rate rule ``eta(t)`` for integer ``t >= 0``.

    constant: eta0; inv: eta0 / (1 + t); invsqrt: eta0 / sqrt(1 + t).
    """

    kind: ScheduleKind
    eta0: float

    def __post_init__(self):
        if not isinstance(self.kind, ScheduleKind):
            object.__setattr__(self, "kind", ScheduleKind(self.kind))
        if not (math.isfinite(self.eta0) and self.eta0 > 0):
            raise ContractViolation(f"eta0 must be positive and finite, got {self.eta0!r}")

    def rate(self, t: int) -> float:
        kind = self.kind
        if kind is ScheduleKind.CONSTANT:
            return self.eta0
        if kind is ScheduleKind.INVERSE_T:
            return self.eta0 / (1 + t)
        return self.eta0 / math.sqrt(1 + t)


def eta_at(schedule: Schedule, t: int) -> float:
    if t < 0:
        raise ContractViolation(f"step index must be >= 0, got {t}")
    return schedule.rate(t)


class ScheduleCache:
    """Prefix tables of the schedule, extended one global step at a time.

    Tables are plain lists with the virtual index -1 stored at position 0,
    so the value for global step ``t`` sits at ``table[t - base + 1]``.
    Lazy kernels exploit this: the value at ``k - 1`` is ``table[k - base]``.

    ``tables`` restricts which tables are maintained. SGD kernels need
    S, P, B; FoBoS kernels need Phi, Beta. Only a tracked P can raise
    :class:`InvalidRate`.
    """

    def __init__(self, schedule: Schedule, lambda2: float = 0.0, tables=TABLES):
        if not (lambda2 >= 0 and math.isfinite(lambda2)):
            raise ContractViolation(f"lambda2 must be finite and >= 0, got {lambda2!r}")
        tables = set(tables)
        if not tables:
            raise ContractViolation("a cache must track at least one table")
        unknown = tables - set(TABLES)
        if unknown:
            raise ContractViolation(f"unknown tables: {sorted(unknown)}")
        if "B" in tables:
            tables.add("P")
        if "Beta" in tables:
            tables.add("Phi")
        self.schedule = schedule
        self.lambda2 = float(lambda2)
        self.tracked = tuple(name for name in TABLES if name in tables)
        self._flags = tuple(name in tables for name in TABLES)
        self.base = 0
        self._reset()

    def _reset(self):
        self.S = [0.0]
        self.P = [1.0]
        self.B = [0.0]
        self.Phi = [1.0]
        self.Beta = [0.0]

    @property
    def high_water(self) -> int:
        """Largest cached relative index (-1 when nothing is cached)."""
        return len(getattr(self, self.tracked[0])) - 2

    @property
    def last_global(self) -> int:
        """Largest global step with cached values (``base - 1`` when empty)."""
        return self.base + self.high_water

    def extend_to(self, t: int) -> "ScheduleCache":
        """Populate every tracked table through global step ``t``."""
        if t < self.base - 1:
            raise ContractViolation(f"cannot extend to {t}: cache base is {self.base}")
        start = self.last_global + 1
        if t < start:
            return self
        rate = self.schedule.rate
        l2 = self.lambda2
        do_s, do_p, do_b, do_phi, do_beta = self._flags
        S, P, B, Phi, Beta = self.S, self.P, self.B, self.Phi, self.Beta
        for tau in range(start, t + 1):
            eta = rate(tau)
            if do_s:
                S.append(S[-1] + eta)
            if do_p:
                factor = 1.0 - eta * l2
                if factor <= 0.0:
                    raise InvalidRate(
                        f"1 - eta*l2 = {factor:g} <= 0 at step {tau} "
                        f"(eta={eta:g}, l2={l2:g}); SGD requires eta*l2 < 1"
                    )
                p = factor * P[-1]
                P.append(p)
                if do_b:
                    B.append(B[-1] + eta / p)
            if do_phi:
                phi_prev = Phi[-1]
                Phi.append(phi_prev / (1.0 + eta * l2))
                if do_beta:
                    Beta.append(Beta[-1] + eta / phi_prev)
        return self

    def lookup(self, table: str, t: int) -> float:
        """Value of ``table`` at global step ``t`` (``base - 1`` gives the base case)."""
        if table not in self.tracked:
            raise ContractViolation(f"table {table!r} is not tracked by this cache")
        if t < self.base - 1 or t > self.last_global:
            raise OutOfRange(
                f"{table}({t}) outside cached range [{self.base - 1}, {self.last_global}]"
            )
        return getattr(self, table)[t - self.base + 1]

    def rebase(self, new_base: int) -> "ScheduleCache":
        """Drop all cached values and restart the prefixes at ``new_base``.

        The caller must have brought every weight current to ``new_base``.
        """
        if new_base < self.base:
            raise ContractViolation(f"rebase must move forward: {new_base} < {self.base}")
        self.base = new_base
        self._reset()
        return self

    @property
    def needs_rebase(self) -> bool:
        """True once a decaying product has fallen under :data:`UNDERFLOW_FLOOR`."""
        # untracked tables hold only their base case 1.0
        return self.P[-1] < UNDERFLOW_FLOOR or self.Phi[-1] < UNDERFLOW_FLOOR

    def __repr__(self):
        return (
            f"ScheduleCache({self.schedule!r}, lambda2={self.lambda2}, "
            f"base={self.base}, high_water={self.high_water}, tables={self.tracked})"
        )
