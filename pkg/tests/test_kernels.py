import math

import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy.optimize import minimize_scalar

from lazysparse.errors import ContractViolation, InvalidRate, OutOfRange
from lazysparse.kernels import (
    LOOKUPS_PER_CALL,
    Algo,
    Penalty,
    RegConfig,
    fobos_prox_objective,
    lazy_elastic_fobos,
    lazy_elastic_sgd,
    lazy_identity,
    lazy_l1_sgd,
    lazy_l2sq_fobos,
    lazy_l2sq_sgd,
    select_kernel,
    sequential_oracle,
    step_fobos_elastic,
    step_sgd_elastic,
    validate_config,
)
from lazysparse.schedule import Schedule, ScheduleCache, ScheduleKind

CONST = Schedule(ScheduleKind.CONSTANT, 0.1)


def cache_for(sched, cfg, k, base=0):
    tables = ("S", "P", "B", "Phi", "Beta") if cfg.algo is Algo.SGD else ("S", "Phi", "Beta")
    cache = ScheduleCache(sched, cfg.lambda2, tables)
    if base:
        cache.rebase(base)
    return cache.extend_to(k - 1)


# (kernel, algo, uses_l1, uses_l2)
LAZY_OPS = {
    "l1_sgd": (lazy_l1_sgd, Algo.SGD, True, False),
    "l2sq_sgd": (lazy_l2sq_sgd, Algo.SGD, False, True),
    "elastic_sgd": (lazy_elastic_sgd, Algo.SGD, True, True),
    "l2sq_fobos": (lazy_l2sq_fobos, Algo.FOBOS, False, True),
    "elastic_fobos": (lazy_elastic_fobos, Algo.FOBOS, True, True),
}


@st.composite
def lazy_cases(draw, name):
    kernel, algo, uses_l1, uses_l2 = LAZY_OPS[name]
    eta0 = draw(st.floats(1e-4, 0.5))
    kind = draw(st.sampled_from(list(ScheduleKind)))
    l1 = draw(st.floats(0.0, 10.0)) if uses_l1 else 0.0
    l2_max = 10.0 if algo is Algo.FOBOS else min(10.0, 0.999 / eta0)
    l2 = draw(st.floats(0.0, l2_max)) if uses_l2 else 0.0
    w = draw(st.floats(-10.0, 10.0))
    base = draw(st.integers(0, 50))
    psi = base + draw(st.integers(0, 50))
    k = psi + draw(st.integers(0, 60))
    return kernel, RegConfig(algo, l1, l2), Schedule(kind, eta0), w, base, psi, k


def no_underflow(cfg, sched, base, k):
    cache = cache_for(sched, cfg, k, base)
    tracked = cache.P if cfg.algo is Algo.SGD else cache.Phi
    return tracked[-1] > 1e-100


class TestSingleSteps:
    def test_sgd_elastic(self):
        assert step_sgd_elastic(1.0, 0, RegConfig(Algo.SGD, 1.0, 1.0), CONST) == pytest.approx(0.8)

    def test_sgd_clamps_at_zero(self):
        assert step_sgd_elastic(0.05, 0, RegConfig(Algo.SGD, 1.0, 0.0), CONST) == 0.0

    @pytest.mark.parametrize("step", [step_sgd_elastic, step_fobos_elastic])
    def test_zero_fixed_point(self, step):
        assert step(0.0, 3, RegConfig(Algo.SGD, 2.0, 1.0), CONST) == 0.0

    def test_sgd_reduces_to_l2(self):
        cfg = RegConfig(Algo.SGD, 0.0, 2.0)
        assert step_sgd_elastic(-0.7, 0, cfg, CONST) == -0.7 * (1 - 0.1 * 2.0)

    def test_sgd_rate_violation(self):
        with pytest.raises(InvalidRate):
            step_sgd_elastic(1.0, 0, RegConfig(Algo.SGD, 0.0, 10.0), CONST)

    def test_fobos_elastic(self):
        cfg = RegConfig(Algo.FOBOS, 1.0, 1.0)
        assert step_fobos_elastic(1.0, 0, cfg, CONST) == pytest.approx(0.9 / 1.1, rel=1e-15)
        assert step_fobos_elastic(1.0, 0, cfg, CONST) == pytest.approx(0.818182, abs=1e-6)
        assert step_fobos_elastic(-1.0, 0, cfg, CONST) == -step_fobos_elastic(1.0, 0, cfg, CONST)

    def test_fobos_l2(self):
        cfg = RegConfig(Algo.FOBOS, 0.0, 2.0)
        assert step_fobos_elastic(0.5, 0, cfg, CONST) == pytest.approx(0.5 / 1.2, rel=1e-15)


class TestProxObjective:
    def test_distance_term_vanishes(self):
        assert fobos_prox_objective(0.3, 0.3, 0, RegConfig(Algo.FOBOS), CONST) == 0.0

    def test_direct_value(self):
        cfg = RegConfig(Algo.FOBOS, 1.0, 1.0)
        assert fobos_prox_objective(0.0, 1.0, 0, cfg, CONST) == 0.5

    @pytest.mark.parametrize("w_half", [-2.0, -0.05, 0.0, 0.07, 0.3, 1.0, 4.0])
    def test_closed_form_is_minimizer(self, w_half):
        cfg = RegConfig(Algo.FOBOS, 1.0, 1.0)
        sched = Schedule("inv", 0.3)
        t = 2
        closed = step_fobos_elastic(w_half, t, cfg, sched)
        grid = [w_half - 1 + i * 1e-4 for i in range(20001)]
        best = min(grid, key=lambda c: fobos_prox_objective(c, w_half, t, cfg, sched))
        assert abs(best - closed) <= 1e-4
        res = minimize_scalar(
            fobos_prox_objective, bracket=(best - 1e-3, best + 1e-3),
            args=(w_half, t, cfg, sched), method="golden", tol=1e-12,
        )
        assert res.x == pytest.approx(closed, abs=1e-6)


class TestLazyExamples:
    """Spec examples; each expected value is first reproduced with the sequential oracle."""

    def check(self, kernel, w, psi, k, cfg, sched, expected, tol=1e-12):
        oracle = sequential_oracle(w, psi, k, cfg, sched)
        assert oracle == pytest.approx(expected, abs=tol)
        got = kernel(w, psi, k, cfg, cache_for(sched, cfg, k))
        assert got == pytest.approx(oracle, abs=1e-12)

    def test_l1_three_steps(self):
        self.check(lazy_l1_sgd, 1.0, 0, 3, RegConfig(Algo.SGD, 2.0, 0.0), CONST, 0.4)

    def test_l1_reaches_clamp(self):
        self.check(lazy_l1_sgd, 0.5, 0, 3, RegConfig(Algo.SGD, 2.0, 0.0), CONST, 0.0)

    def test_l2sq_three_steps(self):
        self.check(lazy_l2sq_sgd, 1.0, 0, 3, RegConfig(Algo.SGD, 0.0, 1.0), CONST, 0.729)

    def test_elastic_sgd_two_steps(self):
        self.check(lazy_elastic_sgd, 1.0, 0, 2, RegConfig(Algo.SGD, 1.0, 1.0), CONST, 0.62)

    def test_elastic_sgd_closed_form_by_hand(self):
        cache = cache_for(CONST, RegConfig(Algo.SGD, 1.0, 1.0), 2)
        p1 = cache.lookup("P", 1)
        by_hand = 1.0 * p1 - 1.0 * p1 * (cache.lookup("B", 1) - cache.lookup("B", -1))
        assert by_hand == pytest.approx(0.81 - 0.81 * (0.1 / 0.9 + 0.1 / 0.81), rel=1e-14)
        assert by_hand == pytest.approx(0.62, rel=1e-14)

    def test_l2sq_fobos_two_steps(self):
        self.check(lazy_l2sq_fobos, 1.0, 0, 2, RegConfig(Algo.FOBOS, 0.0, 1.0), CONST, (1 / 1.1) ** 2)

    def test_l2sq_fobos_odd(self):
        self.check(lazy_l2sq_fobos, -2.0, 0, 1, RegConfig(Algo.FOBOS, 0.0, 1.0), CONST, -2 / 1.1)

    def test_elastic_fobos_two_steps(self):
        self.check(
            lazy_elastic_fobos, 1.0, 0, 2, RegConfig(Algo.FOBOS, 1.0, 1.0), CONST,
            0.652893, tol=1e-6,
        )

    def test_elastic_fobos_tables(self):
        cache = cache_for(CONST, RegConfig(Algo.FOBOS, 1.0, 1.0), 2)
        assert cache.lookup("Phi", 1) == pytest.approx(0.826446, abs=1e-6)
        assert cache.lookup("Beta", 1) == pytest.approx(0.21, rel=1e-14)

    @pytest.mark.parametrize("name", sorted(LAZY_OPS))
    def test_empty_range(self, name):
        kernel, algo, _, _ = LAZY_OPS[name]
        cfg = RegConfig(algo, 1.0, 1.0)
        assert kernel(0.37, 4, 4, cfg, cache_for(CONST, cfg, 4)) == 0.37

    def test_l2sq_without_l2_is_identity(self):
        cfg = RegConfig(Algo.SGD, 0.0, 0.0)
        assert lazy_l2sq_sgd(0.37, 0, 40, cfg, cache_for(CONST, cfg, 40)) == 0.37

    @pytest.mark.parametrize(
        "elastic, pure, algo",
        [(lazy_elastic_sgd, lazy_l2sq_sgd, Algo.SGD), (lazy_elastic_fobos, lazy_l2sq_fobos, Algo.FOBOS)],
    )
    def test_elastic_without_l1_is_l2sq(self, elastic, pure, algo):
        cfg = RegConfig(algo, 0.0, 0.7)
        sched = Schedule("invsqrt", 0.4)
        cache = cache_for(sched, cfg, 30)
        for w in (-3.0, 0.25, 8.0):
            assert elastic(w, 3, 30, cfg, cache) == pure(w, 3, 30, cfg, cache)


class TestContracts:
    @pytest.mark.parametrize("name", sorted(LAZY_OPS))
    def test_psi_after_k(self, name):
        kernel, algo, _, _ = LAZY_OPS[name]
        cfg = RegConfig(algo, 1.0, 1.0)
        with pytest.raises(ContractViolation):
            kernel(1.0, 5, 4, cfg, cache_for(CONST, cfg, 6))

    @pytest.mark.parametrize("name", sorted(LAZY_OPS))
    @pytest.mark.parametrize("w", [math.nan, math.inf])
    def test_non_finite_weight(self, name, w):
        kernel, algo, _, _ = LAZY_OPS[name]
        cfg = RegConfig(algo, 1.0, 1.0)
        with pytest.raises(ContractViolation):
            kernel(w, 0, 3, cfg, cache_for(CONST, cfg, 3))

    @pytest.mark.parametrize("name", sorted(LAZY_OPS))
    def test_beyond_cache(self, name):
        kernel, algo, _, _ = LAZY_OPS[name]
        cfg = RegConfig(algo, 1.0, 1.0)
        cache = cache_for(CONST, cfg, 3)
        with pytest.raises(OutOfRange):
            kernel(1.0, 0, 5, cfg, cache)

    @pytest.mark.parametrize("name", sorted(LAZY_OPS))
    def test_before_base(self, name):
        kernel, algo, _, _ = LAZY_OPS[name]
        cfg = RegConfig(algo, 1.0, 1.0)
        cache = cache_for(CONST, cfg, 10, base=5)
        with pytest.raises(OutOfRange):
            kernel(1.0, 3, 8, cfg, cache)

    def test_validate_config(self):
        validate_config(RegConfig(Algo.FOBOS, 0.0, 50.0), CONST)
        with pytest.raises(InvalidRate, match="positivity"):
            validate_config(RegConfig(Algo.SGD, 0.0, 10.0), Schedule("constant", 0.2))

    @pytest.mark.parametrize("bad", [-1.0, math.nan, math.inf])
    def test_reg_config_rejects(self, bad):
        with pytest.raises(ContractViolation):
            RegConfig(Algo.SGD, bad, 0.0)

    def test_oracle_psi_after_k(self):
        with pytest.raises(ContractViolation):
            sequential_oracle(1.0, 3, 2, RegConfig(), CONST)


class TestDispatch:
    @pytest.mark.parametrize(
        "algo, l1, l2, expected",
        [
            (Algo.SGD, 0, 0, lazy_identity),
            (Algo.SGD, 1, 0, lazy_l1_sgd),
            (Algo.SGD, 0, 1, lazy_l2sq_sgd),
            (Algo.SGD, 1, 1, lazy_elastic_sgd),
            (Algo.FOBOS, 0, 0, lazy_identity),
            (Algo.FOBOS, 1, 0, lazy_elastic_fobos),
            (Algo.FOBOS, 0, 1, lazy_l2sq_fobos),
            (Algo.FOBOS, 1, 1, lazy_elastic_fobos),
        ],
    )
    def test_select(self, algo, l1, l2, expected):
        cfg = RegConfig(algo, l1, l2)
        kernel, tables = select_kernel(cfg)
        assert kernel is expected
        assert cfg.penalty in Penalty


class CountingList(list):
    reads = 0

    def __getitem__(self, i):
        CountingList.reads += 1
        return super().__getitem__(i)


class TestConstantCost:
    @pytest.mark.parametrize("name", sorted(LAZY_OPS))
    def test_lookups_independent_of_range(self, name):
        kernel, algo, _, _ = LAZY_OPS[name]
        cfg = RegConfig(algo, 0.01, 0.01)
        sched = Schedule("inv", 0.1)
        cache = cache_for(sched, cfg, 5001)
        for table in cache.tracked:
            setattr(cache, table, CountingList(getattr(cache, table)))
        counts = []
        for span in (1, 10, 100, 1000, 5000):
            CountingList.reads = 0
            kernel(1.0, 5001 - span, 5001, cfg, cache)
            counts.append(CountingList.reads)
        assert len(set(counts)) == 1
        assert counts[0] <= LOOKUPS_PER_CALL


@pytest.mark.parametrize("name", sorted(LAZY_OPS))
class TestProperties:
    @settings(max_examples=150, deadline=None)
    @given(data=st.data())
    def test_matches_oracle(self, name, data):
        kernel, cfg, sched, w, base, psi, k = data.draw(lazy_cases(name))
        assume(no_underflow(cfg, sched, base, k))
        got = kernel(w, psi, k, cfg, cache_for(sched, cfg, k, base))
        assert abs(got - sequential_oracle(w, psi, k, cfg, sched)) <= 1e-9 * max(1.0, abs(w))

    @settings(max_examples=100, deadline=None)
    @given(data=st.data())
    def test_sign_and_magnitude(self, name, data):
        kernel, cfg, sched, w, base, psi, k = data.draw(lazy_cases(name))
        assume(no_underflow(cfg, sched, base, k))
        got = kernel(w, psi, k, cfg, cache_for(sched, cfg, k, base))
        assert got == 0.0 or math.copysign(1.0, got) == math.copysign(1.0, w)
        assert abs(got) <= abs(w)

    @settings(max_examples=50, deadline=None)
    @given(data=st.data())
    def test_zero_absorbing(self, name, data):
        kernel, cfg, sched, _, base, psi, k = data.draw(lazy_cases(name))
        assume(no_underflow(cfg, sched, base, k))
        assert kernel(0.0, psi, k, cfg, cache_for(sched, cfg, k, base)) == 0.0

    @settings(max_examples=100, deadline=None)
    @given(data=st.data(), split=st.floats(0.0, 1.0))
    def test_composition(self, name, data, split):
        kernel, cfg, sched, w, base, psi, k = data.draw(lazy_cases(name))
        assume(no_underflow(cfg, sched, base, k))
        m = psi + int(split * (k - psi))
        cache = cache_for(sched, cfg, k, base)
        direct = kernel(w, psi, k, cfg, cache)
        composed = kernel(kernel(w, psi, m, cfg, cache), m, k, cfg, cache)
        if direct == 0.0:
            assert composed == 0.0 or abs(composed) <= 1e-10 * max(1.0, abs(w))
        else:
            assert composed == pytest.approx(direct, abs=1e-10 * max(1.0, abs(w)))
