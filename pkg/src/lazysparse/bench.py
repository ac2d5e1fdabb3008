"""Per-example timing of the lazy trainer against the two dense baselines."""

from __future__ import annotations

import logging
import platform
from dataclasses import dataclass, field

from .data import generate_synthetic
from .kernels import Algo, RegConfig
from .schedule import Schedule
from .trainer import train, train_dense

log = logging.getLogger(__name__)

VARIANTS = ("lazy", "dense", "dense_sparse_predictions")


def _run_variant(variant, dataset, cfg, sched, epochs, seed):
    if variant == "lazy":
        return train(dataset, cfg, sched, epochs=epochs, rng_seed=seed)
    return train_dense(
        dataset, cfg, sched, epochs=epochs, rng_seed=seed,
        sparse_predictions=(variant == "dense_sparse_predictions"),
    )


@dataclass
class BenchReport:
    n: int
    d: int
    p_mean: float
    seed: int
    epochs: int
    # algo name -> variant -> seconds per example
    times: dict = field(default_factory=dict)
    machine: str = field(default_factory=platform.platform)

    def speedup(self, algo: str, baseline: str) -> float:
        row = self.times[algo]
        return row[baseline] / row["lazy"]

    def ordering_holds(self, algo: str) -> bool:
        row = self.times[algo]
        return row["lazy"] < row["dense_sparse_predictions"] < row["dense"]

    def format_table(self) -> str:
        header = (
            f"{'':6} {'lazy':>12} {'dense':>12} {'dense+sparse_pred':>18} "
            f"{'x dense':>9} {'x dense+sp':>11}"
        )
        lines = [
            f"seconds per example (n={self.n}, d={self.d}, p_mean={self.p_mean:g}, "
            f"seed={self.seed}, timed epochs={self.epochs})",
            header,
        ]
        for algo, row in self.times.items():
            lines.append(
                f"{algo:6} {row['lazy']:12.4g} {row['dense']:12.4g} "
                f"{row['dense_sparse_predictions']:18.4g} "
                f"{self.speedup(algo, 'dense'):9.3g} "
                f"{self.speedup(algo, 'dense_sparse_predictions'):11.3g}"
            )
        lines.append(f"machine: {self.machine}")
        return "\n".join(lines)

    def kv_lines(self) -> list[str]:
        out = [f"n={self.n} d={self.d} p_mean={self.p_mean:g} seed={self.seed} epochs={self.epochs}"]
        for algo, row in self.times.items():
            out.append(
                f"algo={algo} lazy={row['lazy']:.6g} dense={row['dense']:.6g} "
                f"dense_sparse_predictions={row['dense_sparse_predictions']:.6g} "
                f"speedup_dense={self.speedup(algo, 'dense'):.3g} "
                f"speedup_dense_sparse_predictions={self.speedup(algo, 'dense_sparse_predictions'):.3g}"
            )
        return out


def run_bench(
    n: int = 500,
    d: int = 100_000,
    p: int = 30,
    epochs: int = 1,
    seed: int = 0,
    lambda1: float = 1e-4,
    lambda2: float = 1e-3,
    eta0: float = 0.1,
    schedule: str = "inv",
    weight_sparsity: float = 0.1,
    algos=(Algo.SGD, Algo.FOBOS),
    data_seed: int | None = None,
) -> BenchReport:
    """Time all three trainers for each algorithm on one synthetic dataset.

    Each variant first runs a one-epoch warmup that is thrown away. The
    reported figure is the trainer's own wall time over ``n * epochs``
    steps, which covers prediction, update and flushes but not data
    generation or the final objective evaluation. ``seed`` fixes the
    example order, and also the data unless ``data_seed`` is given.
    """
    dataset, _ = generate_synthetic(n, d, p, weight_sparsity, seed if data_seed is None else data_seed)
    sched = Schedule(schedule, eta0)
    report = BenchReport(n=dataset.n, d=d, p_mean=dataset.p_mean, seed=seed, epochs=epochs)
    for algo in algos:
        algo = Algo(algo)
        cfg = RegConfig(algo, lambda1, lambda2)
        row = {}
        for variant in VARIANTS:
            _run_variant(variant, dataset, cfg, sched, 1, seed)
            _, rep = _run_variant(variant, dataset, cfg, sched, epochs, seed)
            row[variant] = rep.per_example_seconds
            log.info("%s %s: %.4g s/example", algo.value, variant, rep.per_example_seconds)
        report.times[algo.value] = row
    return report
