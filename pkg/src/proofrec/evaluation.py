"""Evaluation battery: top-N accuracy, frequency baseline, mean reciprocal
rank, bootstrap resampling, and Welch's two-sample t-test."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import stats


def top_n_accuracy(rankings: Sequence[Sequence[str]],
                   truths: Sequence[str], n: int) -> float:
    """Fraction of cases whose truth appears among the first n entries."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if len(rankings) != len(truths) or len(truths) == 0:
        raise ValueError("rankings and truths must align and be nonempty")
    hits = sum(truth in list(ranked)[:n]
               for ranked, truth in zip(rankings, truths))
    return hits / len(truths)


def frequency_baseline(train_commands: Sequence[str], n: int) -> list[str]:
    """The n most frequent training commands; ties lexicographic."""
    if len(train_commands) == 0:
        raise ValueError("training commands must be nonempty")
    counts = Counter(train_commands)
    ranked = sorted(counts, key=lambda c: (-counts[c], c))
    return ranked[:n]


def mrr(rankings, truths: Sequence[str]) -> float:
    """Mean reciprocal 1-based rank of each truth in its full ranking.

    Accepts RankedResult-like objects (with ``rank_of``) or plain id
    sequences. A truth missing from its ranking is an error.
    """
    if len(rankings) != len(truths) or len(truths) == 0:
        raise ValueError("rankings and truths must align and be nonempty")
    total = 0.0
    for ranked, truth in zip(rankings, truths):
        if hasattr(ranked, "rank_of"):
            rank = ranked.rank_of(truth)
        else:
            ids = list(ranked)
            if truth not in ids:
                raise ValueError(f"truth {truth!r} absent from ranking")
            rank = ids.index(truth) + 1
        total += 1.0 / rank
    return total / len(truths)


@dataclass(frozen=True)
class EvalReport:
    metric: str
    estimate: float
    variance: float
    ci_low: float
    ci_high: float
    resample_mean: float
    n: int
    b: int
    seed: int

    def to_json_line(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def bootstrap(metric_fn: Callable, samples, b: int = 1000, seed: int = 0,
              metric: str = "metric") -> EvalReport:
    """Percentile bootstrap of ``metric_fn`` over resamples with replacement.

    The confidence interval is the 2.5/97.5 percentile of the resampled
    metric, widened if necessary to contain the full-sample point estimate.
    """
    samples = np.asarray(samples)
    n = samples.shape[0]
    if n == 0:
        raise ValueError("samples must be nonempty")
    if b < 100:
        raise ValueError("need at least 100 resamples")
    rng = np.random.default_rng(seed)
    estimate = float(metric_fn(samples))
    values = np.empty(b)
    for i in range(b):
        values[i] = metric_fn(samples[rng.integers(0, n, size=n)])
    variance = float(values.var(ddof=1))
    lo, hi = np.percentile(values, [2.5, 97.5])
    return EvalReport(
        metric=metric,
        estimate=estimate,
        variance=variance,
        ci_low=float(min(lo, estimate)),
        ci_high=float(max(hi, estimate)),
        resample_mean=float(values.mean()),
        n=n,
        b=b,
        seed=seed,
    )


@dataclass(frozen=True)
class TTestResult:
    t: float
    dof: float
    p_value: float
    significant: bool


def welch_t_test(samples_a, samples_b, alpha: float = 0.001) -> TTestResult:
    """Two-sided Welch's unequal-variance t-test."""
    a = np.asarray(samples_a, dtype=float)
    b = np.asarray(samples_b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("both samples need at least 2 observations")
    va = a.var(ddof=1)
    vb = b.var(ddof=1)
    if va == 0.0 and vb == 0.0:
        raise ValueError("both samples have zero variance")
    se2a = va / a.size
    se2b = vb / b.size
    t = (a.mean() - b.mean()) / np.sqrt(se2a + se2b)
    dof = (se2a + se2b) ** 2 / (
        se2a ** 2 / (a.size - 1) + se2b ** 2 / (b.size - 1))
    p = 2.0 * stats.t.sf(abs(t), dof)
    return TTestResult(float(t), float(dof), float(p), bool(p < alpha))


def write_reports(path, reports: Sequence[EvalReport]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for report in reports:
            fh.write(report.to_json_line() + "\n")
