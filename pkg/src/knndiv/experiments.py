"""Monte Carlo convergence studies with CSV output.

Runs repeated trials of every estimator over a grid of sample sizes and
reports mean, standard error, bias, and MSE per (sample size, method,
quantity). Everything is deterministic given the base seed: per-trial RNG
streams derive from (base seed, size index, trial index), so runs replay
bit-for-bit and any cell can be recomputed in isolation.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .basis import fit_alpha, get_target, r_k
from .estimator import phi_k
from .knn import SplitDataset, _holdout_rates, error_table
from .model import (
    DistributionPair,
    GaussianSpec,
    LabeledDataset,
    functional_ground_truth_mc,
    hellinger_squared_gaussian,
    posterior_eta,
    sample,
)
from .weights import EnsembleConfig, exact_weights, relaxed_weights

__all__ = [
    "SimulationConfig",
    "ResultRow",
    "DatasetFormatError",
    "run_simulation",
    "load_dataset",
    "emit_results",
    "load_config",
    "RESULT_COLUMNS",
]


class DatasetFormatError(ValueError):
    """A dataset file failed validation; message names the offending line."""


@dataclass(frozen=True)
class SimulationConfig:
    """Free parameters of one convergence study."""

    pair: DistributionPair
    target: str
    ks: tuple[int, ...]
    ls: tuple[float, ...]
    lambdas: tuple[float, ...]
    methods: tuple[str, ...]
    n_grid: tuple[int, ...]
    trials: int
    base_seed: int
    output: str = "results.csv"
    repeats: int = 1
    truth_mc_samples: int = 1_000_000

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError(f"trials must be positive, got {self.trials}")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError(f"n_grid must be strictly increasing, got {self.n_grid}")
        if not self.n_grid:
            raise ValueError("n_grid must be nonempty")
        if any(m not in ("plain", "exact", "relaxed") for m in self.methods):
            raise ValueError(f"methods must be among plain/exact/relaxed, got {self.methods}")
        k_max = max(self.ks)
        l_min = min(self.ls)
        for n in self.n_grid:
            if math.floor(l_min * n) < k_max:
                raise ValueError(
                    f"N = {n} leaves subsamples of fraction {l_min} smaller "
                    f"than k = {k_max}"
                )


@dataclass(frozen=True)
class ResultRow:
    """One aggregated line of simulation output."""

    n: int
    method: str
    lam: float | None
    quantity: str
    mean: float
    stderr: float
    bias: float
    mse: float
    truth: float
    trials: int
    seed: int


RESULT_COLUMNS = (
    "N",
    "method",
    "lambda",
    "quantity",
    "mean",
    "stderr",
    "bias",
    "mse",
    "truth",
    "trials",
    "seed",
)


def _method_variants(config: SimulationConfig) -> list[tuple[str, float | None]]:
    variants: list[tuple[str, float | None]] = []
    for method in config.methods:
        if method == "relaxed":
            variants.extend(("relaxed", lam) for lam in config.lambdas)
        else:
            variants.append((method, None))
    return variants


def _ground_truths(config: SimulationConfig) -> dict[str, float]:
    """Asymptotic value of every reported quantity.

    Per-k error-rate truths are Monte Carlo estimates of ``E_f[r_k(eta)]``
    from one posterior sample; the combined-functional truth uses the
    closed form when the target is the built-in Hellinger functional and
    falls back to Monte Carlo otherwise.
    """
    target = get_target(config.target)
    truth_seed = np.random.SeedSequence(config.base_seed, spawn_key=(0,))
    points = sample(config.pair, config.truth_mc_samples, truth_seed).points
    eta = np.empty(points.shape[0])
    chunk = 1 << 18
    for start in range(0, points.shape[0], chunk):
        eta[start : start + chunk] = posterior_eta(config.pair, points[start : start + chunk])
    truths = {f"R_{k}": float(np.mean(r_k(eta, k))) for k in config.ks}
    if config.target == "hellinger":
        truths["G"] = hellinger_squared_gaussian(config.pair)
    else:
        truths["G"] = float(np.mean(target.g(eta)))
    return truths


def run_simulation(config: SimulationConfig) -> list[ResultRow]:
    """Run the full study and aggregate per (N, method, quantity).

    Each trial draws a fresh 2N sample, splits it in half, measures the
    error-rate table once, and evaluates every requested method on it.
    Ensemble weights are data independent, so they are solved once per
    (N, method, lambda). Aggregates satisfy ``mse == bias**2 + var`` with
    the population variance of the per-trial estimates.
    """
    target = get_target(config.target)
    coeffs = fit_alpha(target, config.ks)
    truths = _ground_truths(config)
    variants = _method_variants(config)
    need_table = any(m != "plain" for m, _ in variants)
    quantities = [f"R_{k}" for k in config.ks] + ["G"]

    rows: list[ResultRow] = []
    for ni, n in enumerate(config.n_grid):
        weights_by_variant = {}
        for method, lam in variants:
            if method == "plain":
                weights_by_variant[(method, lam)] = None
            else:
                cfg = EnsembleConfig(
                    ls=config.ls, d=config.pair.d, n=n, lam=lam if lam is not None else 1.0
                )
                weights_by_variant[(method, lam)] = (
                    exact_weights(cfg) if method == "exact" else relaxed_weights(cfg)
                )

        estimates = {
            variant: {q: np.empty(config.trials) for q in quantities}
            for variant in variants
        }
        for ti in range(config.trials):
            data_seed = np.random.SeedSequence(config.base_seed, spawn_key=(1, ni, ti))
            draw_seed = np.random.SeedSequence(config.base_seed, spawn_key=(2, ni, ti))
            split = SplitDataset.from_dataset(sample(config.pair, 2 * n, data_seed))
            plain_rates = _holdout_rates(split, config.ks)
            table = (
                error_table(split, config.ks, config.ls, repeats=config.repeats, seed=draw_seed)
                if need_table
                else None
            )
            for variant in variants:
                w = weights_by_variant[variant]
                if w is None:
                    phis = plain_rates
                else:
                    phis = np.array([phi_k(table, k, w) for k in config.ks])
                for k, value in zip(config.ks, phis):
                    estimates[variant][f"R_{k}"][ti] = value
                estimates[variant]["G"][ti] = float(coeffs.alpha @ phis)

        for method, lam in variants:
            for q in quantities:
                e = estimates[(method, lam)][q]
                mean = float(e.mean())
                stderr = (
                    float(e.std(ddof=1) / np.sqrt(config.trials))
                    if config.trials > 1
                    else 0.0
                )
                bias = mean - truths[q]
                mse = float(np.mean((e - truths[q]) ** 2))
                rows.append(
                    ResultRow(
                        n=n,
                        method=method,
                        lam=lam,
                        quantity=q,
                        mean=mean,
                        stderr=stderr,
                        bias=bias,
                        mse=mse,
                        truth=truths[q],
                        trials=config.trials,
                        seed=config.base_seed,
                    )
                )
    return rows


def _format_value(x: float) -> str:
    return format(float(x), ".12g")


def emit_results(rows: list[ResultRow], path: str) -> None:
    """Write aggregated rows as CSV with a stable column order.

    Floats use 12-significant-digit formatting, so emitting the same rows
    twice produces byte-identical files.
    """
    if not rows:
        raise ValueError("refusing to write an empty results table")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    row.n,
                    row.method,
                    "" if row.lam is None else _format_value(row.lam),
                    row.quantity,
                    _format_value(row.mean),
                    _format_value(row.stderr),
                    _format_value(row.bias),
                    _format_value(row.mse),
                    _format_value(row.truth),
                    row.trials,
                    row.seed,
                ]
            )


def load_dataset(path: str, header: bool = False) -> LabeledDataset:
    """Load a dataset from CSV: d feature columns then one 0/1 label column.

    Rejects NaN or infinite features and labels outside {0, 1}; every
    complaint names the 1-based line number.
    """
    points: list[list[float]] = []
    labels: list[int] = []
    width: int | None = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise DatasetFormatError(
                    f"line {lineno}: need at least one feature and a label"
                )
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DatasetFormatError(
                    f"line {lineno}: expected {width} columns, found {len(row)}"
                )
            try:
                features = [float(v) for v in row[:-1]]
            except ValueError as exc:
                raise DatasetFormatError(f"line {lineno}: {exc}") from None
            if any(not math.isfinite(v) for v in features):
                raise DatasetFormatError(f"line {lineno}: non-finite feature value")
            label_text = row[-1].strip()
            if label_text not in ("0", "1"):
                raise DatasetFormatError(
                    f"line {lineno}: label must be 0 or 1, got {label_text!r}"
                )
            points.append(features)
            labels.append(int(label_text))
    if not points:
        raise DatasetFormatError(f"{path}: no data rows")
    return LabeledDataset(points=np.array(points), labels=np.array(labels))


def load_config(path: str) -> SimulationConfig:
    """Read a JSON simulation config (see README for the schema)."""
    with open(path) as fh:
        raw = json.load(fh)
    try:
        pair_raw = raw["pair"]
        d = int(pair_raw["d"])
        prior1 = float(pair_raw.get("prior1", 0.5))
        pair = DistributionPair(
            class0=GaussianSpec(mu=float(pair_raw["mu0"]), beta=float(pair_raw["beta0"]), d=d),
            class1=GaussianSpec(mu=float(pair_raw["mu1"]), beta=float(pair_raw["beta1"]), d=d),
            prior0=1.0 - prior1,
            prior1=prior1,
        )
        ls = raw["ls"]
        if isinstance(ls, str):
            ls = parse_fractions(ls)
        return SimulationConfig(
            pair=pair,
            target=str(raw.get("target", "hellinger")),
            ks=tuple(int(k) for k in raw["ks"]),
            ls=tuple(float(l) for l in ls),
            lambdas=tuple(float(v) for v in raw.get("lambdas", (1.0,))),
            methods=tuple(str(m) for m in raw.get("methods", ("plain", "relaxed"))),
            n_grid=tuple(int(n) for n in raw["n_grid"]),
            trials=int(raw["trials"]),
            base_seed=int(raw["base_seed"]),
            output=str(raw.get("output", "results.csv")),
            repeats=int(raw.get("repeats", 1)),
            truth_mc_samples=int(raw.get("truth_mc_samples", 1_000_000)),
        )
    except KeyError as exc:
        raise ValueError(f"config {path}: missing required key {exc}") from None


def parse_fractions(text: str) -> tuple[float, ...]:
    """Parse subsample fractions: ``"0.1,0.2,0.5"`` or ``"log:0.05,0.5,12"``.

    The ``log:`` form produces logarithmically spaced values, endpoints
    included.
    """
    text = text.strip()
    if text.startswith("log:"):
        parts = text[4:].split(",")
        if len(parts) != 3:
            raise ValueError(f"expected log:lo,hi,count, got {text!r}")
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        return tuple(float(v) for v in np.geomspace(lo, hi, count))
    return tuple(float(v) for v in text.split(","))
