"""Subsample-ensemble weight selection.

Finite-sample k-NN error rates carry a bias whose leading terms scale like
``M**(-j/d)`` in the training size M. Weighting error rates measured at
several subsample fractions ``l_i`` can cancel those leading terms. Two
programs are solved here:

* the exact program: minimum-norm weights that sum to one and zero out every
  low-order bias term ``sum_i w_i * l_i**(-j/d)`` for j in the exponent set;
* the relaxed program: minimize a joint threshold ``eps`` subject to the sum
  constraint, two-sided bias bounds ``|sum_i w_i l_i**(-j/d)| <= eps *
  n**(j/d - 1/2)``, and the variance budget ``sum w_i**2 <= lambda * eps``.

Both are small dense convex problems (L <= ~20 variables, <= ~10
constraints) and are solved with direct linear algebra: a KKT least-squares
solve for the exact program, and bisection on ``eps`` over a feasibility
check for the relaxed one, where each check is a minimum-norm projection
handled by a primal active-set loop.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

__all__ = [
    "EnsembleConfig",
    "EnsembleWeights",
    "InfeasibleConfigError",
    "SolverError",
    "constraint_exponents",
    "exact_weights",
    "relaxed_weights",
]


class InfeasibleConfigError(ValueError):
    """The weight program has no solution for this configuration."""


class SolverError(RuntimeError):
    """Iterative solver failed to converge; message carries diagnostics."""


def constraint_exponents(d: int) -> list[int]:
    """Bias exponents to cancel for intrinsic dimension ``d``.

    Returns ``[2, ..., ceil(d/2 - 1)]``; empty when the upper end falls
    below 2 (i.e. ``d <= 4``, where the plain estimator already converges at
    the parametric rate).
    """
    if d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d}")
    j_max = (d + 1) // 2 - 1  # == ceil(d/2 - 1) for integer d
    return list(range(2, j_max + 1))


@dataclass(frozen=True)
class EnsembleConfig:
    """Inputs of the weight programs.

    ``d`` is the intrinsic dimension used in the bias exponents (defaulting,
    at call sites, to the ambient data dimension); ``n`` enters only the
    relaxed program's bias bounds; ``lam`` trades bias tightness against the
    weight-norm budget.
    """

    ls: tuple[float, ...]
    d: int
    n: int
    lam: float

    def __post_init__(self) -> None:
        ls = tuple(float(l) for l in self.ls)
        if not ls:
            raise ValueError("need at least one subsample fraction")
        if any(not (0.0 < l <= 1.0) for l in ls):
            raise ValueError(f"subsample fractions must lie in (0, 1], got {ls}")
        if any(b <= a for a, b in zip(ls, ls[1:])):
            raise ValueError("subsample fractions must be strictly increasing")
        if self.d < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.d}")
        if self.n < 1:
            raise ValueError(f"sample size must be a positive integer, got {self.n}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        needed = max(1, len(constraint_exponents(self.d)) + 1)
        if len(ls) < needed:
            raise InfeasibleConfigError(
                f"{len(ls)} subsample fractions cannot satisfy "
                f"{needed - 1} bias constraints plus the sum constraint "
                f"(need L >= {needed} distinct fractions for d = {self.d})"
            )
        object.__setattr__(self, "ls", ls)

    @property
    def exponents(self) -> list[int]:
        return constraint_exponents(self.d)

    def bias_rows(self) -> np.ndarray:
        """Matrix with row j equal to ``ls ** (-j/d)``, one per exponent."""
        ls = np.asarray(self.ls)
        return np.vstack([ls ** (-j / self.d) for j in self.exponents]) if self.exponents else np.empty((0, len(ls)))


@dataclass(frozen=True)
class EnsembleWeights:
    """Solved weights with the achieved threshold and their provenance.

    For the exact program ``epsilon`` records the squared norm of the
    weights; for the relaxed program it is the minimized threshold.
    """

    w: np.ndarray
    epsilon: float
    method: Literal["exact", "relaxed"]

    def __post_init__(self) -> None:
        w = np.asarray(self.w, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a nonempty vector")
        if abs(float(w.sum()) - 1.0) > 1e-10:
            raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon}")
        if self.method not in ("exact", "relaxed"):
            raise ValueError(f"unknown method {self.method!r}")
        object.__setattr__(self, "w", w)


def _min_norm_solve(constraints: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Minimum-norm w with ``constraints @ w = rhs``, with one refinement pass."""
    w, _, rank, _ = np.linalg.lstsq(constraints, rhs, rcond=None)
    if rank < constraints.shape[0]:
        raise InfeasibleConfigError(
            "constraint system is rank deficient (duplicate subsample "
            "fractions or too few of them)"
        )
    correction = np.linalg.lstsq(constraints, rhs - constraints @ w, rcond=None)[0]
    return w + correction


def exact_weights(config: EnsembleConfig) -> EnsembleWeights:
    """Minimum-norm weights that cancel every low-order bias term.

    Solves ``min ||w||^2`` subject to ``sum w = 1`` and
    ``sum_i w_i * l_i**(-j/d) = 0`` for each exponent j, through the KKT
    least-squares system. With no bias exponents (``d <= 4``) the solution
    is exactly uniform ``1/L``. The returned ``epsilon`` is ``||w||^2``.
    """
    ls = np.asarray(config.ls)
    exps = config.exponents
    if not exps:
        w = np.full(len(ls), 1.0 / len(ls))
        return EnsembleWeights(w=w, epsilon=float(w @ w), method="exact")

    a = np.vstack([np.ones(len(ls)), config.bias_rows()])
    b = np.zeros(len(exps) + 1)
    b[0] = 1.0
    w = _min_norm_solve(a, b)
    residual = np.abs(a @ w - b).max()
    if not np.isfinite(residual) or residual > 1e-8:
        raise InfeasibleConfigError(
            f"exact weight constraints unsatisfied (max residual {residual:.3e}); "
            "subsample fractions are too close to dependent"
        )
    return EnsembleWeights(w=w, epsilon=float(w @ w), method="exact")


def _slab_min_norm(
    bias_rows: np.ndarray, bounds: np.ndarray, start: np.ndarray, max_iter: int = 200
) -> np.ndarray:
    """Minimize ``||w||^2`` s.t. ``sum w = 1`` and ``|bias_rows @ w| <= bounds``.

    Primal active-set method with identity Hessian. ``start`` must be
    feasible; the caller passes the exact-program solution, which sits at
    zero bias and therefore inside every slab. Working-set entries are
    (row, sign) pairs meaning ``sign * bias_rows[row] @ w == bounds[row]``.
    """
    n_rows = bias_rows.shape[0]
    n_vars = bias_rows.shape[1]
    ones = np.ones(n_vars)
    w = start.copy()

    feas_tol = 1e-10 * max(1.0, float(np.abs(bias_rows).max(initial=1.0)))
    violation = np.abs(bias_rows @ w) - bounds if n_rows else np.empty(0)
    if n_rows and violation.max(initial=0.0) > feas_tol:
        raise SolverError(
            f"active-set start point infeasible by {violation.max():.3e}"
        )

    active: dict[int, int] = {}  # row -> sign
    for _ in range(max_iter):
        rows = [ones] + [active[r] * bias_rows[r] for r in sorted(active)]
        rhs = np.concatenate(([1.0], [bounds[r] for r in sorted(active)]))
        c = np.vstack(rows)
        gram = c @ c.T
        try:
            y = np.linalg.solve(gram, rhs)
            v = c.T @ y
            # one refinement pass keeps the sum constraint exact even when
            # the weights are large (tight slabs around a big-norm w0)
            y_fix = np.linalg.solve(gram, rhs - c @ v)
            y = y + y_fix
            v = v + c.T @ y_fix
        except np.linalg.LinAlgError:
            y = np.linalg.lstsq(gram, rhs, rcond=None)[0]
            v = c.T @ y
        p = v - w

        if float(np.abs(p).max(initial=0.0)) <= 1e-13:
            # stationary for the current working set; check multiplier signs
            # (inequality multiplier is -y; optimal when all y <= 0)
            if not active:
                return v
            keys = sorted(active)
            worst = max(range(len(keys)), key=lambda i: y[1 + i])
            if y[1 + worst] <= 1e-12:
                return v
            del active[keys[worst]]
            continue

        # step toward v until the first inactive constraint blocks
        alpha = 1.0
        blocker: tuple[int, int] | None = None
        for r in range(n_rows):
            if r in active:
                continue
            val = float(bias_rows[r] @ w)
            dval = float(bias_rows[r] @ p)
            for sign in (1, -1):
                rate = sign * dval
                if rate <= 1e-14:
                    continue
                room = bounds[r] - sign * val
                step = max(0.0, room) / rate
                if step < alpha:
                    alpha = step
                    blocker = (r, sign)
        w = w + alpha * p
        if blocker is not None and alpha < 1.0:
            active[blocker[0]] = blocker[1]
    raise SolverError(
        f"active-set method did not converge within {max_iter} iterations "
        f"(rows={n_rows}, vars={n_vars}, active={active})"
    )


def relaxed_weights(config: EnsembleConfig) -> EnsembleWeights:
    """Minimize the joint bias/variance threshold ``eps``.

    Solves

        min eps   s.t.  sum w = 1,
                        |sum_i w_i l_i**(-j/d)| <= eps * n**(j/d - 1/2),
                        sum w_i**2 <= lambda * eps

    by bisection on ``eps``: for fixed ``eps`` the bias bounds carve an
    affine slab, feasibility reduces to whether the minimum-norm point of
    that slab fits the variance budget. The bias bounds are enforced
    two-sided because the bias constants they control carry unknown signs.

    Requires the exact program to be solvable (its solution certifies that
    every slab is nonempty). Whenever ``||w0||^2`` is itself feasible -- in
    particular for every ``lambda >= 1`` -- the returned ``eps`` never
    exceeds it. Bisection terminates at relative width 1e-9.
    """
    w0 = exact_weights(config).w
    ls = np.asarray(config.ls)
    exps = config.exponents
    n_l = len(ls)
    if not exps:
        w = np.full(n_l, 1.0 / n_l)
        return EnsembleWeights(w=w, epsilon=1.0 / (n_l * config.lam), method="relaxed")

    bias_rows = config.bias_rows()
    rate_scales = np.array([float(config.n) ** (j / config.d - 0.5) for j in exps])
    lam = config.lam

    solutions: dict[float, np.ndarray] = {}

    def feasible(eps: float) -> bool:
        w = _slab_min_norm(bias_rows, eps * rate_scales, w0)
        solutions[eps] = w
        return float(w @ w) <= lam * eps

    # eps >= ||w||^2 / lam >= (1/L) / lam for any w summing to one
    lo = 1.0 / (n_l * lam)
    if feasible(lo):
        return EnsembleWeights(w=solutions[lo], epsilon=lo, method="relaxed")

    eps_star = float(w0 @ w0)
    hi = 2.0 * eps_star / min(lam, 1.0)
    if feasible(eps_star):
        hi = eps_star
    elif not feasible(hi):
        raise SolverError(
            f"relaxed program bracket failure: eps={hi:.6e} should be feasible "
            f"(||w0||^2={eps_star:.6e}, lambda={lam})"
        )

    while hi - lo > 1e-9 * hi:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return EnsembleWeights(w=solutions[hi], epsilon=hi, method="relaxed")
