"""Error-rate basis curves and least-squares fitting of target functionals.

The asymptotic error of a k-NN classifier at posterior value eta is a known
closed-form curve r_k(eta). A target functional written as E_f[g(eta)] can be
approximated by a linear combination sum_k alpha_k r_k(eta); the alpha are fit
once by least squares on an eta grid and are independent of any data.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Callable

import numpy as np

__all__ = [
    "TargetFunctional",
    "BasisCoefficients",
    "BasisRankError",
    "r_k",
    "g_hellinger",
    "fit_alpha",
    "evaluate_basis_fit",
    "get_target",
    "register_target",
]


class BasisRankError(ValueError):
    """Design matrix is rank deficient (duplicate or colinear basis columns)."""


def _validate_k(k: int) -> int:
    k = int(k)
    if k < 1 or k % 2 == 0:
        raise ValueError(f"k must be an odd positive integer, got {k}")
    return k


def r_k(eta, k: int):
    """Asymptotic k-NN error rate at posterior value ``eta``.

    For odd ``k`` the curve is the binomial sum

        r_k(eta) = sum_{i=ceil(k/2)}^{k} C(k, i)
                   * (eta^i (1-eta)^(k-i+1) + (1-eta)^i eta^(k-i+1)),

    the probability that a majority of k labels drawn at posterior eta
    disagrees with the realized label. Binomial coefficients are taken as
    exact integers. Vectorized over ``eta``; scalar in, scalar out.

    Satisfies r_k(0) = r_k(1) = 0, r_k(1 - eta) = r_k(eta), and a maximum
    of 0.5 at eta = 0.5. For k = 1 it reduces to 2 eta (1 - eta).
    """
    k = _validate_k(k)
    eta_arr = np.asarray(eta, dtype=float)
    if np.any(eta_arr < 0.0) or np.any(eta_arr > 1.0):
        raise ValueError("eta must lie in [0, 1]")
    comp = 1.0 - eta_arr
    out = np.zeros_like(eta_arr)
    for i in range((k + 1) // 2, k + 1):
        c = float(comb(k, i))
        out += c * (eta_arr**i * comp ** (k - i + 1) + comp**i * eta_arr ** (k - i + 1))
    if np.isscalar(eta) or eta_arr.ndim == 0:
        return float(out)
    return out


def g_hellinger(eta):
    """Posterior-side integrand of the squared Hellinger distance.

    ``g(eta) = (sqrt(eta) - sqrt(1 - eta))**2``, normalized so that under
    balanced priors ``E_f[g(eta)]`` equals the squared Hellinger distance
    ``(1/2) * integral (sqrt(f0) - sqrt(f1))**2 = 1 - BC`` exactly.
    Vectorized over ``eta``.
    """
    eta_arr = np.asarray(eta, dtype=float)
    out = (np.sqrt(eta_arr) - np.sqrt(1.0 - eta_arr)) ** 2
    if np.isscalar(eta) or eta_arr.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class TargetFunctional:
    """A named density functional expressed through its posterior-side g."""

    name: str
    g: Callable[[np.ndarray], np.ndarray]


_TARGETS: dict[str, TargetFunctional] = {}


def register_target(target: TargetFunctional) -> None:
    """Add a functional to the by-name registry (overwrites same name)."""
    _TARGETS[target.name] = target


def get_target(name: str) -> TargetFunctional:
    """Look up a registered functional by name."""
    try:
        return _TARGETS[name]
    except KeyError:
        known = ", ".join(sorted(_TARGETS)) or "<none>"
        raise KeyError(f"unknown target functional {name!r}; registered: {known}") from None


register_target(TargetFunctional(name="hellinger", g=g_hellinger))


@dataclass(frozen=True)
class BasisCoefficients:
    """Least-squares weights mapping error-rate curves onto a target g.

    ``fit_residual`` is the mean squared residual over the fitting grid.
    """

    ks: tuple[int, ...]
    alpha: np.ndarray
    fit_residual: float

    def __post_init__(self) -> None:
        alpha = np.asarray(self.alpha, dtype=float)
        if alpha.shape != (len(self.ks),):
            raise ValueError(
                f"alpha must have one entry per k: {alpha.shape} vs {len(self.ks)}"
            )
        object.__setattr__(self, "ks", tuple(int(k) for k in self.ks))
        object.__setattr__(self, "alpha", alpha)


def fit_alpha(target: TargetFunctional, ks, grid_size: int = 1001) -> BasisCoefficients:
    """Fit basis coefficients alpha minimizing the squared residual of g.

    Discretizes eta on a uniform inclusive grid over [0, 1] and solves

        min_alpha sum_grid | g(eta) - sum_k alpha_k r_k(eta) |^2

    by orthogonal factorization (numpy ``lstsq``). The residual reported is
    the mean of the squared residuals on the grid. The coefficients depend
    only on (target, ks, grid_size), never on data.

    Raises
    ------
    BasisRankError
        If the design matrix is rank deficient, e.g. duplicate k values.
    ValueError
        If the grid is too small (fewer than ``2 * len(ks)`` points).
    """
    ks = tuple(_validate_k(k) for k in ks)
    if grid_size < 2 * len(ks):
        raise ValueError(
            f"grid_size must be at least 2 * len(ks) = {2 * len(ks)}, got {grid_size}"
        )
    grid = np.linspace(0.0, 1.0, int(grid_size))
    design = np.column_stack([r_k(grid, k) for k in ks])
    rhs = np.asarray(target.g(grid), dtype=float)
    alpha, _, rank, _ = np.linalg.lstsq(design, rhs, rcond=None)
    if rank < len(ks):
        raise BasisRankError(
            f"design matrix rank {rank} < {len(ks)} basis columns "
            f"(duplicate or colinear basis columns for ks={ks})"
        )
    residual = rhs - design @ alpha
    return BasisCoefficients(
        ks=ks, alpha=alpha, fit_residual=float(np.mean(residual**2))
    )


def evaluate_basis_fit(coeffs: BasisCoefficients, eta):
    """Evaluate ``sum_k alpha_k r_k(eta)`` for a fitted coefficient vector."""
    eta_arr = np.asarray(eta, dtype=float)
    out = np.zeros_like(eta_arr, dtype=float)
    for k, a in zip(coeffs.ks, coeffs.alpha):
        out = out + a * r_k(eta_arr, k)
    if np.isscalar(eta) or eta_arr.ndim == 0:
        return float(out)
    return out
