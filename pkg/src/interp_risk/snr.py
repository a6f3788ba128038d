"""Signal-to-noise and shift-to-signal estimation from raw data.

A plain cyclic coordinate-descent lasso with exact soft-threshold updates,
a residual-based debiasing step, and the ratio estimators built on top:
per-dataset squared signal norms, the noise variance from the target
response second moment, and the squared shift norm from the debiased
difference. Negative raw estimates are clamped to zero and every clamp is
reported, never silent.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceWarning,
    DegreesOfFreedomError,
    EstimateUndefinedError,
    InputError,
)
from .estimators import DatasetPair
from .model_shift import (
    OptimalTargetSize,
    TransferDecision,
    decide_transfer,
    optimal_target_size,
)

# When True (python without -O), the objective is checked to be
# non-increasing after every coordinate-descent sweep.
DEBUG_CHECKS = __debug__


@dataclass(frozen=True)
class LassoConfig:
    """l1 penalty scale and coordinate-descent stopping rules."""

    lambda_l: float = 1.0
    tol: float = 1e-8
    max_sweeps: int = 10_000

    def __post_init__(self):
        if not self.lambda_l > 0:
            raise InputError("lambda_l must be positive")
        if not self.tol > 0 or self.max_sweeps < 1:
            raise InputError("tol must be positive and max_sweeps at least 1")


@dataclass(frozen=True)
class DebiasedFit:
    """Lasso solution plus its residual-corrected version."""

    beta_l: np.ndarray
    beta_d: np.ndarray
    tau_sq: float
    support_size: int


@dataclass(frozen=True)
class SnrReport:
    """Estimated SNR and SSR with the per-dataset ingredients.

    ``clamped`` names every raw quantity that was negative and got clamped
    to zero.
    """

    snr_hat: float
    ssr_hat: float
    beta_norm_hats: tuple[float, float]
    sigma_sq_hat: float
    clamped: tuple[str, ...]


def _objective(r: np.ndarray, beta: np.ndarray, n: int, lambda_l: float) -> float:
    return 0.5 / n * float(r @ r) + lambda_l / math.sqrt(n) * float(np.abs(beta).sum())


def lasso_fit(X, y, cfg: LassoConfig | None = None) -> np.ndarray:
    """Cyclic coordinate descent for the l1-penalized least squares fit.

    Minimizes ``(1/(2n)) ||y - Xb||^2 + (lambda_l/sqrt(n)) ||b||_1`` with
    exact soft-threshold coordinate updates. Converged when the largest
    coordinate change in a sweep is at most ``tol``; hitting the sweep cap
    emits a :class:`ConvergenceWarning`.
    """
    cfg = cfg or LassoConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise InputError("X must be n x p and y length n")
    n, p = X.shape
    if n < 1:
        raise InputError("lasso needs at least one sample")
    col_sq = np.einsum("ij,ij->j", X, X)
    threshold = cfg.lambda_l * math.sqrt(n)

    beta = np.zeros(p)
    r = y.copy()
    prev_obj = _objective(r, beta, n, cfg.lambda_l) if DEBUG_CHECKS else 0.0
    for _ in range(cfg.max_sweeps):
        max_delta = 0.0
        for j in range(p):
            cj = col_sq[j]
            if cj == 0.0:
                continue
            bj = beta[j]
            rho = float(X[:, j] @ r) + cj * bj
            if rho > threshold:
                new = (rho - threshold) / cj
            elif rho < -threshold:
                new = (rho + threshold) / cj
            else:
                new = 0.0
            delta = new - bj
            if delta != 0.0:
                r -= delta * X[:, j]
                beta[j] = new
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
        if DEBUG_CHECKS:
            obj = _objective(r, beta, n, cfg.lambda_l)
            assert obj <= prev_obj + 1e-10 * (1.0 + abs(prev_obj)), (
                "lasso objective increased across a sweep"
            )
            prev_obj = obj
        if max_delta <= cfg.tol:
            return beta
    warnings.warn(
        f"lasso stopped at the sweep cap ({cfg.max_sweeps}) before reaching "
        f"tol={cfg.tol}",
        ConvergenceWarning,
        stacklevel=2,
    )
    return beta


def lasso_kkt_violation(X, y, beta, cfg: LassoConfig | None = None) -> float:
    """Largest stationarity violation of a lasso solution.

    Inactive coordinates must satisfy ``|x_j'(y - Xb)| / n <= lambda_l/sqrt(n)``
    and active ones must sit on the subgradient boundary; the return value
    is the worst excess over those bounds (0 means exact KKT).
    """
    cfg = cfg or LassoConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    beta = np.asarray(beta, dtype=float)
    n = X.shape[0]
    grad = X.T @ (y - X @ beta) / n
    bound = cfg.lambda_l / math.sqrt(n)
    active = beta != 0.0
    worst = 0.0
    if np.any(~active):
        worst = max(worst, float(np.max(np.abs(grad[~active]))) - bound)
    if np.any(active):
        worst = max(
            worst,
            float(np.max(np.abs(grad[active] - bound * np.sign(beta[active])))),
        )
    return max(worst, 0.0)


def debias(X, y, beta_l) -> DebiasedFit:
    """Residual-corrected estimator and its variance proxy.

    Adds ``X'(y - X b) / (n - ||b||_0)`` to the lasso solution and scales
    the squared residual norm by the squared residual degrees of freedom.
    Requires the support to be smaller than the sample size.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    beta_l = np.asarray(beta_l, dtype=float)
    n = X.shape[0]
    support = int(np.count_nonzero(beta_l))
    dof = n - support
    if dof <= 0:
        raise DegreesOfFreedomError(
            f"lasso support size {support} >= sample size {n}; increase lambda_l"
        )
    resid = y - X @ beta_l
    beta_d = beta_l + X.T @ resid / dof
    tau_sq = float(resid @ resid) / dof**2
    return DebiasedFit(beta_l=beta_l, beta_d=beta_d, tau_sq=tau_sq,
                       support_size=support)


def _clamp(value: float, name: str, clamped: list[str]) -> float:
    if value < 0.0:
        clamped.append(name)
        return 0.0
    return value


def estimate_snr_ssr(
    data: DatasetPair,
    cfg: LassoConfig | None = None,
    centered_variance: bool = False,
) -> SnrReport:
    """Estimate SNR and SSR from the raw dataset pair.

    Per dataset the squared signal norm is the debiased norm minus the
    dimension-scaled variance proxy; the noise variance is the target
    response second moment minus the target signal estimate (a centered
    variance is available via ``centered_variance``). Degenerate zero
    estimates raise :class:`EstimateUndefinedError` with diagnostics.
    """
    cfg = cfg or LassoConfig()
    if data.n1 == 0 or data.n2 == 0:
        raise InputError("SNR/SSR estimation needs both datasets nonempty")
    p = data.p
    fits = []
    for X, y in ((data.X1, data.y1), (data.X2, data.y2)):
        beta_l = lasso_fit(X, y, cfg)
        fits.append(debias(X, y, beta_l))

    clamped: list[str] = []
    raw_signals = [
        float(f.beta_d @ f.beta_d) - p * f.tau_sq for f in fits
    ]
    s1 = _clamp(raw_signals[0], "beta_norm_1", clamped)
    s2 = _clamp(raw_signals[1], "beta_norm_2", clamped)
    y2 = data.y2
    var_y2 = float(y2 @ y2) / data.n2
    if centered_variance:
        var_y2 = float(np.var(y2))
    sigma_sq = _clamp(var_y2 - s2, "sigma_sq", clamped)
    diff = fits[0].beta_d - fits[1].beta_d
    raw_shift = float(diff @ diff) - p * (fits[0].tau_sq + fits[1].tau_sq)
    shift = _clamp(raw_shift, "shift_norm", clamped)

    if s2 == 0.0 or sigma_sq == 0.0:
        raise EstimateUndefinedError(
            "SNR/SSR undefined: "
            + ("target signal estimate is zero" if s2 == 0.0 else "noise estimate is zero"),
            diagnostics={
                "raw_signal_1": raw_signals[0],
                "raw_signal_2": raw_signals[1],
                "var_y2": var_y2,
                "raw_shift": raw_shift,
                "clamped": tuple(clamped),
            },
        )
    return SnrReport(
        snr_hat=s2 / sigma_sq,
        ssr_hat=shift / s2,
        beta_norm_hats=(s1, s2),
        sigma_sq_hat=sigma_sq,
        clamped=tuple(clamped),
    )


def decide_from_data(
    data: DatasetPair,
    cfg: LassoConfig | None = None,
) -> tuple[SnrReport, TransferDecision, OptimalTargetSize]:
    """Estimate the ratios from data and run both decision rules."""
    report = estimate_snr_ssr(data, cfg)
    decision = decide_transfer(report.snr_hat, report.ssr_hat,
                               data.n1, data.n2, data.p)
    sizes = optimal_target_size(report.snr_hat, report.ssr_hat, data.n1, data.p)
    return report, decision, sizes
