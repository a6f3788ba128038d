"""Deterministic risk formulas and decision rules under signal shift.

Covers the overparametrized pooled interpolator with isotropic Gaussian
designs: its closed-form variance and bias, the target-only baseline, the
multi-source extension, the pool-vs-target decision rule driven by the
signal-to-noise ratio (SNR) and shift-to-signal ratio (SSR), the optimal
target sample size, and the finite-penalty ridge limits built from the
Marchenko-Pastur resolvent and a two-matrix free-addition fixed point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ._roots import positive_quadratic_root
from .errors import DomainError, InputError
from .estimators import RiskBreakdown


@dataclass
class ShiftSummary:
    """Scalar summary of a signal-shift problem instance.

    Everything the closed-form risk needs: sample sizes, dimension, noise
    variance, the squared target-signal norm, the squared shift norm, and
    the inner product between shift and target signal.
    """

    n1: int
    n2: int
    p: int
    sigma_sq: float
    beta2_norm_sq: float
    shift_norm_sq: float
    cross_term: float = 0.0

    def __post_init__(self):
        if self.p < 1 or self.n1 < 0 or self.n2 < 0:
            raise InputError("need p >= 1 and nonnegative sample sizes")
        if self.sigma_sq < 0 or self.beta2_norm_sq < 0 or self.shift_norm_sq < 0:
            raise InputError("variances and squared norms must be nonnegative")
        cauchy = math.sqrt(self.beta2_norm_sq * self.shift_norm_sq)
        if abs(self.cross_term) > cauchy * (1 + 1e-9) + 1e-12:
            raise InputError(
                f"cross term {self.cross_term} violates the Cauchy-Schwarz "
                f"bound {cauchy}"
            )

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    @property
    def gamma(self) -> float:
        return self.p / self.n if self.n else math.inf

    @property
    def gamma1(self) -> float:
        return self.p / self.n1 if self.n1 else math.inf

    @property
    def gamma2(self) -> float:
        return self.p / self.n2 if self.n2 else math.inf

    @property
    def snr(self) -> float:
        return self.beta2_norm_sq / self.sigma_sq if self.sigma_sq else math.inf

    @property
    def ssr(self) -> float:
        return self.shift_norm_sq / self.beta2_norm_sq if self.beta2_norm_sq else math.inf


@dataclass(frozen=True)
class RidgeLimitQuantities:
    """Scalars behind the ridge risk limit.

    ``m`` is the Marchenko-Pastur resolvent trace at the negated penalty and
    ``m_prime`` its derivative; ``f1``-``f3`` come from the subordination
    fixed point of the weighted two-dataset Gram sum, with ``alpha`` the
    target/source sample ratio and ``s`` the rescaled penalty.
    """

    m: float
    m_prime: float
    f1: float
    f2: float
    f3: float
    alpha: float
    s: float


@dataclass(frozen=True)
class TransferDecision:
    """Outcome of the pool-vs-target-only comparison."""

    recommendation: str  # "pool" | "target_only"
    regime: str  # "low_snr" | "high_snr"
    snr_threshold: float
    rho: float | None  # shift tolerance; undefined in the low-SNR regime


@dataclass(frozen=True)
class OptimalTargetSize:
    """Grid-search optimum for the target sample size, plus closed forms.

    The integer grid optimum is authoritative. Two closed-form candidates
    are reported side by side because they disagree in general: one uses a
    radical ``p^2/SNR + n1*SSR``, the stationary point of the risk curve
    uses ``p^2/SNR + n1*(p-n1)*SSR``. Candidate risks are evaluated at the
    nearest admissible integer (sample sizes are integers), with the noise
    variance normalized to one.
    """

    n2_grid_opt: int
    n2_simple_formula: float
    n2_stationary_formula: float
    risk_at_grid_opt: float
    risk_at_simple_formula: float
    risk_at_stationary_formula: float

    def describe(self) -> str:
        return (
            f"grid optimum n2={self.n2_grid_opt} (risk {self.risk_at_grid_opt:.6g}); "
            f"closed-form candidates: n2={self.n2_simple_formula:.4f} "
            f"(risk {self.risk_at_simple_formula:.6g} at the rounded size) and "
            f"n2={self.n2_stationary_formula:.4f} "
            f"(risk {self.risk_at_stationary_formula:.6g} at the rounded size)"
        )


def theory_min_norm_model_shift(s: ShiftSummary) -> RiskBreakdown:
    """Closed-form risk of the pooled interpolator under signal shift.

    Requires the overparametrized regime ``p > n1 + n2``. The cross-term
    component is identically zero under isotropic designs.
    """
    p, n, n1 = s.p, s.n, s.n1
    if p <= n:
        raise DomainError(
            f"interpolator theory undefined at/below the threshold: p={p} <= n={n}"
        )
    variance = s.sigma_sq * n / (p - n)
    b1 = s.beta2_norm_sq * (p - n) / p
    b2 = s.shift_norm_sq * n1 * (p - n1) / (p * (p - n))
    return RiskBreakdown(variance, b1, b2, 0.0)


def theory_target_only_isotropic(
    n2: int, p: int, sigma_sq: float, beta2_norm_sq: float
) -> float:
    """Risk of the target-only interpolator with isotropic design."""
    if p <= n2:
        raise DomainError(
            f"target-only interpolator theory undefined: p={p} <= n2={n2}"
        )
    return beta2_norm_sq * (p - n2) / p + sigma_sq * n2 / (p - n2)


def theory_multi_source(
    sources: list[tuple[int, float]],
    n_T: int,
    p: int,
    sigma_sq: float,
    betaT_norm_sq: float,
) -> RiskBreakdown:
    """Pooled-interpolator risk with several sources and one target.

    ``sources`` holds ``(n_k, squared shift norm of source k)`` pairs. The
    shift bias adds one term per source.
    """
    n = n_T + sum(nk for nk, _ in sources)
    if p <= n:
        raise DomainError(f"multi-source theory undefined: p={p} <= n={n}")
    if n_T < 0 or any(nk < 0 for nk, _ in sources):
        raise InputError("sample sizes must be nonnegative")
    variance = sigma_sq * n / (p - n)
    b1 = betaT_norm_sq * (p - n) / p
    b2 = sum(
        nk * (p - nk) / (p * (p - nk - n_T)) * shift_sq for nk, shift_sq in sources
    )
    return RiskBreakdown(variance, b1, b2, 0.0)


def decide_transfer(snr: float, ssr: float, n1: int, n2: int, p: int) -> TransferDecision:
    """Pool-vs-target-only rule from SNR, SSR and the dimensions.

    Below the SNR threshold pooling never helps. Above it, pooling wins
    exactly when the shift-to-signal ratio stays below a tolerance that
    shrinks as SNR falls.
    """
    n = n1 + n2
    if p <= n:
        raise DomainError(f"decision rule undefined: p={p} <= n={n}")
    if snr < 0 or ssr < 0:
        raise InputError("snr and ssr must be nonnegative")
    threshold = p * p / ((p - n) * (p - n2))
    if snr <= threshold:
        return TransferDecision("target_only", "low_snr", threshold, None)
    rho = (p - n) / (p - n1) - p * p / ((p - n1) * (p - n2) * snr)
    rec = "pool" if ssr < rho else "target_only"
    return TransferDecision(rec, "high_snr", threshold, rho)


def _total_risk_unit_noise(p: int, n1: int, n2: float, snr: float, ssr: float) -> float:
    """Pooled risk with sigma^2 = 1, signal norm ``snr``, shift norm ``snr*ssr``."""
    n = n1 + n2
    return (
        n / (p - n)
        + snr * (p - n) / p
        + snr * ssr * n1 * (p - n1) / (p * (p - n))
    )


def optimal_target_size(snr: float, ssr: float, n1: int, p: int) -> OptimalTargetSize:
    """Target sample size minimizing the pooled-interpolator risk.

    Searches integers ``n2 in [0, p - n1 - 1]`` (ties to the smallest) and
    reports both closed-form candidates alongside, with their risks taken
    at the nearest admissible integer. Depends on the noise level only
    through SNR and SSR.
    """
    if p <= n1:
        raise DomainError(f"need p > n1, got p={p}, n1={n1}")
    if snr <= 0:
        grid_opt = 0
    else:
        best, grid_opt = math.inf, 0
        for n2 in range(0, p - n1):
            r = _total_risk_unit_noise(p, n1, n2, snr, ssr)
            if r < best:
                best, grid_opt = r, n2
    radical_simple = p * p / snr + n1 * ssr if snr > 0 else math.inf
    radical_stationary = p * p / snr + n1 * (p - n1) * ssr if snr > 0 else math.inf
    n2_simple = max(p - n1 - math.sqrt(radical_simple), 0.0)
    n2_stationary = max(p - n1 - math.sqrt(radical_stationary), 0.0)

    def risk_at(candidate: float) -> float:
        n2 = min(max(int(round(candidate)), 0), p - n1 - 1)
        return _total_risk_unit_noise(p, n1, n2, snr, ssr)

    return OptimalTargetSize(
        n2_grid_opt=grid_opt,
        n2_simple_formula=n2_simple,
        n2_stationary_formula=n2_stationary,
        risk_at_grid_opt=_total_risk_unit_noise(p, n1, grid_opt, snr, ssr),
        risk_at_simple_formula=risk_at(n2_simple),
        risk_at_stationary_formula=risk_at(n2_stationary),
    )


def mp_resolvent(lam: float, gamma: float) -> tuple[float, float]:
    """Marchenko-Pastur resolvent trace at ``-lam`` and its derivative.

    Solves the self-consistency ``gamma*lam*m^2 + (1-gamma+lam)*m - 1 = 0``
    (positive root). The implicit-differentiation derivative
    ``(gamma*m^2 + m) / (2*gamma*lam*m + 1 - gamma + lam)`` is rewritten via
    the self-consistency into a subtraction-free equivalent so it stays
    accurate at small penalties.
    """
    if not lam > 0:
        raise InputError(f"penalty must be positive, got {lam}")
    m = positive_quadratic_root(gamma * lam, 1.0 - gamma + lam, -1.0)
    m_prime = m * m * (gamma * m + 1.0) / (1.0 + gamma * lam * m * m)
    return m, m_prime


def ridge_limit_quantities(s: ShiftSummary, lam: float) -> RidgeLimitQuantities:
    """Solve the scalar fixed points behind the ridge risk limit."""
    if not lam > 0:
        raise InputError(f"penalty must be positive, got {lam}")
    if s.n1 == 0 or s.n2 == 0:
        raise InputError("ridge limit quantities need n1 > 0 and n2 > 0")
    gamma1 = s.gamma1
    alpha = gamma1 / s.gamma2  # equals n2/n1
    sr = lam * (1.0 + alpha)
    m, m_prime = mp_resolvent(lam, s.gamma)
    f1 = positive_quadratic_root(sr * gamma1, 1.0 + alpha - gamma1 + sr, -1.0)
    one_g1f1 = 1.0 + gamma1 * f1
    f2 = f1 * f1 * one_g1f1 * one_g1f1 / (one_g1f1 * one_g1f1 - gamma1 * f1 * f1)
    f3 = alpha / one_g1f1 + sr
    return RidgeLimitQuantities(m=m, m_prime=m_prime, f1=f1, f2=f2, f3=f3,
                                alpha=alpha, s=sr)


def theory_ridge_model_shift(
    s: ShiftSummary, lam: float
) -> tuple[RiskBreakdown, RidgeLimitQuantities]:
    """Deterministic ridge risk under signal shift with isotropic designs.

    Every component converges to its interpolator counterpart as the
    penalty vanishes; in particular the cross-term component is
    proportional to the rescaled penalty ``2*s`` and vanishes in that
    limit. All four components are validated against the exact
    finite-sample conditional risk in the tests.
    """
    q = ridge_limit_quantities(s, lam)
    gamma = s.gamma
    m = q.m
    # equals sigma^2 * gamma * m^2 * (1 - gamma + gamma*lam^2*m') by the
    # self-consistency; this form has no cancellation at small penalties
    variance = (
        s.sigma_sq * gamma * m * (1.0 - lam * m) / (1.0 + gamma * lam * m * m)
    )
    b1 = (
        lam * lam * s.beta2_norm_sq
        * m * m * (1.0 + gamma * m) / (1.0 + gamma * lam * m * m)
    )
    denom = 1.0 - s.gamma1 * q.f2 * (q.f3 - q.s) / (1.0 + s.gamma1 * q.f1)
    b2 = s.shift_norm_sq * (1.0 - 2.0 * q.f1 * q.f3 + q.f2 * q.f3 * q.f3) / denom
    b3 = -2.0 * q.s * s.cross_term * (q.f1 - q.f3 * q.f2) / denom
    return RiskBreakdown(variance, b1, b2, b3), q
