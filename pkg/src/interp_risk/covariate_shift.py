"""Self-consistent systems and risk evaluation under covariate shift.

Source and target share the signal but differ in feature covariances that
are simultaneously diagonalizable, so everything reduces to weighted sums
over a discrete joint eigenvalue spectrum. The variance and bias of the
pooled interpolator each come from a four-variable self-consistent system:
the first two unknowns solve a nested monotone bisection, the last two a
2x2 linear system. Finite-penalty (ridge) analogues and the target-only
anisotropic baseline are included.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._roots import monotone_root
from .errors import DomainError, InputError, SolverError
from .estimators import RiskBreakdown

_WEIGHT_SUM_TOL = 1e-12
_DET_GUARD = 1e-14


def _validate_atoms(lam1, lam2, weight, allow_zero_weight: bool):
    lam1 = np.atleast_1d(np.asarray(lam1, dtype=float))
    lam2 = np.atleast_1d(np.asarray(lam2, dtype=float))
    weight = np.atleast_1d(np.asarray(weight, dtype=float))
    if not (lam1.shape == lam2.shape == weight.shape) or lam1.ndim != 1:
        raise InputError("spectrum atoms must be three equal-length 1-d arrays")
    if lam1.size == 0:
        raise InputError("spectrum must contain at least one atom")
    if not (np.all(np.isfinite(lam1)) and np.all(np.isfinite(lam2))):
        raise InputError("eigenvalues must be finite")
    if np.any(lam1 <= 0) or np.any(lam2 <= 0):
        raise InputError("eigenvalues must be positive")
    if allow_zero_weight:
        if np.any(weight < 0):
            raise InputError("signal weights must be nonnegative")
    elif np.any(weight <= 0):
        raise InputError("spectrum weights must be positive")
    if abs(weight.sum() - 1.0) > _WEIGHT_SUM_TOL:
        raise InputError(f"weights must sum to 1, got {weight.sum()!r}")
    return lam1, lam2, weight


@dataclass
class JointSpectrum:
    """Discrete joint eigenvalue distribution of the two covariances.

    Atom ``i`` carries the source eigenvalue ``lam1[i]``, the target
    eigenvalue ``lam2[i]`` of the shared eigenvector, and probability mass
    ``weight[i]``.
    """

    lam1: np.ndarray
    lam2: np.ndarray
    weight: np.ndarray

    def __post_init__(self):
        self.lam1, self.lam2, self.weight = _validate_atoms(
            self.lam1, self.lam2, self.weight, allow_zero_weight=False
        )

    @classmethod
    def isotropic(cls) -> "JointSpectrum":
        return cls(np.array([1.0]), np.array([1.0]), np.array([1.0]))

    @classmethod
    def reciprocal_pair(cls, kappa: float) -> "JointSpectrum":
        """Source eigenvalues ``kappa`` and ``1/kappa`` in equal halves, target identity."""
        if kappa < 1:
            raise InputError(f"kappa must be at least 1, got {kappa}")
        return cls(
            np.array([kappa, 1.0 / kappa]),
            np.array([1.0, 1.0]),
            np.array([0.5, 0.5]),
        )

    def target_marginal(self) -> "MarginalSpectrum":
        return MarginalSpectrum(self.lam2.copy(), self.weight.copy())


@dataclass
class SignalSpectrum:
    """Joint spectrum weighted by the signal's energy in each eigendirection."""

    lam1: np.ndarray
    lam2: np.ndarray
    weight: np.ndarray

    def __post_init__(self):
        self.lam1, self.lam2, self.weight = _validate_atoms(
            self.lam1, self.lam2, self.weight, allow_zero_weight=True
        )

    @classmethod
    def matching(cls, H: JointSpectrum) -> "SignalSpectrum":
        """Signal energy spread exactly like the eigenvalue mass of ``H``."""
        return cls(H.lam1.copy(), H.lam2.copy(), H.weight.copy())

    def target_marginal(self) -> "MarginalSpectrum":
        return MarginalSpectrum(self.lam2.copy(), self.weight.copy())


@dataclass
class MarginalSpectrum:
    """Target-eigenvalue marginal of a joint spectrum."""

    lam: np.ndarray
    weight: np.ndarray

    def __post_init__(self):
        self.lam = np.atleast_1d(np.asarray(self.lam, dtype=float))
        self.weight = np.atleast_1d(np.asarray(self.weight, dtype=float))
        if self.lam.shape != self.weight.shape or self.lam.ndim != 1:
            raise InputError("marginal spectrum needs equal-length 1-d arrays")
        if np.any(self.lam <= 0) or np.any(self.weight < 0):
            raise InputError("marginal eigenvalues must be positive, weights nonnegative")
        if abs(self.weight.sum() - 1.0) > _WEIGHT_SUM_TOL:
            raise InputError("marginal weights must sum to 1")

    @classmethod
    def isotropic(cls) -> "MarginalSpectrum":
        return cls(np.array([1.0]), np.array([1.0]))


@dataclass(frozen=True)
class SolverSettings:
    """Tolerances for the self-consistent solvers."""

    tol: float = 1e-12
    max_iter: int = 200
    bracket_hi_growth: float = 2.0

    def __post_init__(self):
        if not self.tol > 0:
            raise InputError("tol must be positive")
        if self.max_iter < 1:
            raise InputError("max_iter must be at least 1")


@dataclass
class CovariateSolution:
    """Solutions of the variance and bias systems at a given penalty.

    ``lam == 0`` marks the interpolator limit. ``residual_norm`` is the
    largest absolute residual over all eight defining equations.
    """

    a1: float
    a2: float
    a3: float
    a4: float
    b1: float
    b2: float
    b3: float
    b4: float
    lam: float = 0.0
    residual_norm: float = field(default=float("nan"))


def _check_dims(n1: int, n2: int, p: int) -> None:
    if n1 < 0 or n2 < 0:
        raise InputError("sample sizes must be nonnegative")
    if n1 + n2 < 1:
        raise InputError("need at least one sample across the two datasets")
    if p <= n1 + n2:
        raise DomainError(
            f"interpolator solver needs p > n1 + n2, got p={p}, n={n1 + n2}"
        )


def _solve_base_interp(H, n1, n2, p, cfg):
    """First two unknowns of the interpolator systems by nested bisection.

    The inner equation's residual is strictly decreasing in the first
    unknown; the outer residual is strictly decreasing in the second.
    Dedicated closed-form branches cover empty datasets.
    """
    l1, l2, w = H.lam1, H.lam2, H.weight
    n = n1 + n2
    g = p / n
    r1 = n1 / n

    def inner(x2: float) -> float:
        if n1 == 0:
            return 0.0
        def res(x1):
            return r1 - g * float(np.sum(w * x1 * l1 / (x1 * l1 + x2 * l2 + 1.0)))
        return monotone_root(res, grow=cfg.bracket_hi_growth, max_iter=cfg.max_iter)

    if n2 == 0:
        def res_n2zero(x1):
            return 1.0 - g * float(np.sum(w * x1 * l1 / (x1 * l1 + 1.0)))
        x1 = monotone_root(res_n2zero, grow=cfg.bracket_hi_growth, max_iter=cfg.max_iter)
        return x1, 0.0

    def outer(x2: float) -> float:
        x1 = inner(x2)
        d = x1 * l1 + x2 * l2
        return 1.0 - g * float(np.sum(w * d / (d + 1.0)))

    x2 = monotone_root(outer, grow=cfg.bracket_hi_growth, max_iter=cfg.max_iter)
    return inner(x2), x2


def _solve_base_ridge(H, n1, n2, p, lam, cfg):
    """First two unknowns of the ridge systems by nested bisection."""
    l1, l2, w = H.lam1, H.lam2, H.weight
    n = n1 + n2
    g = p / n
    r1 = n1 / n

    def inner(x2: float) -> float:
        def res(x1):
            return x1 - r1 + g * float(
                np.sum(w * x1 * l1 / (x1 * l1 + x2 * l2 + lam))
            )
        return monotone_root(res, grow=cfg.bracket_hi_growth, max_iter=cfg.max_iter)

    if n2 == 0:
        return inner(0.0), 0.0

    def outer(x2: float) -> float:
        x1 = inner(x2)
        d = x1 * l1 + x2 * l2
        return x1 + x2 - 1.0 + g * float(np.sum(w * d / (d + lam)))

    x2 = monotone_root(outer, grow=cfg.bracket_hi_growth, max_iter=cfg.max_iter)
    return inner(x2), x2


def _solve_2x2(M: np.ndarray, rhs: np.ndarray) -> tuple[float, float]:
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    scale = max(np.max(np.abs(M)), 1.0)
    if abs(det) < _DET_GUARD * scale * scale:
        raise SolverError("singular 2x2 linear system in the spectrum solver")
    x = np.linalg.solve(M, rhs)
    return float(x[0]), float(x[1])


def _scaled_residual(residual: float, *terms: float) -> float:
    """Residual relative to the magnitude of the equation's terms.

    Equations at very small penalties carry operator scales far above 1, so
    a backward-stable solve can only drive the absolute residual down to
    roundoff times that scale.
    """
    scale = max(1.0, *(abs(t) for t in terms))
    return abs(residual) / scale


def _linear_residuals(M: np.ndarray, rhs: np.ndarray, v: np.ndarray) -> list[float]:
    res = M @ v - rhs
    scales = np.abs(M) @ np.abs(v) + np.abs(rhs)
    return [_scaled_residual(float(r), float(s)) for r, s in zip(res, scales)]


def solve_interpolator_system(
    H: JointSpectrum, n1: int, n2: int, p: int,
    cfg: SolverSettings | None = None,
) -> CovariateSolution:
    """Solve both interpolator-limit systems over the joint spectrum.

    The shared nonlinear pair is solved once; the trailing unknowns of the
    variance and bias systems are each linear given that pair. The returned
    solution is residual-certified against all eight equations.
    """
    cfg = cfg or SolverSettings()
    _check_dims(n1, n2, p)
    l1, l2, w = H.lam1, H.lam2, H.weight
    n = n1 + n2
    g = p / n
    x1, x2 = _solve_base_interp(H, n1, n2, p, cfg)

    D = x1 * l1 + x2 * l2 + 1.0
    i10 = float(np.sum(w * l1 / D**2))
    i01 = float(np.sum(w * l2 / D**2))
    i11 = float(np.sum(w * l1 * l2 / D**2))
    i02 = float(np.sum(w * l2 * l2 / D**2))

    Ma = np.array([[-g * i10, -g * i01],
                   [-g * (i10 + x2 * i11), g * x1 * i11]])
    rhs_a = np.array([x1 + x2, x1])
    a3, a4 = _solve_2x2(Ma, rhs_a)
    Mb = np.array([[i10, i01],
                   [i10 + x2 * i11, -x1 * i11]])
    rhs_b = np.array([x1 * i11 + x2 * i02, x1 * i11])
    b3, b4 = _solve_2x2(Mb, rhs_b)

    t1 = g * float(np.sum(w * (x1 * l1 + x2 * l2) / D))
    t2 = g * float(np.sum(w * x1 * l1 / D))
    residuals = [
        _scaled_residual(1.0 - t1, t1),
        _scaled_residual(n1 / n - t2, t2),
        *_linear_residuals(Ma, rhs_a, np.array([a3, a4])),
        *_linear_residuals(Mb, rhs_b, np.array([b3, b4])),
    ]
    sol = CovariateSolution(a1=x1, a2=x2, a3=a3, a4=a4,
                            b1=x1, b2=x2, b3=b3, b4=b4, lam=0.0,
                            residual_norm=max(residuals))
    if not math.isfinite(sol.residual_norm) or sol.residual_norm > cfg.tol:
        raise SolverError(
            f"solution failed residual certification: {sol.residual_norm:.3e} "
            f"> tol {cfg.tol:.3e}"
        )
    return sol


def solve_bias_system(
    H: JointSpectrum, n1: int, n2: int, p: int,
    cfg: SolverSettings | None = None,
) -> tuple[float, float, float, float]:
    """Solve the bias system alone, returning its four unknowns."""
    sol = solve_interpolator_system(H, n1, n2, p, cfg)
    return sol.b1, sol.b2, sol.b3, sol.b4


def risk_covariate_shift(
    H: JointSpectrum,
    G: SignalSpectrum | None,
    n1: int, n2: int, p: int,
    sigma_sq: float, beta2_norm_sq: float,
    cfg: SolverSettings | None = None,
) -> RiskBreakdown:
    """Interpolator risk under covariate shift over discrete spectra.

    ``G`` weights the bias by the signal's energy per eigendirection and
    must share the atom support of ``H``; ``None`` means energy spread like
    ``H``. The shift bias components are identically zero here because the
    signal does not move.
    """
    if G is None:
        G = SignalSpectrum.matching(H)
    if G.lam1.shape != H.lam1.shape or not (
        np.allclose(G.lam1, H.lam1) and np.allclose(G.lam2, H.lam2)
    ):
        raise InputError("signal spectrum must share the joint spectrum's atoms")
    sol = solve_interpolator_system(H, n1, n2, p, cfg)
    g = p / (n1 + n2)
    l1, l2, w = H.lam1, H.lam2, H.weight
    D = sol.a1 * l1 + sol.a2 * l2 + 1.0
    variance = -sigma_sq * g * float(
        np.sum(w * l2 * (sol.a3 * l1 + sol.a4 * l2) / D**2)
    )
    Db = sol.b1 * l1 + sol.b2 * l2 + 1.0
    bias = beta2_norm_sq * float(
        np.sum(G.weight * (sol.b3 * l1 + (sol.b4 + 1.0) * l2) / Db**2)
    )
    return RiskBreakdown(variance, bias, 0.0, 0.0)


def solve_ridge_covariate(
    H: JointSpectrum,
    G: SignalSpectrum | None,
    n1: int, n2: int, p: int,
    sigma_sq: float, beta2_norm_sq: float,
    lam: float,
    cfg: SolverSettings | None = None,
) -> tuple[RiskBreakdown, CovariateSolution]:
    """Ridge analogue of the covariate-shift risk at penalty ``lam > 0``."""
    if not lam > 0:
        raise InputError(f"ridge penalty must be positive, got {lam}")
    cfg = cfg or SolverSettings()
    if n1 < 0 or n2 < 0 or n1 + n2 < 1:
        raise InputError("need nonnegative sample sizes with at least one sample")
    if G is None:
        G = SignalSpectrum.matching(H)
    l1, l2, w = H.lam1, H.lam2, H.weight
    n = n1 + n2
    g = p / n
    x1, x2 = _solve_base_ridge(H, n1, n2, p, lam, cfg)

    D = x1 * l1 + x2 * l2 + lam
    j10 = float(np.sum(w * l1 / D**2))
    j01 = float(np.sum(w * l2 / D**2))
    j11 = float(np.sum(w * l1 * l2 / D**2))
    j02 = float(np.sum(w * l2 * l2 / D**2))

    M = np.array([[1.0 + g * lam * j10, 1.0 + g * lam * j01],
                  [1.0 + g * lam * j10 + g * x2 * j11, -g * x1 * j11]])
    rhs_a = np.array([g * (x1 * j10 + x2 * j01), g * x1 * j10])
    a3, a4 = _solve_2x2(M, rhs_a)
    rhs_b = np.array([g * lam * (x1 * j11 + x2 * j02), g * lam * x1 * j11])
    b3, b4 = _solve_2x2(M, rhs_b)

    t1 = g * float(np.sum(w * (x1 * l1 + x2 * l2) / D))
    t2 = g * float(np.sum(w * x1 * l1 / D))
    residuals = [
        _scaled_residual(x1 + x2 - 1.0 + t1, x1 + x2, t1),
        _scaled_residual(x1 - n1 / n + t2, x1, n1 / n, t2),
        *_linear_residuals(M, rhs_a, np.array([a3, a4])),
        *_linear_residuals(M, rhs_b, np.array([b3, b4])),
    ]
    sol = CovariateSolution(a1=x1, a2=x2, a3=a3, a4=a4,
                            b1=x1, b2=x2, b3=b3, b4=b4, lam=lam,
                            residual_norm=max(residuals))
    if not math.isfinite(sol.residual_norm) or sol.residual_norm > cfg.tol:
        raise SolverError(
            f"ridge solution failed residual certification: "
            f"{sol.residual_norm:.3e} > tol {cfg.tol:.3e}"
        )
    variance = sigma_sq * g * float(np.sum(
        w * (l1 * l2 * (x1 - a3 * lam) + l2 * l2 * (x2 - a4 * lam)) / D**2
    ))
    bias = beta2_norm_sq * float(np.sum(
        G.weight * (b3 * lam * l1 + (b4 + lam) * lam * l2) / D**2
    ))
    return RiskBreakdown(variance, bias, 0.0, 0.0), sol


def theory_target_only_anisotropic(
    h2: MarginalSpectrum,
    g2: MarginalSpectrum | None,
    n2: int, p: int,
    sigma_sq: float, beta2_norm_sq: float,
    cfg: SolverSettings | None = None,
) -> float:
    """Target-only interpolator risk with an anisotropic target covariance.

    Solves a scalar fixed point for the resolvent scale ``c0 >= 0`` by
    bisection, using the target-only aspect ratio ``p / n2``, then plugs it
    into the closed-form bias/variance expressions over the marginals.
    """
    cfg = cfg or SolverSettings()
    if p <= n2:
        raise DomainError(f"target-only theory undefined: p={p} <= n2={n2}")
    if n2 < 1:
        raise InputError("target-only risk needs n2 >= 1")
    if g2 is None:
        g2 = MarginalSpectrum(h2.lam.copy(), h2.weight.copy())
    gs = p / n2
    lam, w = h2.lam, h2.weight

    def res(c0: float) -> float:
        return (1.0 - 1.0 / gs) - float(np.sum(w * lam / (1.0 + c0 * gs * lam)))

    c0 = monotone_root(res, grow=cfg.bracket_hi_growth, max_iter=cfg.max_iter)
    if abs(res(c0)) > max(cfg.tol, 1e-12):
        raise SolverError("target-only fixed point failed residual check")
    denom2 = (1.0 + c0 * gs * lam) ** 2
    h_sq = float(np.sum(w * lam**2 / denom2))
    h_lin = float(np.sum(w * lam / denom2))
    g_lin = float(np.sum(g2.weight * g2.lam / (1.0 + c0 * gs * g2.lam) ** 2))
    ratio = h_sq / h_lin
    return beta2_norm_sq * (1.0 + gs * c0 * ratio) * g_lin + sigma_sq * gs * c0 * ratio


@dataclass(frozen=True)
class HeterogeneityProfile:
    """Risk along a heterogeneity sweep plus the sign classification."""

    rows: tuple[tuple[float, float, float], ...]  # (kappa, risk, risk - iso risk)
    classification: str  # "hetero_lowers_risk" | "hetero_raises_risk" | "kappa_invariant"


def heterogeneity_profile(
    kappa_grid,
    n1: int, n2: int, p: int,
    sigma_sq: float, beta2_norm_sq: float,
    cfg: SolverSettings | None = None,
) -> HeterogeneityProfile:
    """Risk of the pooled interpolator along a reciprocal-pair sweep.

    The target covariance is the identity; each row evaluates the spectrum
    with source eigenvalues ``kappa`` and ``1/kappa``. Classification by
    dimensions: heterogeneity lowers risk when the source is small
    (``n1 < min(p/2, p - n2)``), raises it when large, and has no effect at
    the boundary.
    """
    kappas = [float(k) for k in kappa_grid]
    if any(k < 1 for k in kappas):
        raise InputError("kappa values must be at least 1")
    iso = risk_covariate_shift(
        JointSpectrum.isotropic(), None, n1, n2, p, sigma_sq, beta2_norm_sq, cfg
    ).total
    rows = []
    for k in kappas:
        r = risk_covariate_shift(
            JointSpectrum.reciprocal_pair(k), None, n1, n2, p,
            sigma_sq, beta2_norm_sq, cfg,
        ).total
        rows.append((k, r, r - iso))
    pivot = min(p / 2, p - n2)
    if n1 < pivot:
        label = "hetero_lowers_risk"
    elif n1 == pivot:
        label = "kappa_invariant"
    else:
        label = "hetero_raises_risk"
    return HeterogeneityProfile(rows=tuple(rows), classification=label)
