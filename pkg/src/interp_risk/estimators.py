"""Pooled interpolators, ridge fits, gradient descent, and empirical risk.

Estimators operate on a source/target dataset pair and are pure functions of
their inputs. The pooled minimum-l2-norm interpolator is the pseudoinverse
solution on the stacked design; the ridge fit and gradient descent recover it
as the penalty vanishes or the iteration count grows. Empirical risk comes in
two flavors: an exact noise-averaged decomposition (variance plus three bias
terms) and a Monte-Carlo estimate that redraws the noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, SolverError

# Relative singular-value cutoff for all pseudoinverse / min-norm solves.
# Chosen so rank decisions stay stable near the interpolation threshold.
PINV_RTOL = 1e-10

# Gradient descent stops early once the data residual is this small.
_GD_RESIDUAL_TOL = 1e-12
# Divergence guard: abort if the iterate norm exceeds this times the
# initial residual scale.
_GD_DIVERGENCE_FACTOR = 1e6


def _as_matrix(name: str, a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise InputError(f"{name} must be a 2-d array, got ndim={a.ndim}")
    return a


def _as_vector(name: str, a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 1:
        raise InputError(f"{name} must be a 1-d array, got ndim={a.ndim}")
    return a


@dataclass
class DatasetPair:
    """Source (``X1``, ``y1``) and target (``X2``, ``y2``) regression data.

    Either block may be empty (zero rows); both must share the feature
    dimension ``p``.
    """

    X1: np.ndarray
    y1: np.ndarray
    X2: np.ndarray
    y2: np.ndarray

    def __post_init__(self):
        self.X1 = _as_matrix("X1", self.X1)
        self.X2 = _as_matrix("X2", self.X2)
        self.y1 = _as_vector("y1", self.y1)
        self.y2 = _as_vector("y2", self.y2)
        if self.X1.shape[1] != self.X2.shape[1]:
            raise InputError(
                f"X1 and X2 must have equal column counts, got "
                f"{self.X1.shape[1]} and {self.X2.shape[1]}"
            )
        if self.X1.shape[0] != self.y1.shape[0]:
            raise InputError("X1 and y1 row counts differ")
        if self.X2.shape[0] != self.y2.shape[0]:
            raise InputError("X2 and y2 row counts differ")

    @classmethod
    def from_target_only(cls, X2, y2) -> "DatasetPair":
        X2 = _as_matrix("X2", X2)
        p = X2.shape[1]
        return cls(np.zeros((0, p)), np.zeros(0), X2, y2)

    @property
    def n1(self) -> int:
        return self.X1.shape[0]

    @property
    def n2(self) -> int:
        return self.X2.shape[0]

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    @property
    def p(self) -> int:
        return self.X1.shape[1]

    def stacked(self) -> tuple[np.ndarray, np.ndarray]:
        """Design and response with source rows on top of target rows."""
        return np.vstack([self.X1, self.X2]), np.concatenate([self.y1, self.y2])


@dataclass
class PopulationSpec:
    """Ground-truth signals, target covariance, and noise variance."""

    beta1: np.ndarray
    beta2: np.ndarray
    Sigma2: np.ndarray
    sigma_sq: float

    def __post_init__(self):
        self.beta1 = _as_vector("beta1", self.beta1)
        self.beta2 = _as_vector("beta2", self.beta2)
        self.Sigma2 = _as_matrix("Sigma2", self.Sigma2)
        p = self.beta2.shape[0]
        if self.beta1.shape[0] != p or self.Sigma2.shape != (p, p):
            raise InputError("beta1, beta2 and Sigma2 dimensions are inconsistent")
        if self.sigma_sq < 0:
            raise InputError("sigma_sq must be nonnegative")

    @property
    def p(self) -> int:
        return self.beta2.shape[0]

    @property
    def shift(self) -> np.ndarray:
        """Signal shift vector (source signal minus target signal)."""
        return self.beta1 - self.beta2


@dataclass
class RiskBreakdown:
    """Variance plus three bias components; ``total`` is their sum."""

    variance: float
    b1: float
    b2: float
    b3: float
    total: float = field(init=False)

    def __post_init__(self):
        self.total = self.variance + self.b1 + self.b2 + self.b3


@dataclass(frozen=True)
class RiskEstimate:
    """Monte-Carlo risk estimate: mean over noise replicates and its SE."""

    mean: float
    se: float
    reps: int


def _check_pop_matches(data: DatasetPair, pop: PopulationSpec) -> None:
    if pop.p != data.p:
        raise InputError(
            f"population dimension {pop.p} does not match data dimension {data.p}"
        )


def fit_pooled_min_norm(data: DatasetPair) -> np.ndarray:
    """Minimum-l2-norm coefficients fitting both datasets' equations.

    Returns the pseudoinverse solution on the stacked design. When the
    stacked design has full row rank this interpolates both responses
    exactly; when it is tall it is the least-squares solution. An empty
    stacked design gives the zero vector.
    """
    X, y = data.stacked()
    if data.n == 0:
        return np.zeros(data.p)
    beta, *_ = np.linalg.lstsq(X, y, rcond=PINV_RTOL)
    if not np.all(np.isfinite(beta)):
        raise SolverError("min-norm solve produced non-finite coefficients")
    return beta


def fit_weighted_pooled(data: DatasetPair, w1: float, w2: float) -> np.ndarray:
    """Min-norm fit of the constraints rescaled by positive weights.

    Agrees with :func:`fit_pooled_min_norm` up to numerical tolerance for any
    positive weights, since rescaling equality constraints does not change
    the solution set.
    """
    if not (w1 > 0 and w2 > 0):
        raise InputError(f"weights must be positive, got w1={w1}, w2={w2}")
    if data.n == 0:
        return np.zeros(data.p)
    # sqrt scaling so the implied Gram combination carries w1, w2 linearly
    X = np.vstack([math.sqrt(w1) * data.X1, math.sqrt(w2) * data.X2])
    y = np.concatenate([math.sqrt(w1) * data.y1, math.sqrt(w2) * data.y2])
    beta, *_ = np.linalg.lstsq(X, y, rcond=PINV_RTOL)
    return beta


def fit_pooled_ridge(data: DatasetPair, lam: float) -> np.ndarray:
    """Pooled ridge fit with penalty ``n * lam`` on the squared norm."""
    if not lam > 0:
        raise InputError(f"ridge penalty must be positive, got {lam}")
    if data.n == 0:
        return np.zeros(data.p)
    X, y = data.stacked()
    gram = X.T @ X
    gram[np.diag_indices_from(gram)] += data.n * lam
    return np.linalg.solve(gram, X.T @ y)


def gd_step_bound(data: DatasetPair) -> float:
    """Largest admissible gradient-descent step for this dataset pair.

    One over the largest per-dataset Gram eigenvalue; empty blocks are
    ignored. Infinite when all blocks are empty.
    """
    bound = math.inf
    for X in (data.X1, data.X2):
        if X.shape[0] == 0:
            continue
        top = np.linalg.norm(X, 2) ** 2
        if top > 0:
            bound = min(bound, 1.0 / top)
    return bound


def fit_gradient_descent(data: DatasetPair, eta: float, T: int) -> np.ndarray:
    """Gradient descent on the pooled squared error, started at zero.

    Iterates ``b <- b + eta * sum_k Xk'(yk - Xk b)`` for ``T`` steps, stopping
    early once the data residual norm falls below 1e-12. Converges to the
    pooled min-norm interpolator as ``T`` grows when ``eta`` respects the
    stability bound.
    """
    if not eta > 0:
        raise InputError(f"step size must be positive, got {eta}")
    if T < 0:
        raise InputError(f"iteration count must be nonnegative, got {T}")
    bound = gd_step_bound(data)
    if eta > bound * (1 + 1e-12):
        raise InputError(
            f"step size {eta} exceeds the stability bound {bound:.6g}"
        )
    X, y = data.stacked()
    beta = np.zeros(data.p)
    if data.n == 0:
        return beta
    guard = _GD_DIVERGENCE_FACTOR * (1.0 + float(np.linalg.norm(y)))
    for _ in range(T):
        resid = y - X @ beta
        if np.linalg.norm(resid) < _GD_RESIDUAL_TOL:
            break
        beta = beta + eta * (X.T @ resid)
        if np.linalg.norm(beta) > guard:
            raise SolverError("gradient descent diverged; reduce the step size")
    return beta


def empirical_risk_conditional(
    data: DatasetPair, pop: PopulationSpec, lam: float = 0.0
) -> RiskBreakdown:
    """Exact noise-averaged risk decomposition, conditional on the designs.

    With ``lam == 0`` this covers the min-norm interpolator via the
    pseudoinverse of the pooled sample covariance; with ``lam > 0`` it covers
    the pooled ridge fit. Components: variance, target-signal bias (b1),
    shift bias (b2), and the cross term (b3, possibly negative).
    """
    _check_pop_matches(data, pop)
    if lam < 0:
        raise InputError(f"penalty must be nonnegative, got {lam}")
    p = data.p
    n = data.n
    Sigma2 = pop.Sigma2
    beta2 = pop.beta2
    shift = pop.shift
    if n == 0:
        # zero estimator: pure target-signal bias
        return RiskBreakdown(0.0, float(beta2 @ Sigma2 @ beta2), 0.0, 0.0)

    X, _ = data.stacked()
    sig_hat = X.T @ X / n
    A = data.X1.T @ data.X1 / n

    if lam == 0.0:
        pinv = np.linalg.pinv(sig_hat, rcond=PINV_RTOL, hermitian=True)
        variance = pop.sigma_sq / n * float(np.trace(pinv @ Sigma2))
        proj = pinv @ sig_hat - np.eye(p)
        v1 = proj @ beta2
        b1 = float(v1 @ Sigma2 @ v1)
        v2 = pinv @ (A @ shift)
        b2 = float(v2 @ Sigma2 @ v2)
        b3 = 2.0 * float(v1 @ Sigma2 @ v2)
    else:
        R = np.linalg.inv(sig_hat + lam * np.eye(p))
        variance = pop.sigma_sq / n * float(np.trace(R @ sig_hat @ R @ Sigma2))
        v1 = R @ beta2
        b1 = lam * lam * float(v1 @ Sigma2 @ v1)
        v2 = R @ (A @ shift)
        b2 = float(v2 @ Sigma2 @ v2)
        b3 = -2.0 * lam * float(v1 @ Sigma2 @ v2)
    return RiskBreakdown(variance, b1, b2, b3)


def empirical_risk_monte_carlo(
    data: DatasetPair,
    pop: PopulationSpec,
    lam: float = 0.0,
    reps: int = 50,
    seed=0,
) -> RiskEstimate:
    """Monte-Carlo risk over fresh noise draws, deterministic given ``seed``.

    Each replicate redraws Gaussian noise of variance ``sigma_sq``,
    regenerates the responses from the true signals, refits, and evaluates
    the risk in the target covariance norm. Replicates use independent
    seed substreams spawned from the master seed, so results do not depend
    on evaluation order.
    """
    _check_pop_matches(data, pop)
    if reps < 1:
        raise InputError(f"replicate count must be at least 1, got {reps}")
    if lam < 0:
        raise InputError(f"penalty must be nonnegative, got {lam}")

    X, _ = data.stacked()
    n1, n2, n = data.n1, data.n2, data.n
    # The design is fixed across replicates; factor the solve once.
    if n == 0:
        solve = lambda y: np.zeros(data.p)  # noqa: E731
    elif lam == 0.0:
        pinvX = np.linalg.pinv(X, rcond=PINV_RTOL)
        solve = lambda y: pinvX @ y  # noqa: E731
    else:
        gram = X.T @ X
        gram[np.diag_indices_from(gram)] += n * lam
        inv = np.linalg.inv(gram)
        solve = lambda y: inv @ (X.T @ y)  # noqa: E731

    mean1 = data.X1 @ pop.beta1
    mean2 = data.X2 @ pop.beta2
    sigma = math.sqrt(pop.sigma_sq)
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    risks = np.empty(reps)
    for r, child in enumerate(seq.spawn(reps)):
        rng = np.random.default_rng(child)
        y1 = mean1 + sigma * rng.standard_normal(n1)
        y2 = mean2 + sigma * rng.standard_normal(n2)
        beta_hat = solve(np.concatenate([y1, y2]))
        d = beta_hat - pop.beta2
        risks[r] = d @ pop.Sigma2 @ d
    se = float(risks.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
    return RiskEstimate(mean=float(risks.mean()), se=se, reps=reps)
