"""Data generation, Monte-Carlo sweeps with theory overlays, and CSV output.

A sweep fixes the dimension and target sample size, walks a grid of source
sample sizes, and for each grid point draws signals and designs once, then
averages the empirical risk over fresh-noise replicates. Deterministic
theory values (computed from the realized signal norms, not their
expectations) and the target-only baseline are attached wherever the
overparametrized formulas apply. Output is a fixed-schema CSV that is
byte-reproducible from the config and seed, independent of thread count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from . import covariate_shift as cov
from . import model_shift as ms
from .errors import InputError
from .estimators import DatasetPair, PopulationSpec, empirical_risk_monte_carlo

THREADS_ENV_VAR = "INTERP_RISK_THREADS"

CSV_HEADER = (
    "design,p,n1,n2,snr,ssr,kappa,sigma_sq,reps,seed,regime,emp_risk,emp_se,"
    "theory_risk,theory_var,theory_b1,theory_b2,theory_b3,target_only_theory,failed"
)

DESIGNS = ("model_shift", "covariate_shift")


@dataclass(frozen=True)
class ExperimentConfig:
    """Inputs of one sweep; mirrors the CSV columns and the config file keys."""

    design: str
    p: int
    n2: int
    n1_grid: tuple[int, ...]
    snr: float = 5.0
    ssr: float = 0.0
    kappa: float = 1.0
    sigma_sq: float = 1.0
    reps: int = 50
    seed: int = 0
    raw_signal_scale: bool = False

    def __post_init__(self):
        if self.design not in DESIGNS:
            raise InputError(f"design must be one of {DESIGNS}, got {self.design!r}")
        if self.p < 1 or self.n2 < 0:
            raise InputError("need p >= 1 and n2 >= 0")
        if len(self.n1_grid) == 0:
            raise InputError("n1_grid must be nonempty")
        if any(int(v) != v or v < 0 for v in self.n1_grid):
            raise InputError("n1_grid entries must be nonnegative integers")
        if self.reps < 1:
            raise InputError("reps must be at least 1")
        if self.snr < 0 or self.ssr < 0 or self.sigma_sq < 0:
            raise InputError("snr, ssr and sigma_sq must be nonnegative")
        if self.design == "covariate_shift":
            if self.kappa < 1:
                raise InputError("kappa must be at least 1")
            if self.p % 2 != 0:
                raise InputError("reciprocal pairing requires even p")


@dataclass
class ResultRow:
    """One sweep grid point; mirrors the CSV schema exactly."""

    design: str
    p: int
    n1: int
    n2: int
    snr: float
    ssr: float
    kappa: float
    sigma_sq: float
    reps: int
    seed: int
    regime: str = ""
    emp_risk: float | None = None
    emp_se: float | None = None
    theory_risk: float | None = None
    theory_var: float | None = None
    theory_b1: float | None = None
    theory_b2: float | None = None
    theory_b3: float | None = None
    target_only_theory: float | None = None
    failed: bool = False
    error: str = field(default="", compare=False)  # not serialized

    def to_csv_fields(self) -> list[str]:
        def num(v) -> str:
            return "" if v is None else repr(float(v))

        return [
            self.design, str(self.p), str(self.n1), str(self.n2),
            repr(float(self.snr)), repr(float(self.ssr)), repr(float(self.kappa)),
            repr(float(self.sigma_sq)), str(self.reps), str(self.seed),
            self.regime, num(self.emp_risk), num(self.emp_se),
            num(self.theory_risk), num(self.theory_var), num(self.theory_b1),
            num(self.theory_b2), num(self.theory_b3), num(self.target_only_theory),
            "true" if self.failed else "false",
        ]


def resolve_threads() -> int:
    """Thread cap from the environment; absent or 0 means auto."""
    raw = os.environ.get(THREADS_ENV_VAR, "").strip()
    if raw in ("", "0"):
        return min(os.cpu_count() or 1, 8)
    try:
        value = int(raw)
    except ValueError as exc:
        raise InputError(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}") from exc
    if value < 1:
        return min(os.cpu_count() or 1, 8)
    return value


def generate_instance(
    cfg: ExperimentConfig, n1: int, seed
) -> tuple[DatasetPair, PopulationSpec]:
    """Draw signals and designs for one grid point, deterministically.

    Signal entries are Gaussian with variance ``snr * sigma_sq / p`` so the
    realized squared norm over noise variance concentrates on the configured
    SNR (an unnormalized variant is available via ``raw_signal_scale``).
    Under the covariate design the source rows are scaled by the reciprocal
    eigenvalue pair, first half ``kappa``, second half ``1/kappa``.
    """
    if n1 < 0:
        raise InputError("n1 must be nonnegative")
    rng = np.random.default_rng(seed)
    p = cfg.p
    scale = cfg.snr * cfg.sigma_sq
    if not cfg.raw_signal_scale:
        scale /= p
    sd_signal = math.sqrt(scale)
    beta2 = sd_signal * rng.standard_normal(p)
    if cfg.design == "model_shift":
        sd_shift = math.sqrt(cfg.ssr) * sd_signal
        beta1 = beta2 + sd_shift * rng.standard_normal(p)
        sqrt_sig1 = None
    else:
        beta1 = beta2.copy()
        half = p // 2
        eigs = np.concatenate([
            np.full(half, cfg.kappa), np.full(p - half, 1.0 / cfg.kappa)
        ])
        sqrt_sig1 = np.sqrt(eigs)
    X1 = rng.standard_normal((n1, p))
    if sqrt_sig1 is not None:
        X1 = X1 * sqrt_sig1
    X2 = rng.standard_normal((cfg.n2, p))
    data = DatasetPair(X1, np.zeros(n1), X2, np.zeros(cfg.n2))
    pop = PopulationSpec(beta1=beta1, beta2=beta2, Sigma2=np.eye(p),
                         sigma_sq=cfg.sigma_sq)
    return data, pop


def _realized_signal_spectrum(cfg: ExperimentConfig, pop: PopulationSpec,
                              H: cov.JointSpectrum) -> cov.SignalSpectrum:
    """Two-atom signal spectrum from the realized target signal."""
    p = cfg.p
    half = p // 2
    b = pop.beta2
    total = float(b @ b)
    w_hi = float(b[:half] @ b[:half]) / total if total > 0 else 0.5
    return cov.SignalSpectrum(H.lam1.copy(), H.lam2.copy(),
                              np.array([w_hi, 1.0 - w_hi]))


def _attach_theory(cfg: ExperimentConfig, n1: int, pop: PopulationSpec,
                   row: ResultRow) -> None:
    """Fill the theory columns from the realized signal norms."""
    beta2_norm_sq = float(pop.beta2 @ pop.beta2)
    if cfg.design == "model_shift":
        shift = pop.shift
        summary = ms.ShiftSummary(
            n1=n1, n2=cfg.n2, p=cfg.p, sigma_sq=cfg.sigma_sq,
            beta2_norm_sq=beta2_norm_sq,
            shift_norm_sq=float(shift @ shift),
            cross_term=float(shift @ pop.beta2),
        )
        breakdown = ms.theory_min_norm_model_shift(summary)
        baseline = ms.theory_target_only_isotropic(
            cfg.n2, cfg.p, cfg.sigma_sq, beta2_norm_sq
        )
    else:
        H = cov.JointSpectrum.reciprocal_pair(cfg.kappa)
        G = _realized_signal_spectrum(cfg, pop, H)
        breakdown = cov.risk_covariate_shift(
            H, G, n1, cfg.n2, cfg.p, cfg.sigma_sq, beta2_norm_sq
        )
        baseline = cov.theory_target_only_anisotropic(
            H.target_marginal(), G.target_marginal(),
            cfg.n2, cfg.p, cfg.sigma_sq, beta2_norm_sq,
        )
    row.theory_risk = breakdown.total
    row.theory_var = breakdown.variance
    row.theory_b1 = breakdown.b1
    row.theory_b2 = breakdown.b2
    row.theory_b3 = breakdown.b3
    row.target_only_theory = baseline


def _run_row(cfg: ExperimentConfig, n1: int, seq: np.random.SeedSequence) -> ResultRow:
    row = ResultRow(
        design=cfg.design, p=cfg.p, n1=n1, n2=cfg.n2, snr=cfg.snr, ssr=cfg.ssr,
        kappa=cfg.kappa, sigma_sq=cfg.sigma_sq, reps=cfg.reps, seed=cfg.seed,
    )
    row.regime = "over" if cfg.p > n1 + cfg.n2 else "under"
    try:
        inst_seq, noise_seq = seq.spawn(2)
        data, pop = generate_instance(cfg, n1, inst_seq)
        est = empirical_risk_monte_carlo(data, pop, 0.0, cfg.reps, noise_seq)
        row.emp_risk = est.mean
        row.emp_se = est.se
        if row.regime == "over":
            _attach_theory(cfg, n1, pop, row)
    except Exception as exc:  # per-row failure isolation
        row.failed = True
        row.error = f"{type(exc).__name__}: {exc}"
        row.emp_risk = row.emp_se = None
        row.theory_risk = row.theory_var = None
        row.theory_b1 = row.theory_b2 = row.theory_b3 = None
        row.target_only_theory = None
    return row


def run_sweep(cfg: ExperimentConfig, out_path: str | None = None) -> list[ResultRow]:
    """Run the sweep, optionally writing the CSV; rows follow grid order.

    Grid points are independent and may run on a thread pool capped by the
    ``INTERP_RISK_THREADS`` environment variable; per-row seed substreams
    make the result identical for any thread count.
    """
    seqs = np.random.SeedSequence(cfg.seed).spawn(len(cfg.n1_grid))
    jobs = list(zip(cfg.n1_grid, seqs))
    workers = min(resolve_threads(), len(jobs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda job: _run_row(cfg, job[0], job[1]), jobs))
    else:
        rows = [_run_row(cfg, n1, seq) for n1, seq in jobs]
    if out_path is not None:
        write_csv(rows, out_path)
    return rows


def rows_to_csv_text(rows: list[ResultRow]) -> str:
    lines = [CSV_HEADER]
    lines.extend(",".join(r.to_csv_fields()) for r in rows)
    return "\n".join(lines) + "\n"


def write_csv(rows: list[ResultRow], path: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(rows_to_csv_text(rows))


def parse_config_file(path: str) -> dict[str, str]:
    """Flat ``key = value`` config file; ``#`` starts a comment."""
    out: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def parse_grid(text: str) -> tuple[int, ...]:
    """Grid syntax: comma list ``0,50,100`` or range ``start:stop:step``."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) not in (2, 3):
            raise InputError(f"bad grid range {text!r}; use start:stop[:step]")
        start, stop = int(parts[0]), int(parts[1])
        step = int(parts[2]) if len(parts) == 3 else 1
        if step < 1:
            raise InputError("grid step must be positive")
        return tuple(range(start, stop, step))
    try:
        return tuple(int(tok) for tok in text.split(",") if tok.strip() != "")
    except ValueError as exc:
        raise InputError(f"bad grid {text!r}") from exc


_CONFIG_CASTS = {
    "design": str,
    "p": int,
    "n2": int,
    "n1_grid": parse_grid,
    "snr": float,
    "ssr": float,
    "kappa": float,
    "sigma_sq": float,
    "reps": int,
    "seed": int,
    "raw_signal_scale": lambda s: s.lower() in ("1", "true", "yes"),
}


def config_from_mapping(raw: dict[str, object]) -> ExperimentConfig:
    """Build a config from string-or-typed values, rejecting unknown keys."""
    known = {f.name for f in fields(ExperimentConfig)}
    kwargs: dict[str, object] = {}
    for key, value in raw.items():
        if key not in known:
            raise InputError(f"unknown config key {key!r}")
        cast = _CONFIG_CASTS[key]
        kwargs[key] = cast(value) if isinstance(value, str) else value
    missing = {"design", "p", "n2", "n1_grid"} - set(kwargs)
    if missing:
        raise InputError(f"missing required config keys: {sorted(missing)}")
    if not isinstance(kwargs["n1_grid"], tuple):
        kwargs["n1_grid"] = tuple(kwargs["n1_grid"])  # type: ignore[arg-type]
    return ExperimentConfig(**kwargs)  # type: ignore[arg-type]
