"""Command-line interface.

Subcommands:
  theory     evaluate the deterministic risk formulas for one configuration
  simulate   run a Monte-Carlo sweep and write the results CSV
  decide     pool-vs-target recommendation from ratios or from raw data
  estimate   SNR/SSR estimation on CSV-loaded matrices
  solve      dump the self-consistent-system solution for a spectrum file

Exit codes: 0 success, 1 input error, 2 solver or estimation failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import covariate_shift as cov
from . import harness
from . import model_shift as ms
from .errors import EstimationError, InputError, SolverError
from .estimators import DatasetPair
from .snr import LassoConfig, decide_from_data, estimate_snr_ssr


class _Parser(argparse.ArgumentParser):
    """argparse parser that exits with code 1 on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def _print_breakdown(b) -> None:
    print(
        f"V={_fmt(b.variance)} B1={_fmt(b.b1)} B2={_fmt(b.b2)} "
        f"B3={_fmt(b.b3)} total={_fmt(b.total)}"
    )


def _normalize_design(value: str) -> str:
    return value.replace("-", "_")


def _load_matrix(path: str) -> np.ndarray:
    arr = np.loadtxt(path, delimiter=",", ndmin=2)
    return np.asarray(arr, dtype=float)


def _load_vector(path: str) -> np.ndarray:
    arr = np.loadtxt(path, delimiter=",")
    return np.atleast_1d(np.asarray(arr, dtype=float)).ravel()


def _load_spectrum(path: str) -> cov.JointSpectrum:
    """Spectrum CSV with columns lam1,lam2,weight; a header row is optional."""
    with open(path) as fh:
        first = fh.readline()
    skip = 1 if any(c.isalpha() for c in first) else 0
    arr = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    if arr.shape[1] != 3:
        raise InputError(
            f"spectrum file must have columns lam1,lam2,weight, got "
            f"{arr.shape[1]} columns"
        )
    return cov.JointSpectrum(arr[:, 0], arr[:, 1], arr[:, 2])


def _merge_config(args, keys: list[str]) -> dict[str, object]:
    """Config-file values overridden by any explicitly passed flags."""
    merged: dict[str, object] = {}
    if getattr(args, "config", None):
        raw = harness.parse_config_file(args.config)
        for key, value in raw.items():
            merged[key] = value
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def _cmd_theory(args) -> int:
    design = _normalize_design(args.design)
    merged = _merge_config(args, ["p", "n1", "n2", "snr", "ssr", "kappa", "sigma_sq"])
    p = int(merged.get("p", 0) or 0)
    n1 = int(merged.get("n1", 0) or 0)
    n2 = int(merged.get("n2", 0) or 0)
    snr = float(merged.get("snr", 5.0))
    ssr = float(merged.get("ssr", 0.0))
    kappa = float(merged.get("kappa", 1.0))
    sigma_sq = float(merged.get("sigma_sq", 1.0))
    if p < 1:
        raise InputError("theory requires --p")
    beta2_norm_sq = snr * sigma_sq
    if design == "model_shift":
        summary = ms.ShiftSummary(
            n1=n1, n2=n2, p=p, sigma_sq=sigma_sq,
            beta2_norm_sq=beta2_norm_sq,
            shift_norm_sq=ssr * beta2_norm_sq,
        )
        _print_breakdown(ms.theory_min_norm_model_shift(summary))
        print(f"target_only={_fmt(ms.theory_target_only_isotropic(n2, p, sigma_sq, beta2_norm_sq))}")
        if args.ridge_lambda is not None:
            breakdown, _ = ms.theory_ridge_model_shift(summary, args.ridge_lambda)
            print(f"ridge(lambda={args.ridge_lambda:g}):", end=" ")
            _print_breakdown(breakdown)
    elif design == "covariate_shift":
        H = cov.JointSpectrum.reciprocal_pair(kappa)
        if args.ridge_lambda is not None:
            breakdown, _ = cov.solve_ridge_covariate(
                H, None, n1, n2, p, sigma_sq, beta2_norm_sq, args.ridge_lambda
            )
            print(f"ridge(lambda={args.ridge_lambda:g}):", end=" ")
            _print_breakdown(breakdown)
        else:
            _print_breakdown(
                cov.risk_covariate_shift(H, None, n1, n2, p, sigma_sq, beta2_norm_sq)
            )
            baseline = cov.theory_target_only_anisotropic(
                H.target_marginal(), None, n2, p, sigma_sq, beta2_norm_sq
            )
            # target-only fixed point uses the aspect ratio p/n2
            print(f"target_only={_fmt(baseline)}")
    else:
        raise InputError(f"unknown design {args.design!r}")
    return 0


def _cmd_simulate(args) -> int:
    keys = ["design", "p", "n2", "n1_grid", "snr", "ssr", "kappa", "sigma_sq",
            "reps", "seed"]
    merged = _merge_config(args, keys)
    if "design" in merged and isinstance(merged["design"], str):
        merged["design"] = _normalize_design(merged["design"])
    if args.raw_fig2_scaling:
        merged["raw_signal_scale"] = True
    cfg = harness.config_from_mapping(merged)
    out = args.out or "sweep.csv"
    rows = harness.run_sweep(cfg, out)
    failed = sum(r.failed for r in rows)
    print(f"wrote {len(rows)} rows to {out}" + (f" ({failed} failed)" if failed else ""))
    return 0


def _cmd_decide(args) -> int:
    data_flags = (args.x1, args.y1, args.x2, args.y2)
    if any(f is not None for f in data_flags):
        if not all(f is not None for f in data_flags):
            raise InputError("data mode needs all of --x1 --y1 --x2 --y2")
        data = DatasetPair(_load_matrix(args.x1), _load_vector(args.y1),
                           _load_matrix(args.x2), _load_vector(args.y2))
        cfg = LassoConfig(lambda_l=args.lambda_l)
        report, decision, sizes = decide_from_data(data, cfg)
        print(f"snr_hat={_fmt(report.snr_hat)} ssr_hat={_fmt(report.ssr_hat)}")
    else:
        required = dict(snr=args.snr, ssr=args.ssr, n1=args.n1, n2=args.n2, p=args.p)
        missing = [k for k, v in required.items() if v is None]
        if missing:
            raise InputError(f"decide needs --{' --'.join(missing)} (or data files)")
        decision = ms.decide_transfer(args.snr, args.ssr, args.n1, args.n2, args.p)
        sizes = ms.optimal_target_size(args.snr, args.ssr, args.n1, args.p)
    print(
        f"recommendation={decision.recommendation} regime={decision.regime} "
        f"snr_threshold={_fmt(decision.snr_threshold)} "
        f"rho={'NA' if decision.rho is None else _fmt(decision.rho)}"
    )
    print(sizes.describe())
    return 0


def _cmd_estimate(args) -> int:
    data = DatasetPair(_load_matrix(args.x1), _load_vector(args.y1),
                       _load_matrix(args.x2), _load_vector(args.y2))
    cfg = LassoConfig(lambda_l=args.lambda_l)
    report = estimate_snr_ssr(data, cfg, centered_variance=args.centered)
    print(
        f"snr_hat={_fmt(report.snr_hat)} ssr_hat={_fmt(report.ssr_hat)} "
        f"sigma_sq_hat={_fmt(report.sigma_sq_hat)} "
        f"beta_norm_hats={_fmt(report.beta_norm_hats[0])},{_fmt(report.beta_norm_hats[1])} "
        f"clamped={','.join(report.clamped) if report.clamped else 'none'}"
    )
    return 0


def _cmd_solve(args) -> int:
    H = _load_spectrum(args.spectrum)
    if args.ridge_lambda is not None:
        _, sol = cov.solve_ridge_covariate(
            H, None, args.n1, args.n2, args.p, 1.0, 1.0, args.ridge_lambda
        )
    else:
        sol = cov.solve_interpolator_system(H, args.n1, args.n2, args.p)
    print(
        f"a1={_fmt(sol.a1)} a2={_fmt(sol.a2)} a3={_fmt(sol.a3)} a4={_fmt(sol.a4)}"
    )
    print(
        f"b1={_fmt(sol.b1)} b2={_fmt(sol.b2)} b3={_fmt(sol.b3)} b4={_fmt(sol.b4)}"
    )
    print(f"lambda={sol.lam:g} residual_norm={sol.residual_norm:.3e}")
    return 0


def _add_common(parser: _Parser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="master RNG seed")
    parser.add_argument("--out", type=str, default=None, help="output file path")
    parser.add_argument("--config", type=str, default=None,
                        help="flat key=value config file")


def build_parser() -> _Parser:
    parser = _Parser(prog="interp-risk", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    th = sub.add_parser("theory", help="evaluate deterministic risk formulas")
    th.add_argument("--design", required=True,
                    choices=["model-shift", "model_shift",
                             "covariate-shift", "covariate_shift"])
    th.add_argument("--p", type=int)
    th.add_argument("--n1", type=int)
    th.add_argument("--n2", type=int)
    th.add_argument("--snr", type=float)
    th.add_argument("--ssr", type=float)
    th.add_argument("--kappa", type=float)
    th.add_argument("--sigma-sq", dest="sigma_sq", type=float)
    th.add_argument("--ridge-lambda", dest="ridge_lambda", type=float)
    _add_common(th)
    th.set_defaults(func=_cmd_theory)

    sim = sub.add_parser("simulate", help="run a Monte-Carlo sweep")
    sim.add_argument("--design",
                     choices=["model-shift", "model_shift",
                              "covariate-shift", "covariate_shift"])
    sim.add_argument("--p", type=int)
    sim.add_argument("--n2", type=int)
    sim.add_argument("--n1-grid", dest="n1_grid", type=harness.parse_grid,
                     help="comma list '0,50,100' or range 'start:stop:step'")
    sim.add_argument("--snr", type=float)
    sim.add_argument("--ssr", type=float)
    sim.add_argument("--kappa", type=float)
    sim.add_argument("--sigma-sq", dest="sigma_sq", type=float)
    sim.add_argument("--reps", type=int)
    sim.add_argument("--raw-fig2-scaling", action="store_true",
                     help="draw signal entries without the 1/p variance scaling")
    _add_common(sim)
    sim.set_defaults(func=_cmd_simulate)

    dec = sub.add_parser("decide", help="pool-vs-target recommendation")
    dec.add_argument("--snr", type=float)
    dec.add_argument("--ssr", type=float)
    dec.add_argument("--n1", type=int)
    dec.add_argument("--n2", type=int)
    dec.add_argument("--p", type=int)
    dec.add_argument("--x1"); dec.add_argument("--y1")
    dec.add_argument("--x2"); dec.add_argument("--y2")
    dec.add_argument("--lambda-l", dest="lambda_l", type=float, default=1.0)
    _add_common(dec)
    dec.set_defaults(func=_cmd_decide)

    est = sub.add_parser("estimate", help="SNR/SSR estimation from CSV data")
    est.add_argument("--x1", required=True); est.add_argument("--y1", required=True)
    est.add_argument("--x2", required=True); est.add_argument("--y2", required=True)
    est.add_argument("--lambda-l", dest="lambda_l", type=float, default=1.0)
    est.add_argument("--centered", action="store_true",
                     help="use the centered response variance")
    _add_common(est)
    est.set_defaults(func=_cmd_estimate)

    sol = sub.add_parser("solve", help="solve the spectrum systems")
    sol.add_argument("--spectrum", required=True,
                     help="CSV with columns lam1,lam2,weight")
    sol.add_argument("--n1", type=int, required=True)
    sol.add_argument("--n2", type=int, required=True)
    sol.add_argument("--p", type=int, required=True)
    sol.add_argument("--ridge-lambda", dest="ridge_lambda", type=float)
    _add_common(sol)
    sol.set_defaults(func=_cmd_solve)
    return parser


def cli(argv=None) -> int:
    """Run the CLI; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 1
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SolverError, EstimationError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()
