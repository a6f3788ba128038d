"""Render sweep CSVs into risk-curve figures.

Strictly a view over the harness output schema: theory values become solid
lines, empirical means become marks with one-standard-error bars, the
target-only baseline becomes a dotted horizontal line per series, and a
vertical guide marks the interpolation threshold where the total sample
count meets the dimension. Nothing is recomputed; rendering is a pure
function of the CSV bytes.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

REQUIRED_COLUMNS = (
    "design", "p", "n1", "n2", "snr", "ssr", "kappa", "sigma_sq", "reps",
    "seed", "regime", "emp_risk", "emp_se", "theory_risk", "theory_var",
    "theory_b1", "theory_b2", "theory_b3", "target_only_theory", "failed",
)

X_AXES = ("n1", "n1_over_p")
SERIES_KEYS = ("ssr", "snr", "kappa")


class PlotInputError(ValueError):
    """Malformed plot spec or CSV input."""


@dataclass(frozen=True)
class PlotSpec:
    """What to plot and where to write it."""

    input_csv: str
    output: str
    x_axis: str = "n1"
    series_by: str = "kappa"
    title: str = ""
    log_y: bool = False

    def __post_init__(self):
        if self.x_axis not in X_AXES:
            raise PlotInputError(f"x_axis must be one of {X_AXES}, got {self.x_axis!r}")
        if self.series_by not in SERIES_KEYS:
            raise PlotInputError(
                f"series_by must be one of {SERIES_KEYS}, got {self.series_by!r}"
            )


@dataclass
class Series:
    label: str
    x: list[float] = field(default_factory=list)
    emp: list[float] = field(default_factory=list)
    emp_se: list[float] = field(default_factory=list)
    theory_x: list[float] = field(default_factory=list)
    theory: list[float] = field(default_factory=list)
    baseline: float | None = None


@dataclass(frozen=True)
class PlotSummary:
    """What was drawn; returned for callers and tests."""

    output: str
    series_labels: tuple[str, ...]
    baselines: tuple[float, ...]
    threshold_x: float
    rows_plotted: int


def _maybe_float(text: str) -> float | None:
    text = text.strip()
    if not text:
        return None
    return float(text)


def load_rows(path: str) -> list[dict]:
    """Read a sweep CSV, validating the schema and non-emptiness."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise PlotInputError(f"input CSV is missing columns: {', '.join(missing)}")
        rows = list(reader)
    if not rows:
        raise PlotInputError(f"input CSV has no data rows: {path}")
    return rows


def collect_series(rows: list[dict], spec: PlotSpec) -> tuple[dict[str, Series], float]:
    p = float(rows[0]["p"])
    n2 = float(rows[0]["n2"])
    threshold = p - n2
    if spec.x_axis == "n1_over_p":
        threshold /= p
    series: dict[str, Series] = {}
    for row in rows:
        if row["failed"].strip().lower() == "true":
            continue
        key = row[spec.series_by].strip()
        s = series.setdefault(key, Series(label=f"{spec.series_by}={key}"))
        x = float(row["n1"])
        if spec.x_axis == "n1_over_p":
            x /= float(row["p"])
        emp = _maybe_float(row["emp_risk"])
        if emp is not None:
            s.x.append(x)
            s.emp.append(emp)
            s.emp_se.append(_maybe_float(row["emp_se"]) or 0.0)
        theory = _maybe_float(row["theory_risk"])
        if theory is not None:
            s.theory_x.append(x)
            s.theory.append(theory)
        baseline = _maybe_float(row["target_only_theory"])
        if baseline is not None and s.baseline is None:
            s.baseline = baseline
    return series, threshold


def render(spec: PlotSpec) -> PlotSummary:
    """Draw the figure described by ``spec`` and write the image file."""
    rows = load_rows(spec.input_csv)
    series, threshold = collect_series(rows, spec)
    if not series:
        raise PlotInputError("no plottable rows (all marked failed)")

    fig, ax = plt.subplots(figsize=(7.0, 4.5), dpi=110)
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    baselines: list[float] = []
    for i, key in enumerate(sorted(series)):
        s = series[key]
        color = colors[i % len(colors)]
        if s.theory:
            order = np.argsort(s.theory_x)
            ax.plot(np.asarray(s.theory_x)[order], np.asarray(s.theory)[order],
                    "-", color=color, label=s.label)
        if s.emp:
            ax.errorbar(s.x, s.emp, yerr=s.emp_se, fmt="+", color=color,
                        capsize=3, linestyle="none",
                        label=None if s.theory else s.label)
        if s.baseline is not None:
            ax.axhline(s.baseline, color=color, linestyle=":", linewidth=1.2)
            baselines.append(s.baseline)
    ax.axvline(threshold, color="gray", linestyle="--", linewidth=1.0)
    ax.set_xlabel("source sample size" if spec.x_axis == "n1" else "n1 / p")
    ax.set_ylabel("risk")
    if spec.log_y:
        ax.set_yscale("log")
    if spec.title:
        ax.set_title(spec.title)
    ax.legend(loc="best", fontsize=9)
    fig.tight_layout()
    # strip the library's default metadata so identical input gives
    # identical bytes
    fig.savefig(spec.output, metadata={"Software": None})
    plt.close(fig)
    return PlotSummary(
        output=spec.output,
        series_labels=tuple(series[k].label for k in sorted(series)),
        baselines=tuple(baselines),
        threshold_x=threshold,
        rows_plotted=sum(len(s.x) for s in series.values()),
    )


def parse_spec_file(path: str) -> PlotSpec:
    """Flat ``key = value`` plot spec; ``#`` starts a comment."""
    raw: dict[str, str] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise PlotInputError(f"{path}:{lineno}: expected 'key = value'")
            key, value = stripped.split("=", 1)
            raw[key.strip()] = value.strip()
    known = {"input_csv", "output", "x_axis", "series_by", "title", "log_y"}
    unknown = set(raw) - known
    if unknown:
        raise PlotInputError(f"unknown spec keys: {sorted(unknown)}")
    missing = {"input_csv", "output"} - set(raw)
    if missing:
        raise PlotInputError(f"spec is missing required keys: {sorted(missing)}")
    kwargs: dict[str, object] = dict(raw)
    if "log_y" in kwargs:
        kwargs["log_y"] = str(kwargs["log_y"]).lower() in ("1", "true", "yes")
    return PlotSpec(**kwargs)  # type: ignore[arg-type]


def cli(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="interp-risk-plot",
        description="Render a sweep CSV into a risk-curve figure.",
    )
    parser.add_argument("--spec", required=True,
                        help="flat key=value plot spec file")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    try:
        summary = render(parse_spec_file(args.spec))
    except (PlotInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {summary.output} ({len(summary.series_labels)} series, "
          f"{summary.rows_plotted} points)")
    return 0


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()
