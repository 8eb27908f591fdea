"""Command-line driver: config ingestion, experiments and CSV reports.

Subcommands::

    inexact-picard run CONFIG [--out DIR]
    inexact-picard fig1 CONFIG [--tau T ...] [--out DIR]
    inexact-picard tau-scan CONFIG --lo A --hi B --iters N [--out DIR]
    inexact-picard fourier CONFIG [--rho-N R] [--out DIR]

Exit codes: 0 converged (or nothing to converge), 1 configuration or
argument error, 2 diverged.
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .coupling import PicardHistory, RhoEstimate, measure_inner_rate, outer_rate, picard_solve
from .fourier import FaInput, FaPrediction, predict_rho
from .model import ConfigError, CouplingSettings, CrossSectionSet, PinParameters, Problem, SlabModel, validate

log = logging.getLogger("inexact_picard")

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2
REQUIRED_KEYS = ("sigma_t0", "nu_sigma_f0", "c0", "sigma_f1_rel", "sigma_a1_rel", "L")
HISTORY_HEADER = ("outer_index", "tau_label", "inner_iters", "r_T", "r_N", "k_eff")
MODES_HEADER = ("j", "xi", "rho_pi", "varrho")
DEFAULT_FIG1_TAUS = (0.05, 0.1, 0.5)

_SECTIONS = {
    "xs": CrossSectionSet,
    "model": SlabModel,
    "settings": CouplingSettings,
    "pin": PinParameters,
}
_KEY_SECTION = {f.name: sec for sec, cls in _SECTIONS.items() for f in fields(cls) if f.name != "pin"}
_INT_KEYS = {"n_cells", "sn_order", "max_outer", "max_inner", "coarsening", "j_max"}
_STR_KEYS = {"coolant_mode", "accel"}


def fmt(value) -> str:
    """Fixed 9-significant-digit text so reports are byte-reproducible."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.9g}"
    return str(value)


# --------------------------------------------------------------------------
# config


def read_config(path) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    raw: dict[str, str] = {}
    errors = []
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"config: cannot read {path}: {err.strerror}") from err
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (s.strip() for s in line.partition("="))
        if not sep or not key:
            errors.append(f"line {lineno}: expected 'key = value'")
        elif key not in _KEY_SECTION:
            errors.append(f"{key}: unknown key (line {lineno})")
        elif key in raw:
            errors.append(f"{key}: given twice (line {lineno})")
        else:
            raw[key] = value
    if errors:
        raise ConfigError(errors)
    return raw


def _convert(key: str, value: str):
    if key in _STR_KEYS:
        return value
    if key == "delta_T" and value.lower() == "none":
        return None
    try:
        return int(value) if key in _INT_KEYS else float(value)
    except ValueError:
        kind = "an integer" if key in _INT_KEYS else "a number"
        raise ConfigError(f"{key}: expected {kind}, got {value!r}") from None


def build_problem(raw: dict[str, str]) -> Problem:
    """Typed, validated problem from raw config strings."""
    errors = [f"{key}: required key is missing" for key in REQUIRED_KEYS if key not in raw]
    groups: dict[str, dict] = {sec: {} for sec in _SECTIONS}
    for key, value in raw.items():
        try:
            groups[_KEY_SECTION[key]][key] = _convert(key, value)
        except ConfigError as err:
            errors.extend(err.errors)
    pin = None
    if groups["pin"]:
        missing = [f.name for f in fields(PinParameters) if f.name not in groups["pin"] and f.name != "nu"]
        errors.extend(f"{name}: required when pin parameters are given" for name in missing)
        if not missing:
            pin = PinParameters(**groups["pin"])
            groups["model"].setdefault("delta_T", None)
    if errors:
        raise ConfigError(errors)
    model = SlabModel(pin=pin, **groups["model"])
    return validate(model, CrossSectionSet(**groups["xs"]), CouplingSettings(**groups["settings"]))


def load_problem(path) -> Problem:
    return build_problem(read_config(path))


def config_echo(problem: Problem) -> list[tuple[str, object]]:
    rows = list(asdict(problem.xs).items())
    rows += [(k, v) for k, v in asdict(problem.model).items() if k != "pin"]
    if problem.model.pin is not None:
        rows += list(asdict(problem.model.pin).items())
    rows += list(asdict(problem.settings).items())
    return rows


# --------------------------------------------------------------------------
# output


def write_rows(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header:
            writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def history_rows(history: PicardHistory):
    for rec in history.records:
        yield rec.index, history.label, rec.inner_iters, rec.r_T, rec.r_N, rec.k_eff


def mode_rows(pred: FaPrediction):
    for j, (xi, r, v) in enumerate(zip(pred.xi, pred.rho_pi, pred.varrho), 1):
        yield j, xi, r, v


def fa_summary(pred: FaPrediction) -> list[tuple[str, object]]:
    return [
        ("rho0", pred.rho0),
        ("C", pred.C),
        ("C_over_T0", pred.C_over_T0),
        ("tau", pred.tau),
        ("rho_tau", pred.rho_tau),
        ("tau_max", pred.tau_max),
        ("dominant_j", pred.dominant_j),
    ]


def _safe_outer_rate(history: PicardHistory) -> float:
    try:
        return outer_rate(history).rho
    except ValueError:
        return math.nan


# --------------------------------------------------------------------------
# experiments


@dataclass
class RunReport:
    config: list
    prediction: FaPrediction
    history: PicardHistory
    rho_outer: float
    rho_inner: RhoEstimate
    k_eff: float
    status: str

    @property
    def total_sweeps(self) -> int:
        return self.history.total_sweeps

    def rows(self) -> list[tuple[str, object]]:
        h = self.history
        rows = list(self.config)
        rows += [
            ("status", self.status),
            ("outer_iterations", len(h.records)),
            ("total_inner", h.total_inner),
            ("polish_iters", h.polish_iters),
            ("total_sweeps", h.total_sweeps),
            ("k_eff", self.k_eff),
            ("rho_outer", self.rho_outer),
            ("rho_N_measured", self.rho_inner.rho),
        ]
        return rows + fa_summary(self.prediction)


def run_case(problem: Problem, out: Path | None = None) -> RunReport:
    """Coupled solve plus the FA prediction fed with the measured inner rate."""
    state, history = picard_solve(problem)
    rho_inner = measure_inner_rate(problem)
    pred = predict_rho(FaInput.from_problem(problem, rho_inner.rho), problem.settings.tau)
    report = RunReport(config_echo(problem), pred, history, _safe_outer_rate(history), rho_inner,
                       state.k_eff, history.status)
    if out is not None:
        write_rows(out / "history.csv", HISTORY_HEADER, history_rows(history))
        write_rows(out / "report.csv", ("key", "value"), report.rows())
    return report


@dataclass
class Fig1Result:
    reference: PicardHistory
    runs: list[PicardHistory] = field(default_factory=list)

    def summary_rows(self):
        ref = self.reference.total_sweeps
        for h in [self.reference, *self.runs]:
            saving = 100.0 * (1.0 - h.total_sweeps / ref) if ref else math.nan
            yield h.label, h.status, len(h.records), h.total_inner, h.polish_iters, h.total_sweeps, saving


def experiment_fig1(problem: Problem, taus=DEFAULT_FIG1_TAUS, out: Path | None = None) -> Fig1Result:
    """Reference (fixed tolerance) run plus one adaptive run per tau."""
    _, ref = picard_solve(problem, tau=0.0)
    result = Fig1Result(ref)
    for tau in taus:
        _, h = picard_solve(problem, tau=float(tau))
        if h.status != "converged":
            log.warning("%s ended with status %s", h.label, h.status)
        result.runs.append(h)
    if out is not None:
        rows = []
        for h in [ref, *result.runs]:
            rows += [(r.index, h.label, r.inner_iters, r.r_T) for r in h.records]
        write_rows(out / "fig1.csv", ("outer_index", "tau_label", "inner_iters", "r_T"), rows)
        write_rows(
            out / "fig1_summary.csv",
            ("tau_label", "status", "outer_iterations", "total_inner", "polish_iters", "total_sweeps",
             "savings_percent"),
            result.summary_rows(),
        )
    return result


class ScanError(ValueError):
    pass


@dataclass
class TauScan:
    tau_converged: float
    tau_diverged: float
    steps: list[tuple[float, str]]
    tau_max_fa: float
    rho_N: float

    def rows(self):
        return [
            ("tau_converged", self.tau_converged),
            ("tau_diverged", self.tau_diverged),
            ("tau_max_fa", self.tau_max_fa),
            ("rho_N_measured", self.rho_N),
        ]


def experiment_tau_scan(problem: Problem, lo: float, hi: float, iters: int, out: Path | None = None) -> TauScan:
    """Bisection on the convergence status between a stable and an unstable tau."""
    if not (lo > 0 and hi > 0) or lo >= hi:
        raise ScanError(f"degenerate tau range [{lo}, {hi}]: need 0 < lo < hi")
    if iters < 1:
        raise ScanError("iters must be >= 1")

    def status(tau):
        return picard_solve(problem, tau=tau)[1].status

    s_lo, s_hi = status(lo), status(hi)
    steps = [(lo, s_lo), (hi, s_hi)]
    if s_lo != "converged" or s_hi == "converged":
        raise ScanError(f"scan needs lo to converge and hi to fail: tau={lo:g} -> {s_lo}, tau={hi:g} -> {s_hi}")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        s = status(mid)
        steps.append((mid, s))
        if s == "converged":
            lo = mid
        else:
            hi = mid
    rho_N = measure_inner_rate(problem).rho
    scan = TauScan(lo, hi, steps, predict_rho(FaInput.from_problem(problem, rho_N)).tau_max, rho_N)
    if out is not None:
        write_rows(out / "tau_scan.csv", ("tau", "status"), steps)
        write_rows(out / "report.csv", ("key", "value"), scan.rows())
    return scan


def fourier_report(problem: Problem, rho_N: float | None = None, out: Path | None = None) -> FaPrediction:
    if rho_N is None:
        rho_N = measure_inner_rate(problem).rho
    pred = predict_rho(FaInput.from_problem(problem, rho_N), problem.settings.tau)
    if out is not None:
        write_rows(out / "modes.csv", MODES_HEADER, mode_rows(pred))
        write_rows(out / "report.csv", ("key", "value"), [("rho_N", rho_N), *fa_summary(pred)])
    return pred


# --------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="inexact-picard", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config")
        p.add_argument("--out", type=Path, default=Path("out") / name)
        return p

    add("run", "coupled solve with history and FA report")
    p = add("fig1", "adaptive-tolerance savings against a fixed-tolerance reference")
    p.add_argument("--tau", type=float, nargs="+", default=list(DEFAULT_FIG1_TAUS))
    p = add("tau-scan", "bisection for the numerical stability threshold in tau")
    p.add_argument("--lo", type=float, required=True)
    p.add_argument("--hi", type=float, required=True)
    p.add_argument("--iters", type=int, default=8)
    p = add("fourier", "per-mode FA table and predicted spectral radius")
    p.add_argument("--rho-N", dest="rho_N", type=float, default=None, help="inner rate; measured if omitted")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        problem = load_problem(args.config)
    except ConfigError as err:
        for msg in err.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "run":
        report = run_case(problem, args.out)
        print(f"{report.status}: {len(report.history.records)} outer, {report.total_sweeps} sweeps, "
              f"k_eff={fmt(report.k_eff)}, rho_outer={fmt(report.rho_outer)}, rho0={fmt(report.prediction.rho0)}")
        return EXIT_OK if report.status == "converged" else EXIT_DIVERGED
    if args.command == "fig1":
        result = experiment_fig1(problem, args.tau, args.out)
        for row in result.summary_rows():
            print(", ".join(fmt(v) for v in row))
        return EXIT_OK
    if args.command == "tau-scan":
        try:
            scan = experiment_tau_scan(problem, args.lo, args.hi, args.iters, args.out)
        except ScanError as err:
            print(f"tau-scan: {err}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"bracket [{fmt(scan.tau_converged)}, {fmt(scan.tau_diverged)}], FA tau_max {fmt(scan.tau_max_fa)}")
        return EXIT_OK
    pred = fourier_report(problem, args.rho_N, args.out)
    print(", ".join(f"{k}={fmt(v)}" for k, v in fa_summary(pred)))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
