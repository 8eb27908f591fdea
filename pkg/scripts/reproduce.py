"""Run every experiment of the package and write CSVs under one directory.

    python3 scripts/reproduce.py --out results
"""
import argparse
import logging
from pathlib import Path

from inexact_picard.cli import ScanError, experiment_fig1, experiment_tau_scan, fourier_report, load_problem, run_case

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=Path("results"))
    parser.add_argument("--scan-iters", type=int, default=8)
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    accel = load_problem(CONFIGS / "pwr_lpcmfd.cfg")
    plain = load_problem(CONFIGS / "unaccelerated.cfg")
    uniform = load_problem(CONFIGS / "constant_coolant.cfg")

    pred = fourier_report(uniform, out=args.out / "fourier")
    print(f"FA: rho0={pred.rho0:.4f} tau_max={pred.tau_max:.5f} (measured rho_N)")

    report = run_case(accel, args.out / "run")
    print(f"coupled lpCMFD: {report.status}, rho_outer={report.rho_outer:.4f}, rho_N={report.rho_inner.rho:.4f}")

    fig1 = experiment_fig1(accel, out=args.out / "fig1")
    for row in fig1.summary_rows():
        print("fig1:", row)

    for name, problem, lo, hi in (("unaccelerated", plain, 1e-4, 1e-2), ("lpcmfd", accel, 0.1, 50.0)):
        try:
            scan = experiment_tau_scan(problem, lo, hi, args.scan_iters, args.out / f"tau_scan_{name}")
            print(f"tau scan {name}: [{scan.tau_converged:.5f}, {scan.tau_diverged:.5f}], FA {scan.tau_max_fa:.5f}")
        except ScanError as err:
            print(f"tau scan {name}: {err}")


if __name__ == "__main__":
    main()
