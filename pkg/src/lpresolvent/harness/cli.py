"""Command-line front end.

Exit codes: 0 pass, 1 criterion failure, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import warnings
from pathlib import Path

from ..damped.flow import FlowError
from ..damped.qep import check_band_localization, reflection_distance, write_spectrum_csv
from ..geometry import GeometryError
from ..regions import RegionError
from ..resolvent.checks import PreconditionError
from .acceptance import CRITERIA, NUMERICAL_ERRORS, run_acceptance
from .campaigns import compute_qep, flow_average, scan_damped, scan_laplace, sharpness_sphere
from .config import OUT_ENV, CampaignConfig, ConfigError, load_config
from .report import write_json

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

log = logging.getLogger("lpresolvent")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in an unsigned 64-bit integer: {text}")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("--threads must be at least 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI campaign file")
    common.add_argument("--out", type=Path, help=f"output directory (else [campaign] out, or ${OUT_ENV})")
    common.add_argument("--seed", type=_u64, help="campaign seed (unsigned 64-bit)")
    common.add_argument("--threads", type=_positive, help="worker threads for scan points")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="lpresolvent", description="Uniform L^p resolvent estimates on model manifolds."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("scan-laplace", parents=[common], help="probe (-Delta - z^2)^-1 along Im z = delta")
    sub.add_parser("scan-damped", parents=[common], help="probe P(tau)^-1 along a damped-region segment")
    sub.add_parser("qep", parents=[common], help="eigenvalues of the damped pencil")
    sub.add_parser("flow-average", parents=[common], help="A+ / A- from geodesic time averages")
    sub.add_parser("sharpness-sphere", parents=[common], help="zonal S^3 sharpness campaign")
    acc = sub.add_parser("acceptance", parents=[common], help="run the acceptance criteria")
    acc.add_argument("--only", action="append", choices=list(CRITERIA), metavar="<criterion-id>",
                     help="run only this criterion (repeatable)")
    acc.add_argument("--expected", type=Path, help="expected-values JSON (default: packaged file)")
    acc.add_argument("--calibrate", action="store_true",
                     help="measure the calibrated constants and write the expected-values file")
    return parser


def _config(args) -> CampaignConfig:
    cfg = load_config(args.config) if args.config else CampaignConfig()
    if not args.config and os.environ.get(OUT_ENV):
        cfg = cfg.with_overrides(out=Path(os.environ[OUT_ENV]))
    return cfg.with_overrides(out=args.out, seed=args.seed, threads=args.threads)


def _cmd_scan(args, cfg: CampaignConfig) -> int:
    report = scan_laplace(cfg) if args.command == "scan-laplace" else scan_damped(cfg)
    csv_path, json_path = report.write(cfg.out)
    fit = report.slope
    slope = f" slope={fit.slope:.4f}+-{fit.stderr:.4f}" if fit else ""
    print(f"{report.campaign}: {report.verdict} max={report.max_probe:.6g}{slope} "
          f"flags={report.flag_counts} -> {csv_path}")
    return EXIT_PASS if report.passed else EXIT_FAIL


def _cmd_qep(args, cfg: CampaignConfig) -> int:
    geom = cfg.geometry.build()
    a = cfg.damping.build(geom)
    spec = compute_qep(cfg, geom, a)
    cfg.out.mkdir(parents=True, exist_ok=True)
    csv_path = write_spectrum_csv(spec, cfg.out / "qep.csv")
    band = check_band_localization(spec, a)
    refl = reflection_distance(spec.eigenvalues)
    write_json(cfg.out / "qep.json", {
        "truncation": cfg.region.qep_truncation,
        "eigenvalues": int(spec.eigenvalues.size),
        "trusted": int(spec.trusted.sum()),
        "band": list(band.band),
        "band_passed": band.passed,
        "band_violations": [[complex(t), msg] for t, msg in band.violations],
        "reflection_distance": refl,
    })
    ok = band.passed and refl <= 1e-8
    print(f"qep: {spec.trusted.sum()} trusted of {spec.eigenvalues.size}, band {'ok' if band.passed else 'VIOLATED'}, "
          f"reflection distance {refl:.2e} -> {csv_path}")
    return EXIT_PASS if ok else EXIT_FAIL


def _cmd_flow(args, cfg: CampaignConfig) -> int:
    res = flow_average(cfg)
    path = write_json(cfg.out / "flow.json", {
        "T_ladder": res.T_ladder, "sup": res.sup_sequence, "inf": res.inf_sequence,
        "A_plus": res.A_plus, "A_minus": res.A_minus, "cauchy_gap": res.cauchy_gap,
        "samples": res.sample_count, "damping_sup": res.damping_sup, "damping_inf": res.damping_inf,
        "monotone": res.monotone, "warnings": res.warnings,
    })
    print(f"flow-average: A+={res.A_plus:.6f} A-={res.A_minus:.6f} gap={res.cauchy_gap:.2e} "
          f"monotone={res.monotone} -> {path}")
    return EXIT_PASS


def _cmd_sharpness(args, cfg: CampaignConfig) -> int:
    rep = sharpness_sphere(cfg)
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / "sharpness-control.csv").write_text(rep.control.csv_text())
    (cfg.out / "sharpness-shrinking.csv").write_text(rep.shrinking.csv_text())
    write_json(cfg.out / "sharpness.json", rep.summary())
    print(f"sharpness-sphere: {rep.verdict} growth={rep.growth:.4f} monotone_tail={rep.monotone_tail}")
    return EXIT_PASS if rep.passed else EXIT_FAIL


def _cmd_acceptance(args, cfg: CampaignConfig) -> int:
    expected = args.expected or cfg.expected
    _, code = run_acceptance(args.only, cfg.seed, cfg.threads, cfg.out, expected, args.calibrate)
    return code


COMMANDS = {
    "scan-laplace": _cmd_scan,
    "scan-damped": _cmd_scan,
    "qep": _cmd_qep,
    "flow-average": _cmd_flow,
    "sharpness-sphere": _cmd_sharpness,
    "acceptance": _cmd_acceptance,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    warnings.simplefilter("default")
    try:
        cfg = _config(args)
        return COMMANDS[args.command](args, cfg)
    except (ConfigError, GeometryError, RegionError, PreconditionError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS + (FlowError,) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
