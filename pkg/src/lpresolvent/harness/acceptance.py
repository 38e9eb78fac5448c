"""The acceptance suite: every criterion with its pinned configuration and tolerance."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from ..damped.flow import estimate_A_bounds
from ..damped.qep import (
    QepError,
    assemble_qep,
    check_band_localization,
    check_strip_theorem,
    qep_eigenvalues,
    reflection_distance,
)
from ..geometry import build_torus, constant_damping, cosine_damping
from ..resolvent.boyd import BoydDivergence, opnorm_lower_bound
from ..resolvent.checks import check_apriori_crucial, check_damped_l2_bounds, check_ellipt_bounds
from ..resolvent.operators import (
    NearEigenvalueError,
    SingularityError,
    l2_resolvent_norm_exact,
    laplace_resolvent_operator,
)
from .campaigns import damped_setup, scan_damped, scan_laplace, sharpness_sphere
from .config import (
    BoydConfig,
    CampaignConfig,
    DampingConfig,
    GeometryConfig,
    RegionConfig,
    ScanConfig,
    seed_for,
)
from .expected import load_expected, save_expected
from .report import write_json

__all__ = [
    "CriterionResult",
    "AcceptanceRun",
    "CRITERIA",
    "pinned_configs",
    "run_acceptance",
    "NUMERICAL_ERRORS",
]

log = logging.getLogger(__name__)

NUMERICAL_ERRORS = (SingularityError, NearEigenvalueError, BoydDivergence, QepError,
                    np.linalg.LinAlgError, FloatingPointError)

TORUS = GeometryConfig("torus", 3, 16)
SPHERE = GeometryConfig("sphere", K=24)
VARIABLE_DAMPING = DampingConfig("cosines", offset=3.0,
                                 cosines=(((1, 0, 0), 1.0), ((0, 1, 0), 1.0), ((0, 0, 1), 1.0)))
DELTA = 0.5
QEP_TRUNCATION = 4


def pinned_configs(seed: int = 0, threads: int = 1) -> dict[str, CampaignConfig]:
    """The campaign configurations the acceptance suite runs."""
    laplace = CampaignConfig(
        geometry=TORUS, region=RegionConfig("half-plane", DELTA),
        scan=ScanConfig("crucial-line", 2.0, 30.0, 24, Fraction(6, 5)), seed=seed, threads=threads,
    )
    damped = CampaignConfig(
        geometry=TORUS, damping=VARIABLE_DAMPING,
        region=RegionConfig("damped", DELTA, L=6.0, v_source="qep", v_radius=0.25,
                            qep_truncation=QEP_TRUNCATION),
        scan=ScanConfig("upper-band", 6.0, 30.0, 24, Fraction(6, 5)), seed=seed, threads=threads,
    )
    return {
        "laplace": laplace,
        "laplace-4/3": laplace.with_overrides(scan__p=Fraction(4, 3)),
        "damped-band": damped,
        "damped-compact": damped.with_overrides(scan__segment="compact-line", scan__start=-6.0, scan__stop=6.0),
        "sphere": CampaignConfig(geometry=SPHERE, boyd=BoydConfig(8, 500), seed=seed, threads=threads),
    }


@dataclass
class CriterionResult:
    id: str
    name: str
    measured: object
    threshold: object
    passed: bool
    notes: list[str] = field(default_factory=list)
    seconds: float = 0.0
    error: str | None = None

    def line(self) -> str:
        status = "PASS" if self.passed else ("ERROR" if self.error else "FAIL")
        return (f"[{status}] criterion {self.id:>2} {self.name}: measured={_fmt(self.measured)} "
                f"threshold={_fmt(self.threshold)}" + (f" ({self.error})" if self.error else ""))

    def to_json(self, timing: bool = True) -> dict:
        out = {"id": self.id, "name": self.name, "measured": self.measured, "threshold": self.threshold,
               "pass": self.passed, "notes": self.notes}
        if self.error:
            out["error"] = self.error
        if timing:
            out["seconds"] = self.seconds
        return out


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {_fmt(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


@dataclass
class AcceptanceRun:
    seed: int = 0
    threads: int = 1
    out: Path | None = None
    expected: dict | None = None
    calibrate: bool = False
    calibration: dict = field(default_factory=dict)
    csv: dict[str, str] = field(default_factory=dict)
    reruns: dict[str, Callable[[], str]] = field(default_factory=dict)
    cache: dict = field(default_factory=dict)

    @property
    def configs(self) -> dict[str, CampaignConfig]:
        return pinned_configs(self.seed, self.threads)

    def regression_ok(self, crit: str, key: str, measured: float, higher_is_worse: bool = True) -> tuple[bool, str]:
        """Compare against the calibrated value; skipped when calibrating or seeds differ."""
        self.calibration.setdefault(crit, {})[key] = measured
        if self.calibrate or self.expected is None:
            return True, "calibrating"
        if self.expected["seed"] != self.seed:
            return True, f"calibrated at seed {self.expected['seed']}; regression check skipped"
        ref = self.expected["calibration"][crit][key]
        tol = self.expected["regression_tolerance"] * max(abs(ref), 1e-12)
        ok = measured <= ref + tol if higher_is_worse else abs(measured - ref) <= tol
        return ok, f"calibrated {key}={ref:.6g}"

    def record_csv(self, name: str, text: str, rerun: Callable[[], str]) -> None:
        self.csv[name] = text
        self.reruns[name] = rerun
        if self.out is not None:
            self.out.mkdir(parents=True, exist_ok=True)
            (self.out / f"{name}.csv").write_text(text)

    @property
    def slope_limit(self) -> float:
        return self.expected["slope_limit"] if self.expected else 0.1


# ---------------------------------------------------------------- criteria

L2_PINNED = [complex(x, y) for y in (0.2, 0.8) for x in (0.3, 1.1, 1.7, 2.45, 3.3, 4.05, 5.2, 6.6, 7.3, 9.1)]


def crit_l2_oracle(run: AcceptanceRun) -> CriterionResult:
    geom = build_torus(3, 16)
    errs = []
    for i, z in enumerate(L2_PINNED):
        exact = l2_resolvent_norm_exact(geom, z)
        probe = opnorm_lower_bound(laplace_resolvent_operator(geom, z), 2.0, 2.0, restarts=2,
                                   max_iters=3000, seed=seed_for(run.seed, i, 10), rtol=1e-12)
        errs.append(abs(probe.value - exact) / exact)
    worst = max(errs)
    return CriterionResult("1", "exact L2 oracle", worst, 0.01, worst <= 0.01,
                           [f"{len(L2_PINNED)} pinned z on T^3, N=16"])


def _uniformity(run: AcceptanceRun, crit: str, name: str, cfg: CampaignConfig) -> CriterionResult:
    report = scan_laplace(cfg)
    run.record_csv(f"criterion-{int(crit):02d}-{report.campaign}", report.csv_text(),
                   lambda: scan_laplace(cfg).csv_text())
    if run.out is not None:
        write_json(run.out / f"criterion-{int(crit):02d}-{report.campaign}.json", report.summary())
    stat = report.slope.statistic if report.slope else math.inf
    reg_ok, note = run.regression_ok(crit, "slope_statistic", stat)
    notes = [note, f"slope={report.slope.slope:.4f} stderr={report.slope.stderr:.4f}" if report.slope else "no fit",
             f"flags={report.flag_counts}"] + report.notes
    return CriterionResult(crit, name, stat, run.slope_limit,
                           report.passed and stat <= run.slope_limit and reg_ok, notes)


def crit_uniformity(run: AcceptanceRun) -> CriterionResult:
    return _uniformity(run, "2", "crucial-line uniformity p=6/5", run.configs["laplace"])


def crit_scaling(run: AcceptanceRun) -> CriterionResult:
    return _uniformity(run, "3", "scaling law p=4/3", run.configs["laplace-4/3"])


def crit_apriori(run: AcceptanceRun) -> CriterionResult:
    geom = build_torus(3, 16)
    worst = math.inf
    failures = 0
    for j, h in enumerate((1 / 4, 1 / 8, 1 / 16)):
        for i in range(100):
            rep = check_apriori_crucial(geom, DELTA, h, seed=seed_for(run.seed, i, 40 + j))
            worst = min(worst, rep.details["slack"] / rep.details["rhs"])
            failures += not rep.passed
    return CriterionResult("4", "a priori inequality on the crucial line", worst, 0.0, failures == 0,
                           [f"minimum relative slack over 300 trials; {failures} negative"])


ELLIPT_PINNED = {
    "ellipt1": [complex(x, DELTA) for x in (0.25, 0.5, 0.8, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0)],
    "ellipt2": [complex(x * y, y) for y in (0.5, 1.0, 2.0, 3.0, 5.0) for x in (0.0, 0.5)],
}


def crit_ellipt(run: AcceptanceRun) -> CriterionResult:
    geom = build_torus(3, 16)
    measured, notes, ok = {}, [], True
    for r, (regime, zs) in enumerate(ELLIPT_PINNED.items()):
        worst = max(
            check_ellipt_bounds(geom, z, 100, seed_for(run.seed, i, 50 + r), regime).worst
            for i, z in enumerate(zs)
        )
        measured[regime] = worst
        reg_ok, note = run.regression_ok("5", regime, worst)
        ok &= reg_ok
        notes.append(f"{regime}: {note}")
    threshold = ({k: run.expected["calibration"]["5"][k] for k in ELLIPT_PINNED}
                 if run.expected and not run.calibrate else "calibrating")
    return CriterionResult("5", "elliptic-region inequalities", measured, threshold, ok, notes)


def crit_qep_constant(run: AcceptanceRun) -> CriterionResult:
    geom = build_torus(3, 16)
    c = 1.0
    spec = qep_eigenvalues(assemble_qep(geom, constant_damping(geom, c), QEP_TRUNCATION))
    lam = np.unique(np.real(np.diag(spec.pencil.L)))
    roots = np.concatenate([1j * c + np.sqrt(lam - c**2 + 0j), 1j * c - np.sqrt(lam - c**2 + 0j)])
    taus = spec.trusted_eigenvalues
    err = float(np.max(np.min(np.abs(taus[:, None] - roots[None, :]), axis=1)))
    off_axis = taus[np.abs(taus.real) > 1e-6]
    band_err = float(np.max(np.abs(off_axis.imag - c))) if off_axis.size else 0.0
    measured = {"oracle_error": err, "band_error": band_err}
    ok = err <= 1e-8 and band_err <= 1e-8
    return CriterionResult("6", "QEP constant-damping oracle", measured, 1e-8, ok,
                           [f"{taus.size} trusted of {spec.eigenvalues.size}"])


def _variable_spectrum(run: AcceptanceRun):
    if "variable-qep" not in run.cache:
        geom = build_torus(3, 16)
        a = VARIABLE_DAMPING.build(geom)
        run.cache["variable-qep"] = (a, qep_eigenvalues(assemble_qep(geom, a, QEP_TRUNCATION)))
    return run.cache["variable-qep"]


def crit_band_symmetry(run: AcceptanceRun) -> CriterionResult:
    a, spec = _variable_spectrum(run)
    band = check_band_localization(spec, a, re_zero=1e-6, slack=1e-6)
    refl_all = reflection_distance(spec.eigenvalues)
    refl_trusted = reflection_distance(spec.trusted_eigenvalues)
    # trust flags can split a mirror pair at the threshold, so symmetry is judged on the full spectrum
    measured = {"band_violations": len(band.violations), "reflection_distance": refl_all}
    ok = band.passed and measured["reflection_distance"] <= 1e-8
    return CriterionResult("7", "band and reflection symmetry", measured,
                           {"band_violations": 0, "reflection_distance": 1e-8}, ok,
                           [f"band [{band.band[0]:g}, {band.band[1]:g}], {band.checked} trusted checked",
                            f"reflection: all={refl_all:.2e} trusted={refl_trusted:.2e}"])


def _flow(run: AcceptanceRun, key: str, a):
    if key not in run.cache:
        run.cache[key] = estimate_A_bounds(a.geometry, a, seed=run.seed)
    return run.cache[key]


def crit_flow(run: AcceptanceRun) -> CriterionResult:
    geom = build_torus(3, 16)
    simple = _flow(run, "flow-simple", cosine_damping(geom, 1.0, [((1, 0, 0), 1.0)]))
    variable = _flow(run, "flow-variable", VARIABLE_DAMPING.build(geom))
    measured = {
        "i_A_plus": simple.A_plus, "i_A_minus": simple.A_minus,
        "ii_A_plus": variable.A_plus, "ii_A_minus": variable.A_minus,
    }
    errors = {
        "i": max(abs(simple.A_plus - 2), abs(simple.A_minus)),
        "ii": max(abs(variable.A_plus - 5), abs(variable.A_minus - 1)),
    }
    ok = errors["i"] <= 1e-3 and errors["ii"] <= 5e-3 and simple.monotone and variable.monotone
    notes = [f"error (i)={errors['i']:.2e} (ii)={errors['ii']:.2e}",
             f"ladder monotone: (i) {simple.monotone}, (ii) {variable.monotone}",
             f"(ii) sup sequence {[round(v, 6) for v in variable.sup_sequence]}"]
    return CriterionResult("8", "A+/A- analytic oracle", measured,
                           {"i": "2, 0 +- 1e-3", "ii": "5, 1 +- 5e-3"}, ok, notes)


def crit_strip(run: AcceptanceRun) -> CriterionResult:
    geom = build_torus(3, 16)
    flow = _flow(run, "flow-variable", VARIABLE_DAMPING.build(geom))
    _, spec = _variable_spectrum(run)
    rep = check_strip_theorem(spec, flow, 0.5, (6.0, 12.0))
    notes = [f"strip ({rep.strip[0]:.4f}, {rep.strip[1]:.4f}), {rep.checked} trusted with |Re tau| in [6, 12]"]
    if rep.vacuous:
        notes.append(f"no trusted eigenvalue in the window at truncation {QEP_TRUNCATION}; the check is vacuous")
    return CriterionResult("9", "strip containment", len(rep.exceptions), 0, rep.passed, notes)


DAMPED_L2_PINNED = {
    "above": [2 + 7j, -3 + 6.5j, 5 + 8j, 10 + 6.2j, 20 + 9j, -15 + 7j],
    "below": [2 - 0.5j, -3 - 1j, 5 - 0.2j, 10 - 2j, 20 - 0.5j, -15 - 1j],
    "high": [24j, 5 + 26j, -12 + 30j, 40j, -30j, 8 - 28j],
}


def crit_damped_l2(run: AcceptanceRun) -> CriterionResult:
    geom = build_torus(3, 16)
    a = VARIABLE_DAMPING.build(geom)
    measured, ok = {}, True
    for r, (regime, taus) in enumerate(DAMPED_L2_PINNED.items()):
        worst = 0.0
        for i, tau in enumerate(taus):
            rep = check_damped_l2_bounds(geom, a, tau, 50, seed_for(run.seed, i, 100 + r), regime)
            worst = max(worst, rep.worst)
            ok &= rep.passed
        measured[regime] = worst
    return CriterionResult("10", "damped L2 bounds", measured, 1.0, ok,
                           ["worst ratio ||u|| / (bound ||f||) per regime, 50 trials at 6 pinned tau"])


def crit_damped_uniformity(run: AcceptanceRun) -> CriterionResult:
    cfgs = run.configs
    band_cfg, compact_cfg = cfgs["damped-band"], cfgs["damped-compact"]
    setup = damped_setup(band_cfg)
    band = scan_damped(band_cfg, setup)
    compact = scan_damped(compact_cfg, setup)

    def rerun_band():
        return scan_damped(band_cfg, damped_setup(band_cfg)).csv_text()

    def rerun_compact():
        return scan_damped(compact_cfg, damped_setup(compact_cfg)).csv_text()

    run.record_csv("criterion-11-upper-band", band.csv_text(), rerun_band)
    run.record_csv("criterion-11-compact", compact.csv_text(), rerun_compact)
    if run.out is not None:
        write_json(run.out / "criterion-11-upper-band.json", band.summary())
        write_json(run.out / "criterion-11-compact.json", compact.summary())
    stat = band.slope.statistic if band.slope else math.inf
    reg_ok, note = run.regression_ok("11", "slope_statistic", stat)
    nonfinite = sum(1 for r in compact.rows if r.flag not in ("ok", "unconverged", "in-V"))
    measured = {"slope_statistic": stat, "compact_nonfinite": nonfinite, "compact_max": compact.max_probe}
    ok = band.passed and compact.passed and stat <= run.slope_limit and reg_ok
    notes = [note, f"A+={setup.region.A_plus:.6f} A-={setup.region.A_minus:.6f}",
             f"band flags={band.flag_counts}", f"compact flags={compact.flag_counts}"] + band.notes + compact.notes
    return CriterionResult("11", "damped uniformity", measured,
                           {"slope_statistic": run.slope_limit, "compact_nonfinite": 0}, ok, notes)


def crit_sharpness(run: AcceptanceRun) -> CriterionResult:
    cfg = run.configs["sphere"]
    rep = sharpness_sphere(cfg)
    run.record_csv("criterion-12-control", rep.control.csv_text(),
                   lambda: sharpness_sphere(cfg).control.csv_text())
    run.record_csv("criterion-12-shrinking", rep.shrinking.csv_text(),
                   lambda: sharpness_sphere(cfg).shrinking.csv_text())
    if run.out is not None:
        write_json(run.out / "criterion-12-sharpness.json", rep.summary())
    stat = rep.control.slope.statistic if rep.control.slope else math.inf
    growth_ok, note = run.regression_ok("12", "growth", rep.growth, higher_is_worse=False)
    ctrl_ok, note2 = run.regression_ok("12", "control_slope_statistic", stat)
    measured = {"growth": rep.growth, "monotone_tail": rep.monotone_tail, "control_slope_statistic": stat}
    ok = rep.passed and growth_ok and ctrl_ok
    return CriterionResult("12", "sphere sharpness", measured,
                           {"growth": cfg.sharpness.growth_min, "control_slope_statistic": run.slope_limit},
                           ok, [rep.verdict, note, note2])


def crit_determinism(run: AcceptanceRun) -> CriterionResult:
    if not run.reruns:
        # standalone: produce a first run of the cheap campaigns to compare against
        cfgs = run.configs
        run.reruns["laplace"] = lambda: scan_laplace(cfgs["laplace"]).csv_text()
        run.reruns["sharpness-control"] = lambda: sharpness_sphere(cfgs["sphere"]).control.csv_text()
        for name, fn in run.reruns.items():
            run.csv[name] = fn()
    mismatched = [name for name, fn in run.reruns.items() if fn() != run.csv[name]]
    return CriterionResult("13", "determinism", len(mismatched), 0, not mismatched,
                           [f"{len(run.reruns)} CSV files regenerated"] + [f"differs: {m}" for m in mismatched])


CRITERIA: dict[str, Callable[[AcceptanceRun], CriterionResult]] = {
    "1": crit_l2_oracle,
    "2": crit_uniformity,
    "3": crit_scaling,
    "4": crit_apriori,
    "5": crit_ellipt,
    "6": crit_qep_constant,
    "7": crit_band_symmetry,
    "8": crit_flow,
    "9": crit_strip,
    "10": crit_damped_l2,
    "11": crit_damped_uniformity,
    "12": crit_sharpness,
    "13": crit_determinism,
}

CALIBRATED = ("2", "3", "5", "11", "12")


def run_acceptance(
    only=None,
    seed: int = 0,
    threads: int = 1,
    out=None,
    expected_path=None,
    calibrate: bool = False,
    echo: Callable[[str], None] | None = print,
) -> tuple[list[CriterionResult], int]:
    """Run the selected criteria; returns the results and the process exit code.

    Exit codes: 0 all pass, 1 some criterion failed, 3 a criterion hit a numerical error.
    A malformed expected-values file raises :class:`ExpectedValuesError` (exit 2 in the CLI).
    """
    ids = list(CRITERIA) if not only else [str(i) for i in only]
    unknown = [i for i in ids if i not in CRITERIA]
    if unknown:
        raise KeyError(f"unknown criterion ids {unknown}")
    if calibrate:
        ids = sorted(set(ids) | set(CALIBRATED), key=int)
    expected = None if calibrate else load_expected(expected_path)
    run = AcceptanceRun(seed, threads, Path(out) if out is not None else None, expected, calibrate)
    results = []
    for cid in ids:
        start = time.perf_counter()
        try:
            res = CRITERIA[cid](run)
        except NUMERICAL_ERRORS as exc:
            res = CriterionResult(cid, CRITERIA[cid].__name__, None, None, False, error=f"{type(exc).__name__}: {exc}")
        res.seconds = time.perf_counter() - start
        results.append(res)
        if echo:
            echo(res.line())
    if run.out is not None:
        write_json(run.out / "acceptance.json", [r.to_json() for r in results])
    if calibrate:
        data = {
            "version": 1,
            "seed": seed,
            "slope_limit": 0.1,
            "regression_tolerance": 0.01,
            "calibration": {k: run.calibration[k] for k in CALIBRATED},
        }
        path = save_expected(data, expected_path)
        if echo:
            echo(f"calibration written to {path}")
    if any(r.error for r in results):
        return results, 3
    return results, 0 if all(r.passed for r in results) else 1
