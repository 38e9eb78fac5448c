"""Scan campaigns: Boyd probes of resolvents along region boundaries."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..damped.flow import FlowAverageResult, estimate_A_bounds
from ..damped.qep import QepSpectrum, assemble_qep, qep_eigenvalues
from ..geometry import DampingField, ModelGeometry, SphereZonalGeometry
from ..regions import (
    DampedRegion,
    HalfPlane,
    ParabolicExterior,
    boundary_scan,
    contains,
    disks_around,
    in_half_plane,
    scaling_exponent,
)
from ..resolvent.boyd import BoydDivergence, opnorm_lower_bound, witness_checksum
from ..resolvent.operators import (
    GridOperator,
    NearEigenvalueError,
    SingularityError,
    damped_resolvent_operator,
    l2_resolvent_norm_exact,
    laplace_resolvent_operator,
)
from .config import CampaignConfig, ConfigError, seed_for
from .report import ScanReport, ScanRow

__all__ = [
    "probe_points",
    "scan_laplace",
    "scan_damped",
    "sharpness_sphere",
    "SharpnessReport",
    "damped_setup",
    "compute_qep",
    "flow_average",
    "BAND_SEGMENTS",
]

log = logging.getLogger(__name__)

BAND_SEGMENTS = ("upper-band", "lower-band")


def probe_points(
    geom: ModelGeometry,
    points: Sequence[complex],
    make_operator: Callable[[complex], GridOperator],
    cfg: CampaignConfig,
    region_ok: Callable[[complex], bool],
    scale: Callable[[complex], float] = lambda z: 1.0,
    skip: Callable[[complex], str | None] = lambda z: None,
    stream: int = 0,
) -> list[ScanRow]:
    """One Boyd probe per point, run on a thread pool; rows come back in point order."""
    p, q = float(cfg.scan.p), float(cfg.scan.q)
    boyd = cfg.boyd

    def run(index: int) -> ScanRow:
        z = complex(points[index])
        row = ScanRow(z, bool(region_ok(z)), p, q, scale=float(scale(z)))
        reason = skip(z)
        if reason:
            row.flag = reason
            return row
        if not row.region_ok:
            row.flag = "outside-region"
            return row
        start = time.perf_counter()
        try:
            probe = opnorm_lower_bound(
                make_operator(z), p, q, restarts=boyd.restarts, max_iters=boyd.max_iters,
                seed=seed_for(cfg.seed, index, stream), rtol=boyd.rtol,
            )
        except SingularityError:
            row.flag = "on-spectrum"
        except NearEigenvalueError:
            row.flag = "near-eigenvalue"
        except BoydDivergence:
            row.flag = "diverged"
        else:
            row.probe = probe.value
            row.iters = probe.iterations
            row.restarts = probe.restarts
            row.checksum = witness_checksum(probe.witness)
            row.flag = "ok" if probe.converged else "unconverged"
        row.seconds = time.perf_counter() - start
        return row

    if cfg.threads == 1:
        return [run(i) for i in range(len(points))]
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        return list(pool.map(run, range(len(points))))


def _scale_function(p, n: int):
    e = float(scaling_exponent(p, n))
    return lambda z: abs(complex(z).real) ** e


def scan_laplace(cfg: CampaignConfig) -> ScanReport:
    """``(-Delta - z^2)^{-1}: L^p -> L^{p'}`` along the crucial line ``Im z = delta``."""
    if cfg.damping.kind != "none":
        raise ConfigError("scan-laplace takes no damping; use scan-damped")
    geom = cfg.geometry.build()
    rc = cfg.region
    if rc.kind == "half-plane":
        region = HalfPlane(rc.delta)
        member = lambda z: contains(region, z)  # noqa: E731
    elif rc.kind == "parabolic":
        region = ParabolicExterior(rc.delta)
        member = lambda z: contains(region, complex(z) ** 2)  # noqa: E731
    else:
        raise ConfigError(f"scan-laplace needs a half-plane or parabolic region, got {rc.kind!r}")
    if cfg.scan.segment != "crucial-line":
        raise ConfigError(f"scan-laplace scans the crucial line, got segment {cfg.scan.segment!r}")
    points = boundary_scan(HalfPlane(rc.delta), "crucial-line", cfg.scan.count, (cfg.scan.start, cfg.scan.stop))
    rows = probe_points(
        geom, points, lambda z: laplace_resolvent_operator(geom, z), cfg, member,
        _scale_function(cfg.scan.p, cfg.geometry.dimension),
    )
    report = ScanReport("scan-laplace", rows, cfg.scan.slope_limit)
    report.extra["scaling_exponent"] = float(scaling_exponent(cfg.scan.p, cfg.geometry.dimension))
    _finish_uniformity(report)
    return report


def _finish_uniformity(report: ScanReport) -> None:
    bad = [r for r in report.rows if r.flag == "outside-region"]
    if bad:
        report.verdict = "FAIL"
        report.notes.append(f"{len(bad)} scan points failed their region membership test")
    if len(report.usable_rows) < 3:
        report.verdict = "FAIL"
        report.notes.append("fewer than three usable points for the slope fit")
        return
    report.fit_uniformity()


def compute_qep(cfg: CampaignConfig, geom: ModelGeometry | None = None,
                damping: DampingField | None = None) -> QepSpectrum:
    geom = geom or cfg.geometry.build()
    damping = damping or cfg.damping.build(geom)
    return qep_eigenvalues(assemble_qep(geom, damping, cfg.region.qep_truncation))


def flow_average(cfg: CampaignConfig, geom: ModelGeometry | None = None,
                 damping: DampingField | None = None) -> FlowAverageResult:
    geom = geom or cfg.geometry.build()
    damping = damping or cfg.damping.build(geom)
    fc = cfg.flow
    return estimate_A_bounds(
        geom, damping, T_ladder=fc.ladder, direction_samples=fc.directions,
        point_samples=fc.points, seed=cfg.seed, rational_height=fc.rational_height,
    )


@dataclass
class DampedSetup:
    geometry: ModelGeometry
    damping: DampingField
    region: DampedRegion
    flow: FlowAverageResult | None
    spectrum: QepSpectrum | None


def damped_setup(cfg: CampaignConfig) -> DampedSetup:
    """Geometry, damping, ``A_plus``/``A_minus`` and the excluded disks ``V``."""
    rc = cfg.region
    if rc.kind != "damped":
        raise ConfigError(f"scan-damped needs region kind 'damped', got {rc.kind!r}")
    geom = cfg.geometry.build()
    a = cfg.damping.build(geom)
    flow = None
    A_plus, A_minus = rc.A_plus, rc.A_minus
    if A_plus is None or A_minus is None:
        if a.is_constant:
            A_plus = A_minus = a.mean
        else:
            flow = flow_average(cfg, geom, a)
            A_plus = flow.A_plus if A_plus is None else A_plus
            A_minus = flow.A_minus if A_minus is None else A_minus
    spectrum = None
    disks = tuple(rc.disks)
    if rc.v_source == "qep":
        spectrum = compute_qep(cfg, geom, a)
        disks += disks_around(spectrum.eigenvalues, rc.L, rc.v_radius)
    elif rc.v_source != "none":
        raise ConfigError(f"unknown v_source {rc.v_source!r}")
    region = DampedRegion(rc.delta, rc.L, A_plus, A_minus, disks)
    return DampedSetup(geom, a, region, flow, spectrum)


def scan_damped(cfg: CampaignConfig, setup: DampedSetup | None = None) -> ScanReport:
    """``P(tau)^{-1}: L^p -> L^{p'}`` along one segment of the damped region's boundary."""
    setup = setup or damped_setup(cfg)
    geom, a, region = setup.geometry, setup.damping, setup.region
    sc = cfg.scan
    points = boundary_scan(region, sc.segment, sc.count, (sc.start, sc.stop), sc.level)
    known = None if setup.spectrum is None else setup.spectrum.eigenvalues

    def skip(tau):
        return "in-V" if any(d.contains(tau) for d in region.V) else None

    rows = probe_points(
        geom, points, lambda t: damped_resolvent_operator(geom, a, t, spectrum=known), cfg,
        lambda t: contains(region, t), _scale_function(sc.p, cfg.geometry.dimension), skip,
    )
    report = ScanReport(f"scan-damped-{sc.segment}", rows, sc.slope_limit)
    report.extra.update({
        "A_plus": region.A_plus, "A_minus": region.A_minus, "L": region.L, "delta": region.delta,
        "V_disks": len(region.V), "segment": sc.segment,
    })
    if sc.segment in BAND_SEGMENTS:
        _finish_uniformity(report)
    else:
        failed = [r for r in rows if r.flag not in ("ok", "unconverged", "in-V")]
        if failed or not report.usable_rows:
            report.verdict = "FAIL"
            report.notes.append(f"{len(failed)} probes on the compact segment did not produce a finite value")
    return report


@dataclass
class SharpnessReport:
    control: ScanReport
    shrinking: ScanReport
    growth: float
    monotone_tail: bool
    l2_exact: list[float]
    verdict: str

    @property
    def passed(self) -> bool:
        return self.verdict == "SHARPNESS-DEMONSTRATED"

    def summary(self, timing: bool = True) -> dict:
        return {
            "campaign": "sharpness-sphere",
            "verdict": self.verdict,
            "growth": self.growth,
            "monotone_tail": self.monotone_tail,
            "l2_exact": self.l2_exact,
            "control": self.control.summary(timing),
            "shrinking": self.shrinking.summary(timing),
        }


def sharpness_sphere(cfg: CampaignConfig) -> SharpnessReport:
    """Bounded probes at fixed ``delta`` against growth along ``z_k = (k+1) + i c/k``.

    On the sphere the eigenvalues ``k(k+2) = (k+1)^2 - 1`` cluster at ``(k+1)^2``,
    so ``z_k^2`` approaches the spectrum as ``Im z_k`` shrinks like ``1/k``.
    """
    if cfg.geometry.kind != "sphere":
        raise ConfigError("sharpness-sphere needs the sphere geometry")
    geom = cfg.geometry.build()
    assert isinstance(geom, SphereZonalGeometry)
    sh = cfg.sharpness
    ks = np.arange(sh.k_start, sh.k_stop + 1)
    if len(ks) < 4:
        raise ConfigError("sharpness sequence needs at least four values of k")
    # resolving z_k needs degrees comfortably past k+1
    if sh.k_stop + 2 > geom.K:
        raise ConfigError(f"K={geom.K} under-resolves k up to {sh.k_stop}")
    scale = _scale_function(cfg.scan.p, 3)
    make = lambda z: laplace_resolvent_operator(geom, z)  # noqa: E731

    control_pts = [complex(k + sh.offset, sh.delta) for k in ks]
    control = ScanReport(
        "sharpness-control",
        probe_points(geom, control_pts, make, cfg, lambda z: in_half_plane(z, sh.delta), scale, stream=1),
        cfg.scan.slope_limit,
    )
    _finish_uniformity(control)

    shrink_pts = [complex(k + 1, sh.c / k) for k in ks]
    level = {complex(k + 1, sh.c / k): sh.c / k for k in ks}
    shrinking = ScanReport(
        "sharpness-shrinking",
        probe_points(geom, shrink_pts, make, cfg, lambda z: in_half_plane(z, level[z]), scale, stream=2),
        cfg.scan.slope_limit,
    )
    vals = [r.probe for r in shrinking.rows]
    growth = vals[-1] / vals[0] if all(math.isfinite(v) for v in (vals[0], vals[-1])) else math.nan
    half = (len(ks) - 1) // 2
    tail = vals[half:]
    monotone = all(b > a_ for a_, b in zip(tail, tail[1:]))
    l2 = [l2_resolvent_norm_exact(geom, z) for z in shrink_pts]
    shrinking.extra.update({"k": ks.tolist(), "growth": growth, "monotone_from_k": int(ks[half])})
    control.extra["k"] = ks.tolist()

    ok = control.passed and growth >= sh.growth_min and monotone
    if not ok:
        shrinking.verdict = "FAIL"
    return SharpnessReport(control, shrinking, growth, monotone, l2,
                           "SHARPNESS-DEMONSTRATED" if ok else "NOT-DEMONSTRATED")
