"""Scan rows, summary statistics and their CSV / JSON serialisation."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

__all__ = [
    "CSV_HEADER",
    "ScanRow",
    "SlopeFit",
    "ScanReport",
    "fit_slope",
    "rows_to_csv",
    "write_json",
]

CSV_HEADER = ("re", "im", "region_ok", "p", "q", "probe", "iters", "restarts", "flag")


@dataclass
class ScanRow:
    point: complex
    region_ok: bool
    p: float
    q: float
    probe: float = math.nan
    iters: int = 0
    restarts: int = 0
    flag: str = "ok"
    scale: float = 1.0  # predicted |Re|^exponent growth of the bound at this point
    checksum: str = ""
    seconds: float = 0.0

    @property
    def usable(self) -> bool:
        return self.flag in ("ok", "unconverged") and math.isfinite(self.probe)

    def csv_fields(self) -> list[str]:
        probe = f"{self.probe:.12e}" if math.isfinite(self.probe) else "nan"
        return [
            f"{self.point.real:.15g}", f"{self.point.imag:.15g}", str(int(self.region_ok)),
            f"{self.p:.15g}", f"{self.q:.15g}", probe, str(self.iters), str(self.restarts), self.flag,
        ]

    def to_json(self) -> dict:
        d = asdict(self)
        d["point"] = [self.point.real, self.point.imag]
        d["probe"] = self.probe if math.isfinite(self.probe) else None
        return d


@dataclass
class SlopeFit:
    slope: float
    stderr: float
    points: int

    @property
    def statistic(self) -> float:
        """``slope + 2 stderr``, the quantity compared against the uniformity limit."""
        return self.slope + 2 * self.stderr


def fit_slope(x, y) -> SlopeFit:
    """Least-squares slope of ``log y`` against ``log x`` with its standard error."""
    x = np.log(np.abs(np.asarray(x, dtype=float)))
    y = np.log(np.asarray(y, dtype=float))
    if x.size < 3:
        raise ValueError("a slope fit needs at least three usable points")
    res = stats.linregress(x, y)
    return SlopeFit(float(res.slope), float(res.stderr), int(x.size))


@dataclass
class ScanReport:
    campaign: str
    rows: list[ScanRow]
    slope_limit: float = 0.1
    slope: SlopeFit | None = None
    verdict: str = "PASS"
    notes: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def usable_rows(self) -> list[ScanRow]:
        return [r for r in self.rows if r.usable]

    @property
    def max_probe(self) -> float:
        vals = [r.probe for r in self.usable_rows]
        return max(vals) if vals else math.nan

    @property
    def flag_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for r in self.rows:
            counts[r.flag] = counts.get(r.flag, 0) + 1
        return dict(sorted(counts.items()))

    @property
    def passed(self) -> bool:
        return self.verdict in ("PASS", "SHARPNESS-DEMONSTRATED")

    def fit_uniformity(self) -> SlopeFit:
        """Slope of the scale-normalised probe against ``|Re|``; sets the verdict."""
        rows = self.usable_rows
        fit = fit_slope([r.point.real for r in rows], [r.probe / r.scale for r in rows])
        self.slope = fit
        if fit.statistic > self.slope_limit:
            self.verdict = "FAIL"
            self.notes.append(f"slope {fit.slope:.4f} + 2*{fit.stderr:.4f} exceeds {self.slope_limit}")
        return fit

    def csv_text(self) -> str:
        return rows_to_csv(self.rows)

    def summary(self, timing: bool = True) -> dict:
        out = {
            "campaign": self.campaign,
            "verdict": self.verdict,
            "rows": len(self.rows),
            "usable": len(self.usable_rows),
            "flags": self.flag_counts,
            "max_probe": None if math.isnan(self.max_probe) else self.max_probe,
            "slope_limit": self.slope_limit,
            "notes": list(self.notes),
        }
        if self.slope is not None:
            out["slope"] = {
                "slope": self.slope.slope,
                "stderr": self.slope.stderr,
                "statistic": self.slope.statistic,
                "points": self.slope.points,
            }
        out.update(self.extra)
        rows = [r.to_json() for r in self.rows]
        if not timing:
            for r in rows:
                r.pop("seconds")
        out["points"] = rows
        return out

    def write(self, directory, stem: str | None = None) -> tuple[Path, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        stem = stem or self.campaign
        csv_path = directory / f"{stem}.csv"
        csv_path.write_text(self.csv_text())
        json_path = write_json(directory / f"{stem}.json", self.summary())
        return csv_path, json_path


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow(r.csv_fields())
    return buf.getvalue()


def _clean(obj):
    """Plain JSON types; non-finite floats become ``null``."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return _clean(obj.item())
    if isinstance(obj, complex):
        return [_clean(obj.real), _clean(obj.imag)]
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path, payload) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(payload), indent=2, allow_nan=False) + "\n")
    return path
