"""
Bound sweeps and CSV serialization.
"""
from __future__ import annotations

import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .models import GaussianPrior, PhaseModel, fidelity
from .phase import (heisenberg_limit, mmse_gaussian, qcrb_bayes, qwwb_optimized,
                    qzzb_gaussian)

FIGURE2_NU = (1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 15, 20, 30, 50, 70, 100)
INSET_NU = (1, 2, 5, 10, 100)


def default_energy_grid(sigma: float, points: int = 60) -> np.ndarray:
    """Log-spaced E from ``0.1/sigma`` to ``100/sigma``."""
    return np.geomspace(0.1 / sigma, 100.0 / sigma, points)


@dataclass
class BoundPoint:
    sweep: float
    qwwb: float
    qwwb_s: float
    qwwb_h: float
    qzzb: float
    qcrb: float
    mmse: float | None = None
    heisenberg: float | None = None


@dataclass
class BoundReport:
    model_id: str
    sweep_name: str
    sigma: float
    points: list[BoundPoint] = field(default_factory=list)

    def violations(self, rel: float = 1e-9, abs_slack: float = 0.0) -> list[str]:
        """Bounds exceeding the recorded MMSE (beyond the given slack)."""
        bad = []
        for p in self.points:
            if p.mmse is None:
                continue
            slack = max(rel * abs(p.mmse), abs_slack)
            for name in ("qwwb", "qzzb", "qcrb", "heisenberg"):
                v = getattr(p, name)
                if v is not None and v > p.mmse + slack:
                    bad.append(f"{self.sweep_name}={p.sweep}: {name}={v!r} > mmse={p.mmse!r}")
        return bad


def evaluate_point(model: PhaseModel, prior: GaussianPrior, sweep: float,
                   s: float | None = 0.5, with_mmse: bool = True) -> BoundPoint:
    w = qwwb_optimized(model, prior, s=s)
    mmse = mmse_gaussian(model, prior) if with_mmse else None
    return BoundPoint(sweep=sweep, qwwb=w.value, qwwb_s=w.s, qwwb_h=w.h,
                      qzzb=qzzb_gaussian(model, prior), qcrb=qcrb_bayes(model, prior),
                      mmse=mmse)


def _figure1_task(args):
    E, sigma, mean, s = args
    return evaluate_point(PhaseModel.qubit(E), GaussianPrior(mean, sigma), float(E), s)


def _figure2_task(args):
    nu, sigma, mean, epsilon, M, s = args
    model = PhaseModel.bosonic(epsilon, M, nu)
    return evaluate_point(model, GaussianPrior(mean, sigma), float(nu), s, with_mmse=False)


def _run(task, items, jobs: int):
    if jobs <= 1:
        return [task(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(task, items))  # map preserves sweep order


def figure1_report(sigma: float = 0.1, energies: Sequence[float] | None = None,
                   mean: float = 0.0, s: float | None = 0.5, jobs: int = 1) -> BoundReport:
    """Qubit benchmark: MMSE, QWWB, QZZB and QCRB versus E."""
    energies = default_energy_grid(sigma) if energies is None else energies
    pts = _run(_figure1_task, [(float(E), sigma, mean, s) for E in energies], jobs)
    return BoundReport("qubit", "E", sigma, pts)


def figure2_report(sigma: float = 0.5, epsilon: float = 0.1, M: int = 10,
                   nus: Sequence[int] = FIGURE2_NU, mean: float = 0.0,
                   s: float | None = 0.5, jobs: int = 1) -> BoundReport:
    """Bosonic probes: QWWB, QZZB and QCRB versus the number of probes."""
    pts = _run(_figure2_task, [(int(n), sigma, mean, epsilon, M, s) for n in nus], jobs)
    return BoundReport(f"bosonic(epsilon={epsilon},M={M})", "nu", sigma, pts)


def fidelity_curves(epsilon: float = 0.1, M: int = 10, nus: Sequence[int] = INSET_NU,
                    h: Sequence[float] | None = None):
    """``|z(h)|^(2 nu)`` for the bosonic probe; returns (h, {nu: curve})."""
    h = np.linspace(0.0, 2.0 * math.pi, 401) if h is None else np.asarray(h, dtype=float)
    base = PhaseModel.bosonic(epsilon, M)
    return h, {n: fidelity(base.with_copies(n), h) for n in nus}


def heisenberg_row(model: PhaseModel, prior) -> dict:
    return asdict(heisenberg_limit(model, prior))


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".17g")


def write_csv(stream, columns: Sequence[str], rows: Iterable[Sequence], config: dict) -> None:
    """``# key=value`` header block, then a header row and data rows."""
    for key in config:
        stream.write(f"# {key}={config[key]}\n")
    stream.write(",".join(columns) + "\n")
    for row in rows:
        stream.write(",".join(fmt(v) for v in row) + "\n")


def csv_text(columns, rows, config) -> str:
    buf = io.StringIO()
    write_csv(buf, columns, rows, config)
    return buf.getvalue()


def read_csv(text: str):
    """Parse CSV produced by :func:`write_csv` into (config, columns, rows)."""
    config, lines = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            config[key] = val
        elif line:
            lines.append(line)
    columns = lines[0].split(",")
    rows = [[_parse_field(v) for v in ln.split(",")] for ln in lines[1:]]
    return config, columns, rows


def _parse_field(v):
    if not v:
        return None
    try:
        return float(v)
    except ValueError:
        return v


def report_rows(report: BoundReport, columns: Sequence[str], normalized: bool):
    scale = 1.0 / report.sigma ** 2 if normalized else 1.0
    scaled = {"qwwb", "qzzb", "qcrb", "mmse", "heisenberg"}
    for p in report.points:
        row = []
        for c in columns:
            if c in ("E", "nu"):
                row.append(int(p.sweep) if c == "nu" else p.sweep)
                continue
            v = getattr(p, c)
            row.append(v * scale if (c in scaled and v is not None) else v)
        yield row
