"""Planner-versus-household comparisons.

Deviations follow one sign convention: planner value minus household value.
Relative deviations divide by the household value.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

DEFAULT_THRESHOLDS = {"d_omega_pp": 10.0, "d_bill": 0.10, "d_rooftop": 0.10, "d_battery": 0.10}


@dataclass(frozen=True)
class Outcome:
    """Household-side summary of one solution."""

    rate: float  # realised self-generation rate, fraction
    bill: float  # EUR per household over the horizon
    rooftop_kw: float  # per household
    battery_kwh: float  # per household


def outcome_of_cp(cp, bill, rate: float) -> Outcome:
    d = cp.prosumer
    return Outcome(rate, bill.per_household, d.rooftop_kw_per_household, d.battery_kwh_per_household)


def outcome_of_pro(pro) -> Outcome:
    return Outcome(pro.self_generation_rate, pro.bill.per_household, pro.rooftop_kw_per_household, pro.battery_kwh_per_household)


def _rel(a: float, b: float) -> float | None:
    return None if b == 0 else (a - b) / b


@dataclass
class DeviationReport:
    d_omega: float  # percentage points
    d_bill: float | None
    d_rooftop_cap: float | None
    d_battery_energy_cap: float | None
    d_rooftop_kw: float  # absolute, per household
    d_battery_kwh: float
    d_bill_abs: float  # EUR per household
    absolute_only: list[str] = field(default_factory=list)
    scheme: str = ""
    omega_star: float | None = None
    meta: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["absolute_only"] = ";".join(self.absolute_only)
        meta = d.pop("meta")
        d.update({f"meta_{k}": v for k, v in meta.items()})
        return d

    def exceeds(self, thresholds: dict[str, float] | None = None) -> dict[str, bool]:
        t = {**DEFAULT_THRESHOLDS, **(thresholds or {})}
        return {
            "d_omega_pp": abs(self.d_omega) > t["d_omega_pp"],
            "d_bill": self.d_bill is not None and abs(self.d_bill) > t["d_bill"],
            "d_rooftop": self.d_rooftop_cap is not None and abs(self.d_rooftop_cap) > t["d_rooftop"],
            "d_battery": self.d_battery_energy_cap is not None and abs(self.d_battery_energy_cap) > t["d_battery"],
        }


def compare(cp: Outcome, pro: Outcome, scheme: str = "", omega_star: float | None = None, **meta) -> DeviationReport:
    fallback = []
    rel = {}
    for key, a, b in (
        ("bill", cp.bill, pro.bill),
        ("rooftop", cp.rooftop_kw, pro.rooftop_kw),
        ("battery", cp.battery_kwh, pro.battery_kwh),
    ):
        rel[key] = _rel(a, b)
        if rel[key] is None:
            fallback.append(key)
    return DeviationReport(
        d_omega=100.0 * (cp.rate - pro.rate),
        d_bill=rel["bill"],
        d_rooftop_cap=rel["rooftop"],
        d_battery_energy_cap=rel["battery"],
        d_rooftop_kw=cp.rooftop_kw - pro.rooftop_kw,
        d_battery_kwh=cp.battery_kwh - pro.battery_kwh,
        d_bill_abs=cp.bill - pro.bill,
        absolute_only=fallback,
        scheme=scheme,
        omega_star=omega_star,
        meta=meta,
    )


def rtp100_flag(report: DeviationReport, threshold_pp: float = 10.0) -> bool:
    """True when the rate deviation is too large for the scheme to be kept."""
    return abs(report.d_omega) > threshold_pp


@dataclass(frozen=True)
class DurationCurvePair:
    mode: str
    series_cp: np.ndarray
    series_pro: np.ndarray
    order: np.ndarray


def duration_curves(a, b, mode: str = "independent_sort") -> DurationCurvePair:
    """Descending duration curves; ties keep the original hour order."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("series differ in length")
    order = np.argsort(-a, kind="stable")
    if mode == "independent_sort":
        return DurationCurvePair(mode, a[order], b[np.argsort(-b, kind="stable")], order)
    if mode == "cosorted":
        return DurationCurvePair(mode, a[order], b[order], order)
    raise ValueError(f"unknown mode {mode!r}")


def write_duration_csv(path: str | Path, pair: DurationCurvePair) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cp", "prosumer"])
        for x, y in zip(pair.series_cp, pair.series_pro):
            w.writerow([repr(float(x)), repr(float(y))])
