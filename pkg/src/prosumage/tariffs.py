"""Retail price series from wholesale prices.

Three schemes (Fixed, ToU, RTP) combine a procurement component with a tariff
adder. The adder is time-invariant, half dynamic or fully dynamic; the
dynamic parts scale with ``P_h / mean(P)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

DEFAULT_PEAK_HOURS = frozenset(range(8, 20))  # 08:00 up to 20:00


class TariffError(ValueError):
    pass


class DegenerateMeanError(TariffError):
    """Dynamic adder requested while the mean wholesale price is zero."""


class TariffPolicyError(TariffError):
    """ToU windows leave hours unpriced or overlap."""


class TariffKind(str, Enum):
    FIXED = "Fixed"
    TOU = "ToU"
    RTP = "RTP"


class AdderVariant(str, Enum):
    INVARIANT = "InvariantAdder"
    HALF_DYNAMIC = "HalfDynamicAdder"
    FULL_DYNAMIC = "FullDynamicAdder"


# short labels used in reports and CLI flags
_LABEL_SUFFIX = {AdderVariant.INVARIANT: "", AdderVariant.HALF_DYNAMIC: " 50", AdderVariant.FULL_DYNAMIC: " 100"}


@dataclass(frozen=True)
class TariffScheme:
    kind: TariffKind = TariffKind.FIXED
    variant: AdderVariant = AdderVariant.INVARIANT
    adder: float = 200.0  # EUR/MWh
    peak_hours: frozenset[int] = DEFAULT_PEAK_HOURS
    offpeak_hours: frozenset[int] | None = None  # None: complement of peak

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", TariffKind(self.kind))
        object.__setattr__(self, "variant", AdderVariant(self.variant))
        object.__setattr__(self, "peak_hours", frozenset(int(h) for h in self.peak_hours))
        if self.offpeak_hours is not None:
            object.__setattr__(self, "offpeak_hours", frozenset(int(h) for h in self.offpeak_hours))
        if not np.isfinite(self.adder) or self.adder < 0:
            raise TariffError(f"tariff adder must be finite and >= 0, got {self.adder}")
        if self.kind is TariffKind.FIXED and self.variant is not AdderVariant.INVARIANT:
            raise TariffError("Fixed tariffs only support the time-invariant adder")
        if not self.peak_hours <= set(range(24)):
            raise TariffPolicyError("peak hours must be hours of day 0..23")
        if self.offpeak_hours is not None:
            if self.peak_hours & self.offpeak_hours:
                raise TariffPolicyError("peak and off-peak windows overlap")

    @property
    def label(self) -> str:
        return f"{self.kind.value}{_LABEL_SUFFIX[self.variant]}"

    def offpeak(self) -> frozenset[int]:
        if self.offpeak_hours is None:
            return frozenset(range(24)) - self.peak_hours
        return self.offpeak_hours


ALL_SCHEMES: tuple[tuple[TariffKind, AdderVariant], ...] = (
    (TariffKind.FIXED, AdderVariant.INVARIANT),
    (TariffKind.TOU, AdderVariant.INVARIANT),
    (TariffKind.TOU, AdderVariant.HALF_DYNAMIC),
    (TariffKind.TOU, AdderVariant.FULL_DYNAMIC),
    (TariffKind.RTP, AdderVariant.INVARIANT),
    (TariffKind.RTP, AdderVariant.HALF_DYNAMIC),
    (TariffKind.RTP, AdderVariant.FULL_DYNAMIC),
)


@dataclass(frozen=True)
class RetailPriceSeries:
    procurement: np.ndarray
    adder: np.ndarray
    retail: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        proc = np.asarray(self.procurement, dtype=float)
        add = np.asarray(self.adder, dtype=float)
        if proc.shape != add.shape:
            raise TariffError("procurement and adder series differ in length")
        object.__setattr__(self, "procurement", proc)
        object.__setattr__(self, "adder", add)
        object.__setattr__(self, "retail", proc + add)

    def __len__(self) -> int:
        return self.retail.size


def adder_series(scheme: TariffScheme, wholesale: np.ndarray) -> np.ndarray:
    """Hourly adder ``TA_h`` for the scheme's variant."""
    P = np.asarray(wholesale, dtype=float)
    A = scheme.adder
    if scheme.variant is AdderVariant.INVARIANT:
        return np.full(P.shape, A)
    mean = P.mean()
    if mean == 0.0:
        raise DegenerateMeanError("mean wholesale price is zero; dynamic adder undefined")
    if scheme.variant is AdderVariant.HALF_DYNAMIC:
        return A / 2 + (P / mean) * (A / 2)
    return (P / mean) * A


def tou_windows(scheme: TariffScheme, horizon: int) -> tuple[np.ndarray, np.ndarray]:
    """Boolean masks of peak and off-peak hours; horizon starts at midnight."""
    hod = np.arange(horizon) % 24
    peak = np.isin(hod, sorted(scheme.peak_hours))
    off = np.isin(hod, sorted(scheme.offpeak()))
    if np.any(~(peak | off)):
        missing = sorted(set(hod[~(peak | off)].tolist()))
        raise TariffPolicyError(f"hours of day {missing} belong to neither ToU window")
    return peak, off


def build_tariff(scheme: TariffScheme, wholesale: np.ndarray) -> RetailPriceSeries:
    P = np.asarray(wholesale, dtype=float)
    if P.ndim != 1 or P.size == 0:
        raise TariffError("wholesale prices must be a non-empty 1-d series")
    adder = adder_series(scheme, P)
    if scheme.kind is TariffKind.FIXED:
        procurement = np.full(P.shape, P.mean())
    elif scheme.kind is TariffKind.RTP:
        procurement = P.copy()
    else:
        procurement = np.empty_like(P)
        for mask in tou_windows(scheme, P.size):
            if mask.any():
                procurement[mask] = P[mask].mean()
    return RetailPriceSeries(procurement=procurement, adder=adder)


def mean_preservation_check(r: RetailPriceSeries, scheme: TariffScheme, wholesale: np.ndarray, rtol: float = 1e-12) -> bool:
    """Check the mean identities implied by the tariff formulas.

    RTP with invariant adder: ``mean(r) = mean(P) + A``. Any fully dynamic
    adder: ``mean(TA) = A``. Fixed: zero variance and the same mean shift.
    Other combinations have no closed-form identity and pass trivially.
    """
    P = np.asarray(wholesale, dtype=float)
    A = scheme.adder
    scale = max(1.0, abs(P.mean()) + A)
    if scheme.kind is TariffKind.FIXED:
        return bool(np.ptp(r.retail) <= rtol * scale and abs(r.retail.mean() - P.mean() - A) <= rtol * scale)
    if scheme.variant is AdderVariant.FULL_DYNAMIC:
        return bool(abs(r.adder.mean() - A) <= rtol * max(1.0, A))
    if scheme.kind is TariffKind.RTP and scheme.variant is AdderVariant.INVARIANT:
        return bool(abs(r.retail.mean() - P.mean() - A) <= rtol * scale)
    return True


def write_tariff_csv(path: str | Path, r: RetailPriceSeries) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["hour", "procurement_eur_per_mwh", "adder_eur_per_mwh", "retail_eur_per_mwh"])
        for h, (p, a, t) in enumerate(zip(r.procurement, r.adder, r.retail)):
            w.writerow([h, repr(float(p)), repr(float(a)), repr(float(t))])
