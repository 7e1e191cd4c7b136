"""File-based result store: CSV rows per omega point, JSON run records.

Every file is written to a temporary name and renamed into place, so a
reader never sees a half-written record.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from .search import OmegaCurve

CURVE_COLUMNS = (
    "scenario_id", "omega", "status", "objective_eur", "bill_total_eur", "bill_per_household_eur",
    "capex_eur", "opex_eur", "import_cost_eur", "feed_in_revenue_eur", "realized_rate", "mean_price_eur_per_mwh",
)


def atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def curve_rows(scenario_id: str, curve: OmegaCurve) -> list[dict[str, Any]]:
    rows = []
    for p in curve.points:
        b = p.bill
        rows.append({
            "scenario_id": scenario_id,
            "omega": p.omega,
            "status": p.status,
            "objective_eur": p.objective,
            "bill_total_eur": b.total if b else "",
            "bill_per_household_eur": b.per_household if b else "",
            "capex_eur": b.capex if b else "",
            "opex_eur": b.opex if b else "",
            "import_cost_eur": b.import_cost if b else "",
            "feed_in_revenue_eur": b.feed_in_revenue if b else "",
            "realized_rate": p.realized_rate,
            "mean_price_eur_per_mwh": p.mean_price,
        })
    return rows


def write_rows(path: str | Path, rows: list[dict[str, Any]], columns=None) -> None:
    columns = list(columns or (rows[0].keys() if rows else []))
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns)
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    atomic_write(path, buf.getvalue())


def read_rows(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@dataclass
class RunRecord:
    scenario_id: str
    config_hash: str
    backend: str
    omega_star: float | None = None
    points: list[dict[str, Any]] = field(default_factory=list)
    deviation: dict[str, Any] | None = None
    extra: dict[str, Any] = field(default_factory=dict)
    started: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    finished: str | None = None

    def finish(self) -> "RunRecord":
        self.finished = datetime.now(timezone.utc).isoformat()
        return self

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True, default=str)

    @classmethod
    def from_json(cls, text: str) -> "RunRecord":
        return cls(**json.loads(text))

    def save(self, path: str | Path) -> None:
        atomic_write(path, self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "RunRecord":
        return cls.from_json(Path(path).read_text())
