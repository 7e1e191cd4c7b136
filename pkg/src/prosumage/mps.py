"""Fixed-format MPS writer and parser.

Names keep the 8-character fixed-format limit. Names that do not fit are
replaced by ``C0000012`` / ``R0000003`` style labels derived from the
insertion index. Numeric fields use the shortest repr that round-trips the
float exactly, so they may run past column 36 for values that need more
than 12 characters; the parser is token based and accepts both.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .lp import INF, LpError, LpProblem

OBJ_ROW = "COST"
NAME_WIDTH = 8


class MpsError(LpError):
    pass


def _fits(name: str) -> bool:
    return 0 < len(name) <= NAME_WIDTH and not any(ch.isspace() for ch in name) and name.isascii()


def _mangle(names: tuple[str, ...], prefix: str) -> list[str]:
    out = [n if _fits(n) else f"{prefix}{i:07d}" for i, n in enumerate(names)]
    seen: dict[str, int] = {}
    for i, n in enumerate(out):
        if n in seen:
            raise MpsError(
                f"MPS name clash: {names[seen[n]]!r} and {names[i]!r} both map to {n!r}"
            )
        seen[n] = i
    return out


def mps_names(p: LpProblem) -> tuple[list[str], list[str]]:
    """Column and row labels used by :func:`to_mps`."""
    cols = _mangle(p.var_names, "C")
    rows = _mangle(p.row_names, "R")
    if OBJ_ROW in rows:
        raise MpsError(f"row name {OBJ_ROW!r} is reserved for the objective")
    return cols, rows


def _num(v: float) -> str:
    v = float(v)
    if v == 0.0:
        return "0"
    s = repr(v)
    return s[:-2] if s.endswith(".0") else s


def _line(f1: str, f2: str, f3: str = "", f4: str = "") -> str:
    # fields start at columns 2, 5, 15 and 25 (1-based)
    s = f" {f1:<2} {f2:<8}"
    if f3:
        s += f"  {f3:<8}  {f4:>12}"
    return s.rstrip()


def to_mps(p: LpProblem) -> str:
    cols, rows = mps_names(p)
    name = p.name if _fits(p.name) else "LP"
    out = [f"NAME          {name}", "ROWS", _line("N", OBJ_ROW)]
    out += [_line(s, r) for s, r in zip(p.senses, rows)]

    out.append("COLUMNS")
    A = p.A.tocsc()
    for j, cname in enumerate(cols):
        start, end = A.indptr[j], A.indptr[j + 1]
        wrote = False
        if p.c[j] != 0.0:
            out.append(_line("", cname, OBJ_ROW, _num(p.c[j])))
            wrote = True
        for i, v in zip(A.indices[start:end], A.data[start:end]):
            if v != 0.0:
                out.append(_line("", cname, rows[i], _num(v)))
                wrote = True
        if not wrote:
            # keep empty columns so the column order survives a round trip
            out.append(_line("", cname, OBJ_ROW, "0"))

    out.append("RHS")
    if p.obj_constant != 0.0:
        out.append(_line("", "RHS", OBJ_ROW, _num(-p.obj_constant)))
    for r, b in zip(rows, p.rhs):
        if b != 0.0:
            out.append(_line("", "RHS", r, _num(b)))

    bounds = []
    for cname, lo, hi in zip(cols, p.lb, p.ub):
        if lo == hi:
            bounds.append(_line("FX", "BND", cname, _num(lo)))
            continue
        if lo == -INF and hi == INF:
            bounds.append(_line("FR", "BND", cname))
            continue
        if lo == -INF:
            bounds.append(_line("MI", "BND", cname))
        elif lo != 0.0:
            bounds.append(_line("LO", "BND", cname, _num(lo)))
        if hi != INF:
            bounds.append(_line("UP", "BND", cname, _num(hi)))
    if bounds:
        out.append("BOUNDS")
        out += bounds
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def parse_mps(text: str) -> LpProblem:
    """Parse MPS produced by :func:`to_mps` (or any RANGES-free MPS file)."""
    name = "lp"
    section = None
    obj_row = None
    row_names: list[str] = []
    senses: list[str] = []
    row_idx: dict[str, int] = {}
    col_names: list[str] = []
    col_idx: dict[str, int] = {}
    c: dict[int, float] = {}
    entries: list[tuple[int, int, float]] = []
    rhs: dict[int, float] = {}
    obj_constant = 0.0
    lb: dict[int, float] = {}
    ub: dict[int, float] = {}

    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw[0].isspace():
            head = raw.split()
            section = head[0].upper()
            if section == "NAME":
                name = head[1] if len(head) > 1 else name
            elif section == "ENDATA":
                break
            elif section not in ("ROWS", "COLUMNS", "RHS", "BOUNDS"):
                raise MpsError(f"line {lineno}: unsupported section {section}")
            continue

        tok = raw.split()
        try:
            if section == "ROWS":
                kind, rname = tok[0].upper(), tok[1]
                if kind == "N":
                    if obj_row is None:
                        obj_row = rname
                    continue
                if kind not in ("L", "E", "G"):
                    raise MpsError(f"line {lineno}: bad row type {kind}")
                if rname in row_idx:
                    raise MpsError(f"line {lineno}: duplicate row {rname}")
                row_idx[rname] = len(row_names)
                row_names.append(rname)
                senses.append(kind)
            elif section == "COLUMNS":
                if "'MARKER'" in tok:
                    raise MpsError(f"line {lineno}: integer markers are not supported")
                cname = tok[0]
                if cname not in col_idx:
                    col_idx[cname] = len(col_names)
                    col_names.append(cname)
                j = col_idx[cname]
                for rname, val in zip(tok[1::2], tok[2::2]):
                    v = float(val)
                    if rname == obj_row:
                        c[j] = c.get(j, 0.0) + v
                    elif rname in row_idx:
                        if v != 0.0:
                            entries.append((row_idx[rname], j, v))
                    else:
                        raise MpsError(f"line {lineno}: unknown row {rname}")
            elif section == "RHS":
                pairs = tok[1:] if len(tok) % 2 == 1 else tok
                for rname, val in zip(pairs[0::2], pairs[1::2]):
                    if rname == obj_row:
                        obj_constant = -float(val)
                    elif rname in row_idx:
                        rhs[row_idx[rname]] = float(val)
                    else:
                        raise MpsError(f"line {lineno}: unknown row {rname}")
            elif section == "BOUNDS":
                kind = tok[0].upper()
                if kind in ("FR", "MI", "PL"):
                    cname = tok[-1]
                    val = None
                else:
                    cname, val = tok[-2], float(tok[-1])
                if cname not in col_idx:
                    raise MpsError(f"line {lineno}: unknown column {cname}")
                j = col_idx[cname]
                if kind == "UP":
                    ub[j] = val
                elif kind == "LO":
                    lb[j] = val
                elif kind == "FX":
                    lb[j] = ub[j] = val
                elif kind == "FR":
                    lb[j], ub[j] = -INF, INF
                elif kind == "MI":
                    lb[j] = -INF
                elif kind == "PL":
                    ub[j] = INF
                else:
                    raise MpsError(f"line {lineno}: unsupported bound type {kind}")
            else:
                raise MpsError(f"line {lineno}: data outside a section")
        except (IndexError, ValueError) as exc:
            raise MpsError(f"line {lineno}: cannot parse {raw.strip()!r}") from exc

    n, m = len(col_names), len(row_names)
    if entries:
        ri, ci, v = map(np.asarray, zip(*entries))
    else:
        ri = ci = np.zeros(0, dtype=int)
        v = np.zeros(0)
    A = sp.coo_matrix((v, (ri, ci)), shape=(m, n)).tocsr()
    return LpProblem(
        var_names=tuple(col_names),
        lb=np.array([lb.get(j, 0.0) for j in range(n)]),
        ub=np.array([ub.get(j, INF) for j in range(n)]),
        c=np.array([c.get(j, 0.0) for j in range(n)]),
        A=A,
        senses=tuple(senses),
        rhs=np.array([rhs.get(i, 0.0) for i in range(m)]),
        row_names=tuple(row_names),
        obj_constant=obj_constant,
        name=name,
    )
