"""Fixed-field MPS export and a matching reader.

Row and column names are replaced by 8-character codes (``R0000001``,
``C0000001``) so every name fits the classical field width; the original
names go to a ``<file>.names.csv`` map next to the model. Numbers are
written with Python's shortest round-trip repr so reading the file back
reproduces every coefficient bit for bit; values that need more than the
12-character field simply extend the line, which free-format readers and
the reader below both accept.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from ..lp import LinearProgram

OBJ_ROW = "COST"
_SENSE_CODE = {"L": "L", "E": "E", "G": "G"}


def _num(v: float) -> str:
    v = float(v)
    if v == 0.0:
        return "0"
    text = repr(v)
    if text.endswith(".0"):
        text = text[:-2]
    return text


def _line(code: str, name1: str, name2: str = "", value: str = "") -> str:
    # columns 2-3 code, 5-12 name, 15-22 name, 25-36 value
    if not name2:
        return f" {code:<2} {name1}".rstrip()
    return f" {code:<2} {name1:<8}  {name2:<8}  {value}"


def short_names(lp: LinearProgram) -> tuple[list[str], list[str]]:
    if lp.n_rows >= 10**7 or lp.n_cols >= 10**7:
        raise ValueError("model too large for 8-character names")
    rows = [f"R{i + 1:07d}" for i in range(lp.n_rows)]
    cols = [f"C{j + 1:07d}" for j in range(lp.n_cols)]
    return rows, cols


def write_mps(lp: LinearProgram, path: str | Path, name_map: bool = True) -> Path:
    """Write ``lp`` as fixed-field MPS; returns the path written."""
    path = Path(path)
    rnames, cnames = short_names(lp)
    A = lp.A.tocsc()
    A.sort_indices()
    out: list[str] = [f"NAME          {lp.name[:8] or 'LP'}", "ROWS", f" N  {OBJ_ROW}"]
    out.extend(f" {_SENSE_CODE[s]}  {r}" for s, r in zip(lp.senses, rnames))
    out.append("COLUMNS")
    c = lp.c
    for j in range(lp.n_cols):
        cj = cnames[j]
        wrote = False
        if c[j] != 0.0:
            out.append(_line("", cj, OBJ_ROW, _num(c[j])))
            wrote = True
        for k in range(A.indptr[j], A.indptr[j + 1]):
            out.append(_line("", cj, rnames[A.indices[k]], _num(A.data[k])))
            wrote = True
        if not wrote:
            out.append(_line("", cj, OBJ_ROW, "0"))
    out.append("RHS")
    if lp.obj_offset != 0.0:
        # objective-row RHS holds the negated constant term
        out.append(_line("", "RHS", OBJ_ROW, _num(-lp.obj_offset)))
    for i in np.flatnonzero(lp.rhs != 0.0):
        out.append(_line("", "RHS", rnames[i], _num(lp.rhs[i])))
    out.append("BOUNDS")
    for j in range(lp.n_cols):
        lo, up = lp.lb[j], lp.ub[j]
        cj = cnames[j]
        if lo == up:
            out.append(_line("FX", "BND", cj, _num(lo)))
            continue
        if np.isneginf(lo) and np.isposinf(up):
            out.append(_line("FR", "BND", cj, ""))
            continue
        if np.isneginf(lo):
            out.append(_line("MI", "BND", cj, ""))
        elif lo != 0.0 or up < 0:
            out.append(_line("LO", "BND", cj, _num(lo)))
        if np.isfinite(up):
            out.append(_line("UP", "BND", cj, _num(up)))
    out.append("ENDATA")
    try:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write("\n".join(line.rstrip() for line in out) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write interchange file {path}: {exc}") from exc
    if name_map:
        _write_name_map(lp, path, rnames, cnames)
    return path


def name_map_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".names.csv")


def _write_name_map(lp: LinearProgram, path: Path, rnames, cnames) -> None:
    with open(name_map_path(path), "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kind", "code", "name"])
        for code, long in zip(rnames, lp.row_names()):
            w.writerow(["row", code, long])
        for code, long in zip(cnames, lp.col_names()):
            w.writerow(["col", code, long])


def read_mps(path: str | Path) -> LinearProgram:
    """Parse fixed- or free-format MPS (no RANGES, no integer markers)."""
    path = Path(path)
    section = None
    obj_row = None
    row_index: dict[str, int] = {}
    senses: list[str] = []
    col_index: dict[str, int] = {}
    ri: list[int] = []
    ci: list[int] = []
    vals: list[float] = []
    cost: dict[int, float] = {}
    rhs: dict[int, float] = {}
    offset = 0.0
    bounds: list[tuple[str, str, float]] = []
    name = "lp"
    maximize = False

    with open(path, encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip() or raw.startswith("*"):
                continue
            tok = raw.split()
            if not raw[0].isspace():
                section = tok[0].upper()
                if section == "NAME":
                    name = tok[1] if len(tok) > 1 else "lp"
                elif section == "OBJSENSE" and len(tok) > 1:
                    maximize = tok[1].upper().startswith("MAX")
                elif section == "RANGES":
                    raise ValueError(f"{path}:{lineno}: RANGES section not supported")
                elif section not in ("ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA", "OBJSENSE"):
                    raise ValueError(f"{path}:{lineno}: unknown section {tok[0]!r}")
                continue
            try:
                if section == "OBJSENSE":
                    maximize = tok[0].upper().startswith("MAX")
                elif section == "ROWS":
                    kind, rname = tok[0].upper(), tok[1]
                    if kind == "N":
                        if obj_row is None:
                            obj_row = rname
                        continue
                    row_index[rname] = len(senses)
                    senses.append(kind)
                elif section == "COLUMNS":
                    if "'MARKER'" in tok:
                        raise ValueError("integer markers not supported")
                    cname = tok[0]
                    j = col_index.setdefault(cname, len(col_index))
                    for rname, val in zip(tok[1::2], tok[2::2]):
                        v = float(val)
                        if rname == obj_row:
                            cost[j] = cost.get(j, 0.0) + v
                        elif v != 0.0:
                            ri.append(row_index[rname])
                            ci.append(j)
                            vals.append(v)
                elif section == "RHS":
                    pairs = tok[1:] if len(tok) % 2 == 1 else tok
                    for rname, val in zip(pairs[0::2], pairs[1::2]):
                        if rname == obj_row:
                            offset = -float(val)
                        else:
                            rhs[row_index[rname]] = float(val)
                elif section == "BOUNDS":
                    kind = tok[0].upper()
                    if kind in ("FR", "MI", "PL"):
                        bounds.append((kind, tok[-1] if len(tok) == 2 else tok[2], 0.0))
                    else:
                        bounds.append((kind, tok[2] if len(tok) >= 4 else tok[1], float(tok[-1])))
            except (IndexError, KeyError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc

    m, n = len(senses), len(col_index)
    lb, ub = np.zeros(n), np.full(n, np.inf)
    for kind, cname, v in bounds:
        j = col_index[cname]
        if kind == "UP":
            ub[j] = v
        elif kind == "LO":
            lb[j] = v
        elif kind == "FX":
            lb[j] = ub[j] = v
        elif kind == "FR":
            lb[j], ub[j] = -np.inf, np.inf
        elif kind == "MI":
            lb[j] = -np.inf
        elif kind == "PL":
            ub[j] = np.inf
        else:
            raise ValueError(f"{path}: unsupported bound type {kind}")
    c = np.zeros(n)
    for j, v in cost.items():
        c[j] = v
    if maximize:
        c, offset = -c, -offset
    b = np.zeros(m)
    for i, v in rhs.items():
        b[i] = v
    A = sp.csr_matrix((np.array(vals), (np.array(ri, dtype=np.int64), np.array(ci, dtype=np.int64))), shape=(m, n))
    A.sort_indices()
    return LinearProgram(
        A=A,
        senses=np.array(senses, dtype="<U1"),
        rhs=b,
        lb=lb,
        ub=ub,
        c=c,
        obj_offset=offset,
        name=name,
    )


def read_name_map(path: str | Path) -> tuple[dict[str, str], dict[str, str]]:
    rows: dict[str, str] = {}
    cols: dict[str, str] = {}
    with open(name_map_path(path), encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(fh):
            (rows if rec["kind"] == "row" else cols)[rec["code"]] = rec["name"]
    return rows, cols
