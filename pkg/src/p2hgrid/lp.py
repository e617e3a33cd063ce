"""Sparse linear-program container with named variable/constraint families."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

SENSES = ("L", "E", "G")  # <=, =, >=


@dataclass(frozen=True)
class Family:
    """A block of consecutive columns (or rows) indexed by a product of axes."""

    name: str
    start: int
    shape: tuple[int, ...]
    labels: tuple[tuple[str, ...], ...]

    @property
    def size(self) -> int:
        return int(np.prod(self.shape, dtype=np.int64)) if self.shape else 1

    @property
    def stop(self) -> int:
        return self.start + self.size

    def ids(self) -> np.ndarray:
        return np.arange(self.start, self.stop).reshape(self.shape)

    def names(self) -> list[str]:
        if not self.shape:
            return [self.name]
        return [f"{self.name}({','.join(combo)})" for combo in itertools.product(*self.labels)]


@dataclass
class VariableIndex:
    """Bijection between structured names and column (or row) numbers."""

    families: dict[str, Family] = field(default_factory=dict)
    size: int = 0

    def add(self, name: str, labels) -> np.ndarray:
        if name in self.families:
            raise ValueError(f"duplicate family {name!r}")
        labels = tuple(tuple(str(x) for x in axis) for axis in labels)
        shape = tuple(len(axis) for axis in labels)
        fam = Family(name, self.size, shape, labels)
        self.families[name] = fam
        self.size = fam.stop
        return fam.ids()

    def __getitem__(self, name: str) -> np.ndarray:
        return self.families[name].ids()

    def __contains__(self, name: str) -> bool:
        return name in self.families

    def names(self) -> list[str]:
        out: list[str] = []
        for fam in self.families.values():
            out.extend(fam.names())
        return out

    def locate(self, index: int) -> tuple[str, tuple[str, ...]]:
        for fam in self.families.values():
            if fam.start <= index < fam.stop:
                if not fam.shape:
                    return fam.name, ()
                pos = np.unravel_index(index - fam.start, fam.shape)
                return fam.name, tuple(fam.labels[a][int(p)] for a, p in enumerate(pos))
        raise IndexError(index)


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """minimize c @ x + obj_offset  s.t.  A x (sense) rhs,  lb <= x <= ub."""

    A: sp.csr_matrix
    senses: np.ndarray
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    c: np.ndarray
    obj_offset: float = 0.0
    columns: VariableIndex | None = None
    rows: VariableIndex | None = None
    name: str = "lp"

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @property
    def n_cols(self) -> int:
        return self.A.shape[1]

    def col_names(self) -> list[str]:
        if self.columns is not None:
            return self.columns.names()
        return [f"x{j}" for j in range(self.n_cols)]

    def row_names(self) -> list[str]:
        if self.rows is not None:
            return self.rows.names()
        return [f"r{i}" for i in range(self.n_rows)]

    def triplets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        coo = self.A.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order], coo.col[order], coo.data[order]

    def objective(self, x: np.ndarray) -> float:
        return float(self.c @ x) + self.obj_offset

    @classmethod
    def from_dense(cls, A, senses, rhs, lb=None, ub=None, c=None, obj_offset=0.0, name="lp"):
        A = sp.csr_matrix(np.atleast_2d(np.asarray(A, dtype=float)))
        m, n = A.shape
        return cls(
            A=A,
            senses=np.asarray(list(senses) if not isinstance(senses, str) else list(senses)),
            rhs=np.asarray(rhs, dtype=float).reshape(m),
            lb=np.zeros(n) if lb is None else np.asarray(lb, dtype=float),
            ub=np.full(n, np.inf) if ub is None else np.asarray(ub, dtype=float),
            c=np.zeros(n) if c is None else np.asarray(c, dtype=float),
            obj_offset=float(obj_offset),
            name=name,
        )


class LPBuilder:
    """Accumulates variables, rows and coefficients in vectorized blocks."""

    def __init__(self, name: str = "lp") -> None:
        self.name = name
        self.columns = VariableIndex()
        self.rows = VariableIndex()
        self._lb: list[np.ndarray] = []
        self._ub: list[np.ndarray] = []
        self._c: list[np.ndarray] = []
        self._sense: list[np.ndarray] = []
        self._rhs: list[np.ndarray] = []
        self._ri: list[np.ndarray] = []
        self._ci: list[np.ndarray] = []
        self._v: list[np.ndarray] = []
        self.obj_offset = 0.0

    def add_vars(self, name: str, labels, lb=0.0, ub=np.inf, cost=0.0) -> np.ndarray:
        ids = self.columns.add(name, labels)
        shape = ids.shape
        self._lb.append(np.broadcast_to(np.asarray(lb, dtype=float), shape).ravel().copy())
        self._ub.append(np.broadcast_to(np.asarray(ub, dtype=float), shape).ravel().copy())
        self._c.append(np.broadcast_to(np.asarray(cost, dtype=float), shape).ravel().copy())
        return ids

    def add_rows(self, name: str, labels, sense: str, rhs=0.0) -> np.ndarray:
        if sense not in SENSES:
            raise ValueError(f"bad sense {sense!r}")
        ids = self.rows.add(name, labels)
        shape = ids.shape
        self._sense.append(np.full(ids.size, sense))
        self._rhs.append(np.broadcast_to(np.asarray(rhs, dtype=float), shape).ravel().copy())
        return ids

    def add_terms(self, rows, cols, values=1.0) -> None:
        rows, cols = np.broadcast_arrays(np.asarray(rows), np.asarray(cols))
        vals = np.broadcast_to(np.asarray(values, dtype=float), rows.shape)
        self._ri.append(rows.ravel().astype(np.int64))
        self._ci.append(cols.ravel().astype(np.int64))
        self._v.append(vals.ravel().astype(float))

    def build(self) -> LinearProgram:
        m, n = self.rows.size, self.columns.size
        cat = lambda parts, dtype=float: np.concatenate(parts) if parts else np.zeros(0, dtype)
        ri, ci, v = cat(self._ri, np.int64), cat(self._ci, np.int64), cat(self._v)
        keep = v != 0.0
        A = sp.coo_matrix((v[keep], (ri[keep], ci[keep])), shape=(m, n)).tocsr()
        A.sum_duplicates()
        A.eliminate_zeros()
        A.sort_indices()
        return LinearProgram(
            A=A,
            senses=cat(self._sense, "<U1").astype("<U1"),
            rhs=cat(self._rhs),
            lb=cat(self._lb),
            ub=cat(self._ub),
            c=cat(self._c),
            obj_offset=float(self.obj_offset),
            columns=self.columns,
            rows=self.rows,
            name=self.name,
        )
