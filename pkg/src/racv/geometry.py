"""Halfspace polytopes and finite unions of them.

All sets are closed.  Arithmetic is double precision with two tolerances:
``EPS_GEO`` for constraint satisfaction and redundancy, ``EPS_DIM`` for the
inscribed-ball radius that separates full-dimensional sets from null sets.
Linear programs are solved with HiGHS through :func:`scipy.optimize.linprog`.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linprog

EPS_GEO = 1e-9
EPS_DIM = 1e-7
EPS_MEM = 1e-9

# Radius cap for the Chebyshev LP; only the sign and the EPS_DIM threshold matter.
_RADIUS_CAP = 1.0
_RADIUS_FLOOR = -1e4


class GeometryError(ValueError):
    pass


def _normalize(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray, bool]:
    """Scale rows to unit norm, drop trivial rows, merge parallel duplicates.

    Returns (A, b, trivially_empty).
    """
    if A.shape[0] == 0:
        return A, b, False
    norms = np.linalg.norm(A, axis=1)
    zero = norms <= 1e-12
    if np.any(b[zero] < -EPS_GEO):
        return A[:0], b[:0], True
    A = A[~zero] / norms[~zero, None]
    b = b[~zero] / norms[~zero]
    if A.shape[0] <= 1:
        return A, b, False
    keys = np.round(A, 9)
    best: dict[bytes, int] = {}
    for k in range(A.shape[0]):
        key = keys[k].tobytes()
        j = best.get(key)
        if j is None or b[k] < b[j]:
            best[key] = k
    idx = sorted(best.values())
    return A[idx], b[idx], False


@lru_cache(maxsize=16384)
def _chebyshev_lp(m: int, n: int, a_bytes: bytes, b_bytes: bytes) -> tuple[float, tuple[float, ...] | None]:
    """Largest inscribed ball by LP, memoized on the constraint bytes."""
    A = np.frombuffer(a_bytes).reshape(m, n)
    b = np.frombuffer(b_bytes)
    c = np.zeros(n + 1)
    c[-1] = -1.0
    A_ub = np.hstack([A, np.ones((m, 1))])
    bounds = [(None, None)] * n + [(_RADIUS_FLOOR, _RADIUS_CAP)]
    res = linprog(c, A_ub=A_ub, b_ub=b, bounds=bounds, method="highs")
    if res.status != 0:
        return -np.inf, None
    return float(res.x[-1]), tuple(float(v) for v in res.x[:-1])


@dataclass(frozen=True, eq=False)
class Polytope:
    """Convex polytope ``{x : A x <= b}`` in ``dim`` dimensions."""

    A: np.ndarray
    b: np.ndarray
    dim: int
    trivially_empty: bool = False

    @staticmethod
    def make(A, b, dim: int | None = None) -> "Polytope":
        A = np.asarray(A, dtype=float)
        b = np.asarray(b, dtype=float).reshape(-1)
        if dim is None:
            if A.ndim != 2:
                raise GeometryError("cannot infer dimension from an empty constraint list")
            dim = A.shape[1]
        A = A.reshape(-1, dim)
        if A.shape[0] != b.shape[0]:
            raise GeometryError("constraint matrix and bound vector disagree in length")
        A, b, empty = _normalize(A, b)
        return Polytope(A, b, dim, empty)

    @staticmethod
    def universe(dim: int) -> "Polytope":
        return Polytope(np.zeros((0, dim)), np.zeros(0), dim)

    @staticmethod
    def empty(dim: int) -> "Polytope":
        return Polytope(np.zeros((0, dim)), np.zeros(0), dim, True)

    @staticmethod
    def box(lower: Sequence[float | None], upper: Sequence[float | None]) -> "Polytope":
        """Axis-aligned box; ``None`` or an infinite value means unbounded."""
        dim = len(lower)
        rows, rhs = [], []
        for i, (lo, hi) in enumerate(zip(lower, upper)):
            if lo is not None and np.isfinite(lo):
                row = np.zeros(dim)
                row[i] = -1.0
                rows.append(row)
                rhs.append(-float(lo))
            if hi is not None and np.isfinite(hi):
                row = np.zeros(dim)
                row[i] = 1.0
                rows.append(row)
                rhs.append(float(hi))
        return Polytope.make(np.array(rows).reshape(-1, dim), np.array(rhs), dim)

    @staticmethod
    def orthant(dim: int) -> "Polytope":
        return Polytope.box([0.0] * dim, [None] * dim)

    # -- basic queries -------------------------------------------------

    @property
    def n_constraints(self) -> int:
        return self.A.shape[0]

    @cached_property
    def _chebyshev(self) -> tuple[float, np.ndarray | None]:
        if self.trivially_empty:
            return -np.inf, None
        n, m = self.dim, self.A.shape[0]
        if m == 0:
            return _RADIUS_CAP, np.zeros(n)
        if n == 0:
            ok = bool(np.all(self.b >= -EPS_GEO))
            return (_RADIUS_CAP if ok else -np.inf), (np.zeros(0) if ok else None)
        box = self._box_bounds()
        if box is not None:
            lo, hi = box
            half = np.minimum((hi - lo) / 2.0, _RADIUS_CAP)
            r = float(np.min(half))
            if r < -EPS_GEO:
                return r, None
            lo_f = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi - _RADIUS_CAP, 0.0))
            hi_f = np.where(np.isfinite(hi), hi, lo_f + 2 * _RADIUS_CAP)
            return r, (lo_f + hi_f) / 2.0
        r, x = _chebyshev_lp(m, n, self.A.tobytes(), self.b.tobytes())
        return r, (None if x is None else np.array(x))

    def _box_bounds(self) -> tuple[np.ndarray, np.ndarray] | None:
        """Coordinate bounds when every constraint is axis-aligned, else ``None``."""
        nz = np.abs(self.A) > 1e-12
        if not np.all(nz.sum(axis=1) == 1):
            return None
        lo = np.full(self.dim, -np.inf)
        hi = np.full(self.dim, np.inf)
        cols = np.argmax(nz, axis=1)
        for k, j in enumerate(cols):
            a = self.A[k, j]
            if a > 0:
                hi[j] = min(hi[j], self.b[k] / a)
            else:
                lo[j] = max(lo[j], self.b[k] / a)
        return lo, hi

    def chebyshev_radius(self) -> float:
        """Radius of the largest inscribed ball, capped at 1; negative when empty."""
        return self._chebyshev[0]

    def interior_point(self) -> np.ndarray | None:
        return self._chebyshev[1] if not self.is_empty() else None

    def is_empty(self) -> bool:
        return self._chebyshev[0] < -EPS_GEO

    def is_full_dimensional(self) -> bool:
        return self._chebyshev[0] > EPS_DIM

    def contains(self, x: Sequence[float], tol: float = EPS_MEM) -> bool:
        if self.trivially_empty:
            return False
        x = np.asarray(x, dtype=float)
        return bool(np.all(self.A @ x <= self.b + tol))

    def contains_many(self, X: np.ndarray, tol: float = EPS_MEM) -> np.ndarray:
        """Membership mask for the rows of ``X``."""
        X = np.asarray(X, dtype=float)
        if self.trivially_empty:
            return np.zeros(X.shape[0], dtype=bool)
        if self.A.shape[0] == 0:
            return np.ones(X.shape[0], dtype=bool)
        return np.all(X @ self.A.T <= self.b + tol, axis=1)

    def maximize(self, direction: Sequence[float]) -> float:
        """Supremum of ``direction . x`` over the polytope (``inf`` if unbounded)."""
        if self.is_empty():
            return -np.inf
        d = np.asarray(direction, dtype=float)
        res = linprog(-d, A_ub=self.A if self.A.shape[0] else None,
                      b_ub=self.b if self.A.shape[0] else None,
                      bounds=[(None, None)] * self.dim, method="highs")
        if res.status == 3:
            return np.inf
        if res.status != 0:
            return -np.inf
        return float(-res.fun)

    def bounds(self, i: int) -> tuple[float, float]:
        e = np.zeros(self.dim)
        e[i] = 1.0
        return -self.maximize(-e), self.maximize(e)

    # -- constructions ---------------------------------------------------

    def _check(self, other: "Polytope") -> None:
        if other.dim != self.dim:
            raise GeometryError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def intersect(self, other: "Polytope") -> "Polytope":
        self._check(other)
        if self.trivially_empty or other.trivially_empty:
            return Polytope.empty(self.dim)
        return Polytope.make(np.vstack([self.A, other.A]),
                             np.concatenate([self.b, other.b]), self.dim)

    def with_constraints(self, A, b) -> "Polytope":
        A = np.asarray(A, dtype=float).reshape(-1, self.dim)
        b = np.asarray(b, dtype=float).reshape(-1)
        if self.trivially_empty:
            return self
        return Polytope.make(np.vstack([self.A, A]), np.concatenate([self.b, b]), self.dim)

    def fix(self, i: int, value: float) -> "Polytope":
        e = np.zeros(self.dim)
        e[i] = 1.0
        return self.with_constraints([e, -e], [value, -value])

    def canonical(self) -> "Polytope":
        """Drop every constraint implied by the others."""
        if self.trivially_empty or self.is_empty():
            return Polytope.empty(self.dim)
        A, b = self.A, self.b
        if self._box_bounds() is not None:
            return Polytope.box(*self._box_bounds())
        keep = list(range(A.shape[0]))
        k = 0
        while k < len(keep):
            row = keep[k]
            others = [j for j in keep if j != row]
            A_ub = np.vstack([A[others], A[row]]) if others else A[[row]]
            b_ub = np.concatenate([b[others], [b[row] + 1.0]]) if others else np.array([b[row] + 1.0])
            res = linprog(-A[row], A_ub=A_ub, b_ub=b_ub,
                          bounds=[(None, None)] * self.dim, method="highs")
            if res.status == 0 and -res.fun <= b[row] + EPS_GEO:
                keep.pop(k)
            else:
                k += 1
        return Polytope(A[keep], b[keep], self.dim)

    def _eliminate_one(self, j: int) -> "Polytope":
        A, b = self.A, self.b
        col = A[:, j]
        pos = np.where(col > 1e-12)[0]
        neg = np.where(col < -1e-12)[0]
        zero = np.where(np.abs(col) <= 1e-12)[0]
        rows = [A[zero]]
        rhs = [b[zero]]
        if len(pos) and len(neg):
            P = A[pos][:, None, :] * (-col[neg])[None, :, None] + A[neg][None, :, :] * col[pos][:, None, None]
            q = b[pos][:, None] * (-col[neg])[None, :] + b[neg][None, :] * col[pos][:, None]
            rows.append(P.reshape(-1, self.dim))
            rhs.append(q.reshape(-1))
        newA = np.vstack(rows)
        newA[:, j] = 0.0
        return Polytope.make(newA, np.concatenate(rhs), self.dim)

    def cylindrify(self, dims: Iterable[int]) -> "Polytope":
        """Existentially quantify ``dims`` but keep them as free coordinates."""
        dims = sorted(set(dims))
        if not dims:
            return self
        if self.trivially_empty or self.is_empty():
            return Polytope.empty(self.dim)
        p = self
        remaining = list(dims)
        while remaining:
            # eliminate the coordinate producing the fewest new rows first
            def cost(j: int) -> int:
                col = p.A[:, j]
                np_, nn = int(np.sum(col > 1e-12)), int(np.sum(col < -1e-12))
                return np_ * nn - np_ - nn
            j = min(remaining, key=cost)
            remaining.remove(j)
            p = p._eliminate_one(j)
            if p.n_constraints > 2 * p.dim + 2:
                p = p.canonical()
        return p.canonical()

    def eliminate(self, dims: Iterable[int]) -> "Polytope":
        """Exact projection onto the coordinates not in ``dims``."""
        dims = sorted(set(dims))
        keep = [i for i in range(self.dim) if i not in dims]
        if not dims:
            return self
        if self.trivially_empty or self.is_empty():
            return Polytope.empty(len(keep))
        p = self.cylindrify(dims)
        return Polytope(p.A[:, keep], p.b, len(keep), p.trivially_empty)

    def project(self, keep: Sequence[int]) -> "Polytope":
        """Projection onto ``keep`` in the given order."""
        drop = [i for i in range(self.dim) if i not in keep]
        p = self.cylindrify(drop)
        return Polytope(p.A[:, list(keep)], p.b, len(keep), p.trivially_empty)

    def embed(self, dim: int, positions: Sequence[int]) -> "Polytope":
        """Place this polytope into ``dim`` dimensions; coordinate ``k`` goes to ``positions[k]``."""
        A = np.zeros((self.A.shape[0], dim))
        A[:, list(positions)] = self.A
        return Polytope(A, self.b.copy(), dim, self.trivially_empty)

    def up_closure(self, dims: Iterable[int]) -> "Polytope":
        """``{y : exists x in P, y_i >= x_i for i in dims, y_j = x_j otherwise}``."""
        dims = sorted(set(dims))
        if not dims:
            return self
        if self.trivially_empty or self.is_empty():
            return Polytope.empty(self.dim)
        n = self.dim
        k = len(dims)
        # coordinates: y (n) followed by auxiliary x_i for i in dims (k)
        A = np.zeros((self.A.shape[0] + k, n + k))
        A[: self.A.shape[0], :n] = self.A
        for a, i in enumerate(dims):
            A[: self.A.shape[0], n + a] = self.A[:, i]
            A[: self.A.shape[0], i] = 0.0
            A[self.A.shape[0] + a, n + a] = 1.0
            A[self.A.shape[0] + a, i] = -1.0
        b = np.concatenate([self.b, np.zeros(k)])
        lifted = Polytope.make(A, b, n + k)
        return lifted.eliminate(range(n, n + k))

    def interval(self) -> tuple[float, float]:
        """Endpoints of a one-dimensional polytope."""
        if self.dim != 1:
            raise GeometryError("interval() requires a one-dimensional polytope")
        if self.trivially_empty:
            return (np.inf, -np.inf)
        lo, hi = -np.inf, np.inf
        for a, b in zip(self.A[:, 0], self.b):
            if a > 0:
                hi = min(hi, b / a)
            elif a < 0:
                lo = max(lo, b / a)
        return lo, hi

    def describe(self, names: Sequence[str] | None = None) -> list[str]:
        names = list(names) if names is not None else [f"x{i}" for i in range(self.dim)]
        if self.trivially_empty:
            return ["false"]
        out = []
        for a, b in zip(self.A, self.b):
            scale = np.max(np.abs(a))
            a, b = a / scale, b / scale
            terms = []
            for coef, name in zip(a, names):
                if abs(coef) < 1e-12:
                    continue
                c = f"{abs(coef):.6g}"
                term = name if c == "1" else f"{c}*{name}"
                terms.append(("- " if coef < 0 else "+ ") + term)
            lhs = " ".join(terms)
            lhs = lhs[2:] if lhs.startswith("+ ") else "-" + lhs[2:]
            out.append(f"{lhs} <= {b:.6g}")
        return out


def _subtract_convex(p: Polytope, q: Polytope) -> list[Polytope]:
    """Full-dimensional pieces of ``p \\ q`` (closed, disjoint up to boundaries)."""
    inter = p.intersect(q)
    if not inter.is_full_dimensional():
        return [p]
    q = q.canonical()
    pieces = []
    acc = p
    for a, b in zip(q.A, q.b):
        piece = acc.with_constraints([-a], [-b])
        if piece.is_full_dimensional():
            pieces.append(piece)
        acc = acc.with_constraints([a], [b])
        if not acc.is_full_dimensional():
            break
    return pieces


@dataclass(frozen=True, eq=False)
class Region:
    """Finite union of convex polytopes of a common dimension."""

    dim: int
    parts: tuple[Polytope, ...] = ()

    @staticmethod
    def of(*parts: Polytope) -> "Region":
        if not parts:
            raise GeometryError("Region.of needs at least one part")
        dim = parts[0].dim
        for p in parts:
            if p.dim != dim:
                raise GeometryError("dimension mismatch among region parts")
        return Region(dim, tuple(p for p in parts if not p.is_empty()))

    @staticmethod
    def empty(dim: int) -> "Region":
        return Region(dim, ())

    @staticmethod
    def universe(dim: int) -> "Region":
        return Region(dim, (Polytope.universe(dim),))

    @staticmethod
    def orthant(dim: int) -> "Region":
        return Region(dim, (Polytope.orthant(dim),))

    @staticmethod
    def intervals(pairs: Iterable[tuple[float | None, float | None]]) -> "Region":
        pairs = list(pairs)
        return Region.of(*[Polytope.box([lo], [hi]) for lo, hi in pairs]) if pairs else Region.empty(1)

    def _check(self, other: "Region") -> None:
        if other.dim != self.dim:
            raise GeometryError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def is_empty(self) -> bool:
        return all(p.is_empty() for p in self.parts)

    def is_null(self) -> bool:
        return not any(p.is_full_dimensional() for p in self.parts)

    def drop_null(self) -> "Region":
        return Region(self.dim, tuple(p for p in self.parts if p.is_full_dimensional()))

    def intersect(self, other: "Region") -> "Region":
        self._check(other)
        parts = []
        for p, q in itertools.product(self.parts, other.parts):
            r = p.intersect(q)
            if not r.is_empty():
                parts.append(r)
        return Region(self.dim, tuple(parts))

    def intersect_polytope(self, q: Polytope) -> "Region":
        return self.intersect(Region(q.dim, (q,)))

    def union(self, other: "Region") -> "Region":
        self._check(other)
        return Region(self.dim, self.parts + tuple(p for p in other.parts if not p.is_empty()))

    def difference(self, other: "Region") -> "Region":
        """``self \\ other`` up to null sets; null pieces are dropped."""
        self._check(other)
        subtrahend = [q for q in other.parts if q.is_full_dimensional()]
        out: list[Polytope] = []
        for p in self.parts:
            if not p.is_full_dimensional():
                continue
            pieces = [p]
            for q in subtrahend:
                pieces = [r for piece in pieces for r in _subtract_convex(piece, q)]
                if not pieces:
                    break
            out.extend(pieces)
        return Region(self.dim, tuple(out))

    def subset_up_to_null(self, other: "Region") -> bool:
        return self.difference(other).is_null()

    def equal_up_to_null(self, other: "Region") -> bool:
        return self.subset_up_to_null(other) and other.subset_up_to_null(self)

    def disjoint_up_to_null(self, other: "Region") -> bool:
        return self.intersect(other).is_null()

    def contains_point(self, x: Sequence[float], tol: float = EPS_MEM) -> bool:
        if len(x) != self.dim:
            raise GeometryError(f"point has {len(x)} coordinates, region has {self.dim}")
        return any(p.contains(x, tol) for p in self.parts)

    def contains_many(self, X: np.ndarray, tol: float = EPS_MEM) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, self.dim)
        mask = np.zeros(X.shape[0], dtype=bool)
        for p in self.parts:
            mask |= p.contains_many(X, tol)
        return mask

    def as_intervals(self) -> list[tuple[float, float]]:
        """Merged, sorted interval list of a one-dimensional region (null parts kept)."""
        if self.dim != 1:
            raise GeometryError("as_intervals() requires a one-dimensional region")
        ivs = sorted(p.interval() for p in self.parts if not p.is_empty())
        merged: list[list[float]] = []
        for lo, hi in ivs:
            if merged and lo <= merged[-1][1] + EPS_GEO:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        return [(lo, hi) for lo, hi in merged]

    def describe(self, names: Sequence[str] | None = None) -> list:
        if self.dim == 1:
            return [[_finite_or_none(lo), _finite_or_none(hi)] for lo, hi in self.drop_null().as_intervals()]
        return [p.canonical().describe(names) for p in self.drop_null().parts]


def _finite_or_none(v: float) -> float | None:
    return float(v) + 0.0 if np.isfinite(v) else None
