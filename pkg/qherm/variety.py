# qherm/variety.py
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import galois
import numpy as np
import pandas as pd

from .errors import GeometryError, ParameterError
from .field import FieldCtx, in_subfield, norm, trace
from .geometry import (
    Line,
    P_INF,
    ProjPoint,
    all_point_codes,
    decode,
    encode,
    hyperplane_covectors,
    lines_through_point,
    point_from_code,
    span_rank,
)
from .parallel import chunked, run_ordered

logger = logging.getLogger(__name__)

LABELS = ("B_ab", "F_cone", "M_ab", "H_classical", "generic")


@dataclass(frozen=True)
class VarietyParams:
    a: int
    b: int

    def validate(self, ctx: FieldCtx) -> "VarietyParams":
        a, b = ctx.element(self.a), ctx.element(self.b)
        if int(a) == 0:
            raise ParameterError("a must be nonzero")
        if bool(in_subfield(ctx, b)):
            raise ParameterError(f"b={self.b} lies in GF({ctx.q}); need Tr(b) != 0")
        return self


def make_params(ctx: FieldCtx, a: int, b: int) -> VarietyParams:
    return VarietyParams(int(a), int(b)).validate(ctx)


def all_params(ctx: FieldCtx) -> List[VarietyParams]:
    elems = ctx.elements()
    bs = [int(b) for b in elems[~in_subfield(ctx, elems)]]
    return [VarietyParams(a, b) for a in range(1, ctx.order) for b in bs]


@dataclass(frozen=True, eq=False)
class PointSet:
    label: str
    codes: np.ndarray  # sorted, unique
    params: Optional[VarietyParams] = None
    q: int = field(default=0)

    def __len__(self) -> int:
        return int(self.codes.size)

    def __contains__(self, code: int) -> bool:
        i = np.searchsorted(self.codes, int(code))
        return bool(i < self.codes.size and self.codes[i] == int(code))

    def contains_codes(self, codes: np.ndarray) -> np.ndarray:
        i = np.searchsorted(self.codes, codes)
        i = np.minimum(i, max(self.codes.size - 1, 0))
        if self.codes.size == 0:
            return np.zeros(np.shape(codes), dtype=bool)
        return self.codes[i] == codes

    def same_points(self, other: "PointSet") -> bool:
        return np.array_equal(self.codes, other.codes)

    def coords(self, ctx: FieldCtx) -> galois.FieldArray:
        return decode(ctx, self.codes)

    def points(self, ctx: FieldCtx) -> List[ProjPoint]:
        return [point_from_code(ctx, int(c)) for c in self.codes]


def point_set(ctx: FieldCtx, codes, label: str = "generic", params: Optional[VarietyParams] = None) -> PointSet:
    if label not in LABELS:
        raise ParameterError(f"unknown point-set label {label!r}")
    arr = np.unique(np.asarray(codes, dtype=np.int64))
    arr.setflags(write=False)
    return PointSet(label=label, codes=arr, params=params, q=ctx.q)


# --- the defining forms -----------------------------------------------------

def bm_form(ctx: FieldCtx, params: VarietyParams, rows: galois.FieldArray) -> galois.FieldArray:
    """
    Left side of the B_{a,b} equation in characteristic 2, every minus read as plus:

        Z^q J^q + Z J^(2q-1) + a^q (X^2q + Y^2q) + a (X^2 + Y^2) J^(2q-2)
            + (b^q + b)(X^(q+1) + Y^(q+1)) J^(q-1)

    At J = 1 this is Tr(z) + Tr(a(x²+y²)) + Tr(b)(N(x) + N(y)).
    """
    q = ctx.q
    a, b = ctx.element(params.a), ctx.element(params.b)
    J, X, Y, Z = rows[..., 0], rows[..., 1], rows[..., 2], rows[..., 3]
    sq = X ** 2 + Y ** 2
    return (
        Z ** q * J ** q
        + Z * J ** (2 * q - 1)
        + a ** q * sq ** q
        + a * sq * J ** (2 * q - 2)
        + trace(ctx, b) * (norm(ctx, X) + norm(ctx, Y)) * J ** (q - 1)
    )


def cone_form(ctx: FieldCtx, rows: galois.FieldArray) -> galois.FieldArray:
    return norm(ctx, rows[..., 1]) + norm(ctx, rows[..., 2])


def hermitian_form(ctx: FieldCtx, rows: galois.FieldArray) -> galois.FieldArray:
    return np.add.reduce(norm(ctx, rows), axis=-1)


def _select(ctx: FieldCtx, codes: np.ndarray, predicate, block: int = 1 << 16) -> np.ndarray:
    keep = []
    for r in chunked(codes.size, block):
        part = codes[r.start:r.stop]
        keep.append(part[np.asarray(predicate(decode(ctx, part)) == 0)])
    return np.concatenate(keep) if keep else np.zeros(0, dtype=np.int64)


def _infinity_codes(ctx: FieldCtx) -> np.ndarray:
    codes = all_point_codes(ctx)
    return codes[codes < ctx.order ** 3]


def sigma_inf(ctx: FieldCtx) -> PointSet:
    return point_set(ctx, _infinity_codes(ctx), label="generic")


def ell_inf(ctx: FieldCtx) -> PointSet:
    """ℓ_∞: X + Y = 0 = J, i.e. (0,1,1,z) and P_∞."""
    z = ctx.elements()
    rows = ctx.GF(np.stack([np.zeros(z.size, dtype=np.int64), np.ones(z.size, dtype=np.int64),
                            np.ones(z.size, dtype=np.int64), z.view(np.ndarray).astype(np.int64)], axis=1))
    codes = np.append(encode(ctx, rows), encode(ctx, ctx.array(P_INF)))
    return point_set(ctx, codes)


@lru_cache(maxsize=64)
def build_bab(ctx: FieldCtx, params: VarietyParams) -> PointSet:
    params.validate(ctx)
    codes = _select(ctx, all_point_codes(ctx), lambda rows: bm_form(ctx, params, rows))
    logger.info("B_{%d,%d}: %d points (q=%d)", params.a, params.b, codes.size, ctx.q)
    return point_set(ctx, codes, label="B_ab", params=params)


@lru_cache(maxsize=8)
def build_cone_F(ctx: FieldCtx) -> PointSet:
    codes = _select(ctx, _infinity_codes(ctx), lambda rows: cone_form(ctx, rows))
    return point_set(ctx, codes, label="F_cone")


@lru_cache(maxsize=64)
def build_mab(ctx: FieldCtx, params: VarietyParams) -> PointSet:
    """M_{a,b} = (B_{a,b} \\ B_∞) ∪ F."""
    bab = build_bab(ctx, params)
    affine = bab.codes[bab.codes >= ctx.order ** 3]
    codes = np.union1d(affine, build_cone_F(ctx).codes)
    return point_set(ctx, codes, label="M_ab", params=params)


@lru_cache(maxsize=8)
def build_hermitian_surface(ctx: FieldCtx) -> PointSet:
    """J^(q+1) + X^(q+1) + Y^(q+1) + Z^(q+1) = 0."""
    codes = _select(ctx, all_point_codes(ctx), lambda rows: hermitian_form(ctx, rows))
    return point_set(ctx, codes, label="H_classical")


def affine_part(ctx: FieldCtx, s: PointSet) -> PointSet:
    return point_set(ctx, s.codes[s.codes >= ctx.order ** 3], label="generic", params=s.params)


def infinite_part(ctx: FieldCtx, s: PointSet) -> PointSet:
    return point_set(ctx, s.codes[s.codes < ctx.order ** 3], label="generic", params=s.params)


def qh_size(ctx: FieldCtx) -> int:
    q = ctx.q
    return (q * q + 1) * (q ** 3 + 1)


def qh_intersections(ctx: FieldCtx) -> Tuple[int, int]:
    q = ctx.q
    return q ** 3 + 1, q ** 3 + q * q + 1


# --- hyperplane spectrum ----------------------------------------------------

def hyperplane_spectrum(ctx: FieldCtx, s: PointSet, chunk: int = 1024, threads: Optional[int] = 1) -> Dict[int, int]:
    n_h = all_point_codes(ctx).size
    if len(s) == 0:
        return {0: n_h}
    pts = s.coords(ctx)
    covectors = hyperplane_covectors(ctx)

    def _count(r: range) -> np.ndarray:
        prod = pts @ covectors[r.start:r.stop].T
        return np.asarray(prod == 0).sum(axis=0)

    sizes = np.concatenate(run_ordered(_count, chunked(n_h, chunk), threads))
    tally = np.bincount(sizes)
    return {int(size): int(cnt) for size, cnt in enumerate(tally) if cnt}


@dataclass(frozen=True)
class QHReport:
    size: int
    expected_size: int
    spectrum: Dict[int, int]
    allowed: Tuple[int, int]
    is_qh: bool

    def summary(self) -> str:
        spec = ",".join(f"{k}:{v}" for k, v in self.spectrum.items())
        return f"size={self.size} spectrum={{{spec}}} QH={'true' if self.is_qh else 'false'}"


def is_quasi_hermitian(ctx: FieldCtx, s: PointSet, chunk: int = 1024, threads: Optional[int] = 1) -> QHReport:
    spectrum = hyperplane_spectrum(ctx, s, chunk=chunk, threads=threads)
    allowed = qh_intersections(ctx)
    ok = len(s) == qh_size(ctx) and set(spectrum) <= set(allowed)
    return QHReport(size=len(s), expected_size=qh_size(ctx), spectrum=spectrum, allowed=allowed, is_qh=ok)


def spectrum_multiplicities_match(ctx: FieldCtx, s: PointSet, t: PointSet, chunk: int = 1024, threads: Optional[int] = 1) -> bool:
    return hyperplane_spectrum(ctx, s, chunk, threads) == hyperplane_spectrum(ctx, t, chunk, threads)


# --- lines ------------------------------------------------------------------

def _lines_through_code(ctx: FieldCtx, s: PointSet, code: int) -> List[Line]:
    p_row = decode(ctx, [code])[0]
    other_codes = s.codes[s.codes != code]
    if other_codes.size == 0:
        return []
    others = decode(ctx, other_codes)
    line_pts = lines_through_point(ctx, p_row, others)
    inside = s.contains_codes(line_pts).all(axis=1)

    lines: Dict[Tuple[int, ...], Line] = {}
    p = point_from_code(ctx, code)
    for i in np.flatnonzero(inside):
        pts = tuple(int(c) for c in np.unique(np.append(line_pts[i], other_codes[i])))
        if pts not in lines:
            lines[pts] = Line(p=p, q=point_from_code(ctx, int(other_codes[i])), codes=pts)
    return [lines[key] for key in sorted(lines)]


def lines_in_set_through(ctx: FieldCtx, s: PointSet, p: ProjPoint) -> List[Line]:
    code = p.code(ctx)
    if code not in s:
        raise GeometryError(f"{p.coords} is not a point of the set")
    return _lines_through_code(ctx, s, code)


def point_class(ctx: FieldCtx, code: int) -> str:
    if code >= ctx.order ** 3:
        return "affine"
    pt = point_from_code(ctx, code)
    if pt.coords == P_INF:
        return "P_inf"
    if pt.coords[1] == pt.coords[2]:
        return "l_inf"
    return "F_minus_l_inf"


def _plane_for_ell_point(ctx: FieldCtx, params: VarietyParams, pt: ProjPoint):
    """x + y constant on the affine lines through a point of ℓ_∞ \\ P_∞."""
    z = ctx.element(pt.coords[3])
    if int(z) == 0:
        return ctx.GF(0)  # M_∞
    m = z ** -1  # (0,1,1,z) = (0,m,m,1)
    return (m ** ctx.q * trace(ctx, ctx.element(params.b))) ** -1


@dataclass
class CensusReport:
    frame: pd.DataFrame                # one record per point class
    per_point: Dict[int, int]          # code -> number of lines
    plane_ok: Optional[bool] = None    # affine lines through ℓ_∞ points lie in their x+y plane

    def counts(self, cls: str) -> Counter:
        row = self.frame[self.frame["point_class"] == cls]
        if row.empty:
            return Counter()
        return Counter(row.iloc[0]["line_counts"])


def line_census(ctx: FieldCtx, s: PointSet, threads: Optional[int] = 1) -> CensusReport:
    """
    Lines contained in s through each of its points, grouped by point class
    (affine / l_inf / P_inf / F_minus_l_inf).

    Each class record carries the histogram of line counts, the split into
    affine lines and lines at infinity, and whether the lines through every
    point are coplanar. For B_{a,b} the affine lines through the points of
    ℓ_∞ are also checked against the plane x + y = 1/(m^q (b^q + b)).
    """
    codes = [int(c) for c in s.codes]
    found = run_ordered(lambda c: _lines_through_code(ctx, s, c), codes, threads)

    per_point: Dict[int, int] = {}
    records: Dict[str, dict] = {}
    plane_ok: Optional[bool] = True if (s.label == "B_ab" and s.params is not None) else None
    for code, lines in zip(codes, found):
        cls = point_class(ctx, code)
        per_point[code] = len(lines)
        rec = records.setdefault(cls, {"points": 0, "line_counts": Counter(), "affine_lines": Counter(),
                                       "infinite_lines": Counter(), "coplanar": True})
        rec["points"] += 1
        rec["line_counts"][len(lines)] += 1
        n_inf = sum(1 for ln in lines if max(ln.codes) < ctx.order ** 3)
        rec["infinite_lines"][n_inf] += 1
        rec["affine_lines"][len(lines) - n_inf] += 1
        if len(lines) > 1:
            spanning = decode(ctx, sorted({c for ln in lines for c in ln.codes}))
            rec["coplanar"] &= span_rank(ctx, spanning) <= 3

        if plane_ok and cls == "l_inf":
            pt = point_from_code(ctx, code)
            level = _plane_for_ell_point(ctx, s.params, pt)
            for ln in lines:
                aff = np.array([c for c in ln.codes if c >= ctx.order ** 3], dtype=np.int64)
                if aff.size:
                    rows = decode(ctx, aff)
                    plane_ok &= bool(np.all(rows[:, 1] + rows[:, 2] == level))

    order = ["affine", "l_inf", "P_inf", "F_minus_l_inf"]
    frame = pd.DataFrame([
        {
            "point_class": cls,
            "points": records[cls]["points"],
            "min_lines": min(records[cls]["line_counts"]),
            "max_lines": max(records[cls]["line_counts"]),
            "line_counts": dict(sorted(records[cls]["line_counts"].items())),
            "affine_lines": dict(sorted(records[cls]["affine_lines"].items())),
            "infinite_lines": dict(sorted(records[cls]["infinite_lines"].items())),
            "coplanar": bool(records[cls]["coplanar"]),
        }
        for cls in order if cls in records
    ])
    return CensusReport(frame=frame, per_point=per_point, plane_ok=plane_ok)
