# qherm/geometry.py
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence, Tuple

import galois
import numpy as np

from .errors import GeometryError
from .field import FieldCtx

logger = logging.getLogger(__name__)

Coords = Tuple[int, int, int, int]


@dataclass(frozen=True)
class ProjPoint:
    """Normalized homogeneous (J, X, Y, Z); first nonzero coordinate is 1."""
    coords: Coords

    def code(self, ctx: FieldCtx) -> int:
        return int(encode(ctx, ctx.array(self.coords)))

    @property
    def is_affine(self) -> bool:
        return self.coords[0] == 1


@dataclass(frozen=True)
class Hyperplane:
    covector: Coords

    def contains(self, ctx: FieldCtx, point: ProjPoint) -> bool:
        return bool(incidence(ctx, ctx.array([point.coords]), ctx.array(self.covector))[0])


@dataclass(frozen=True)
class Line:
    p: ProjPoint
    q: ProjPoint
    codes: Tuple[int, ...]  # sorted codes of its q²+1 points

    def __contains__(self, code: int) -> bool:
        return int(code) in self.codes


# Distinguished objects, in (J, X, Y, Z) order.
P_INF: Coords = (0, 0, 0, 1)
M_INF: Coords = (0, 1, 1, 0)
ORIGIN: Coords = (1, 0, 0, 0)


def encode(ctx: FieldCtx, rows: galois.FieldArray) -> np.ndarray:
    raw = np.asarray(rows.view(np.ndarray), dtype=np.int64)
    b = ctx.bits
    return (raw[..., 0] << (3 * b)) | (raw[..., 1] << (2 * b)) | (raw[..., 2] << b) | raw[..., 3]


def decode(ctx: FieldCtx, codes) -> galois.FieldArray:
    codes = np.asarray(codes, dtype=np.int64)
    b = ctx.bits
    mask = ctx.order - 1
    raw = np.stack([(codes >> (3 * b)) & mask, (codes >> (2 * b)) & mask, (codes >> b) & mask, codes & mask], axis=-1)
    return ctx.GF(raw)


def normalize_rows(ctx: FieldCtx, rows: galois.FieldArray) -> galois.FieldArray:
    rows = rows.reshape(-1, 4)
    nonzero = np.asarray(rows.view(np.ndarray)) != 0
    if not np.all(nonzero.any(axis=-1)):
        raise GeometryError("the zero vector is not a projective point")
    pivot_idx = nonzero.argmax(axis=-1)
    pivots = rows[np.arange(rows.shape[0]), pivot_idx]
    return rows / pivots[:, None]


def normalize(ctx: FieldCtx, raw: Sequence) -> ProjPoint:
    arr = raw if isinstance(raw, galois.FieldArray) else ctx.array(raw)
    row = normalize_rows(ctx, arr.reshape(1, 4))[0]
    return ProjPoint(tuple(int(v) for v in row.view(np.ndarray)))


def point_from_code(ctx: FieldCtx, code: int) -> ProjPoint:
    return ProjPoint(tuple(int(v) for v in decode(ctx, [code])[0].view(np.ndarray)))


def count_points(ctx: FieldCtx) -> int:
    big = ctx.order
    return (big ** 4 - 1) // (big - 1)


@lru_cache(maxsize=None)
def all_point_codes(ctx: FieldCtx) -> np.ndarray:
    big = ctx.order
    # leading 1 at position 3-t gives code Q^t + (free part): blocks come out sorted
    blocks = [big ** t + np.arange(big ** t, dtype=np.int64) for t in range(4)]
    codes = np.concatenate(blocks)
    codes.setflags(write=False)
    return codes


def enumerate_points(ctx: FieldCtx) -> Iterator[ProjPoint]:
    for code in all_point_codes(ctx):
        yield point_from_code(ctx, int(code))


def enumerate_hyperplanes(ctx: FieldCtx) -> Iterator[Hyperplane]:
    for code in all_point_codes(ctx):
        yield Hyperplane(point_from_code(ctx, int(code)).coords)


def hyperplane_covectors(ctx: FieldCtx) -> galois.FieldArray:
    return decode(ctx, all_point_codes(ctx))


def incidence(ctx: FieldCtx, points: galois.FieldArray, covector: galois.FieldArray) -> np.ndarray:
    return np.asarray((points @ covector.reshape(4, 1)).reshape(-1) == 0)


def _line_codes(ctx: FieldCtx, p_row: galois.FieldArray, q_row: galois.FieldArray) -> np.ndarray:
    t = ctx.elements()
    rows = p_row[None, :] + t[:, None] * q_row[None, :]
    codes = encode(ctx, normalize_rows(ctx, rows))
    return np.unique(np.append(codes, encode(ctx, normalize_rows(ctx, q_row.reshape(1, 4)))))


def line_through(ctx: FieldCtx, p: ProjPoint, q: ProjPoint) -> Line:
    if p == q:
        raise GeometryError(f"a line needs two distinct points, got {p.coords} twice")
    codes = _line_codes(ctx, ctx.array(p.coords), ctx.array(q.coords))
    return Line(p=p, q=q, codes=tuple(int(c) for c in codes))


def points_on_line(ctx: FieldCtx, line: Line) -> set:
    return {point_from_code(ctx, c) for c in line.codes}


def lines_through_point(ctx: FieldCtx, p_row: galois.FieldArray, others: galois.FieldArray) -> np.ndarray:
    """
    For each row Q of `others`, the codes of the q² points P + tQ (t ∈ GF(q²)).

    Returns an (n, q²) code array; together with Q itself these are the points
    of the line PQ.
    """
    t = ctx.elements()
    rows = p_row[None, None, :] + t[None, :, None] * others[:, None, :]
    flat = normalize_rows(ctx, rows.reshape(-1, 4))
    return encode(ctx, flat).reshape(others.shape[0], t.size)


def span_rank(ctx: FieldCtx, rows: galois.FieldArray) -> int:
    return int(np.linalg.matrix_rank(rows))
