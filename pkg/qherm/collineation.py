# qherm/collineation.py
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Iterator, List, Optional, Sequence, Set, Tuple

import galois
import numpy as np

from .errors import FieldError, GeometryError, GroupCapExceeded
from .field import FieldCtx, f2_basis, in_subfield, norm, subfield_elements, trace
from .geometry import P_INF, ProjPoint, decode, encode, normalize_rows
from .parallel import chunked
from .variety import PointSet, VarietyParams, point_set

logger = logging.getLogger(__name__)

Key = Tuple[int, ...]  # 16 matrix entries row-major, then aut_exp
GENERATOR_PARTS = ("phi", "psi", "tau", "mu")


@dataclass(frozen=True)
class Collineation:
    """
    x ↦ normalize(x^(2^aut_exp) · matrix) on row vectors.

    The matrix is scaled so its first nonzero entry (row-major) is 1.
    """
    matrix: Tuple[int, ...]
    aut_exp: int = 0

    @property
    def key(self) -> Key:
        return self.matrix + (self.aut_exp,)

    def array(self, ctx: FieldCtx) -> galois.FieldArray:
        return ctx.array(self.matrix).reshape(4, 4)


def _canonical_rows(ctx: FieldCtx, flat: galois.FieldArray) -> galois.FieldArray:
    nonzero = np.asarray(flat.view(np.ndarray)) != 0
    idx = nonzero.argmax(axis=1)
    piv = flat[np.arange(flat.shape[0]), idx]
    return flat / piv[:, None]


def from_matrix(ctx: FieldCtx, matrix, aut_exp: int = 0) -> Collineation:
    m = matrix if isinstance(matrix, galois.FieldArray) else ctx.array(matrix)
    m = m.reshape(4, 4)
    if int(np.linalg.det(m)) == 0:
        raise GeometryError("singular matrix does not define a collineation")
    flat = _canonical_rows(ctx, m.reshape(1, 16))[0]
    return Collineation(tuple(int(v) for v in flat.view(np.ndarray)), int(aut_exp) % ctx.bits)


def from_key(key: Sequence[int]) -> Collineation:
    return Collineation(tuple(int(v) for v in key[:16]), int(key[16]))


def identity(ctx: FieldCtx) -> Collineation:
    return from_matrix(ctx, np.eye(4, dtype=np.int64))


# --- generators -------------------------------------------------------------

def _require_sub(ctx: FieldCtx, x, name: str) -> None:
    if not bool(in_subfield(ctx, x)):
        raise FieldError(f"{name}={int(x)} must lie in GF({ctx.q})")


def make_phi(ctx: FieldCtx, s: int) -> Collineation:
    """Elation (x,y,z) ↦ (x, y, z + s), s ∈ GF(q)."""
    _require_sub(ctx, ctx.element(s), "s")
    m = np.eye(4, dtype=np.int64)
    m[0, 3] = int(s)
    return from_matrix(ctx, m)


def make_psi(ctx: FieldCtx, gamma1: int, gamma2: int, params: VarietyParams) -> Collineation:
    """
    ψ_γ(a,b): translation by (γ1, γ2) with the z-correction keeping B_{a,b} fixed.
    The 2aγ terms of the last column vanish in characteristic 2.
    """
    params.validate(ctx)
    return make_bm_elation(ctx, gamma1, gamma2, 0, params)


def make_bm_elation(ctx: FieldCtx, gamma1: int, gamma2: int, s: int, params: VarietyParams) -> Collineation:
    """Member of the sharply transitive family Ψ: ψ_γ followed by z ↦ z + s."""
    q = ctx.q
    g1, g2, sv = ctx.element(gamma1), ctx.element(gamma2), ctx.element(s)
    _require_sub(ctx, sv, "s")
    a, b = ctx.element(params.a), ctx.element(params.b)
    tb = trace(ctx, b)
    corner = a * (g1 ** 2 + g2 ** 2) + b * (norm(ctx, g1) + norm(ctx, g2)) + sv
    m = ctx.GF(np.eye(4, dtype=np.int64))
    m[0, 1], m[0, 2], m[0, 3] = g1, g2, corner
    m[1, 3] = tb * g1 ** q
    m[2, 3] = tb * g2 ** q
    return from_matrix(ctx, m)


def tau_conjugate_gamma(ctx: FieldCtx, gamma1: int, gamma2: int, e: int) -> Tuple[int, int]:
    """γ' with τ_e⁻¹ ψ_γ τ_e = ψ_γ'."""
    g1, g2, ev = ctx.element(gamma1), ctx.element(gamma2), ctx.element(e)
    _require_sub(ctx, ev, "e")
    shift = (g1 + g2) * ev
    return int(g1 + shift), int(g2 + shift)


def make_affine_elation(ctx: FieldCtx, g1: int, g2: int, g3: int, g4: int = 0, g5: int = 0) -> Collineation:
    """
    Elation with axis Σ_∞ and center P_∞ family:

        [1 g1 g2 g3]
        [0 1  0  g4]
        [0 0  1  g5]
        [0 0  0  1 ]
    """
    m = np.eye(4, dtype=np.int64)
    m[0, 1], m[0, 2], m[0, 3], m[1, 3], m[2, 3] = int(g1), int(g2), int(g3), int(g4), int(g5)
    return from_matrix(ctx, m)


def make_mu(ctx: FieldCtx, delta: int) -> Collineation:
    """Homology diag(1, δ, δ, δ²), δ ∈ GF(q)*."""
    d = ctx.element(delta)
    _require_sub(ctx, d, "delta")
    if int(d) == 0:
        raise FieldError("delta must be nonzero")
    m = ctx.GF(np.diag([1, int(d), int(d), int(d ** 2)]))
    return from_matrix(ctx, m)


def make_tau(ctx: FieldCtx, e: int) -> Collineation:
    ev = ctx.element(e)
    _require_sub(ctx, ev, "e")
    one = ctx.GF(1)
    m = ctx.GF(np.eye(4, dtype=np.int64))
    m[1, 1], m[1, 2], m[2, 1], m[2, 2] = ev + one, ev, ev, ev + one
    return from_matrix(ctx, m)


def make_sigma(ctx: FieldCtx, j: int) -> Collineation:
    if not 0 <= int(j) < ctx.bits:
        raise FieldError(f"automorphism exponent must be in [0, {ctx.bits}), got {j}")
    return Collineation(identity(ctx).matrix, int(j))


def linear_stabilizer_generators(ctx: FieldCtx, params: VarietyParams, exhaustive: bool = False,
                                 parts: Sequence[str] = GENERATOR_PARTS) -> List[Collineation]:
    """
    φ_s, ψ_γ(a,b), τ_e over GF(2)-bases of their parameter groups and μ_δ for
    a generator δ of GF(q)*. With `exhaustive`, every parameter value is used.
    `parts` selects families: ("phi", "psi") generates S, adding "tau" gives S:U.
    """
    params.validate(ctx)
    sub = subfield_elements(ctx)
    if exhaustive:
        sub_vals = [int(s) for s in sub if int(s)]
        psi_pairs = [(g1, g2) for g1 in range(ctx.order) for g2 in range(ctx.order) if g1 or g2]
        deltas = sub_vals
    else:
        sub_vals = f2_basis(ctx, sub)
        big_vals = [1 << i for i in range(ctx.bits)]
        psi_pairs = [(g, 0) for g in big_vals] + [(0, g) for g in big_vals]
        deltas = [int(ctx.omega ** (ctx.q + 1))]
    unknown = set(parts) - set(GENERATOR_PARTS)
    if unknown:
        raise ValueError(f"unknown generator families {sorted(unknown)}")
    gens: List[Collineation] = []
    if "phi" in parts:
        gens += [make_phi(ctx, s) for s in sub_vals]
    if "psi" in parts:
        gens += [make_psi(ctx, g1, g2, params) for g1, g2 in psi_pairs]
    if "tau" in parts:
        gens += [make_tau(ctx, e) for e in sub_vals]
    if "mu" in parts:
        gens += [make_mu(ctx, d) for d in deltas]
    return gens


# --- action -----------------------------------------------------------------

def apply_rows(ctx: FieldCtx, c: Collineation, rows: galois.FieldArray) -> galois.FieldArray:
    src = rows.reshape(-1, 4)
    if c.aut_exp:
        src = src ** (1 << c.aut_exp)
    return normalize_rows(ctx, src @ c.array(ctx))


def apply(ctx: FieldCtx, c: Collineation, p: ProjPoint) -> ProjPoint:
    row = apply_rows(ctx, c, ctx.array(p.coords))[0]
    return ProjPoint(tuple(int(v) for v in row.view(np.ndarray)))


def image_of_set(ctx: FieldCtx, c: Collineation, s: PointSet) -> PointSet:
    if len(s) == 0:
        return point_set(ctx, [], label="generic")
    codes = encode(ctx, apply_rows(ctx, c, s.coords(ctx)))
    return point_set(ctx, codes, label="generic")


def stabilizes(ctx: FieldCtx, c: Collineation, s: PointSet) -> bool:
    return image_of_set(ctx, c, s).same_points(s)


def compose(ctx: FieldCtx, c1: Collineation, c2: Collineation) -> Collineation:
    """First c1, then c2."""
    m1 = c1.array(ctx)
    if c2.aut_exp:
        m1 = m1 ** (1 << c2.aut_exp)
    return from_matrix(ctx, m1 @ c2.array(ctx), (c1.aut_exp + c2.aut_exp) % ctx.bits)


def inverse(ctx: FieldCtx, c: Collineation) -> Collineation:
    back = (-c.aut_exp) % ctx.bits
    m = c.array(ctx)
    if back:
        m = m ** (1 << back)
    return from_matrix(ctx, np.linalg.inv(m), back)


def compose_all(ctx: FieldCtx, maps: Iterable[Collineation]) -> Collineation:
    out = identity(ctx)
    for c in maps:
        out = compose(ctx, out, c)
    return out


# --- batched keys -----------------------------------------------------------

def keys_array(maps: Iterable[Collineation]) -> np.ndarray:
    return np.array([c.key for c in maps], dtype=np.int64).reshape(-1, 17)


def _stack(ctx: FieldCtx, keys: np.ndarray) -> galois.FieldArray:
    return ctx.GF(keys[:, :16]).reshape(-1, 4, 4)


def _frob_pow(ctx: FieldCtx, x: galois.FieldArray, exps: np.ndarray) -> galois.FieldArray:
    """x ** (2^exps) with a per-element exponent broadcast over trailing axes."""
    pows = (np.int64(1) << exps.astype(np.int64)).reshape((-1,) + (1,) * (x.ndim - 1))
    return x ** pows


def _finish(ctx: FieldCtx, mats: galois.FieldArray, auts: np.ndarray) -> np.ndarray:
    flat = _canonical_rows(ctx, mats.reshape(-1, 16))
    out = np.empty((flat.shape[0], 17), dtype=np.int64)
    out[:, :16] = flat.view(np.ndarray)
    out[:, 16] = auts % ctx.bits
    return out


def compose_right(ctx: FieldCtx, keys: np.ndarray, g: Collineation) -> np.ndarray:
    rows = ctx.GF(keys[:, :16]).reshape(-1, 4)
    if g.aut_exp:
        rows = rows ** (1 << g.aut_exp)
    prod = rows @ g.array(ctx)
    return _finish(ctx, prod, keys[:, 16] + g.aut_exp)


def compose_left(ctx: FieldCtx, g: Collineation, keys: np.ndarray) -> np.ndarray:
    mats = _stack(ctx, keys)
    gm = np.broadcast_to(np.array(g.matrix, dtype=np.int64).reshape(1, 4, 4), mats.shape)
    left = _frob_pow(ctx, ctx.GF(gm.copy()), keys[:, 16])
    prod = np.add.reduce(left[:, :, :, None] * mats[:, None, :, :], axis=2)
    return _finish(ctx, prod, keys[:, 16] + g.aut_exp)


def compose_pairs(ctx: FieldCtx, k1: np.ndarray, k2: np.ndarray) -> np.ndarray:
    m1 = _frob_pow(ctx, _stack(ctx, k1), k2[:, 16])
    m2 = _stack(ctx, k2)
    prod = np.add.reduce(m1[:, :, :, None] * m2[:, None, :, :], axis=2)
    return _finish(ctx, prod, k1[:, 16] + k2[:, 16])


def batch_images(ctx: FieldCtx, keys: np.ndarray, rows: galois.FieldArray) -> np.ndarray:
    """(E, n) codes: the image of each point row under each collineation."""
    rows = rows.reshape(-1, 4)
    n = rows.shape[0]
    out = np.empty((keys.shape[0], n), dtype=np.int64)
    for aut in np.unique(keys[:, 16]):
        sel = np.flatnonzero(keys[:, 16] == aut)
        src = rows ** (1 << int(aut)) if aut else rows
        mats = _stack(ctx, keys[sel])
        wide = mats.transpose(1, 0, 2).reshape(4, -1)  # [M_1 | M_2 | ...]
        img = (src @ wide).reshape(n, sel.size, 4).transpose(1, 0, 2).reshape(-1, 4)
        out[sel] = encode(ctx, normalize_rows(ctx, img)).reshape(sel.size, n)
    return out


# --- closure ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GroupClosure:
    keys: np.ndarray  # (E, 17), rows sorted lexicographically
    generators: Tuple[Collineation, ...]

    def __len__(self) -> int:
        return int(self.keys.shape[0])

    def __iter__(self) -> Iterator[Collineation]:
        for row in self.keys:
            yield from_key(row)

    def __contains__(self, c: Collineation) -> bool:
        return c.key in self.key_set()

    def key_set(self) -> Set[Key]:
        return set(map(tuple, self.keys.tolist()))

    @property
    def linear_order(self) -> int:
        return int(np.count_nonzero(self.keys[:, 16] == 0))


def _sorted_keys(rows: Iterable[Key]) -> np.ndarray:
    arr = np.array(sorted(rows), dtype=np.int64).reshape(-1, 17)
    arr.setflags(write=False)
    return arr


def generate_group(ctx: FieldCtx, generators: Sequence[Collineation], cap: int) -> GroupClosure:
    """
    Breadth-first closure of `generators` (and their inverses) under composition.
    Frontiers are processed in sorted key order; raises GroupCapExceeded beyond `cap`.
    """
    gens: List[Collineation] = []
    seen_gens: Set[Key] = set()
    for g in list(generators) + [inverse(ctx, g) for g in generators]:
        if g.key not in seen_gens:
            seen_gens.add(g.key)
            gens.append(g)
    gens.sort(key=lambda c: c.key)

    start = identity(ctx).key
    seen: Set[Key] = {start}
    frontier = [start]
    depth = 0
    while frontier:
        depth += 1
        block = np.array(frontier, dtype=np.int64)
        fresh: List[Key] = []
        for g in gens:
            for row in map(tuple, compose_right(ctx, block, g).tolist()):
                if row not in seen:
                    seen.add(row)
                    fresh.append(row)
            if len(seen) > cap:
                raise GroupCapExceeded(f"closure exceeded cap={cap} at depth {depth} ({len(seen)} elements)")
        frontier = sorted(fresh)
        logger.debug("closure depth %d: +%d (total %d)", depth, len(fresh), len(seen))

    logger.info("closure of %d generators: %d elements", len(gens), len(seen))
    return GroupClosure(keys=_sorted_keys(seen), generators=tuple(gens))


def bm_elation_group(ctx: FieldCtx, params: VarietyParams) -> GroupClosure:
    """All q⁵ elations make_bm_elation(γ1, γ2, s), listed directly rather than by closure."""
    params.validate(ctx)
    n, q = ctx.order, ctx.q
    sub = np.sort(subfield_elements(ctx).view(np.ndarray).astype(np.int64))
    g1 = ctx.GF(np.repeat(np.arange(n, dtype=np.int64), n * q))
    g2 = ctx.GF(np.tile(np.repeat(np.arange(n, dtype=np.int64), q), n))
    s = ctx.GF(np.tile(sub, n * n))
    a, b = ctx.element(params.a), ctx.element(params.b)
    tb = trace(ctx, b)
    corner = a * (g1 ** 2 + g2 ** 2) + b * (norm(ctx, g1) + norm(ctx, g2)) + s

    keys = np.zeros((g1.size, 17), dtype=np.int64)
    keys[:, [0, 5, 10, 15]] = 1
    keys[:, 1] = g1.view(np.ndarray)
    keys[:, 2] = g2.view(np.ndarray)
    keys[:, 3] = corner.view(np.ndarray)
    keys[:, 7] = (tb * g1 ** q).view(np.ndarray)
    keys[:, 11] = (tb * g2 ** q).view(np.ndarray)
    return GroupClosure(keys=_sorted_keys(map(tuple, keys.tolist())), generators=())


# --- structure checks -------------------------------------------------------

def stabilizes_all(ctx: FieldCtx, group: GroupClosure, s: PointSet, chunk: int = 256) -> np.ndarray:
    ok = np.zeros(len(group), dtype=bool)
    if len(s) == 0:
        ok[:] = True
        return ok
    rows = s.coords(ctx)
    for r in chunked(len(group), chunk):
        imgs = np.sort(batch_images(ctx, group.keys[r.start:r.stop], rows), axis=1)
        ok[r.start:r.stop] = (imgs == s.codes[None, :]).all(axis=1)
    return ok


def fixes_pointwise(ctx: FieldCtx, group: GroupClosure, s: PointSet, chunk: int = 256) -> np.ndarray:
    ok = np.zeros(len(group), dtype=bool)
    rows = s.coords(ctx)
    for r in chunked(len(group), chunk):
        imgs = batch_images(ctx, group.keys[r.start:r.stop], rows)
        ok[r.start:r.stop] = (imgs == s.codes[None, :]).all(axis=1)
    return ok


def remark_shape(ctx: FieldCtx, keys: np.ndarray) -> np.ndarray:
    """
    Per element: first column (1,0,0,0)^t, last row (0,0,0,c), d+f = e+g and
    c(dg+ef) != 0 for the middle block [[d,e],[f,g]].
    """
    m = _stack(ctx, keys)
    raw = np.asarray(m.view(np.ndarray))
    col0 = (raw[:, 0, 0] == 1) & (raw[:, 1:, 0] == 0).all(axis=1)
    last = (raw[:, 3, :3] == 0).all(axis=1) & (raw[:, 3, 3] != 0)
    d, e, f, g, c = m[:, 1, 1], m[:, 1, 2], m[:, 2, 1], m[:, 2, 2], m[:, 3, 3]
    balanced = np.asarray(d + f == e + g)
    nonsingular = np.asarray(c * (d * g + e * f) != 0)
    return col0 & last & balanced & nonsingular


def kernel_subgroup(ctx: FieldCtx, group: GroupClosure, sigma: PointSet, chunk: int = 256) -> GroupClosure:
    """Elements fixing every point of `sigma` (Σ_∞ in use)."""
    mask = fixes_pointwise(ctx, group, sigma, chunk)
    return GroupClosure(keys=group.keys[mask], generators=())


def subgroup_closed(ctx: FieldCtx, group: GroupClosure) -> bool:
    keys = group.key_set()
    for g in group.generators or tuple(group):
        for row in map(tuple, compose_right(ctx, group.keys, g).tolist()):
            if row not in keys:
                return False
    return True


def is_normal_subgroup(ctx: FieldCtx, sub: GroupClosure, group: GroupClosure, exhaustive: bool = False) -> bool:
    """
    sub^g ⊆ sub for every g of `group` (exhaustive) or for every generator
    of `group` together with its inverse.
    """
    sub_keys = sub.key_set()
    sub_gens = keys_array(sub.generators) if sub.generators else sub.keys
    conjugators = list(group) if exhaustive else list(group.generators)
    for g in conjugators:
        g_inv = inverse(ctx, g)
        conj = compose_right(ctx, compose_left(ctx, g_inv, sub_gens), g)
        if any(row not in sub_keys for row in map(tuple, conj.tolist())):
            logger.info("conjugation by %s leaves the subgroup", g.key)
            return False
    return True


def check_sharp_transitivity(ctx: FieldCtx, group, domain: PointSet, base: Optional[int] = None) -> bool:
    """
    |group| = |domain|, and the orbit of one base point is the whole domain
    (so the stabilizer of that point is trivial).
    """
    keys = group.keys if isinstance(group, GroupClosure) else keys_array(group)
    if keys.shape[0] != len(domain) or len(domain) == 0:
        return False
    base_code = int(domain.codes[0]) if base is None else int(base)
    orbit = batch_images(ctx, keys, decode(ctx, [base_code]))[:, 0]
    uniq = np.unique(orbit)
    return uniq.size == keys.shape[0] and np.array_equal(uniq, domain.codes)


def fixes_point(ctx: FieldCtx, group: GroupClosure, coords=P_INF) -> np.ndarray:
    code = int(encode(ctx, ctx.array(coords)))
    return batch_images(ctx, group.keys, decode(ctx, [code]))[:, 0] == code
