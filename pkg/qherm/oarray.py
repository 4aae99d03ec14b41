# qherm/oarray.py
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import galois
import numpy as np

from .collineation import make_affine_elation
from .errors import FieldError, TheoremViolation
from .field import FieldCtx, canonical_rep, coset_reps, frobenius, in_subfield, norm, solve_trace, to_symbol, trace
from .parallel import chunked, run_ordered
from .variety import VarietyParams, bm_form

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ElationR:
    gamma1: int
    gamma2: int
    gamma3: int  # in C


@dataclass(frozen=True, eq=False)
class OrthogonalArray:
    rows: int
    cols: int
    levels: int
    strength: int
    index: int
    entries: np.ndarray          # (rows, cols) symbols in [0, levels)
    row_keys: np.ndarray         # (rows, 3) encodings of (x, y, z)
    col_keys: np.ndarray         # (cols, 2) encodings of (γ1, γ2)
    q: int = 0
    params: Optional[VarietyParams] = None
    modulus: int = 0

    @property
    def header(self) -> str:
        return f"{self.rows} {self.cols} {self.levels} {self.strength} {self.index}"


@dataclass
class StrengthReport:
    mode: str
    pairs_checked: int
    index: int
    violations: List[Tuple[int, int]] = field(default_factory=list)
    seed: Optional[int] = None

    @property
    def ok(self) -> bool:
        return not self.violations


def _ara_rhs(ctx: FieldCtx, params: VarietyParams, g1, g2):
    """Tr(a(γ1²+γ2²)) + Tr(b)(N(γ1)+N(γ2)); Tr(γ3) must equal this."""
    a, b = ctx.element(params.a), ctx.element(params.b)
    return trace(ctx, a * (g1 ** 2 + g2 ** 2)) + trace(ctx, b) * (norm(ctx, g1) + norm(ctx, g2))


def solve_gamma3(ctx: FieldCtx, params: VarietyParams, gamma1: int, gamma2: int) -> int:
    """The unique element of C solving the γ3 trace equation."""
    rhs = _ara_rhs(ctx, params, ctx.element(gamma1), ctx.element(gamma2))
    sols = solve_trace(ctx, rhs).view(np.ndarray)
    hit = np.intersect1d(sols, coset_reps(ctx).view(np.ndarray))
    if hit.size != 1:
        raise TheoremViolation(f"gamma3 for ({gamma1},{gamma2}) has {hit.size} solutions in C")
    return int(hit[0])


def ara_residual(ctx: FieldCtx, params: VarietyParams, g: ElationR) -> int:
    g1, g2, g3 = (ctx.element(v) for v in (g.gamma1, g.gamma2, g.gamma3))
    return int(trace(ctx, g3) + _ara_rhs(ctx, params, g1, g2))


def _column_grid(ctx: FieldCtx) -> Tuple[galois.FieldArray, galois.FieldArray]:
    n = ctx.order
    g1 = np.repeat(np.arange(n, dtype=np.int64), n)
    g2 = np.tile(np.arange(n, dtype=np.int64), n)
    return ctx.GF(g1), ctx.GF(g2)


def column_keys(ctx: FieldCtx) -> np.ndarray:
    g1, g2 = _column_grid(ctx)
    return np.stack([g1.view(np.ndarray), g2.view(np.ndarray)], axis=1).astype(np.int64)


def build_R(ctx: FieldCtx, params: VarietyParams) -> List[ElationR]:
    params.validate(ctx)
    g1, g2 = _column_grid(ctx)
    # Tr(s·eta) = s for s ∈ GF(q), so rhs·eta is the member of C with trace rhs
    g3 = _ara_rhs(ctx, params, g1, g2) * ctx.eta
    return [ElationR(int(a), int(b), int(c)) for a, b, c in zip(g1.view(np.ndarray), g2.view(np.ndarray), g3.view(np.ndarray))]


def build_domain_W0(ctx: FieldCtx) -> np.ndarray:
    """(q⁵, 3) encodings of (x, y, z), z ∈ C, in lexicographic order."""
    n = ctx.order
    c = np.sort(coset_reps(ctx).view(np.ndarray).astype(np.int64))
    x = np.repeat(np.arange(n, dtype=np.int64), n * c.size)
    y = np.tile(np.repeat(np.arange(n, dtype=np.int64), c.size), n)
    z = np.tile(c, n * n)
    return np.stack([x, y, z], axis=1)


def _check_w0(ctx: FieldCtx, w: np.ndarray) -> None:
    z = ctx.GF(np.asarray(w, dtype=np.int64)[..., 2])
    if not np.all(np.asarray(canonical_rep(ctx, z) == z)):
        raise FieldError("z must be a coset representative in C")


def eval_form(ctx: FieldCtx, params: VarietyParams, g: ElationR, w, path: str = "closed") -> galois.FieldArray:
    """
    F^g at rows w = (x, y, z) of W0 (a single triple or an (n,3) array).

    path="matrix" evaluates F at (1,x,y,z)·M_g; path="closed" uses
    Tr(z) + Tr(a(x²+y²)) + Tr(b)(N(x)+N(y) + Tr(γ1^q x) + Tr(γ2^q y)).
    """
    w = np.asarray(w, dtype=np.int64).reshape(-1, 3)
    _check_w0(ctx, w)
    x, y, z = ctx.GF(w[:, 0]), ctx.GF(w[:, 1]), ctx.GF(w[:, 2])
    if path == "matrix":
        m = make_affine_elation(ctx, g.gamma1, g.gamma2, g.gamma3).array(ctx)
        ones = np.ones(w.shape[0], dtype=np.int64)
        rows = ctx.GF(np.stack([ones, w[:, 0], w[:, 1], w[:, 2]], axis=1)) @ m
        return bm_form(ctx, params, rows)
    if path != "closed":
        raise ValueError(f"unknown evaluation path {path!r}")
    a, b = ctx.element(params.a), ctx.element(params.b)
    g1, g2 = ctx.element(g.gamma1), ctx.element(g.gamma2)
    q = ctx.q
    return (
        trace(ctx, z)
        + trace(ctx, a * (x ** 2 + y ** 2))
        + trace(ctx, b) * (norm(ctx, x) + norm(ctx, y) + trace(ctx, g1 ** q * x) + trace(ctx, g2 ** q * y))
    )


def build_oa(ctx: FieldCtx, params: VarietyParams, column_block: int = 256, threads: Optional[int] = 1) -> OrthogonalArray:
    """
    Entry (w, g) = F^g(w) as a GF(q) symbol, rows in W0 order, columns in R order.

    F^g(w) = base(w) + Tr(b)·(T[γ1, x] + T[γ2, y]) with T[γ, x] = Tr(γ^q x),
    so columns are filled block by block from one q²×q² table.
    """
    params.validate(ctx)
    q, n = ctx.q, ctx.order
    w0 = build_domain_W0(ctx)
    x, y, z = ctx.GF(w0[:, 0]), ctx.GF(w0[:, 1]), ctx.GF(w0[:, 2])
    a, b = ctx.element(params.a), ctx.element(params.b)
    tb = trace(ctx, b)
    base = trace(ctx, z) + trace(ctx, a * (x ** 2 + y ** 2)) + tb * (norm(ctx, x) + norm(ctx, y))
    elems = ctx.elements()
    table = trace(ctx, frobenius(ctx, elems)[:, None] * elems[None, :]) * tb  # (γ, x)
    g1, g2 = _column_grid(ctx)
    g1i, g2i = g1.view(np.ndarray).astype(np.int64), g2.view(np.ndarray).astype(np.int64)

    def _block(r: range) -> np.ndarray:
        vals = base[None, :] + table[g1i[r.start:r.stop]][:, w0[:, 0]] + table[g2i[r.start:r.stop]][:, w0[:, 1]]
        return to_symbol(ctx, vals).astype(np.uint8).T

    blocks = run_ordered(_block, chunked(n * n, column_block), threads)
    entries = np.ascontiguousarray(np.concatenate(blocks, axis=1))
    col_keys = column_keys(ctx)
    logger.info("OA(%d,%d,%d,2) built for (a,b)=(%d,%d)", entries.shape[0], entries.shape[1], q, params.a, params.b)
    return OrthogonalArray(
        rows=q ** 5, cols=q ** 4, levels=q, strength=2, index=q ** 3,
        entries=entries, row_keys=w0, col_keys=col_keys, q=q, params=params, modulus=ctx.modulus,
    )


def _pair_violations(entries: np.ndarray, v: int, lam: int, i: int, js: np.ndarray) -> List[Tuple[int, int]]:
    col = entries[:, i].astype(np.int64)[:, None]
    codes = col * v + entries[:, js].astype(np.int64) + (np.arange(js.size, dtype=np.int64) * v * v)[None, :]
    counts = np.bincount(codes.ravel(), minlength=js.size * v * v).reshape(js.size, v * v)
    bad = np.flatnonzero((counts != lam).any(axis=1))
    return [(i, int(js[b])) for b in bad]


def verify_strength2(oa: OrthogonalArray, mode: str = "full", n_pairs: int = 1000, seed: int = 7,
                     threads: Optional[int] = 1) -> StrengthReport:
    """Every (or n_pairs seeded random) column pair must show each symbol pair exactly λ times."""
    entries, v, k = oa.entries, oa.levels, oa.cols
    lam = oa.rows // (v * v)
    if mode == "full":
        tasks = [(i, np.arange(i + 1, k)) for i in range(k - 1)]
    elif mode == "sampled":
        rng = np.random.default_rng(seed)
        target = min(int(n_pairs), k * (k - 1) // 2)
        chosen = set()
        while len(chosen) < target:
            i, j = rng.choice(k, size=2, replace=False)
            chosen.add((int(min(i, j)), int(max(i, j))))
        by_i: dict = {}
        for i, j in sorted(chosen):
            by_i.setdefault(i, []).append(j)
        tasks = [(i, np.array(js, dtype=np.int64)) for i, js in sorted(by_i.items())]
    else:
        raise ValueError(f"mode must be 'full' or 'sampled', got {mode!r}")

    found = run_ordered(lambda t: _pair_violations(entries, v, lam, t[0], t[1]), tasks, threads)
    violations = [pair for part in found for pair in part]
    checked = int(sum(t[1].size for t in tasks))
    if violations:
        logger.warning("%d of %d column pairs are not uniform at lambda=%d", len(violations), checked, lam)
    return StrengthReport(mode=mode, pairs_checked=checked, index=lam, violations=violations,
                          seed=seed if mode == "sampled" else None)


def check_simple(oa: OrthogonalArray) -> bool:
    return np.unique(oa.entries, axis=0).shape[0] == oa.rows


def entries_in_subfield(ctx: FieldCtx, values: galois.FieldArray) -> bool:
    return bool(np.all(in_subfield(ctx, values)))


def column_difference(ctx: FieldCtx, params: VarietyParams, key1: Sequence[int], key2: Sequence[int]) -> galois.FieldArray:
    """Tr(b)(Tr(δ1^q x) + Tr(δ2^q y)) over W0 with δ = key1 + key2."""
    w0 = build_domain_W0(ctx)
    x, y = ctx.GF(w0[:, 0]), ctx.GF(w0[:, 1])
    d1 = ctx.element(key1[0]) + ctx.element(key2[0])
    d2 = ctx.element(key1[1]) + ctx.element(key2[1])
    tb = trace(ctx, ctx.element(params.b))
    return tb * (trace(ctx, d1 ** ctx.q * x) + trace(ctx, d2 ** ctx.q * y))
