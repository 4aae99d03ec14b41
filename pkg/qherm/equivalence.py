# qherm/equivalence.py
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import galois
import numpy as np

from .collineation import (
    Collineation,
    compose_all,
    fixes_point,
    from_matrix,
    generate_group,
    identity,
    image_of_set,
    inverse,
    is_normal_subgroup,
    kernel_subgroup,
    linear_stabilizer_generators,
    make_phi,
    make_sigma,
    remark_shape,
    stabilizes_all,
)
from .errors import TheoremViolation
from .field import FieldCtx, automorphism, discrete_log, norm, norm_one_elements, solve_norm, subfield_elements, trace
from .parallel import run_ordered
from .variety import VarietyParams, all_params, build_mab, ell_inf, sigma_inf

logger = logging.getLogger(__name__)

CASES = ("I", "II", "III", "IV")


@dataclass(frozen=True)
class EquivalenceWitness:
    """A collineation carrying M_source onto M_target, with the parameters it was built from."""
    source: VarietyParams
    target: VarietyParams
    map: Collineation
    case_tag: str  # I, II, III, IV or canonical-chain
    aut_exp: int = 0
    d: int = 0
    e: int = 0
    lambda1: int = 1
    lambda2: int = 1
    c: int = 1
    u: int = 0


def lemma_matrix(ctx: FieldCtx, d: int, e: int, lambda1: int, lambda2: int, c: int) -> galois.FieldArray:
    """
        [1 0      0      0]
        [0 d      e      0]
        [0 λ1·e   λ2·d   0]
        [0 0      0      c]
    """
    dv, ev, l1, l2, cv = (ctx.element(v) for v in (d, e, lambda1, lambda2, c))
    m = ctx.GF(np.eye(4, dtype=np.int64))
    m[1, 1], m[1, 2] = dv, ev
    m[2, 1], m[2, 2] = l1 * ev, l2 * dv
    m[3, 3] = cv
    return m


@lru_cache(maxsize=None)
def _candidates(ctx: FieldCtx) -> Dict[str, np.ndarray]:
    GF = ctx.GF
    units = GF.units.view(np.ndarray).astype(np.int64)
    u1 = np.sort(norm_one_elements(ctx).view(np.ndarray).astype(np.int64))
    u1_rest = u1[u1 != 1]
    sub = subfield_elements(ctx).view(np.ndarray).astype(np.int64)
    ratios = sub[(sub != 0) & (sub != 1)]
    out: Dict[str, np.ndarray] = {}

    d, l1 = np.meshgrid(units, u1, indexing="ij")
    out["I"] = np.stack([d.ravel(), np.zeros(d.size, np.int64), l1.ravel(), np.ones(d.size, np.int64)], axis=1)

    e, l2 = np.meshgrid(units, u1, indexing="ij")
    out["II"] = np.stack([np.zeros(e.size, np.int64), e.ravel(), np.ones(e.size, np.int64), l2.ravel()], axis=1)

    e, r = np.meshgrid(units, ratios, indexing="ij")
    if e.size:
        dd = (GF(r.ravel()) * GF(e.ravel())).view(np.ndarray).astype(np.int64)
        out["III"] = np.stack([dd, e.ravel(), np.ones(e.size, np.int64), np.ones(e.size, np.int64)], axis=1)
    else:
        out["III"] = np.zeros((0, 4), np.int64)

    pairs = np.array([(x, y) for x in u1_rest for y in u1_rest if x != y], dtype=np.int64).reshape(-1, 2)
    rows = []
    if pairs.size:
        one = GF(1)
        beta = (one + GF(pairs[:, 0])) / (one + GF(pairs[:, 1]))
        for ev in units:
            dd = (beta * GF(int(ev))).view(np.ndarray).astype(np.int64)
            rows.append(np.stack([dd, np.full(dd.size, ev), pairs[:, 0], pairs[:, 1]], axis=1))
    out["IV"] = np.concatenate(rows) if rows else np.zeros((0, 4), np.int64)

    for case, arr in out.items():
        out[case] = arr[np.lexsort(arr.T[::-1])]
    return out


def _maps_onto(ctx: FieldCtx, m: Collineation, p1: VarietyParams, p2: VarietyParams) -> bool:
    return image_of_set(ctx, m, build_mab(ctx, p1)).same_points(build_mab(ctx, p2))


def verify_witness(ctx: FieldCtx, w: EquivalenceWitness) -> bool:
    return _maps_onto(ctx, w.map, w.source, w.target)


def _search_aut(ctx: FieldCtx, p1: VarietyParams, p2: VarietyParams, j: int, verify: bool) -> Optional[EquivalenceWitness]:
    GF = ctx.GF
    a_s = automorphism(ctx, ctx.element(p1.a), j)
    b_s = automorphism(ctx, ctx.element(p1.b), j)
    a_t, b_t = ctx.element(p2.a), ctx.element(p2.b)
    tr_target = trace(ctx, b_t)
    cs = [int(c) for c in subfield_elements(ctx) if int(c)]

    for case in CASES:
        cand = _candidates(ctx)[case]
        if cand.size == 0:
            continue
        D, E = GF(cand[:, 0]), GF(cand[:, 1])
        d2 = D ** 2 + E ** 2
        dn = norm(ctx, D) + norm(ctx, E)
        valid = np.flatnonzero(np.asarray(d2 != 0) & np.asarray(dn != 0))
        if valid.size == 0:
            continue
        d2v, dnv = d2[valid], dn[valid]
        first_c = np.zeros(valid.size, dtype=np.int64)
        for c in cs:
            cv = GF(c)
            ok = np.asarray(cv * a_s / d2v == a_t) & np.asarray(trace(ctx, cv * b_s / dnv) == tr_target)
            first_c[(first_c == 0) & ok] = c
        for idx in np.flatnonzero(first_c):
            d, e, l1, l2 = (int(v) for v in cand[valid[idx]])
            c = int(first_c[idx])
            cv = GF(c)
            u = b_t + cv * b_s / dnv[idx]
            m = from_matrix(ctx, lemma_matrix(ctx, d, e, l1, l2, c), j)
            if verify and not _maps_onto(ctx, m, p1, p2):
                logger.debug("case %s candidate %s failed the image check", case, (j, d, e, l1, l2, c))
                continue
            return EquivalenceWitness(p1, p2, m, case, j, d, e, l1, l2, c, int(u))
    return None


def search_equivalence(ctx: FieldCtx, p1: VarietyParams, p2: VarietyParams, threads: Optional[int] = 1,
                       verify: bool = True) -> Optional[EquivalenceWitness]:
    """First witness in (σ, case, d, e, λ1, λ2, c) order, or None."""
    p1.validate(ctx)
    p2.validate(ctx)
    if p1 == p2:
        return EquivalenceWitness(p1, p2, identity(ctx), "I", 0, 1, 0, 1, 1, 1, 0)
    found = run_ordered(lambda j: _search_aut(ctx, p1, p2, j, verify), range(ctx.bits), threads)
    for w in found:
        if w is not None:
            return w
    return None


def find_equivalence(ctx: FieldCtx, p1: VarietyParams, p2: VarietyParams, threads: Optional[int] = 1,
                     verify: bool = True) -> EquivalenceWitness:
    w = search_equivalence(ctx, p1, p2, threads=threads, verify=verify)
    if w is None:
        raise TheoremViolation(f"no equivalence M_{{{p1.a},{p1.b}}} -> M_{{{p2.a},{p2.b}}} in GF({ctx.order})")
    logger.info("M_{%d,%d} -> M_{%d,%d}: case %s, sigma^%d", p1.a, p1.b, p2.a, p2.b, w.case_tag, w.aut_exp)
    return w


def lemma_parameters(ctx: FieldCtx, w: EquivalenceWitness) -> Tuple[int, int]:
    """(a', b') recomputed from (a, b, σ, c, d, e, u)."""
    a_s = automorphism(ctx, ctx.element(w.source.a), w.aut_exp)
    b_s = automorphism(ctx, ctx.element(w.source.b), w.aut_exp)
    d, e, c, u = (ctx.element(v) for v in (w.d, w.e, w.c, w.u))
    a2 = c * a_s / (d ** 2 + e ** 2)
    b2 = c * b_s / (norm(ctx, d) + norm(ctx, e)) + u
    return int(a2), int(b2)


def canonical_params(ctx: FieldCtx, alpha: int) -> VarietyParams:
    return VarietyParams(int(alpha), int(ctx.epsilon_bits))


def canonical_witness(ctx: FieldCtx, params: VarietyParams, verify: Optional[bool] = None) -> EquivalenceWitness:
    """
    b = b0 + ε·b1 over GF(q); with d ∈ solve_norm(b1) the diagonal map
    diag(1, d, d, 1) carries M_{a,b} onto M_{a/d², ε}.
    """
    params.validate(ctx)
    a, b, eps = ctx.element(params.a), ctx.element(params.b), ctx.epsilon
    b1 = trace(ctx, b) / trace(ctx, eps)
    b0 = b + eps * b1
    d = solve_norm(ctx, b1)[0]
    target = canonical_params(ctx, int(a / d ** 2))
    m = from_matrix(ctx, lemma_matrix(ctx, int(d), 0, 1, 1, 1))
    w = EquivalenceWitness(params, target, m, "I", 0, int(d), 0, 1, 1, 1, int(b0 / b1))
    if (ctx.q <= 4 if verify is None else verify) and not verify_witness(ctx, w):
        raise TheoremViolation(f"canonical reduction of {params} does not verify")
    return w


def reduce_to_canonical(ctx: FieldCtx, params: VarietyParams) -> Tuple[VarietyParams, Collineation]:
    w = canonical_witness(ctx, params)
    return w.target, w.map


def _core_map(ctx: FieldCtx, alpha1, alpha2) -> Optional[Tuple[str, int, int, int, int]]:
    """(case, d, e, λ1, λ2) with (N(d)+N(e))/(d²+e²) = α2/α1, σ = id."""
    q = ctx.q
    GF = ctx.GF
    rho = alpha2 / alpha1
    log_rho = int(discrete_log(ctx, rho))
    if log_rho % (q - 1) == 0:
        return "I", int(ctx.omega ** (log_rho // (q - 1))), 0, 1, 1
    one = GF(1)
    u1 = sorted(int(x) for x in norm_one_elements(ctx) if int(x) != 1)
    for l1 in u1:
        for l2 in u1:
            if l1 == l2:
                continue
            beta = (one + GF(l1)) / (one + GF(l2))
            nb = one + norm(ctx, beta)
            if int(nb) == 0:
                continue
            t = rho * (one + beta) ** 2 / nb
            log_t = int(discrete_log(ctx, t))
            if log_t % (q - 1):
                continue
            e = ctx.omega ** (log_t // (q - 1))
            return "IV", int(beta * e), int(e), l1, l2
    return None


def theorem_fast_path(ctx: FieldCtx, p1: VarietyParams, p2: VarietyParams, verify: bool = True) -> Optional[EquivalenceWitness]:
    """
    Constructive route: reduce both sides to (α, ε), join the canonical forms
    with a linear map of case I or IV, and chain the three maps.
    """
    w1 = canonical_witness(ctx, p1, verify=False)
    w2 = canonical_witness(ctx, p2, verify=False)
    alpha1, alpha2 = ctx.element(w1.target.a), ctx.element(w2.target.a)
    core = _core_map(ctx, alpha1, alpha2)
    if core is None:
        return None
    case, d, e, l1, l2 = core
    dv, ev = ctx.element(d), ctx.element(e)
    c = int(norm(ctx, dv) + norm(ctx, ev))
    mid = from_matrix(ctx, lemma_matrix(ctx, d, e, l1, l2, c))
    chain = compose_all(ctx, [w1.map, mid, inverse(ctx, w2.map)])
    w = EquivalenceWitness(p1, p2, chain, "canonical-chain")
    if verify and not verify_witness(ctx, w):
        logger.warning("fast path %s -> %s (case %s) did not verify", p1, p2, case)
        return None
    return w


def parameter_class_count(ctx: FieldCtx, universe: Optional[Sequence[VarietyParams]] = None,
                          threads: Optional[int] = 1) -> int:
    params = list(universe) if universe is not None else all_params(ctx)
    alphas = sorted({canonical_witness(ctx, p).target.a for p in params})
    reps: List[int] = []
    for alpha in alphas:
        for rep in reps:
            if search_equivalence(ctx, canonical_params(ctx, alpha), canonical_params(ctx, rep), threads=threads):
                break
        else:
            reps.append(alpha)
    logger.info("GF(%d): %d parameter pairs, %d canonical forms, %d classes", ctx.order, len(params), len(alphas), len(reps))
    return len(reps)


def sigma_beta(ctx: FieldCtx, params: VarietyParams, threads: Optional[int] = 1) -> Collineation:
    """β⁻¹ σ β with β: M_{1,ε} → M_{a,b}; a semilinear stabilizer of M_{a,b}."""
    beta = find_equivalence(ctx, canonical_params(ctx, 1), params, threads=threads).map
    return compose_all(ctx, [inverse(ctx, beta), make_sigma(ctx, 1), beta])


def stabilizer_generators(ctx: FieldCtx, params: VarietyParams, semilinear: bool = False,
                          exhaustive: bool = False, threads: Optional[int] = 1) -> List[Collineation]:
    gens = linear_stabilizer_generators(ctx, params, exhaustive=exhaustive)
    if semilinear:
        gens.append(sigma_beta(ctx, params, threads=threads))
    return gens


@dataclass
class StabilizerReport:
    params: VarietyParams
    semilinear: bool
    order: int
    linear_order: int
    expected_linear: int
    expected_order: int
    checks: Dict[str, bool]

    @property
    def ok(self) -> bool:
        return all(self.checks.values()) and self.order == self.expected_order


def expected_orders(ctx: FieldCtx) -> Tuple[int, int]:
    lin = ctx.q ** 6 * (ctx.q - 1)
    return lin, lin * ctx.bits


def sylow_generators(ctx: FieldCtx, params: VarietyParams) -> List[Collineation]:
    """φ, ψ and τ generators; their closure S:U has order q⁶."""
    return linear_stabilizer_generators(ctx, params, parts=("phi", "psi", "tau"))


def verify_stabilizer(ctx: FieldCtx, params: VarietyParams, semilinear: bool = False, cap: int = 200_000,
                      chunk: int = 256, threads: Optional[int] = 1) -> StabilizerReport:
    """
    Close the stabilizer generators and check, over every element: M_{a,b},
    P_∞, ℓ_∞ and Σ_∞ are preserved; linear elements have the block shape
    with d+f = e+g; the Σ_∞-pointwise kernel is {φ_s}; S:U is a normal
    subgroup of order q⁶.
    """
    gens = stabilizer_generators(ctx, params, semilinear=semilinear, threads=threads)
    group = generate_group(ctx, gens, cap)
    sigma = sigma_inf(ctx)
    lin, semi = expected_orders(ctx)
    linear_keys = group.keys[group.keys[:, 16] == 0]

    kernel = kernel_subgroup(ctx, group, sigma, chunk)
    phis = generate_group(ctx, [make_phi(ctx, int(s)) for s in subfield_elements(ctx) if int(s)], cap)
    sylow = generate_group(ctx, sylow_generators(ctx, params), cap)
    checks = {
        "stabilizes_M": bool(stabilizes_all(ctx, group, build_mab(ctx, params), chunk).all()),
        "fixes_P_inf": bool(fixes_point(ctx, group).all()),
        "preserves_l_inf": bool(stabilizes_all(ctx, group, ell_inf(ctx), chunk).all()),
        "preserves_sigma_inf": bool(stabilizes_all(ctx, group, sigma, chunk).all()),
        "matrix_shape": bool(remark_shape(ctx, linear_keys).all()),
        "kernel_is_phi": kernel.key_set() == phis.key_set() and len(kernel) == ctx.q,
        "sylow_order": len(sylow) == ctx.q ** 6,
        "sylow_normal": is_normal_subgroup(ctx, sylow, group),
    }
    failed = [name for name, ok in checks.items() if not ok]
    if failed:
        logger.warning("stabilizer of %s failed: %s", params, ", ".join(failed))
    return StabilizerReport(
        params=params, semilinear=semilinear, order=len(group), linear_order=group.linear_order,
        expected_linear=lin, expected_order=semi if semilinear else lin, checks=checks,
    )
