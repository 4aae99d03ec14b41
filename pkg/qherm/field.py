# qherm/field.py
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, NamedTuple

import galois
import numpy as np

from .errors import FieldError

logger = logging.getLogger(__name__)

# Smallest primitive polynomial over GF(2) for each degree 2k, as a bit pattern.
PRIMITIVE_MODULI: Dict[int, int] = {
    2: 0b111,           # t^2 + t + 1
    4: 0b10011,         # t^4 + t + 1
    6: 0b1000011,       # t^6 + t + 1
    8: 0b100011101,     # t^8 + t^4 + t^3 + t^2 + 1
}

MAX_K = 4


@dataclass(frozen=True)
class FieldCtx:
    """
    The tower GF(2) ⊂ GF(q) ⊂ GF(q²), q = 2^k.

    Elements are galois FieldArrays of `GF`; their integer value is the
    polynomial-basis bit pattern. GF(q) is the Frobenius-fixed subset.
    """
    k: int
    modulus: int
    GF: type = field(repr=False, compare=False)
    omega_bits: int = 2
    eta_bits: int = 0
    epsilon_bits: int = 0

    @property
    def q(self) -> int:
        return 1 << self.k

    @property
    def order(self) -> int:
        return 1 << (2 * self.k)

    @property
    def bits(self) -> int:
        return 2 * self.k

    @property
    def omega(self) -> galois.FieldArray:
        return self.GF(self.omega_bits)

    @property
    def eta(self) -> galois.FieldArray:
        return self.GF(self.eta_bits)

    @property
    def epsilon(self) -> galois.FieldArray:
        return self.GF(self.epsilon_bits)

    def element(self, bits: int) -> galois.FieldArray:
        if not 0 <= int(bits) < self.order:
            raise FieldError(f"encoding {bits} out of range for GF({self.order})")
        return self.GF(int(bits))

    def array(self, values) -> galois.FieldArray:
        return self.GF(np.asarray(values, dtype=np.int64))

    def elements(self) -> galois.FieldArray:
        return self.GF.elements


def make_field(k: int) -> FieldCtx:
    if not 1 <= int(k) <= MAX_K:
        raise FieldError(f"k must be in 1..{MAX_K} (q in {{2,4,8,16}}), got {k}")
    k = int(k)
    modulus = PRIMITIVE_MODULI[2 * k]
    poly = galois.Poly.Int(modulus)
    if poly.degree != 2 * k or not poly.is_irreducible():
        raise FieldError(f"modulus {modulus:#b} is not irreducible of degree {2 * k}")

    GF = galois.GF(2 ** (2 * k), irreducible_poly=poly)
    q = 1 << k
    omega = GF(2)
    if int(omega.multiplicative_order()) != GF.order - 1:
        raise FieldError(f"t is not primitive modulo {modulus:#b}")

    elems = GF.elements
    traces = elems + elems ** q
    eta_bits = int(np.flatnonzero(traces == GF(1))[0])

    prim = GF.primitive_elements
    prim_tr = prim + prim ** q
    hits = np.flatnonzero(prim_tr == GF(1))
    if hits.size == 0:
        raise FieldError(f"no primitive element of trace 1 in GF({GF.order})")
    epsilon_bits = int(np.min(prim.view(np.ndarray)[hits]))

    ctx = FieldCtx(k=k, modulus=modulus, GF=GF, omega_bits=2, eta_bits=eta_bits, epsilon_bits=epsilon_bits)
    logger.debug("GF(%d): modulus=%#b eta=%d epsilon=%d", GF.order, modulus, eta_bits, epsilon_bits)
    return ctx


@lru_cache(maxsize=None)
def field_for_q(q: int) -> FieldCtx:
    k = int(q).bit_length() - 1
    if q < 2 or (1 << k) != q:
        raise FieldError(f"q must be a power of two, got {q}")
    return make_field(k)


# --- arithmetic -------------------------------------------------------------

def add(x, y):
    return x + y


def mul(x, y):
    return x * y


def inv(x):
    if np.any(np.asarray(x.view(np.ndarray)) == 0):
        raise ZeroDivisionError("inverse of 0 in GF(2^m)")
    return x ** -1


def power(x, n: int):
    return x ** int(n)


def frobenius(ctx: FieldCtx, x):
    return power(x, ctx.q)


def automorphism(ctx: FieldCtx, x, j: int):
    j = int(j) % ctx.bits
    if j == 0:
        return x
    return x ** (1 << j)


def trace(ctx: FieldCtx, x):
    return x + frobenius(ctx, x)


def norm(ctx: FieldCtx, x):
    return power(x, ctx.q + 1)


def in_subfield(ctx: FieldCtx, x):
    return x ** ctx.q == x


class SubfieldValue(NamedTuple):
    value: galois.FieldArray
    in_subfield: bool


def trace_witnessed(ctx: FieldCtx, x) -> SubfieldValue:
    t = trace(ctx, x)
    return SubfieldValue(t, bool(np.all(in_subfield(ctx, t))))


def norm_witnessed(ctx: FieldCtx, x) -> SubfieldValue:
    n = norm(ctx, x)
    return SubfieldValue(n, bool(np.all(in_subfield(ctx, n))))


def subfield_elements(ctx: FieldCtx) -> galois.FieldArray:
    elems = ctx.elements()
    return elems[in_subfield(ctx, elems)]


def norm_one_elements(ctx: FieldCtx) -> galois.FieldArray:
    units = ctx.GF.units
    return units[norm(ctx, units) == ctx.GF(1)]


def _require_subfield(ctx: FieldCtx, beta) -> None:
    if not bool(in_subfield(ctx, beta)):
        raise FieldError(f"{int(beta)} is not in GF({ctx.q})")


def solve_trace(ctx: FieldCtx, beta) -> galois.FieldArray:
    """All x with x^q + x = beta, beta ∈ GF(q); a coset of GF(q) of size q."""
    _require_subfield(ctx, beta)
    elems = ctx.elements()
    return elems[trace(ctx, elems) == beta]


def solve_norm(ctx: FieldCtx, beta) -> galois.FieldArray:
    """All x with x^(q+1) = beta, beta ∈ GF(q)*; q+1 solutions."""
    _require_subfield(ctx, beta)
    if int(beta) == 0:
        raise FieldError("norm equation needs beta != 0")
    units = ctx.GF.units
    return units[norm(ctx, units) == beta]


def coset_reps(ctx: FieldCtx) -> galois.FieldArray:
    """C = {s·eta : s ∈ GF(q)} ordered by the encoding of s."""
    return subfield_elements(ctx) * ctx.eta


def canonical_rep(ctx: FieldCtx, x):
    return trace(ctx, x) * ctx.eta


def f2_basis(ctx: FieldCtx, values: galois.FieldArray) -> List[int]:
    """Greedy GF(2)-basis (by encoding order) of the span of `values`."""
    span = {0}
    basis: List[int] = []
    for v in sorted(set(int(x) for x in values.view(np.ndarray).ravel())):
        if v in span:
            continue
        basis.append(v)
        gv = ctx.GF(v)
        span |= {int(ctx.GF(s) + gv) for s in span}
    return basis


@lru_cache(maxsize=None)
def _log_table(ctx: FieldCtx) -> np.ndarray:
    exps = np.arange(ctx.order - 1)
    powers = ctx.omega ** exps
    table = np.full(ctx.order, -1, dtype=np.int64)
    table[powers.view(np.ndarray).astype(np.int64)] = exps
    return table


def discrete_log(ctx: FieldCtx, x) -> np.ndarray:
    """log base omega; -1 marks zero."""
    return _log_table(ctx)[np.asarray(x.view(np.ndarray), dtype=np.int64)]


@lru_cache(maxsize=None)
def _symbol_tables(ctx: FieldCtx):
    q = ctx.q
    to_sym = np.full(ctx.order, -1, dtype=np.int64)
    from_sym = np.zeros(q, dtype=np.int64)
    to_sym[0] = 0
    if ctx.k == 1:
        to_sym[1] = 1
        from_sym[1] = 1
        return to_sym, from_sym
    theta = ctx.omega ** (q + 1)
    sub_gf = galois.GF(q, irreducible_poly=theta.minimal_poly())
    alpha = sub_gf(2)
    exps = np.arange(q - 1)
    big = (theta ** exps).view(np.ndarray).astype(np.int64)
    small = (alpha ** exps).view(np.ndarray).astype(np.int64)
    to_sym[big] = small
    from_sym[small] = big
    return to_sym, from_sym


def to_symbol(ctx: FieldCtx, x) -> np.ndarray:
    """GF(q) ⊂ GF(q²) → [0, q) through a fixed field isomorphism."""
    to_sym, _ = _symbol_tables(ctx)
    out = to_sym[np.asarray(x.view(np.ndarray), dtype=np.int64)]
    if np.any(out < 0):
        raise FieldError(f"element outside GF({ctx.q}) cannot be a symbol")
    return out


def from_symbol(ctx: FieldCtx, symbols) -> galois.FieldArray:
    _, from_sym = _symbol_tables(ctx)
    return ctx.GF(from_sym[np.asarray(symbols, dtype=np.int64)])


def describe_element(ctx: FieldCtx, x) -> Dict[str, int]:
    log = int(discrete_log(ctx, x))
    return {
        "encoding": int(x),
        "log_omega": log,
        "in_subfield": int(bool(in_subfield(ctx, x))),
        "trace": int(trace(ctx, x)),
        "norm": int(norm(ctx, x)),
    }
