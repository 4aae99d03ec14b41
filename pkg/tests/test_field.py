import numpy as np
import pytest

from qherm.errors import FieldError
from qherm.field import (
    canonical_rep,
    coset_reps,
    describe_element,
    discrete_log,
    f2_basis,
    field_for_q,
    frobenius,
    from_symbol,
    in_subfield,
    inv,
    make_field,
    mul,
    norm,
    norm_one_elements,
    norm_witnessed,
    power,
    solve_norm,
    solve_trace,
    subfield_elements,
    to_symbol,
    trace,
    trace_witnessed,
)


def test_distinguished_elements_q2(gf4):
    assert gf4.modulus == 7
    assert int(gf4.omega) == 2
    assert gf4.eta_bits == 2
    assert gf4.epsilon_bits == 2


def test_subfield_of_gf16(gf16):
    assert sorted(int(x) for x in subfield_elements(gf16)) == [0, 1, 6, 7]


def test_trace_and_norm_land_in_subfield(gf16):
    elems = gf16.elements()
    assert np.all(in_subfield(gf16, trace(gf16, elems)))
    assert np.all(in_subfield(gf16, norm(gf16, elems)))
    assert trace_witnessed(gf16, gf16.element(9)).in_subfield


def test_trace_is_additive_and_norm_multiplicative(gf16):
    x, y = gf16.element(5), gf16.element(11)
    assert trace(gf16, x + y) == trace(gf16, x) + trace(gf16, y)
    assert norm(gf16, x * y) == norm(gf16, x) * norm(gf16, y)


@pytest.mark.parametrize("q", [2, 4, 8])
def test_solution_counts(q):
    ctx = field_for_q(q)
    for beta in subfield_elements(ctx):
        assert solve_trace(ctx, beta).size == q
        if int(beta):
            assert solve_norm(ctx, beta).size == q + 1
    assert norm_one_elements(ctx).size == q + 1


def test_solve_norm_rejects_zero_and_non_subfield(gf16):
    with pytest.raises(FieldError):
        solve_norm(gf16, gf16.GF(0))
    with pytest.raises(FieldError):
        solve_trace(gf16, gf16.element(2))


def test_inverse_of_zero(gf4):
    with pytest.raises(ZeroDivisionError):
        inv(gf4.GF(0))
    assert inv(gf4.element(2)) * gf4.element(2) == gf4.GF(1)


def test_element_range_checked(gf4):
    with pytest.raises(FieldError):
        gf4.element(4)


def test_make_field_bounds():
    with pytest.raises(FieldError):
        make_field(5)
    with pytest.raises(FieldError):
        field_for_q(6)


def test_coset_representatives(gf16):
    reps = coset_reps(gf16)
    assert sorted(int(trace(gf16, r)) for r in reps) == [0, 1, 6, 7]
    x = gf16.element(13)
    assert trace(gf16, canonical_rep(gf16, x)) == trace(gf16, x)


def test_f2_basis_spans_subfield(gf16):
    basis = f2_basis(gf16, subfield_elements(gf16))
    assert len(basis) == 2


def test_discrete_log(gf16):
    assert int(discrete_log(gf16, gf16.GF(0))) == -1
    assert int(discrete_log(gf16, gf16.omega ** 7)) == 7


def test_symbol_map_is_a_field_isomorphism(gf16):
    sub = subfield_elements(gf16)
    syms = to_symbol(gf16, sub)
    assert sorted(syms.tolist()) == [0, 1, 2, 3]
    assert np.array_equal(from_symbol(gf16, syms), sub)
    theta = gf16.omega ** 5
    assert int(to_symbol(gf16, theta)) == 2
    with pytest.raises(FieldError):
        to_symbol(gf16, gf16.element(2))


def test_describe_element(gf4):
    row = describe_element(gf4, gf4.element(3))
    assert row == {"encoding": 3, "log_omega": 2, "in_subfield": 0, "trace": 1, "norm": 1}


def test_mul_matches_norm_and_witness(gf16):
    elems = gf16.elements()
    assert np.array_equal(mul(elems, elems ** gf16.q), norm(gf16, elems))
    witnessed = norm_witnessed(gf16, elems)
    assert witnessed.in_subfield
    assert np.array_equal(witnessed.value, norm(gf16, elems))


@pytest.mark.parametrize("q", [2, 4])
def test_trace_kernel_is_subfield(q):
    ctx = field_for_q(q)
    kernel = sorted(int(x) for x in solve_trace(ctx, ctx.GF(0)))
    assert kernel == sorted(int(x) for x in subfield_elements(ctx))


@pytest.mark.parametrize("q", [2, 4, 8])
def test_frobenius_is_an_involution(q):
    ctx = field_for_q(q)
    elems = ctx.elements()
    assert np.array_equal(frobenius(ctx, frobenius(ctx, elems)), elems)


@pytest.mark.parametrize("q", [2, 4])
def test_frobenius_is_an_automorphism(q):
    ctx = field_for_q(q)
    elems = ctx.elements()
    x, y = elems[:, None], elems[None, :]
    assert np.array_equal(frobenius(ctx, x + y), frobenius(ctx, x) + frobenius(ctx, y))
    assert np.array_equal(frobenius(ctx, x * y), frobenius(ctx, x) * frobenius(ctx, y))


def test_frobenius_is_an_automorphism_on_sampled_pairs():
    ctx = field_for_q(8)
    rng = np.random.default_rng(11)
    x = ctx.GF(rng.integers(0, ctx.order, size=500))
    y = ctx.GF(rng.integers(0, ctx.order, size=500))
    assert np.array_equal(frobenius(ctx, x + y), frobenius(ctx, x) + frobenius(ctx, y))
    assert np.array_equal(frobenius(ctx, x * y), frobenius(ctx, x) * frobenius(ctx, y))


@pytest.mark.parametrize("q", [2, 4, 8])
def test_units_have_order_dividing_q2_minus_1(q):
    ctx = field_for_q(q)
    units = ctx.GF.units
    assert np.all(power(units, ctx.order - 1) == ctx.GF(1))
    assert int(power(ctx.GF(0), 3)) == 0
