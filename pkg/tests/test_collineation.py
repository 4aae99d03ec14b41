import numpy as np
import pytest

from qherm.collineation import (
    apply,
    batch_images,
    bm_elation_group,
    check_sharp_transitivity,
    compose,
    compose_all,
    compose_left,
    compose_pairs,
    compose_right,
    fixes_point,
    from_matrix,
    generate_group,
    identity,
    image_of_set,
    inverse,
    is_normal_subgroup,
    kernel_subgroup,
    keys_array,
    linear_stabilizer_generators,
    make_affine_elation,
    make_bm_elation,
    make_mu,
    make_phi,
    make_psi,
    make_sigma,
    make_tau,
    remark_shape,
    stabilizes,
    stabilizes_all,
    subgroup_closed,
    tau_conjugate_gamma,
)
from qherm.errors import FieldError, GeometryError, GroupCapExceeded
from qherm.geometry import P_INF, ProjPoint
from qherm.variety import VarietyParams, affine_part, build_bab, build_mab, ell_inf, sigma_inf


def test_identity_and_canonical_scaling(gf16):
    assert identity(gf16).key == (1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0)
    scaled = from_matrix(gf16, np.eye(4, dtype=np.int64) * 5)
    assert scaled == identity(gf16)


def test_singular_matrix_rejected(gf4):
    with pytest.raises(GeometryError):
        from_matrix(gf4, np.zeros((4, 4), dtype=np.int64))


def test_compose_applies_first_map_first(gf16):
    c1 = compose(gf16, make_tau(gf16, 6), make_sigma(gf16, 1))
    c2 = make_affine_elation(gf16, 3, 9, 4, 1, 0)
    p = ProjPoint((1, 2, 11, 5))
    assert apply(gf16, compose(gf16, c1, c2), p) == apply(gf16, c2, apply(gf16, c1, p))


def test_inverse(gf16):
    c = compose_all(gf16, [make_sigma(gf16, 3), make_mu(gf16, 6), make_affine_elation(gf16, 1, 2, 3, 4, 5)])
    assert compose(gf16, c, inverse(gf16, c)) == identity(gf16)
    assert compose(gf16, inverse(gf16, c), c) == identity(gf16)


def test_generators_stabilize_m_and_b(gf16):
    p = VarietyParams(1, 2)
    m, b = build_mab(gf16, p), build_bab(gf16, p)
    for g in linear_stabilizer_generators(gf16, p):
        assert stabilizes(gf16, g, m)
        assert stabilizes(gf16, g, b)


def test_generator_parameters_checked(gf16, params):
    with pytest.raises(FieldError):
        make_phi(gf16, 2)
    with pytest.raises(FieldError):
        make_mu(gf16, 0)
    with pytest.raises(FieldError):
        make_sigma(gf16, 4)
    with pytest.raises(ValueError):
        linear_stabilizer_generators(gf16, params, parts=("rho",))


def test_psi_is_bm_elation_with_zero_shift(gf16, params):
    assert make_psi(gf16, 3, 12, params) == make_bm_elation(gf16, 3, 12, 0, params)


def test_tau_conjugation_formula(gf16, params):
    for e in (1, 6, 7):
        tau = make_tau(gf16, e)
        for g1, g2 in [(1, 0), (3, 12), (9, 9)]:
            conj = compose_all(gf16, [inverse(gf16, tau), make_psi(gf16, g1, g2, params), tau])
            assert conj == make_psi(gf16, *tau_conjugate_gamma(gf16, g1, g2, e), params)


def test_batched_composition_matches_single(gf16, params):
    gens = linear_stabilizer_generators(gf16, params)[:6] + [make_sigma(gf16, 1)]
    keys = keys_array(gens)
    g = make_tau(gf16, 7)
    right = compose_right(gf16, keys, g)
    left = compose_left(gf16, g, keys)
    pairs = compose_pairs(gf16, keys, keys[::-1].copy())
    for i, c in enumerate(gens):
        assert tuple(right[i]) == compose(gf16, c, g).key
        assert tuple(left[i]) == compose(gf16, g, c).key
        assert tuple(pairs[i]) == compose(gf16, c, gens[::-1][i]).key


def test_batch_images_match_apply(gf16, params):
    gens = [make_sigma(gf16, 1), make_tau(gf16, 6), make_psi(gf16, 5, 0, params)]
    rows = gf16.array([[1, 2, 3, 4], [0, 1, 7, 9], [0, 0, 0, 1]])
    codes = batch_images(gf16, keys_array(gens), rows)
    for i, c in enumerate(gens):
        for j, r in enumerate(rows):
            p = ProjPoint(tuple(int(v) for v in r))
            assert codes[i, j] == apply(gf16, c, p).code(gf16)


def test_linear_closure_q2(gf4, params):
    group = generate_group(gf4, linear_stabilizer_generators(gf4, params), cap=10_000)
    assert len(group) == 64
    assert group.linear_order == 64
    assert identity(gf4) in group
    assert subgroup_closed(gf4, group)
    assert stabilizes_all(gf4, group, build_mab(gf4, params)).all()
    assert stabilizes_all(gf4, group, ell_inf(gf4)).all()
    assert stabilizes_all(gf4, group, sigma_inf(gf4)).all()
    assert fixes_point(gf4, group, P_INF).all()
    assert remark_shape(gf4, group.keys).all()


def test_kernel_is_phi(gf4, params):
    group = generate_group(gf4, linear_stabilizer_generators(gf4, params), cap=10_000)
    kernel = kernel_subgroup(gf4, group, sigma_inf(gf4))
    assert kernel.key_set() == {identity(gf4).key, make_phi(gf4, 1).key}


def test_sylow_subgroup_is_normal(gf4, params):
    group = generate_group(gf4, linear_stabilizer_generators(gf4, params), cap=10_000)
    s = generate_group(gf4, linear_stabilizer_generators(gf4, params, parts=("phi", "psi")), cap=10_000)
    assert len(s) == 32
    assert is_normal_subgroup(gf4, s, group)
    assert is_normal_subgroup(gf4, s, group, exhaustive=True)


def test_s_is_sharply_transitive_and_equals_the_elation_family(gf4, params):
    s = generate_group(gf4, linear_stabilizer_generators(gf4, params, parts=("phi", "psi")), cap=10_000)
    domain = affine_part(gf4, build_mab(gf4, params))
    assert len(domain) == 32
    assert check_sharp_transitivity(gf4, s, domain)
    assert bm_elation_group(gf4, params).key_set() == s.key_set()


def test_cap_exceeded(gf4, params):
    with pytest.raises(GroupCapExceeded):
        generate_group(gf4, linear_stabilizer_generators(gf4, params), cap=10)


def test_remark_shape_rejects_a_translation_off_the_axis(gf4):
    bad = make_affine_elation(gf4, 0, 0, 0, 1, 0)
    transposed = from_matrix(gf4, bad.array(gf4).T)
    assert not remark_shape(gf4, keys_array([transposed])).all()


def test_image_of_set(gf4, params):
    m = build_mab(gf4, params)
    moved = image_of_set(gf4, make_affine_elation(gf4, 1, 0, 0), m)
    assert len(moved) == len(m)
    assert not moved.same_points(m)


@pytest.mark.slow
def test_closure_orders_q4(gf16, params):
    group = generate_group(gf16, linear_stabilizer_generators(gf16, params), cap=200_000)
    assert len(group) == 4 ** 6 * 3
    s = generate_group(gf16, linear_stabilizer_generators(gf16, params, parts=("phi", "psi")), cap=200_000)
    assert len(s) == 4 ** 5
    assert check_sharp_transitivity(gf16, s, affine_part(gf16, build_mab(gf16, params)))
    assert bm_elation_group(gf16, params).key_set() == s.key_set()
