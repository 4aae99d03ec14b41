import dataclasses

import numpy as np
import pytest

from qherm.errors import FieldError
from qherm.field import field_for_q, in_subfield
from qherm.oarray import (
    ara_residual,
    build_domain_W0,
    build_oa,
    build_R,
    check_simple,
    column_difference,
    entries_in_subfield,
    eval_form,
    solve_gamma3,
    verify_strength2,
)
from qherm.variety import VarietyParams


def test_domain_and_elation_sizes(gf4, params):
    assert build_domain_W0(gf4).shape == (32, 3)
    R = build_R(gf4, params)
    assert len(R) == 16
    assert all(ara_residual(gf4, params, g) == 0 for g in R)


def test_gamma3_is_unique_in_c(gf16, params):
    R = build_R(gf16, params)
    for g in R[::17]:
        assert solve_gamma3(gf16, params, g.gamma1, g.gamma2) == g.gamma3


def test_closed_form_matches_matrix_action(gf16, params):
    w0 = build_domain_W0(gf16)[::41]
    for g in build_R(gf16, params)[::29]:
        closed = eval_form(gf16, params, g, w0, path="closed")
        matrix = eval_form(gf16, params, g, w0, path="matrix")
        assert np.array_equal(closed, matrix)
        assert entries_in_subfield(gf16, closed)


def test_eval_form_rejects_z_outside_c(gf4, params):
    g = build_R(gf4, params)[0]
    with pytest.raises(FieldError):
        eval_form(gf4, params, g, [0, 0, 1])
    with pytest.raises(ValueError):
        eval_form(gf4, params, g, [0, 0, 0], path="other")


def test_oa_q2(gf4, params):
    oa = build_oa(gf4, params, column_block=5, threads=2)
    assert oa.header == "32 16 2 2 8"
    assert oa.entries.shape == (32, 16)
    assert check_simple(oa)
    report = verify_strength2(oa, mode="full")
    assert report.ok
    assert report.pairs_checked == 16 * 15 // 2
    assert report.index == 8


def test_oa_entries_match_eval_form(gf4, params):
    oa = build_oa(gf4, params)
    R = build_R(gf4, params)
    for col in (0, 7, 15):
        vals = eval_form(gf4, params, R[col], oa.row_keys)
        assert np.array_equal(oa.entries[:, col], vals.view(np.ndarray))


def test_oa_is_independent_of_threads(gf4, params):
    a = build_oa(gf4, params, column_block=3, threads=1)
    b = build_oa(gf4, params, column_block=16, threads=4)
    assert np.array_equal(a.entries, b.entries)


def test_single_entry_flips_are_detected(gf4, params):
    oa = build_oa(gf4, params)
    rng = np.random.default_rng(11)
    for _ in range(10):
        r, c = rng.integers(0, oa.rows), rng.integers(0, oa.cols)
        entries = oa.entries.copy()
        entries[r, c] ^= 1
        mutated = dataclasses.replace(oa, entries=entries)
        report = verify_strength2(mutated, mode="full")
        assert not report.ok
        assert all(c in pair for pair in report.violations)


def test_sampled_mode_is_seeded(gf4, params):
    oa = build_oa(gf4, params)
    r1 = verify_strength2(oa, mode="sampled", n_pairs=50, seed=3)
    r2 = verify_strength2(oa, mode="sampled", n_pairs=50, seed=3, threads=3)
    assert r1.ok and r1.pairs_checked == 50 and r1.seed == 3
    assert r1 == r2
    with pytest.raises(ValueError):
        verify_strength2(oa, mode="partial")


def test_column_difference_is_balanced(gf16, params):
    diff = column_difference(gf16, params, (1, 0), (0, 5))
    assert np.all(in_subfield(gf16, diff))
    _, counts = np.unique(diff.view(np.ndarray), return_counts=True)
    assert counts.tolist() == [256] * 4


def test_invalid_parameters(gf4):
    with pytest.raises(ValueError):
        build_oa(gf4, VarietyParams(1, 1))


@pytest.mark.slow
def test_oa_q4_full():
    ctx = field_for_q(4)
    oa = build_oa(ctx, VarietyParams(1, 2), threads=4)
    assert oa.header == "1024 256 4 2 64"
    assert check_simple(oa)
    assert verify_strength2(oa, mode="full", threads=4).ok


@pytest.mark.slow
def test_oa_q8_sampled():
    ctx = field_for_q(8)
    oa = build_oa(ctx, VarietyParams(1, ctx.epsilon_bits), threads=4)
    assert oa.header == "32768 4096 8 2 512"
    report = verify_strength2(oa, mode="sampled", n_pairs=1000, seed=7, threads=4)
    assert report.ok and report.pairs_checked == 1000
