import numpy as np
import pandas as pd
import pytest

from qherm.collineation import make_sigma, make_tau
from qherm.equivalence import find_equivalence, lemma_parameters, verify_witness
from qherm.errors import FormatError
from qherm.oarray import build_oa
from qherm.state_io import (
    export_oa,
    import_oa,
    load_collineations,
    load_point_set,
    load_witness,
    parse_collineation,
    read_json,
    save_collineations,
    save_oa_keys,
    save_point_set,
    save_witness,
    write_json,
)
from qherm.variety import VarietyParams, build_mab


def test_point_set_file(gf4, params, tmp_path):
    path = tmp_path / "sets" / "m.txt"
    m = build_mab(gf4, params)
    save_point_set(gf4, m, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "# PG(3,q^2) q=2 modulus=7"
    assert len(lines) == 46
    ctx, loaded = load_point_set(str(path))
    assert ctx == gf4
    assert loaded.same_points(m)


def test_point_set_modulus_mismatch(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("# PG(3,q^2) q=2 modulus=11\n1 0 0 0\n")
    with pytest.raises(FormatError):
        load_point_set(str(path))


def test_point_set_coordinate_out_of_range(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("# PG(3,q^2) q=2 modulus=7\n1 0 0 4\n")
    with pytest.raises(FormatError):
        load_point_set(str(path))


def test_collineation_file(gf16, tmp_path):
    maps = [make_tau(gf16, 6), make_sigma(gf16, 3)]
    path = tmp_path / "maps.txt"
    save_collineations(gf16, maps, str(path))
    ctx, loaded = load_collineations(str(path))
    assert ctx == gf16
    assert loaded == maps


def test_parse_collineation_errors(gf4):
    with pytest.raises(FormatError):
        parse_collineation("1 0 0", gf4)
    with pytest.raises(FormatError):
        parse_collineation(" ".join(["1"] * 16 + ["2"]), gf4)


def test_witness_file(gf4, tmp_path):
    w = find_equivalence(gf4, VarietyParams(1, 2), VarietyParams(3, 2))
    path = tmp_path / "w.txt"
    save_witness(gf4, w, str(path))
    ctx, loaded = load_witness(str(path))
    assert loaded.source == w.source and loaded.target == w.target
    assert loaded.map == w.map and loaded.case_tag == w.case_tag
    assert loaded == w
    assert lemma_parameters(ctx, loaded) == lemma_parameters(gf4, w)
    assert verify_witness(ctx, loaded)


def test_witness_file_needs_lemma_line(gf4, tmp_path):
    w = find_equivalence(gf4, VarietyParams(1, 2), VarietyParams(3, 2))
    path = tmp_path / "w.txt"
    save_witness(gf4, w, str(path))
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("lemma")]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(FormatError):
        load_witness(str(path))


def test_oa_file(gf4, params, tmp_path):
    oa = build_oa(gf4, params)
    path = tmp_path / "a0.oa"
    export_oa(oa, str(path))
    head = path.read_text().splitlines()[:2]
    assert head == ["32 16 2 2 8", "# q=2 a=1 b=2 modulus=7"]
    loaded = import_oa(str(path))
    assert loaded.header == oa.header
    assert np.array_equal(loaded.entries, oa.entries)
    assert loaded.params == params


def test_oa_file_shape_mismatch(gf4, params, tmp_path):
    path = tmp_path / "short.oa"
    path.write_text("4 16 2 2 8\n# q=2 a=1 b=2 modulus=7\n" + "0 " * 15 + "0\n")
    with pytest.raises(FormatError):
        import_oa(str(path))


def test_oa_keys_csv(gf4, params, tmp_path):
    oa = build_oa(gf4, params)
    path = tmp_path / "keys.csv"
    save_oa_keys(oa, str(path))
    df = pd.read_csv(path)
    assert list(df.columns) == ["kind", "index", "k1", "k2", "k3"]
    assert (df["kind"] == "row").sum() == 32
    assert (df["kind"] == "col").sum() == 16


def test_json(tmp_path):
    path = tmp_path / "out" / "r.json"
    write_json(str(path), {"b": 1, "a": [1, 2]})
    assert read_json(str(path)) == {"a": [1, 2], "b": 1}
