# qherm/state_io.py
from __future__ import annotations

import json
import os
import re
from typing import Any, Dict, List, Tuple

import numpy as np
import pandas as pd

from .collineation import Collineation, from_key
from .equivalence import EquivalenceWitness
from .errors import FormatError
from .field import FieldCtx, field_for_q
from .geometry import decode, encode
from .oarray import OrthogonalArray, build_domain_W0, column_keys
from .variety import PointSet, VarietyParams, point_set

_HEADER_RE = re.compile(r"^#\s*(?P<kind>\S+)\s+(?P<rest>.*)$")


def ensure_dir(path: str) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


def _kv(text: str) -> Dict[str, str]:
    return dict(tok.split("=", 1) for tok in text.split() if "=" in tok)


def _field_from_header(kv: Dict[str, str]) -> FieldCtx:
    try:
        ctx = field_for_q(int(kv["q"]))
    except (KeyError, ValueError) as e:
        raise FormatError(f"header lacks a valid q: {kv}") from e
    if "modulus" in kv and int(kv["modulus"]) != ctx.modulus:
        raise FormatError(f"modulus {kv['modulus']} does not match GF({ctx.order}) modulus {ctx.modulus}")
    return ctx


# --- point sets -------------------------------------------------------------

def save_point_set(ctx: FieldCtx, s: PointSet, path: str) -> None:
    ensure_dir(path)
    rows = decode(ctx, s.codes).view(np.ndarray).astype(np.int64).reshape(-1, 4)
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# PG(3,q^2) q={ctx.q} modulus={ctx.modulus}\n")
        for r in rows:
            f.write(f"{r[0]} {r[1]} {r[2]} {r[3]}\n")


def load_point_set(path: str) -> Tuple[FieldCtx, PointSet]:
    with open(path, "r", encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines or not lines[0].startswith("# PG(3,q^2)"):
        raise FormatError(f"{path}: missing '# PG(3,q^2)' header")
    ctx = _field_from_header(_kv(lines[0]))
    body = [ln.split() for ln in lines[1:] if ln.strip()]
    if any(len(parts) != 4 for parts in body):
        raise FormatError(f"{path}: every point needs four coordinates")
    raw = np.array(body, dtype=np.int64).reshape(-1, 4)
    if raw.size and (raw.min() < 0 or raw.max() >= ctx.order):
        raise FormatError(f"{path}: coordinate outside GF({ctx.order})")
    codes = encode(ctx, ctx.GF(raw)) if raw.size else np.zeros(0, dtype=np.int64)
    return ctx, point_set(ctx, codes)


# --- collineations and witnesses -------------------------------------------

def collineation_line(c: Collineation) -> str:
    return " ".join(str(v) for v in c.key)


def parse_collineation(line: str, ctx: FieldCtx) -> Collineation:
    parts = line.split()
    if len(parts) != 17:
        raise FormatError(f"collineation line needs 17 integers, got {len(parts)}")
    vals = [int(p) for p in parts]
    if any(v < 0 or v >= ctx.order for v in vals[:16]) or not 0 <= vals[16] < ctx.bits:
        raise FormatError("collineation entry out of range")
    return from_key(vals)


def save_collineations(ctx: FieldCtx, maps: List[Collineation], path: str) -> None:
    ensure_dir(path)
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# collineations q={ctx.q} modulus={ctx.modulus}\n")
        for c in maps:
            f.write(collineation_line(c) + "\n")


def load_collineations(path: str) -> Tuple[FieldCtx, List[Collineation]]:
    with open(path, "r", encoding="utf-8") as f:
        lines = f.read().splitlines()
    m = _HEADER_RE.match(lines[0]) if lines else None
    if not m:
        raise FormatError(f"{path}: missing header")
    ctx = _field_from_header(_kv(m.group("rest")))
    return ctx, [parse_collineation(ln, ctx) for ln in lines[1:] if ln.strip()]


def save_witness(ctx: FieldCtx, w: EquivalenceWitness, path: str) -> None:
    ensure_dir(path)
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# witness q={ctx.q} modulus={ctx.modulus}\n")
        f.write(f"source {w.source.a} {w.source.b}\n")
        f.write(f"target {w.target.a} {w.target.b}\n")
        f.write(f"case {w.case_tag}\n")
        f.write(f"lemma {w.aut_exp} {w.d} {w.e} {w.lambda1} {w.lambda2} {w.c} {w.u}\n")
        f.write(collineation_line(w.map) + "\n")


def load_witness(path: str) -> Tuple[FieldCtx, EquivalenceWitness]:
    with open(path, "r", encoding="utf-8") as f:
        lines = [ln for ln in f.read().splitlines() if ln.strip()]
    if len(lines) != 6 or not lines[0].startswith("# witness"):
        raise FormatError(f"{path}: expected header, source, target, case, lemma and map lines")
    ctx = _field_from_header(_kv(lines[0]))
    src, tgt, case, lem = (lines[i].split() for i in range(1, 5))
    if src[0] != "source" or tgt[0] != "target" or case[0] != "case" or lem[0] != "lemma" or len(lem) != 8:
        raise FormatError(f"{path}: malformed witness body")
    aut_exp, d, e, l1, l2, c, u = (int(v) for v in lem[1:])
    return ctx, EquivalenceWitness(
        source=VarietyParams(int(src[1]), int(src[2])),
        target=VarietyParams(int(tgt[1]), int(tgt[2])),
        map=parse_collineation(lines[5], ctx),
        case_tag=case[1],
        aut_exp=aut_exp, d=d, e=e, lambda1=l1, lambda2=l2, c=c, u=u,
    )


# --- orthogonal arrays ------------------------------------------------------

def export_oa(oa: OrthogonalArray, path: str) -> None:
    ensure_dir(path)
    a = oa.params.a if oa.params else 0
    b = oa.params.b if oa.params else 0
    with open(path, "w", encoding="utf-8") as f:
        f.write(oa.header + "\n")
        f.write(f"# q={oa.q} a={a} b={b} modulus={oa.modulus}\n")
        np.savetxt(f, oa.entries, fmt="%d", delimiter=" ")


def import_oa(path: str) -> OrthogonalArray:
    with open(path, "r", encoding="utf-8") as f:
        head = f.readline().split()
        meta = f.readline()
    if len(head) != 5:
        raise FormatError(f"{path}: first line must be 'N k v t lambda'")
    n_rows, n_cols, v, t, lam = (int(x) for x in head)
    if not meta.startswith("#"):
        raise FormatError(f"{path}: second line must be the '# q=...' comment")
    kv = _kv(meta[1:])
    ctx = _field_from_header(kv)

    df = pd.read_csv(path, sep=" ", header=None, skiprows=2, dtype=np.int64)
    entries = df.to_numpy()
    if entries.shape != (n_rows, n_cols):
        raise FormatError(f"{path}: header says {n_rows}x{n_cols}, body is {entries.shape[0]}x{entries.shape[1]}")
    if entries.min() < 0 or entries.max() >= v:
        raise FormatError(f"{path}: symbol outside [0, {v})")

    col_keys = column_keys(ctx)
    return OrthogonalArray(
        rows=n_rows, cols=n_cols, levels=v, strength=t, index=lam,
        entries=np.ascontiguousarray(entries.astype(np.uint8)),
        row_keys=build_domain_W0(ctx), col_keys=col_keys, q=ctx.q,
        params=VarietyParams(int(kv.get("a", 0)), int(kv.get("b", 0))), modulus=ctx.modulus,
    )


def save_oa_keys(oa: OrthogonalArray, path: str) -> None:
    ensure_dir(path)
    rows = pd.DataFrame(oa.row_keys, columns=["k1", "k2", "k3"])  # (x, y, z)
    rows.insert(0, "index", np.arange(len(rows)))
    rows.insert(0, "kind", "row")
    cols = pd.DataFrame(oa.col_keys, columns=["k1", "k2"])  # (gamma1, gamma2)
    cols.insert(0, "index", np.arange(len(cols)))
    cols.insert(0, "kind", "col")
    cols["k3"] = -1
    pd.concat([rows, cols], ignore_index=True).to_csv(path, index=False)


# --- json -------------------------------------------------------------------

def write_json(path: str, payload: Dict[str, Any]) -> None:
    ensure_dir(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)


def read_json(path: str) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)
