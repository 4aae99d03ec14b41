# qherm/reporting.py
from __future__ import annotations

from typing import Any, Dict, Iterable, List

import pandas as pd

from .field import FieldCtx, describe_element
from .oarray import StrengthReport
from .variety import CensusReport, QHReport


def field_table(ctx: FieldCtx) -> pd.DataFrame:
    rows = [describe_element(ctx, x) for x in ctx.elements()]
    return pd.DataFrame(rows)


def build_spectrum_report(report: QHReport) -> pd.DataFrame:
    rows = [{"intersection": size, "hyperplanes": count, "allowed": size in report.allowed}
            for size, count in report.spectrum.items()]
    return pd.DataFrame(rows)


def build_census_report(census: CensusReport) -> pd.DataFrame:
    df = census.frame.copy()
    if df.empty:
        return df
    for col in ("line_counts", "affine_lines", "infinite_lines"):
        df[col] = df[col].map(lambda d: ";".join(f"{k}:{v}" for k, v in d.items()))
    return df


def build_checks_report(checks: Dict[str, Any]) -> pd.DataFrame:
    return pd.DataFrame([{"check": k, "value": v} for k, v in checks.items()])


def build_strength_report(report: StrengthReport) -> pd.DataFrame:
    rows = [{"col_i": i, "col_j": j} for i, j in report.violations]
    return pd.DataFrame(rows, columns=["col_i", "col_j"])


def key_value_lines(values: Dict[str, Any]) -> List[str]:
    return [f"{k}={_fmt(v)}" for k, v in values.items()]


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, dict):
        return "{" + ",".join(f"{k}:{_fmt(x)}" for k, x in v.items()) + "}"
    return str(v)


def records(df: pd.DataFrame) -> List[Dict[str, Any]]:
    return [{k: _plain(v) for k, v in row.items()} for row in df.to_dict(orient="records")]


def _plain(v: Any) -> Any:
    if hasattr(v, "item"):
        return v.item()
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    return v


def census_lines(census: CensusReport) -> Iterable[str]:
    for rec in census.frame.to_dict(orient="records"):
        yield " ".join(key_value_lines({
            "class": rec["point_class"],
            "points": rec["points"],
            "lines": dict(rec["line_counts"]),
            "affine_lines": dict(rec["affine_lines"]),
            "infinite_lines": dict(rec["infinite_lines"]),
            "coplanar": bool(rec["coplanar"]),
        }))
