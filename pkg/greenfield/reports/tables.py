import json
import math
from dataclasses import asdict, is_dataclass
from enum import Enum
from fractions import Fraction
from typing import Any

import numpy as np
import pandas as pd

from greenfield.arith.pf_field import Place, Unbounded, format_rational
from greenfield.config import config


def to_jsonable(obj: Any) -> Any:
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, Fraction):
        return format_rational(obj)
    if isinstance(obj, (Place, Unbounded)):
        return str(obj)
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        return to_jsonable(obj.item())
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else str(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if is_dataclass(obj):
        return to_jsonable(asdict(obj))
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def with_schema(kind: str, result: Any) -> dict:
    return {"schema": config.report_schema, "kind": kind, "result": to_jsonable(result)}


def dump_json(payload: Any) -> str:
    return json.dumps(to_jsonable(payload), sort_keys=True, indent=2)


def rows_frame(rows: list[dict]) -> pd.DataFrame:
    frame = pd.DataFrame([to_jsonable(r) for r in rows])
    return frame.reindex(sorted(frame.columns), axis=1)


def to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    return rows_frame(rows).to_csv(index=False, lineterminator="\n")


def place_stats(rows: list[dict]) -> list[dict]:
    """Per-place extremes of envelope and witness over the degrees of an adelic report."""
    frame = rows_frame(rows)
    if frame.empty:
        return []
    grouped = frame.groupby("place", sort=True)
    stats = []
    for place, group in grouped:
        witnesses = pd.to_numeric(group["witness_logd"], errors="coerce")
        stats.append(
            {
                "place": place,
                "degrees": int(len(group)),
                "max_envelope": float(group["envelope_logd"].max()),
                "max_witness": None if witnesses.isna().all() else float(witnesses.max()),
                "consistent": bool(group["consistent"].fillna(True).all()),
            }
        )
    return stats
