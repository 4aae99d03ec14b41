# qherm/config.py
from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, Field, field_validator, model_validator

DEFAULT_CONFIG = Path(__file__).parent / "configs" / "default.yaml"


@dataclass(frozen=True)
class EngineConfig:
    group_cap: int = 200_000        # abort closures beyond this many elements
    spectrum_chunk: int = 1024      # hyperplanes per matmul block
    image_chunk: int = 256          # collineations per batched image
    oa_column_block: int = 256      # OA columns built per block
    sampled_pairs: int = 1000       # column pairs for sampled OA checks
    threads: Optional[int] = None   # None = all cores
    verify_max_q: int = 4           # witnesses are checked by point-set image up to this q


def load_engine_config(path: Optional[str] = None) -> EngineConfig:
    cfg_path = Path(path) if path else DEFAULT_CONFIG
    if not cfg_path.exists():
        return EngineConfig()
    with open(cfg_path, "r", encoding="utf-8") as f:
        cfg_y = yaml.safe_load(f) or {}

    # Merge YAML into EngineConfig; unknown keys are ignored
    known = {f.name for f in fields(EngineConfig)}
    return EngineConfig(**{k: v for k, v in cfg_y.items() if k in known})


class RunConfig(BaseModel):
    """Validated command-line input. Field-dependent checks (a ≠ 0, Tr(b) ≠ 0) run once the field exists."""
    q: int
    a: int = Field(default=1, ge=0)
    b: int = Field(default=2, ge=0)
    a2: Optional[int] = Field(default=None, ge=0)
    b2: Optional[int] = Field(default=None, ge=0)
    mode: Literal["full", "sampled"] = "full"
    seed: Optional[int] = None
    pairs: int = Field(default=1000, gt=0)
    cap: int = Field(default=200_000, gt=0)
    out: Optional[str] = None
    json_path: Optional[str] = None
    threads: Optional[int] = Field(default=None, gt=0)
    semilinear: bool = False

    @field_validator("q")
    @classmethod
    def _q_in_range(cls, v: int) -> int:
        if v not in (2, 4, 8, 16):
            raise ValueError(f"q must be one of 2, 4, 8, 16 (got {v})")
        return v

    @model_validator(mode="after")
    def _sampled_needs_seed(self) -> "RunConfig":
        if self.mode == "sampled" and self.seed is None:
            raise ValueError("--mode sampled needs an explicit --seed")
        return self

    @property
    def k(self) -> int:
        return self.q.bit_length() - 1
