"""JSON system configuration: schema, loading and construction of systems and measures."""

from __future__ import annotations

import json
import re
from fractions import Fraction
from pathlib import Path
from typing import Annotated, Literal, Union

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, ValidationError, model_validator

from . import maps1d
from .errors import ConfigError
from .measure import BernoulliMeasure, TableMeasure
from .symbolic import DEFAULT_BUDGET
from .system import CantorSystem, CarpetSystem


def _number(v):
    """Accept plain numbers, fractions such as ``"1/3"`` and powers such as ``"3^-4"``."""
    if isinstance(v, str):
        text = v.strip()
        m = re.fullmatch(r"(-?\d+(?:\.\d+)?)\s*(?:\^|\*\*)\s*(-?\d+(?:\.\d+)?)", text)
        if m:
            return float(m.group(1)) ** float(m.group(2))
        try:
            return float(Fraction(text))
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a number: {v!r}") from exc
    return v


Num = Annotated[float, BeforeValidator(_number)]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class AffineSpec(_Strict):
    kind: Literal["affine"]
    slope: Num
    offset: Num = 0.0


class MPSpec(_Strict):
    kind: Literal["mp_inverse"]
    alpha: Num
    branch: Literal["left", "right"] = "left"
    parabolic_point: Num | None = None


class SqrtSpec(_Strict):
    kind: Literal["sqrt"]
    parabolic_point: Num | None = 0.0


class TableSpec(_Strict):
    kind: Literal["table"]
    x: list[Num]
    y: list[Num]
    parabolic_point: Num | None = None


class ReflectSpec(_Strict):
    kind: Literal["reflect"]
    map: "MapSpec"


MapSpec = Annotated[Union[AffineSpec, MPSpec, SqrtSpec, TableSpec, ReflectSpec], Field(discriminator="kind")]
ReflectSpec.model_rebuild()


class MeasureSpec(_Strict):
    bernoulli: list[Num] | None = None
    table: str | None = None
    c: Num | None = None

    @model_validator(mode="after")
    def _one_kind(self):
        if (self.bernoulli is None) == (self.table is None):
            raise ValueError("measure needs exactly one of 'bernoulli' or 'table'")
        return self


class Budgets(_Strict):
    enumeration: int = DEFAULT_BUDGET
    depth_cap: int = 5000
    tol: Num = 1e-9


class SystemConfig(_Strict):
    name: str = "system"
    kind: Literal["cantor", "carpet"]
    maps: list[MapSpec] | None = None
    columns: list[MapSpec] | None = None
    rows: list[MapSpec] | None = None
    grid: list[tuple[int, int]] | None = None
    measure: MeasureSpec | None = None
    induced: int | None = Field(default=None, ge=1)
    proxy: Literal["sup", "inf", "length"] = "sup"
    budgets: Budgets = Budgets()
    seed: int = 0
    q: list[Num] | None = None
    deltas: list[Num] | None = None
    compare_tol: Num | None = None

    @model_validator(mode="after")
    def _shape(self):
        if self.kind == "cantor":
            if not self.maps or self.columns or self.rows or self.grid:
                raise ValueError("a cantor config needs 'maps' and no carpet fields")
        else:
            if self.maps or not (self.columns and self.rows and self.grid):
                raise ValueError("a carpet config needs 'columns', 'rows' and 'grid'")
            for c, r in self.grid:
                if not (0 <= c < len(self.columns) and 0 <= r < len(self.rows)):
                    raise ValueError(f"grid cell {(c, r)} is out of range")
        n = len(self.maps) if self.kind == "cantor" else len(self.grid)
        if self.measure and self.measure.bernoulli is not None and len(self.measure.bernoulli) != n:
            raise ValueError(f"measure has {len(self.measure.bernoulli)} weights for {n} symbols")
        return self

    @property
    def n_symbols(self) -> int:
        return len(self.maps) if self.kind == "cantor" else len(self.grid)


def build_map(spec) -> maps1d.ContractionMap:
    if isinstance(spec, AffineSpec):
        return maps1d.Affine(spec.slope, spec.offset)
    if isinstance(spec, MPSpec):
        return maps1d.MPInverseBranch(spec.alpha, spec.branch, spec.parabolic_point)
    if isinstance(spec, SqrtSpec):
        return maps1d.SqrtMap(spec.parabolic_point)
    if isinstance(spec, TableSpec):
        return maps1d.TableMap(tuple(spec.x), tuple(spec.y), spec.parabolic_point)
    if isinstance(spec, ReflectSpec):
        return maps1d.Reflected(build_map(spec.map))
    raise ConfigError(f"unknown map spec {spec!r}")


def parse_config(data: dict) -> SystemConfig:
    try:
        return SystemConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> SystemConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    cfg = parse_config(data)
    if cfg.measure and cfg.measure.table and not Path(cfg.measure.table).is_absolute():
        cfg.measure.table = str(Path(path).resolve().parent / cfg.measure.table)
    return cfg


def dump_config(cfg: SystemConfig) -> str:
    return json.dumps(cfg.model_dump(mode="json", exclude_none=True), indent=2, sort_keys=True)


def build(cfg: SystemConfig):
    """Return ``(system, measure)`` for a parsed config."""
    try:
        if cfg.kind == "cantor":
            system = CantorSystem(tuple(build_map(m) for m in cfg.maps), name=cfg.name)
        else:
            system = CarpetSystem(tuple(build_map(m) for m in cfg.columns), tuple(build_map(m) for m in cfg.rows),
                                  tuple(tuple(g) for g in cfg.grid), name=cfg.name)
        k = system.n_symbols
        if cfg.measure is None:
            measure = BernoulliMeasure.uniform(k)
        elif cfg.measure.bernoulli is not None:
            measure = BernoulliMeasure(tuple(cfg.measure.bernoulli), cfg.measure.c)
        else:
            measure = TableMeasure.from_csv(cfg.measure.table, k, cfg.measure.c)
    except ConfigError:
        raise
    except (ValueError, OSError) as exc:
        raise ConfigError(str(exc)) from exc
    return system, measure


def bundled_config_dir() -> Path:
    return Path(__file__).resolve().parent / "configs"
