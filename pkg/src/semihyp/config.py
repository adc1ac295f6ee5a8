"""Strict JSON configuration schema with dotted-path overrides."""

from __future__ import annotations

import json
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .presets import FAMILIES


class ConfigError(ValueError):
    """Schema or override error; the message names the offending key path."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class ProblemSection(_Strict):
    n: int = Field(ge=1)
    k: int = Field(ge=1)
    lambda_: list[str] = Field(alias="lambda")
    f: list[str]
    phi: list[str]
    h: list[str]

    @model_validator(mode="after")
    def _lengths(self):
        if self.k > self.n:
            raise ValueError(f"k={self.k} exceeds n={self.n}")
        for key, arr in (("lambda", self.lambda_), ("f", self.f), ("phi", self.phi),
                         ("h", self.h)):
            if len(arr) != self.n:
                raise ValueError(f"{key} has {len(arr)} entries, expected n={self.n}")
        return self


class GridSection(_Strict):
    nx: int = Field(200, ge=2)
    T: float = Field(1.0, gt=0)
    dt_user: Optional[float] = Field(None, gt=0)


class SolverSection(_Strict):
    eps_fix: float = Field(1e-10, gt=0)
    max_iter: int = Field(60, ge=1)
    eps_evt: float = Field(1e-10, gt=0)


class BoundsSection(_Strict):
    M: Optional[float] = Field(None, gt=0)
    density: int = Field(21, ge=2)


class MajorantSection(_Strict):
    sigma: float = Field(gt=0)
    delta: float = Field(ge=1)
    F: str
    H: str


class CertificateSection(_Strict):
    majorant: MajorantSection
    C_f: float = Field(gt=0)
    C_h: float = Field(gt=0)


class BlowupSection(_Strict):
    u_max: float = Field(1e6, gt=0)
    t_max: Optional[float] = Field(None, gt=0)
    theta_min: float = Field(1e-8, gt=0)


class ScanEntry(_Strict):
    family: str
    params: dict[str, list[float]] = Field(default_factory=dict)
    amplitudes: list[float] = Field(default_factory=lambda: [1.0])

    @model_validator(mode="after")
    def _family(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {', '.join(FAMILIES)}")
        return self


class ScanSection(_Strict):
    families: list[ScanEntry]


class OutputSection(_Strict):
    format: Literal["csv", "json"] = "csv"
    path: str = "out.csv"


class ProblemConfig(_Strict):
    problem: Optional[ProblemSection] = None
    grid: GridSection = Field(default_factory=GridSection)
    solver: SolverSection = Field(default_factory=SolverSection)
    bounds: BoundsSection = Field(default_factory=BoundsSection)
    certificate: Optional[CertificateSection] = None
    blowup: Optional[BlowupSection] = None
    scan: Optional[ScanSection] = None
    output: OutputSection = Field(default_factory=OutputSection)

    def problem_dict(self) -> dict:
        if self.problem is None:
            raise ConfigError("problem: section is required for this command")
        return self.problem.model_dump(by_alias=True)

    def to_dict(self) -> dict:
        return self.model_dump(by_alias=True, exclude_none=True)


def _format_errors(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        path = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{path}: {e['msg']}")
    return "; ".join(lines)


def from_dict(doc: Any) -> ProblemConfig:
    try:
        return ProblemConfig.model_validate(doc)
    except ValidationError as err:
        raise ConfigError(_format_errors(err)) from None


def load(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: invalid JSON ({err})") from None


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(doc: dict, assignment: str) -> None:
    """Apply ``section.key=value``; the value is JSON if it parses, else a string."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} must look like section.key=value")
    path, raw = assignment.split("=", 1)
    keys = path.strip().split(".")
    if not all(keys):
        raise ConfigError(f"override {assignment!r} has an empty key")
    node = doc
    for key in keys[:-1]:
        nxt = node.get(key)
        if nxt is None:
            nxt = node[key] = {}
        if not isinstance(nxt, dict):
            raise ConfigError(f"{path}: {key} is not a section")
        node = nxt
    node[keys[-1]] = _parse_value(raw)
