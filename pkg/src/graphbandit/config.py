"""Experiment configuration (JSON) and its validation."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Annotated, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .environment import COUPLINGS, RewardModel
from .graph import FeedbackGraph, build_graph, parse_graph_spec
from .policies import POLICY_NAMES, PolicySpec


class ConfigError(ValueError):
    """Invalid or unreadable configuration; the message names the field path."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GraphEntry(_Strict):
    """Either a generator spec string (``"star:5"``, ``"gnp:20:0.3:42"``) or an
    explicit ``{"k": ..., "edges": [[a, b], ...]}``."""

    spec: Optional[str] = None
    k: Optional[int] = Field(default=None, ge=1)
    edges: list[tuple[int, int]] = []

    @model_validator(mode="after")
    def _one_form(self):
        if (self.spec is None) == (self.k is None):
            raise ValueError("give either a spec string or an object with k and edges")
        if self.spec is not None and self.edges:
            raise ValueError("edges cannot be combined with a spec string")
        self.build()
        return self

    def build(self) -> FeedbackGraph:
        if self.spec is not None:
            return parse_graph_spec(self.spec)
        return build_graph(self.k, self.edges)


class ModelSpec(_Strict):
    means: list[Annotated[float, Field(ge=0, le=1)]] = Field(min_length=1)
    coupling: Literal[COUPLINGS] = "bernoulli_independent"  # type: ignore[valid-type]
    precision: float = Field(default=4.0, gt=0)

    @model_validator(mode="after")
    def _valid_model(self):
        RewardModel(tuple(self.means), self.coupling, self.precision)
        return self


class PolicyEntry(_Strict):
    name: Literal[POLICY_NAMES]  # type: ignore[valid-type]
    delta: Optional[float] = Field(default=None, gt=0, lt=1)
    anytime: bool = False


class ExperimentConfig(_Strict):
    graph: GraphEntry
    model: ModelSpec
    policies: list[PolicyEntry] = Field(min_length=1)
    horizon: int = Field(ge=1)
    replications: int = Field(default=1, ge=1)
    base_seed: int = Field(default=0, ge=0, lt=2**64)
    #: explicit checkpoint times; ``None`` (written ``"log2"`` in JSON) means powers of two
    checkpoints: Optional[list[int]] = None
    layering: bool = False
    output_dir: str = "out"
    c_ts: float = Field(default=1.0, ge=0)

    @field_validator("graph", mode="before")
    @classmethod
    def _graph_string(cls, v):
        return {"spec": v} if isinstance(v, str) else v

    @field_validator("policies", mode="before")
    @classmethod
    def _policy_strings(cls, v):
        if isinstance(v, list):
            return [{"name": e} if isinstance(e, str) else e for e in v]
        return v

    @field_validator("checkpoints", mode="before")
    @classmethod
    def _checkpoint_keyword(cls, v):
        if v == "log2":
            return None
        if isinstance(v, str):
            raise ValueError("expected \"log2\" or a list of integers")
        return v

    @field_validator("policies")
    @classmethod
    def _policies(cls, v):
        for entry in v:
            PolicySpec(entry.name, entry.delta, entry.anytime)
        labels = [PolicySpec(e.name, e.delta, e.anytime).label for e in v]
        dupes = sorted({l for l in labels if labels.count(l) > 1})
        if dupes:
            raise ValueError(f"duplicate policy entries: {dupes}")
        return v

    @model_validator(mode="after")
    def _consistent(self):
        k = self.feedback_graph().k
        if len(self.model.means) != k:
            raise ValueError(f"model.means has {len(self.model.means)} entries but the graph has {k} arms")
        if self.checkpoints is not None:
            cps = self.checkpoints
            if not cps:
                raise ValueError("checkpoints: list must not be empty")
            if cps[0] < 1 or cps[-1] > self.horizon:
                raise ValueError(f"checkpoints: times must lie in [1, {self.horizon}]")
            if any(b <= a for a, b in zip(cps, cps[1:])):
                raise ValueError("checkpoints: times must be strictly increasing")
        return self

    # -------------------------------------------------------------- derived objects

    def feedback_graph(self) -> FeedbackGraph:
        return self.graph.build()

    def reward_model(self) -> RewardModel:
        return RewardModel(tuple(self.model.means), self.model.coupling, self.model.precision)

    def policy_specs(self) -> list[PolicySpec]:
        return [PolicySpec(e.name, e.delta, e.anytime) for e in self.policies]

    def checkpoint_times(self) -> list[int]:
        """Powers of two up to the horizon, plus the horizon itself, or the explicit list."""
        if self.checkpoints is not None:
            return list(self.checkpoints)
        times = [1 << j for j in range(int(math.log2(self.horizon)) + 1)]
        if times[-1] != self.horizon:
            times.append(self.horizon)
        return times


def _format_error(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        path = ".".join(str(p) for p in e["loc"])
        msg = e["msg"].removeprefix("Value error, ")
        lines.append(f"{path}: {msg}" if path else msg)
    return "; ".join(lines)


def parse_config(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as err:
        raise ConfigError(_format_error(err)) from None


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: invalid JSON at line {err.lineno}: {err.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return parse_config(data)
