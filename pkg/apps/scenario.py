"""
Scenario config (JSON)

에이전트 모델 / 그래프 / 데이터 수집 파라미터 / 설계 방법 / 출력 경로를 담는 선언적 실험 정의.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from core.topology import parse_graph_section
from core.types import LtiSystem, ScenarioError, Topology

DesignMethod = Literal["homogeneous-distributed", "homogeneous-global", "heterogeneous"]


class ModelSpec(BaseModel):
    """Row-major matrix literals; B may be omitted for an autonomous leader."""

    A: List[List[float]]
    B: Optional[List[List[float]]] = None
    C: Optional[List[List[float]]] = None

    @field_validator("A", "B", "C", mode="before")
    @classmethod
    def fix_matrix(cls, v):
        # scalars and flat rows are accepted as 1 x k
        if v is None:
            return v
        if isinstance(v, (int, float)):
            return [[float(v)]]
        if v and not isinstance(v[0], (list, tuple)):
            return [list(v)]
        return v

    def to_system(self) -> LtiSystem:
        try:
            return LtiSystem(A=self.A, B=self.B, C=self.C)
        except ValidationError as e:
            raise ScenarioError(f"invalid model: {e.errors()[0]['msg']}") from e


class HomogeneousSpec(BaseModel):
    model: ModelSpec
    count: int = Field(..., ge=1)


class DataSpec(BaseModel):
    T: Optional[float] = Field(default=None, gt=0)
    M: Optional[int] = Field(default=None, ge=1)
    h: Optional[float] = Field(default=None, gt=0)
    seed: Optional[int] = None
    leader_M: Optional[int] = Field(default=None, ge=1)


class DesignSpec(BaseModel):
    decay_rate: Optional[float] = Field(default=None, ge=0)


class SimulationSpec(BaseModel):
    duration: Optional[float] = Field(default=None, gt=0)
    # random: seeded uniform [-1, 1]; synchronized: delta = 0 / invariant-manifold start
    initial: Literal["random", "synchronized"] = "random"
    zero_gains: bool = False
    csv_stride: int = Field(default=10, ge=1)


class ScenarioConfig(BaseModel):
    name: str = "scenario"
    method: DesignMethod
    leader: Optional[ModelSpec] = None
    agents: Optional[List[ModelSpec]] = None
    homogeneous: Optional[HomogeneousSpec] = None
    graph: Union[List[str], str]
    data: DataSpec = Field(default_factory=DataSpec)
    design: DesignSpec = Field(default_factory=DesignSpec)
    simulation: SimulationSpec = Field(default_factory=SimulationSpec)
    output: Optional[str] = None

    @field_validator("graph", mode="before")
    @classmethod
    def fix_graph(cls, v):
        if isinstance(v, str):
            return [line for line in v.replace(";", "\n").splitlines() if line.strip()]
        return v

    @model_validator(mode="after")
    def check_agents(self) -> "ScenarioConfig":
        if (self.agents is None) == (self.homogeneous is None):
            raise ValueError("give exactly one of 'agents' or 'homogeneous'")
        if self.method == "heterogeneous" and self.leader is None:
            raise ValueError("heterogeneous scenarios need a 'leader' model")
        return self

    # ---- derived objects ---------------------------------------------------

    @property
    def N(self) -> int:
        return self.homogeneous.count if self.homogeneous is not None else len(self.agents)

    @property
    def is_homogeneous(self) -> bool:
        return self.method != "heterogeneous"

    def systems(self) -> List[LtiSystem]:
        if self.homogeneous is not None:
            return [self.homogeneous.model.to_system()] * self.homogeneous.count
        return [spec.to_system() for spec in self.agents]

    def leader_system(self) -> LtiSystem:
        if self.leader is not None:
            leader = self.leader.to_system()
            return LtiSystem(A=leader.A, B=None, C=leader.C)
        agent = self.systems()[0]
        return LtiSystem(A=agent.A, B=None, C=agent.C)

    def topology(self) -> Topology:
        return parse_graph_section(self.graph, self.N)

    def validate_dimensions(self) -> None:
        """Cross-check model dimensions before any run."""
        systems = self.systems()
        leader = self.leader_system()
        if self.is_homogeneous:
            first = systems[0]
            for i, s in enumerate(systems):
                if (s.n, s.m, s.p) != (first.n, first.m, first.p) or not (
                    np.array_equal(s.A, first.A) and np.array_equal(s.B, first.B)
                ):
                    raise ScenarioError(f"agent {i + 1} differs from agent 1 in a homogeneous scenario")
            if leader.n != first.n:
                raise ScenarioError(f"leader has n0={leader.n}, agents have n={first.n}")
        else:
            for i, s in enumerate(systems):
                if s.p != leader.p:
                    raise ScenarioError(f"agent {i + 1} has p={s.p}, leader has p0={leader.p}")
        for i, s in enumerate(systems):
            if s.m < 1:
                raise ScenarioError(f"agent {i + 1} has no input channel")
        self.topology()


def load_scenario(source: Union[str, Path, dict]) -> ScenarioConfig:
    """Parse a JSON file path or an already-loaded dict."""
    try:
        if isinstance(source, dict):
            raw = source
        else:
            raw = json.loads(Path(source).read_text(encoding="utf-8"))
        cfg = ScenarioConfig.model_validate(raw)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"{source}: not valid JSON ({e})") from e
    except ValidationError as e:
        raise ScenarioError(f"invalid scenario: {e}") from e
    cfg.validate_dimensions()
    return cfg
