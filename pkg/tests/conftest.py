"""
공통 fixture: 예제 에이전트 / 리더 / 그래프, 수집된 데이터
"""

import pytest

from apps.scenario import load_scenario
from core.hetero import collect_leader_data
from core.lti import collect_experiment
from core.topology import parse_graph_section
from core.types import AgentData, LtiSystem
from data.scenarios import (
    EXAMPLE_AGENT_CONSTANTS,
    EXAMPLE_GRAPH,
    EXAMPLE_LEADER,
    SCENARIO_EXAMPLE_HETEROGENEOUS,
    third_order_agent,
)

STEP = 1e-3
HOLD = 0.37


@pytest.fixture(scope="session")
def third_order_agents():
    return [LtiSystem(**third_order_agent(*c)) for c in EXAMPLE_AGENT_CONSTANTS]


@pytest.fixture(scope="session")
def example_leader():
    return LtiSystem(A=EXAMPLE_LEADER["A"], C=EXAMPLE_LEADER["C"])


@pytest.fixture(scope="session")
def example_topology():
    return parse_graph_section(EXAMPLE_GRAPH, 4)


@pytest.fixture(scope="session")
def heterogeneous_config():
    return load_scenario(SCENARIO_EXAMPLE_HETEROGENEOUS)


@pytest.fixture(scope="session")
def agent_data(third_order_agents):
    """PCPE data of every example agent (seed i)."""
    return [
        AgentData.from_matrices(collect_experiment(sys, T=HOLD, seed=i, h=STEP).matrices)
        for i, sys in enumerate(third_order_agents)
    ]


@pytest.fixture(scope="session")
def leader_data(example_leader):
    return collect_leader_data(example_leader, T=HOLD, seed=0, h=STEP)
