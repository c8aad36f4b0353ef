"""
Built-in scenarios
- SCENARIO_EXAMPLE_HETEROGENEOUS: 리더 1개 + 서로 다른 3차 에이전트 4개, 에이전트 1만 pinning
- SCENARIO_EXAMPLE_HOMOGENEOUS: 같은 그래프, 에이전트 1 모델의 동일 복제본 4개
"""

# 리더: double integrator, y0 = 첫 번째 상태
EXAMPLE_LEADER = {
    "A": [[0.0, 1.0], [0.0, 0.0]],
    "C": [[1.0, 0.0]],
}

# (a, b, c, d) per agent
EXAMPLE_AGENT_CONSTANTS = [
    (1.0, 0.0, 1.0, 1.0),
    (1.0, 0.0, 10.0, 2.0),
    (1.0, 10.0, 2.0, 1.0),
    (1.0, 1.0, 2.0, 1.0),
]

# 1 -> 2, 1 -> 3, 2 -> 3, 3 -> 4, leader pinned to agent 1
EXAMPLE_GRAPH = [
    "1 -> 2 : 1",
    "1 -> 3 : 1",
    "2 -> 3 : 1",
    "3 -> 4 : 1",
    "pin 1 : 1",
]


def third_order_agent(a: float, b: float, c: float, d: float) -> dict:
    return {
        "A": [[0.0, 1.0, 0.0], [0.0, 0.0, a], [0.0, -b, -c]],
        "B": [[0.0], [0.0], [d]],
        "C": [[1.0, 0.0, 0.0]],
    }


SCENARIO_EXAMPLE_HETEROGENEOUS = {
    "name": "example_heterogeneous",
    "method": "heterogeneous",
    "leader": EXAMPLE_LEADER,
    "agents": [third_order_agent(*consts) for consts in EXAMPLE_AGENT_CONSTANTS],
    "graph": EXAMPLE_GRAPH,
    "data": {"T": 0.37, "h": 0.001, "seed": 7},
    "design": {"decay_rate": 0.5},
    "simulation": {"duration": 30.0, "initial": "random", "csv_stride": 10},
}

SCENARIO_EXAMPLE_HOMOGENEOUS = {
    "name": "example_homogeneous",
    "method": "homogeneous-distributed",
    "homogeneous": {"model": third_order_agent(*EXAMPLE_AGENT_CONSTANTS[0]), "count": 4},
    "graph": EXAMPLE_GRAPH,
    "data": {"T": 0.37, "h": 0.001, "seed": 7},
    "design": {"decay_rate": 0.5},
    "simulation": {"duration": 50.0, "initial": "random", "csv_stride": 10},
}

SCENARIOS = {
    "example_heterogeneous": SCENARIO_EXAMPLE_HETEROGENEOUS,
    "example_homogeneous": SCENARIO_EXAMPLE_HOMOGENEOUS,
}


def get_scenario(name: str) -> dict:
    if name not in SCENARIOS:
        raise KeyError(f"unknown built-in scenario {name!r} (available: {sorted(SCENARIOS)})")
    return SCENARIOS[name]
