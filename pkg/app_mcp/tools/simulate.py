"""
Tool 3: simulate_network
설계된 controller 로 closed-loop 네트워크 시뮬레이션
"""

from typing import Optional

from app_mcp.tools._source import resolve_scenario
from apps.pipeline import simulate_stage


def simulate_network(
    scenario: str = "example_heterogeneous",
    out: Optional[str] = None,
    duration: Optional[float] = None,
    seed: Optional[int] = None,
) -> dict:
    """
    Closed-loop 시뮬레이션

    Returns:
        run.csv / plot_run.py 경로와 metrics (final error, settling time, synchronized)
    """
    result = simulate_stage(resolve_scenario(scenario), out, duration=duration, seed=seed)
    return result.model_dump(mode="json")
