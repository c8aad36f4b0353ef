"""Tool 공통: scenario 이름 또는 JSON 경로 해석"""

from pathlib import Path

from apps.scenario import ScenarioConfig, load_scenario
from data.scenarios import SCENARIOS


def resolve_scenario(scenario: str) -> ScenarioConfig:
    """Built-in name (example_heterogeneous, example_homogeneous) or a scenario JSON path."""
    if scenario in SCENARIOS and not Path(scenario).exists():
        return load_scenario(SCENARIOS[scenario])
    return load_scenario(scenario)
