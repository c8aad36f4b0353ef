"""
Tool 2: design_controllers
수집된 데이터로 gain / regulator 해 / certificate 계산
"""

from typing import Optional

from app_mcp.tools._source import resolve_scenario
from apps.pipeline import design_stage


def design_controllers(
    scenario: str = "example_heterogeneous",
    out: Optional[str] = None,
    data_dir: Optional[str] = None,
) -> dict:
    """Run the data-based design for the scenario's method and return the verification report."""
    report = design_stage(resolve_scenario(scenario), out, data_dir=data_dir)
    return report.model_dump(mode="json")
