"""
Tool 4: reproduce_example
내장 이종 에이전트 예제 전체 파이프라인 (collect -> design -> simulate) + pass/fail
"""

from typing import List, Optional

from app_mcp.tools._source import resolve_scenario
from apps.pipeline import repro_stage, sweep_stage


def reproduce_example(
    out: Optional[str] = None,
    seeds: Optional[List[int]] = None,
    check_leader: bool = True,
    duration: Optional[float] = None,
) -> dict:
    source = resolve_scenario("example_heterogeneous")
    if seeds:
        summaries = sweep_stage(seeds, out, source=source, check_leader=check_leader, duration=duration)
    else:
        summaries = [repro_stage(out, check_leader=check_leader, duration=duration, source=source)]
    return {
        "passed": all(s.passed for s in summaries),
        "runs": [s.model_dump(mode="json") for s in summaries],
    }
