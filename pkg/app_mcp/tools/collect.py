"""
Tool 1: collect_data
PCPE 실험을 돌려 에이전트(및 리더) 데이터 CSV + manifest 작성
"""

from typing import Optional

from app_mcp.tools._source import resolve_scenario
from apps.pipeline import collect_stage
from core.logging.logger import get_logger

logger = get_logger(__name__)


def collect_data(
    scenario: str = "example_heterogeneous",
    out: Optional[str] = None,
    seed: Optional[int] = None,
    h: Optional[float] = None,
) -> dict:
    """
    데이터 수집

    Args:
        scenario: built-in 이름 또는 scenario JSON 경로
        out: 출력 디렉토리 (없으면 DATASYNC_OUTPUT_ROOT/<name>)
        seed: 난수 seed
        h: 적분 step

    Returns:
        manifest (T, h, seed, 에이전트별 rank check 결과)
    """
    manifest = collect_stage(resolve_scenario(scenario), out, seed=seed, h=h)
    logger.info("collect_data: %s, %d agents", manifest.scenario, len(manifest.agents))
    return manifest.model_dump(mode="json")
