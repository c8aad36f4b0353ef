# [datasync/mcp_server.py]
"""
datasync-mas MCP server (stdio)
- app_mcp.tools 의 tool 전체 등록
- ping: 헬스체크 + 사용 가능한 SDP solver / 내장 시나리오 목록
"""

import cvxpy as cp
from mcp.server.fastmcp import FastMCP

from app_mcp.tools import register as register_all_tools
from core.config.settings import get_settings
from core.logging.logger import get_logger
from data.scenarios import SCENARIOS

logger = get_logger(__name__)


async def ping() -> dict:
    """서버 연결 확인 + LMI backend 가용성"""
    settings = get_settings()
    installed = set(cp.installed_solvers())
    return {
        "status": "pong",
        "solvers": [s for s in (settings.lmi_solver, settings.lmi_fallback_solver) if s in installed],
        "scenarios": sorted(SCENARIOS),
    }


def build_server() -> FastMCP:
    server = FastMCP("datasync-mas")
    register_all_tools(server)
    server.add_tool(
        ping,
        name="ping",
        description="서버 연결 확인, 설정된 SDP solver 와 내장 시나리오 목록 반환",
    )
    return server


mcp = build_server()


if __name__ == "__main__":
    # stdout 은 transport 전용
    logger.info("datasync-mas MCP server starting (stdio)")
    mcp.run(transport="stdio")
