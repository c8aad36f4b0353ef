"""
MCP Tools 패키지
"""

from mcp.server.fastmcp import FastMCP

from app_mcp.tools.collect import collect_data
from app_mcp.tools.design import design_controllers
from app_mcp.tools.repro import reproduce_example
from app_mcp.tools.simulate import simulate_network

__all__ = [
    "collect_data",
    "design_controllers",
    "simulate_network",
    "reproduce_example",
    "register",
]


def register(mcp: FastMCP) -> None:
    mcp.add_tool(
        collect_data,
        name="collect_data",
        description="PCPE 입력으로 에이전트/리더 데이터를 수집하고 rank 조건을 검사합니다.",
    )
    mcp.add_tool(
        design_controllers,
        name="design_controllers",
        description="수집된 데이터만으로 동기화 gain (LMI) 과 regulator 해를 계산합니다.",
    )
    mcp.add_tool(
        simulate_network,
        name="simulate_network",
        description="설계된 controller 로 leader-follower 네트워크를 시뮬레이션하고 metrics 를 반환합니다.",
    )
    mcp.add_tool(
        reproduce_example,
        name="reproduce_example",
        description="내장 이종 에이전트 예제를 처음부터 끝까지 재현하고 pass/fail 을 반환합니다.",
    )
