"""
MCP Tool 테스트 (함수 직접 호출 + 등록 확인)
"""

import asyncio

import pytest
from mcp.server.fastmcp import FastMCP

from app_mcp.tools import collect_data, design_controllers, register, simulate_network
from mcp_server import build_server, ping


class TestPipelineTools:
    """collect_data -> design_controllers -> simulate_network"""

    def test_homogeneous_chain(self, tmp_path):
        out = str(tmp_path)
        manifest = collect_data(scenario="example_homogeneous", out=out, seed=2)
        assert manifest["agents"][0]["pe_rank_check"] is True

        report = design_controllers(scenario="example_homogeneous", out=out)
        assert report["method"] == "homogeneous-distributed"
        assert report["hurwitz"] is True

        result = simulate_network(scenario="example_homogeneous", out=out, duration=2.0)
        assert result["metrics"]["initial_error"] > 0
        assert result["csv"].endswith("run.csv")

    def test_missing_scenario_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            collect_data(scenario=str(tmp_path / "missing.json"))


class TestRegistration:

    def test_tools_registered(self):
        mcp = FastMCP("test")
        register(mcp)
        names = {tool.name for tool in asyncio.run(mcp.list_tools())}
        assert {"collect_data", "design_controllers", "simulate_network", "reproduce_example"} <= names

    def test_server_exposes_ping(self):
        server = build_server()
        names = {tool.name for tool in asyncio.run(server.list_tools())}
        assert names == {"collect_data", "design_controllers", "simulate_network", "reproduce_example", "ping"}
        status = asyncio.run(ping())
        assert status["status"] == "pong"
        assert "example_heterogeneous" in status["scenarios"]
        assert status["solvers"]
