"""
scenario 파싱 / CSV · matrix block 입출력
"""

import copy
import json
from pathlib import Path

import numpy as np
import pytest

from apps.scenario import load_scenario
from core.closedloop import run_homogeneous
from core.lti import collect_experiment
from core.types import LtiSystem, ScenarioError
from core.utils.csv_io import (
    format_matrix_blocks,
    parse_matrix_blocks,
    plot_script,
    read_trajectory_csv,
    write_run_csv,
    write_trajectory_csv,
)
from data.scenarios import SCENARIO_EXAMPLE_HETEROGENEOUS, SCENARIO_EXAMPLE_HOMOGENEOUS, get_scenario

CONFIG_DIR = Path(__file__).resolve().parent.parent / "config"


class TestScenario:

    def test_builtin_scenarios(self):
        het = load_scenario(SCENARIO_EXAMPLE_HETEROGENEOUS)
        assert het.N == 4 and not het.is_homogeneous
        assert het.leader_system().m == 0
        hom = load_scenario(SCENARIO_EXAMPLE_HOMOGENEOUS)
        assert hom.N == 4 and hom.is_homogeneous
        np.testing.assert_array_equal(hom.systems()[3].A, hom.systems()[0].A)

    @pytest.mark.parametrize("name", ["example_heterogeneous", "example_homogeneous"])
    def test_config_files_match_builtins(self, name):
        from_file = load_scenario(CONFIG_DIR / f"{name}.json")
        builtin = load_scenario(get_scenario(name))
        assert from_file.model_dump() == builtin.model_dump()

    def test_agents_and_homogeneous_exclusive(self):
        cfg = copy.deepcopy(SCENARIO_EXAMPLE_HOMOGENEOUS)
        cfg["agents"] = SCENARIO_EXAMPLE_HETEROGENEOUS["agents"]
        with pytest.raises(ScenarioError):
            load_scenario(cfg)

    def test_output_dimension_mismatch(self):
        cfg = copy.deepcopy(SCENARIO_EXAMPLE_HETEROGENEOUS)
        cfg["agents"][2]["C"] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
        with pytest.raises(ScenarioError, match="agent 3"):
            load_scenario(cfg)

    def test_graph_out_of_range(self):
        cfg = copy.deepcopy(SCENARIO_EXAMPLE_HETEROGENEOUS)
        cfg["graph"] = "1 -> 7; pin 1"
        with pytest.raises(ScenarioError):
            load_scenario(cfg)

    def test_unknown_builtin(self):
        with pytest.raises(KeyError):
            get_scenario("nope")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("[1, 2")
        with pytest.raises(ScenarioError):
            load_scenario(path)


class TestCsv:

    def test_trajectory_file_is_exact(self, tmp_path):
        sys = LtiSystem(A=[[0.0, 1.0], [-2.0, -0.3]], B=[[0.0], [1.0]], C=[[1.0, 0.0]])
        traj = collect_experiment(sys, T=0.05, M=6, seed=1, h=1e-3).trajectory
        path = write_trajectory_csv(traj, tmp_path / "agent.csv")
        header = path.read_text().splitlines()[0]
        assert header == "t,u_1,x_1,x_2,dx_1,dx_2,y_1"
        again = read_trajectory_csv(path)
        np.testing.assert_array_equal(again.x, traj.x)
        np.testing.assert_array_equal(again.dx, traj.dx)
        assert again.h == pytest.approx(traj.h)

    def test_bad_trajectory_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,x_1\n0,1\n1,2\n")
        with pytest.raises(ScenarioError):
            read_trajectory_csv(path)

    def test_matrix_blocks(self):
        text = format_matrix_blocks({"K_1": np.array([[1.5, -2.0]]), "Pi_1": np.eye(2)})
        assert text.startswith("[K_1]\n1.5,-2\n")
        blocks = parse_matrix_blocks("# gains\n" + text)
        np.testing.assert_array_equal(blocks["Pi_1"], np.eye(2))
        with pytest.raises(ScenarioError):
            parse_matrix_blocks("1,2\n")
        with pytest.raises(ScenarioError):
            parse_matrix_blocks("[A]\n1,2\n3\n")

    def test_run_csv_and_plot_script(self, tmp_path, third_order_agents, example_topology):
        run = run_homogeneous(
            third_order_agents[0], example_topology, np.zeros((4, 12)),
            np.zeros((4, 3)), np.ones(3), duration=0.25, h=0.01,
        )
        path = write_run_csv(run, tmp_path / "run.csv", stride=10)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("t,x0_1,x0_2,x0_3,x1_1")
        assert lines[0].endswith("error_norm")
        # rows 0, 10, 20 plus the terminal sample 25
        assert [float(line.split(",")[0]) for line in lines[1:]] == pytest.approx([0.0, 0.1, 0.2, 0.25])
        script = plot_script(run, "run.csv")
        assert '"run.csv"' in script and "matplotlib" in script
        compile(script, "plot_run.py", "exec")
