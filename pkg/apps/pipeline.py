"""
Pipeline stages: collect -> design -> simulate (+ built-in example reproduction, seed sweep)

cli 와 MCP tool 이 공유하는 단계 함수. 각 단계는 출력 디렉토리에 파일을 쓰고
JSON 직렬화 가능한 결과 모델을 돌려준다.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from apps.scenario import ScenarioConfig, load_scenario
from core.closedloop import run_heterogeneous, run_homogeneous
from core.config.settings import get_settings
from core.constants import HETEROGENEOUS_SYNC_THRESHOLD
from core.datarep import pe_rank_check, stacked_rank_check
from core.hetero import (
    check_leader_assumption,
    collect_leader_experiment,
    init_controller,
    leader_rank_check,
    solve_regulator,
    verify_regulator_model,
)
from core.lmi import (
    closed_loop_matrix,
    design_distributed_sync,
    design_global_sync,
    design_single_stabilizer,
    verify_hurwitz,
)
from core.logging.logger import get_logger
from core.lti import build_data_matrices, collect_experiment
from core.topology import check_spanning_tree_with_leader
from core.types import (
    AgentData,
    AssumptionError,
    LeaderData,
    PcpeError,
    RegulatorSolution,
    RunMetrics,
    ScenarioError,
)
from core.utils.csv_io import (
    plot_script,
    read_matrix_blocks,
    read_trajectory_csv,
    write_matrix_blocks,
    write_run_csv,
    write_trajectory_csv,
)
from data.scenarios import SCENARIO_EXAMPLE_HETEROGENEOUS

logger = get_logger(__name__)

ScenarioSource = Union[str, Path, dict, ScenarioConfig]


# ============================================
# 결과 모델
# ============================================

class AgentManifest(BaseModel):
    agent: int
    file: str
    n: int
    m: int
    p: int
    M: int
    seed: int
    pe_rank_check: bool


class LeaderManifest(BaseModel):
    file: str
    n0: int
    M0: int
    rank_check: bool


class DataManifest(BaseModel):
    scenario: str
    method: str
    T: float
    h: float
    seed: int
    agents: List[AgentManifest]
    leader: Optional[LeaderManifest] = None
    stacked_rank_check: Optional[bool] = None


class DesignReport(BaseModel):
    method: str
    design_dir: str
    margin: Optional[float] = None
    decay_rate: Optional[float] = None
    equality_residual: Optional[float] = None
    p_min_eig: Optional[float] = None
    lyapunov_max_eig: Optional[float] = None
    hurwitz: Optional[bool] = None
    spectral_abscissa: Optional[float] = None
    agents: List[Dict[str, Any]] = Field(default_factory=list)


class SimulationResult(BaseModel):
    run_dir: str
    csv: str
    plot_script: str
    metrics: RunMetrics


class ReproSummary(BaseModel):
    seed: int
    out_dir: str
    passed: bool
    threshold: float
    max_error_after_check: Optional[float] = None
    check_time: Optional[float] = None
    leader_eigenvalues: Optional[List[List[float]]] = None
    leader_assumption: Optional[bool] = None


def _config(source: ScenarioSource) -> ScenarioConfig:
    if isinstance(source, ScenarioConfig):
        return source
    return load_scenario(source)


def resolve_out(cfg: ScenarioConfig, out: Optional[Union[str, Path]]) -> Path:
    if out is not None:
        return Path(out)
    if cfg.output:
        return Path(cfg.output)
    return get_settings().output_root / cfg.name


def _seed(cfg: ScenarioConfig, seed: Optional[int]) -> int:
    if seed is not None:
        return seed
    return cfg.data.seed if cfg.data.seed is not None else get_settings().seed


def _write_json(path: Path, payload: BaseModel) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload.model_dump(mode="json"), indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ============================================
# 1. collect
# ============================================

def collect_stage(
    source: ScenarioSource,
    out: Optional[Union[str, Path]] = None,
    seed: Optional[int] = None,
    h: Optional[float] = None,
) -> DataManifest:
    """PCPE experiments for every (distinct) agent model plus leader data when heterogeneous."""
    cfg = _config(source)
    settings = get_settings()
    seed = _seed(cfg, seed)
    h = h if h is not None else (cfg.data.h or settings.step)
    T = cfg.data.T or settings.hold_period
    data_dir = resolve_out(cfg, out) / "data"
    data_dir.mkdir(parents=True, exist_ok=True)

    systems = cfg.systems()
    top = cfg.topology()
    # homogeneous networks share one data set
    to_collect = systems[:1] if cfg.is_homogeneous else systems
    agents: List[AgentManifest] = []
    agent_data: List[AgentData] = []
    for i, sys in enumerate(to_collect):
        agent_seed = seed * 1000 + i
        exp = collect_experiment(sys, T=T, M=cfg.data.M, seed=agent_seed, h=h)
        data = AgentData.from_matrices(exp.matrices)
        ok = pe_rank_check(data)
        if not ok:
            raise PcpeError(f"agent {i + 1}: rank([Hu; Hx(t)]) < m + n = {sys.m + sys.n}; collect more holds")
        name = f"agent_{i + 1}.csv"
        write_trajectory_csv(exp.trajectory, data_dir / name)
        agents.append(
            AgentManifest(agent=i + 1, file=name, n=sys.n, m=sys.m, p=sys.p, M=data.M, seed=agent_seed, pe_rank_check=ok)
        )
        agent_data.append(data)

    leader_entry = None
    stacked = None
    if cfg.is_homogeneous:
        if check_spanning_tree_with_leader(top):
            stacked = stacked_rank_check(agent_data[0], top)
    else:
        leader = cfg.leader_system()
        exp = collect_leader_experiment(leader, T=T, M0=cfg.data.leader_M, seed=seed, h=h)
        write_trajectory_csv(exp.trajectory, data_dir / "leader.csv")
        leader_entry = LeaderManifest(
            file="leader.csv",
            n0=leader.n,
            M0=exp.matrices.M,
            rank_check=leader_rank_check(LeaderData.from_matrices(exp.matrices)),
        )

    manifest = DataManifest(
        scenario=cfg.name, method=cfg.method, T=T, h=h, seed=seed,
        agents=agents, leader=leader_entry, stacked_rank_check=stacked,
    )
    _write_json(data_dir / "manifest.json", manifest)
    logger.info("collect: %d data sets written to %s", len(agents), data_dir)
    return manifest


def load_data(data_dir: Union[str, Path]) -> Tuple[DataManifest, List[AgentData], Optional[LeaderData]]:
    data_dir = Path(data_dir)
    manifest = DataManifest.model_validate_json((data_dir / "manifest.json").read_text(encoding="utf-8"))
    agents = []
    for entry in manifest.agents:
        traj = read_trajectory_csv(data_dir / entry.file)
        agents.append(AgentData.from_matrices(build_data_matrices(traj, manifest.T, entry.M)))
    leader = None
    if manifest.leader is not None:
        traj = read_trajectory_csv(data_dir / manifest.leader.file)
        leader = LeaderData.from_matrices(build_data_matrices(traj, manifest.T, manifest.leader.M0))
    return manifest, agents, leader


# ============================================
# 2. design
# ============================================

def design_stage(
    source: ScenarioSource,
    out: Optional[Union[str, Path]] = None,
    data_dir: Optional[Union[str, Path]] = None,
) -> DesignReport:
    cfg = _config(source)
    root = resolve_out(cfg, out)
    manifest, agents, leader = load_data(data_dir or root / "data")
    design_dir = root / "design"
    top = cfg.topology()
    reach = check_spanning_tree_with_leader(top)
    if not reach:
        raise AssumptionError(
            f"leader does not reach agents {[i for i in reach.unreached]}; no directed spanning tree"
        )
    beta = cfg.design.decay_rate
    systems = cfg.systems()

    if cfg.method == "heterogeneous":
        report = _design_heterogeneous(cfg, agents, leader, beta, design_dir)
    else:
        data = agents[0]
        if not stacked_rank_check(data, top):
            raise PcpeError("stacked data matrix [I (x) Hu; L_g (x) Hx(0)] is not full row rank")
        if cfg.method == "homogeneous-distributed":
            cert = design_distributed_sync(data, top, beta)
            blocks = {f"K_{i + 1}": K for i, K in enumerate(cert.gains)}
            write_matrix_blocks(blocks, design_dir / "gains.txt")
            cert_blocks = {"Lam": cert.Lam}
            cert_blocks.update({f"P_{i + 1}": P for i, P in enumerate(cert.P_blocks)})
            cert_blocks.update({f"F_{i + 1}": F for i, F in enumerate(cert.F_blocks)})
            cert_blocks.update(blocks)
            write_matrix_blocks(cert_blocks, design_dir / "certificate.txt")
            gains = cert.gains
            report = DesignReport(
                method=cfg.method, design_dir=str(design_dir), margin=cert.margin, decay_rate=cert.decay_rate,
                equality_residual=cert.equality_residual, p_min_eig=cert.p_min_eig,
                lyapunov_max_eig=cert.lyapunov_max_eig,
            )
        else:
            g = design_global_sync(data, top, beta)
            write_matrix_blocks({"K": g.K}, design_dir / "gains.txt")
            write_matrix_blocks({"Lam": g.Lam, "P": g.P, "K": g.K}, design_dir / "certificate.txt")
            gains = g.K
            report = DesignReport(
                method=cfg.method, design_dir=str(design_dir), margin=g.margin, decay_rate=g.decay_rate,
            )
        # audit against the scenario model
        ok, abscissa = verify_hurwitz(closed_loop_matrix(systems[0], top, gains))
        report.hurwitz, report.spectral_abscissa = ok, abscissa

    _write_json(design_dir / "report.json", report)
    logger.info("design: %s written to %s", cfg.method, design_dir)
    return report


def _design_heterogeneous(cfg, agents, leader, beta, design_dir: Path) -> DesignReport:
    if leader is None:
        raise ScenarioError("heterogeneous design needs leader data")
    systems = cfg.systems()
    leader_sys = cfg.leader_system()
    gains, cert_blocks, entries = {}, {}, []
    worst = float("-inf")
    for i, (data, sys) in enumerate(zip(agents, systems)):
        stab = design_single_stabilizer(data, beta)
        sol = solve_regulator(data, leader)
        res_dyn, res_out = verify_regulator_model(sol, sys, leader_sys)
        ok, abscissa = verify_hurwitz(sys.A - sys.B @ stab.K)
        worst = max(worst, abscissa)
        k = i + 1
        gains.update({f"K_{k}": stab.K, f"Pi_{k}": sol.Pi, f"Gamma_{k}": sol.Gamma})
        cert_blocks.update({f"S_{k}": sol.S, f"P_{k}": stab.P})
        entries.append({
            "agent": k,
            "margin": stab.margin,
            "regulator_residual_dynamics": sol.residual_dynamics,
            "regulator_residual_output": sol.residual_output,
            "model_residual_dynamics": res_dyn,
            "model_residual_output": res_out,
            "spectral_abscissa": abscissa,
        })
    write_matrix_blocks(gains, design_dir / "gains.txt")
    cert_blocks.update(gains)
    write_matrix_blocks(cert_blocks, design_dir / "certificate.txt")
    return DesignReport(
        method=cfg.method,
        design_dir=str(design_dir),
        margin=min(e["margin"] for e in entries),
        decay_rate=beta if beta is not None else get_settings().decay_rate,
        hurwitz=bool(worst < 0),
        spectral_abscissa=worst,
        agents=entries,
    )


# ============================================
# 3. simulate
# ============================================

def simulate_stage(
    source: ScenarioSource,
    out: Optional[Union[str, Path]] = None,
    data_dir: Optional[Union[str, Path]] = None,
    design_dir: Optional[Union[str, Path]] = None,
    duration: Optional[float] = None,
    seed: Optional[int] = None,
    h: Optional[float] = None,
) -> SimulationResult:
    cfg = _config(source)
    root = resolve_out(cfg, out)
    seed = _seed(cfg, seed)
    design_dir = Path(design_dir or root / "design")
    data_dir = Path(data_dir or root / "data")
    blocks = read_matrix_blocks(design_dir / "gains.txt")
    top = cfg.topology()
    systems = cfg.systems()
    N = top.N
    rng = np.random.default_rng([seed, 3])
    sim = cfg.simulation
    duration = duration if duration is not None else sim.duration

    if cfg.is_homogeneous:
        sys = systems[0]
        gains = blocks["K"] if "K" in blocks else [blocks[f"K_{i + 1}"] for i in range(N)]
        if sim.zero_gains:
            gains = np.zeros((sys.m * N, sys.n * N))
        x0 = rng.uniform(-1.0, 1.0, size=sys.n)
        X = np.tile(x0, N) if sim.initial == "synchronized" else rng.uniform(-1.0, 1.0, size=(N, sys.n))
        run = run_homogeneous(sys, top, gains, X, x0, duration=duration, h=h or cfg.data.h)
    else:
        _, _, leader_data = load_data(data_dir)
        leader_sys = cfg.leader_system()
        report = json.loads((design_dir / "report.json").read_text(encoding="utf-8"))
        cert = read_matrix_blocks(design_dir / "certificate.txt")
        x0 = rng.uniform(-1.0, 1.0, size=leader_sys.n)
        controllers, x_init = [], []
        for i, sys in enumerate(systems):
            k = i + 1
            entry = report["agents"][i]
            sol = RegulatorSolution(
                S=cert[f"S_{k}"],
                Pi=blocks[f"Pi_{k}"],
                Gamma=blocks[f"Gamma_{k}"],
                residual_dynamics=entry["regulator_residual_dynamics"],
                residual_output=entry["regulator_residual_output"],
            )
            K = np.zeros_like(blocks[f"K_{k}"]) if sim.zero_gains else blocks[f"K_{k}"]
            if sim.initial == "synchronized":
                zeta0, xi = x0, sol.Pi @ x0
            else:
                zeta0, xi = np.zeros(leader_sys.n), rng.uniform(-1.0, 1.0, size=sys.n)
            neighbors = {j: float(top.a[i, j]) for j in range(N) if top.a[i, j] > 0}
            controllers.append(
                init_controller(sol, K, zeta0, leader_data, agent=i, neighbors=neighbors, pin_gain=float(top.g[i]))
            )
            x_init.append(xi)
        run = run_heterogeneous(systems, leader_sys, top, controllers, x_init, x0, duration=duration)

    run_dir = root / "run"
    csv_path = write_run_csv(run, run_dir / "run.csv", stride=sim.csv_stride)
    script = run_dir / "plot_run.py"
    script.write_text(plot_script(run, csv_path.name), encoding="utf-8")
    _write_json(run_dir / "metrics.json", run.metrics)
    logger.info("simulate: synchronized=%s final error=%.3e", run.metrics.synchronized, run.metrics.final_error)
    return SimulationResult(run_dir=str(run_dir), csv=str(csv_path), plot_script=str(script), metrics=run.metrics)


# ============================================
# 4. full pipeline / example reproduction / sweep
# ============================================

def run_pipeline(
    source: ScenarioSource,
    out: Optional[Union[str, Path]] = None,
    seed: Optional[int] = None,
    h: Optional[float] = None,
    duration: Optional[float] = None,
) -> SimulationResult:
    cfg = _config(source)
    collect_stage(cfg, out, seed=seed, h=h)
    design_stage(cfg, out)
    return simulate_stage(cfg, out, duration=duration, seed=seed)


def repro_stage(
    out: Optional[Union[str, Path]] = None,
    seed: Optional[int] = None,
    check_leader: bool = False,
    h: Optional[float] = None,
    duration: Optional[float] = None,
    source: Optional[ScenarioSource] = None,
) -> ReproSummary:
    cfg = _config(source if source is not None else SCENARIO_EXAMPLE_HETEROGENEOUS)
    seed = _seed(cfg, seed)
    root = resolve_out(cfg, out)
    result = run_pipeline(cfg, root, seed=seed, h=h, duration=duration)
    m = result.metrics
    summary = ReproSummary(
        seed=seed,
        out_dir=str(root),
        passed=bool(m.synchronized),
        threshold=HETEROGENEOUS_SYNC_THRESHOLD,
        max_error_after_check=m.max_error_after_check,
        check_time=m.check_time,
    )
    if check_leader:
        A0 = cfg.leader_system().A
        eig = np.linalg.eigvals(A0)
        summary.leader_eigenvalues = [[float(e.real), float(e.imag)] for e in eig]
        summary.leader_assumption = check_leader_assumption(A0)
        summary.passed = summary.passed and summary.leader_assumption
    _write_json(root / "summary.json", summary)
    logger.info("repro (seed=%d): %s", seed, "PASS" if summary.passed else "FAIL")
    return summary


def sweep_stage(
    seeds: Sequence[int],
    out: Optional[Union[str, Path]] = None,
    source: Optional[ScenarioSource] = None,
    check_leader: bool = False,
    h: Optional[float] = None,
    duration: Optional[float] = None,
    workers: int = 4,
) -> List[ReproSummary]:
    """Independent seeds run concurrently; each writes under <out>/seed_<s>."""
    cfg = _config(source if source is not None else SCENARIO_EXAMPLE_HETEROGENEOUS)
    root = resolve_out(cfg, out)

    def one(s: int) -> ReproSummary:
        return repro_stage(root / f"seed_{s}", seed=s, check_leader=check_leader, h=h, duration=duration, source=cfg)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        summaries = list(pool.map(one, seeds))
    root.mkdir(parents=True, exist_ok=True)
    (root / "sweep.json").write_text(
        json.dumps([s.model_dump(mode="json") for s in summaries], indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    logger.info("sweep: %d/%d seeds passed", sum(s.passed for s in summaries), len(summaries))
    return summaries
