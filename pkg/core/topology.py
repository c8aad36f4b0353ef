"""
통신 그래프 / Laplacian / pinning 행렬
"""

from __future__ import annotations

import re
from typing import Iterable, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order

from core.logging.logger import get_logger
from core.types import ReachabilityReport, ScenarioError, Topology

logger = get_logger(__name__)

NONSINGULAR_TOL = 1e-12

_EDGE_RE = re.compile(r"^\s*(\d+)\s*->\s*(\d+)\s*(?::\s*([-+0-9.eE]+))?\s*$")
_PIN_RE = re.compile(r"^\s*pin\s+(\d+)\s*(?::\s*([-+0-9.eE]+))?\s*$")


def laplacian(top: Topology) -> np.ndarray:
    """L = D - A with D the in-degree matrix."""
    a = top.a
    return np.diag(a.sum(axis=1)) - a


def pinning_matrices(top: Topology) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(G, L_g, I_g) with L_g = [-g  L+G] and I_g = [0  I_N]."""
    N = top.N
    G = np.diag(top.g)
    L_g = np.hstack([-top.g.reshape(N, 1), laplacian(top) + G])
    I_g = np.hstack([np.zeros((N, 1)), np.eye(N)])
    return G, L_g, I_g


def check_spanning_tree_with_leader(top: Topology) -> ReachabilityReport:
    """BFS from the leader (node 0) over the augmented digraph; also reports sigma_min(L+G)."""
    N = top.N
    # W[j, i] > 0 means information flows j -> i; node 0 is the leader
    W = np.zeros((N + 1, N + 1))
    W[1:, 1:] = top.a.T
    W[0, 1:] = top.g
    order = breadth_first_order(csr_matrix(W > 0), i_start=0, directed=True, return_predecessors=False)
    reached = set(int(v) for v in order)
    unreached = [i for i in range(1, N + 1) if i not in reached]

    sigma_min = float(np.linalg.svd(laplacian(top) + np.diag(top.g), compute_uv=False).min())
    report = ReachabilityReport(
        has_spanning_tree=not unreached,
        nonsingular=sigma_min > NONSINGULAR_TOL,
        sigma_min=sigma_min,
        unreached=unreached,
    )
    if report.has_spanning_tree and not report.nonsingular:
        logger.warning("leader reaches every agent but sigma_min(L+G)=%.3e", sigma_min)
    logger.debug("spanning tree check: %s (unreached=%s, sigma_min=%.3e)", report.has_spanning_tree, unreached, sigma_min)
    return report


# ============================================
# graph section parser
# ============================================

def parse_graph_section(lines: Iterable[str], N: int) -> Topology:
    """Build a Topology from `j -> i : w` and `pin i : g` lines (1-based agents).

    A missing weight defaults to 1.
    """
    a = np.zeros((N, N))
    g = np.zeros(N)
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        pin = _PIN_RE.match(line)
        if pin:
            i = _agent_index(pin.group(1), N, line)
            g[i] = float(pin.group(2)) if pin.group(2) is not None else 1.0
            continue
        edge = _EDGE_RE.match(line)
        if edge:
            j = _agent_index(edge.group(1), N, line)
            i = _agent_index(edge.group(2), N, line)
            a[i, j] = float(edge.group(3)) if edge.group(3) is not None else 1.0
            continue
        raise ScenarioError(f"unparseable graph line: {raw!r}")
    try:
        return Topology(a=a, g=g)
    except ValueError as e:
        raise ScenarioError(f"invalid graph: {e}") from e


def _agent_index(token: str, N: int, line: str) -> int:
    k = int(token)
    if not 1 <= k <= N:
        raise ScenarioError(f"agent index {k} out of range 1..{N} in {line!r}")
    return k - 1


def format_graph_section(top: Topology) -> list:
    out = []
    for i in range(top.N):
        for j in range(top.N):
            if top.a[i, j] > 0:
                out.append(f"{j + 1} -> {i + 1} : {top.a[i, j]:g}")
    for i in range(top.N):
        if top.g[i] > 0:
            out.append(f"pin {i + 1} : {top.g[i]:g}")
    return out
