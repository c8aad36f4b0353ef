"""테스트 공용 helper"""

import numpy as np

from core.types import LtiSystem


def random_controllable(rng: np.random.Generator, n: int, m: int) -> LtiSystem:
    """Random (A, B) with a controllability margin; C = first state."""
    while True:
        A = 0.5 * rng.standard_normal((n, n))
        B = rng.standard_normal((n, m))
        ctrb = np.hstack([np.linalg.matrix_power(A, k) @ B for k in range(n)])
        if np.linalg.svd(ctrb, compute_uv=False).min() > 1e-2:
            C = np.zeros((1, n))
            C[0, 0] = 1.0
            return LtiSystem(A=A, B=B, C=C)


def random_instances(count: int, seed: int = 0, max_n: int = 3, max_m: int = 2):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(1, max_n + 1))
        m = int(rng.integers(1, min(max_m, n) + 1))
        out.append(random_controllable(rng, n, m))
    return out


def random_spanning_topology(rng: np.random.Generator, N: int, extra: int = 2):
    """Leader pinned to agent 1, random tree over agents plus `extra` random edges."""
    from core.types import Topology

    a = np.zeros((N, N))
    for i in range(1, N):
        a[i, rng.integers(0, i)] = rng.uniform(0.5, 2.0)
    for _ in range(extra):
        i, j = rng.integers(0, N, size=2)
        if i != j:
            a[i, j] = rng.uniform(0.5, 2.0)
    g = np.zeros(N)
    g[0] = rng.uniform(0.5, 2.0)
    return Topology(a=a, g=g)
