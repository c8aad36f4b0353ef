"""
CSV / certificate text 입출력

- trajectory CSV: t,u_1..u_m,x_1..x_n,dx_1..dx_n,y_1..y_p
- matrix block text: '[name]' 헤더 + row-major CSV 행
- NetworkRun CSV + plot script 생성
"""

from __future__ import annotations

import csv
import io
import re
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Sequence, Union

import numpy as np

from core.constants import CSV_FLOAT_FORMAT
from core.types import NetworkRun, ScenarioError, Trajectory

PathLike = Union[str, Path]

_BLOCK_RE = re.compile(r"^\[(?P<name>[^\]]+)\]\s*$")


def fmt(value: float) -> str:
    return CSV_FLOAT_FORMAT % value


def _write_rows(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[float]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


# ============================================
# Trajectory
# ============================================

def trajectory_header(m: int, n: int, p: int) -> List[str]:
    return (
        ["t"]
        + [f"u_{i + 1}" for i in range(m)]
        + [f"x_{i + 1}" for i in range(n)]
        + [f"dx_{i + 1}" for i in range(n)]
        + [f"y_{i + 1}" for i in range(p)]
    )


def write_trajectory_csv(traj: Trajectory, path: PathLike) -> Path:
    header = trajectory_header(traj.u.shape[1], traj.x.shape[1], traj.y.shape[1])
    table = np.hstack([traj.t.reshape(-1, 1), traj.u, traj.x, traj.dx, traj.y])
    return _write_rows(path, header, table)


def read_trajectory_csv(path: PathLike) -> Trajectory:
    with Path(path).open(newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    if not header or header[0] != "t":
        raise ScenarioError(f"{path}: trajectory CSV must start with column 't'")
    count = {prefix: sum(1 for c in header if c.startswith(prefix + "_")) for prefix in ("u", "x", "dx", "y")}
    if header != trajectory_header(count["u"], count["x"], count["y"]) or count["dx"] != count["x"]:
        raise ScenarioError(f"{path}: unexpected trajectory header {header}")
    table = np.array(rows, dtype=float).reshape(-1, len(header))
    if table.shape[0] < 2:
        raise ScenarioError(f"{path}: need at least two samples")
    m, n, p = count["u"], count["x"], count["y"]
    cols = np.cumsum([1, m, n, n, p])
    h = float(table[1, 0] - table[0, 0])
    return Trajectory(
        h=h,
        t=table[:, 0],
        u=table[:, cols[0]:cols[1]],
        x=table[:, cols[1]:cols[2]],
        dx=table[:, cols[2]:cols[3]],
        y=table[:, cols[3]:cols[4]],
    )


# ============================================
# Matrix blocks (certificates, gains, regulator solutions)
# ============================================

def format_matrix_blocks(blocks: Mapping[str, np.ndarray]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for name, mat in blocks.items():
        mat = np.atleast_2d(np.asarray(mat, dtype=float))
        buf.write(f"[{name}]\n")
        for row in mat:
            writer.writerow([fmt(v) for v in row])
        buf.write("\n")
    return buf.getvalue()


def parse_matrix_blocks(text: str) -> Dict[str, np.ndarray]:
    blocks: Dict[str, List[List[float]]] = {}
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        head = _BLOCK_RE.match(line)
        if head:
            current = head.group("name")
            blocks[current] = []
            continue
        if current is None:
            raise ScenarioError(f"line {lineno}: matrix row outside a [block]")
        blocks[current].append([float(v) for v in next(csv.reader([line]))])
    out = {}
    for name, rows in blocks.items():
        widths = {len(r) for r in rows}
        if len(widths) > 1:
            raise ScenarioError(f"block [{name}] has ragged rows")
        out[name] = np.array(rows, dtype=float)
    return out


def write_matrix_blocks(blocks: Mapping[str, np.ndarray], path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_matrix_blocks(blocks), encoding="utf-8")
    return path


def read_matrix_blocks(path: PathLike) -> Dict[str, np.ndarray]:
    return parse_matrix_blocks(Path(path).read_text(encoding="utf-8"))


# ============================================
# NetworkRun
# ============================================

def run_header(run: NetworkRun) -> List[str]:
    header = ["t"] + [f"x0_{k + 1}" for k in range(run.leader.shape[1])]
    for i, x in enumerate(run.agents):
        header += [f"x{i + 1}_{k + 1}" for k in range(x.shape[1])]
    if run.outputs is not None:
        header += [f"y0_{k + 1}" for k in range(run.leader_output.shape[1])]
        for i, y in enumerate(run.outputs):
            header += [f"y{i + 1}_{k + 1}" for k in range(y.shape[1])]
    header.append("error_norm")
    return header


def write_run_csv(run: NetworkRun, path: PathLike, stride: int = 1) -> Path:
    parts = [run.t.reshape(-1, 1), run.leader, *run.agents]
    if run.outputs is not None:
        parts += [run.leader_output, *run.outputs]
    parts.append(run.error_norm.reshape(-1, 1))
    table = np.hstack(parts)
    idx = np.arange(0, table.shape[0], max(1, stride))
    if idx[-1] != table.shape[0] - 1:
        idx = np.append(idx, table.shape[0] - 1)
    return _write_rows(path, run_header(run), table[idx])


PLOT_TEMPLATE = '''"""Plot {title} from {csv_name} (generated)."""
import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
with (here / "{csv_name}").open(newline="") as f:
    rows = list(csv.reader(f))
header, data = rows[0], [[float(v) for v in r] for r in rows[1:]]
col = {{name: [r[i] for r in data] for i, name in enumerate(header)}}

fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=(8, 6))
for name in {series!r}:
    top.plot(col["t"], col[name], label=name, linewidth=2.0 if name.startswith("{ref_prefix}") else 1.0)
top.set_ylabel("{ylabel}")
top.legend(loc="upper right", ncol=2)
bottom.semilogy(col["t"], [max(v, 1e-16) for v in col["error_norm"]])
bottom.set_ylabel("error norm")
bottom.set_xlabel("t [s]")
fig.tight_layout()
out = here / "{png_name}"
fig.savefig(out, dpi=150)
if "--show" in sys.argv:
    plt.show()
print(out)
'''


def plot_script(run: NetworkRun, csv_name: str, png_name: str = "trajectories.png") -> str:
    header = run_header(run)
    if run.outputs is not None:
        series = [c for c in header if c.startswith("y") and c.endswith("_1")]
        ref_prefix, ylabel, title = "y0_", "output y", "agent and leader outputs"
    else:
        series = [c for c in header if c.startswith("x") and c.endswith("_1")]
        ref_prefix, ylabel, title = "x0_", "first state component", "agent and leader states"
    return PLOT_TEMPLATE.format(
        title=title,
        csv_name=csv_name,
        series=series,
        ref_prefix=ref_prefix,
        ylabel=ylabel,
        png_name=png_name,
    )
