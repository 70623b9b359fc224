"""Point vortices on the unit sphere.

Equations of motion::

    dx_i/dt = 1/(4 pi) sum_{j != i} G_j (x_j x x_i) / (1 - x_i . x_j)

with Hamiltonian ``H = -1/(4 pi) sum_{i<j} G_i G_j log(1 - x_i . x_j)``.
Stepping uses the implicit midpoint rule on the embedding coordinates: the
vector field conserves ``sum G_i x_i`` and every ``|x_i|^2`` for arbitrary
points of R^3, and the midpoint rule keeps such linear and quadratic
invariants exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numba
import numpy as np

from .integrators import NonConvergence
from .io import write_csv

__all__ = [
    "Collision",
    "DegenerateConfiguration",
    "PointVortexState",
    "pv_rhs",
    "pv_step",
    "pv_integrate",
    "pv_invariants",
    "strengths_from_positions",
    "positions_from_angles",
    "read_pv_file",
    "write_trajectory",
    "DELTA_MIN",
]

DELTA_MIN = 1e-10


class Collision(ArithmeticError):
    """Two vortices are closer than the collision guard allows."""


class DegenerateConfiguration(ValueError):
    pass


@dataclass(frozen=True)
class PointVortexState:
    x: np.ndarray
    gamma: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        g = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        if x.shape != (g.size, 3):
            raise ValueError(f"positions {x.shape} do not match {g.size} strengths")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "gamma", g)

    @property
    def n(self) -> int:
        return self.gamma.size


def positions_from_angles(phi, theta) -> np.ndarray:
    phi, theta = np.asarray(phi, float), np.asarray(theta, float)
    return np.stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=1)


@numba.njit(cache=True)
def _rhs(x, gamma, out):
    """Velocities into ``out``; returns the smallest ``1 - x_i . x_j``."""
    n = x.shape[0]
    dmin = np.inf
    out[:] = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            d = 1.0 - (x[i, 0] * x[j, 0] + x[i, 1] * x[j, 1] + x[i, 2] * x[j, 2])
            dmin = min(dmin, d)
            # c = x_j x x_i
            c0 = x[j, 1] * x[i, 2] - x[j, 2] * x[i, 1]
            c1 = x[j, 2] * x[i, 0] - x[j, 0] * x[i, 2]
            c2 = x[j, 0] * x[i, 1] - x[j, 1] * x[i, 0]
            fi = gamma[j] / (4.0 * math.pi * d)
            fj = gamma[i] / (4.0 * math.pi * d)
            out[i, 0] += fi * c0
            out[i, 1] += fi * c1
            out[i, 2] += fi * c2
            out[j, 0] -= fj * c0
            out[j, 1] -= fj * c1
            out[j, 2] -= fj * c2
    return dmin


@numba.njit(cache=True)
def _midpoint(x, gamma, h, steps, tol, max_iters, delta_min, every, traj):
    """Advance ``x`` in place; store every ``every``-th state in ``traj``.

    Returns 0 on success, -1 on collision and -2 on non-convergence, plus the
    number of completed steps.
    """
    n = x.shape[0]
    v = np.empty_like(x)
    mid = np.empty_like(x)
    new = np.empty_like(x)
    trial = np.empty_like(x)
    k = 0
    for step in range(steps):
        if _rhs(x, gamma, v) <= delta_min:
            return -1, step
        for i in range(n):
            for c in range(3):
                new[i, c] = x[i, c] + h * v[i, c]
        ok = False
        for it in range(max_iters):
            for i in range(n):
                for c in range(3):
                    mid[i, c] = 0.5 * (x[i, c] + new[i, c])
            if _rhs(mid, gamma, v) <= delta_min:
                return -1, step
            delta = 0.0
            for i in range(n):
                for c in range(3):
                    trial[i, c] = x[i, c] + h * v[i, c]
                    delta = max(delta, abs(trial[i, c] - new[i, c]))
                    new[i, c] = trial[i, c]
            if delta <= tol:
                ok = True
                break
        if not ok:
            return -2, step
        for i in range(n):
            r = math.sqrt(new[i, 0] ** 2 + new[i, 1] ** 2 + new[i, 2] ** 2)
            for c in range(3):
                x[i, c] = new[i, c] / r
        if every > 0 and (step + 1) % every == 0:
            traj[k] = x
            k += 1
    return 0, steps


def pv_rhs(state: PointVortexState, delta_min: float = DELTA_MIN) -> np.ndarray:
    """Velocities of all vortices, shape ``(n, 3)``."""
    v = np.empty_like(state.x)
    if _rhs(state.x, state.gamma, v) <= delta_min:
        raise Collision(f"two vortices within 1 - x.y <= {delta_min}")
    return v


def _advance(state, h, steps, every, tol, max_iters, delta_min):
    x = state.x.copy()
    count = steps // every if every > 0 else 0
    traj = np.empty((count, state.n, 3))
    code, done = _midpoint(x, state.gamma, float(h), int(steps), tol, max_iters, delta_min, int(every), traj)
    if code == -1:
        raise Collision(f"vortices collided at step {done}")
    if code == -2:
        raise NonConvergence(f"midpoint iteration did not converge at step {done}")
    return replace(state, x=x, t=state.t + steps * h), traj


def pv_step(
    state: PointVortexState, h: float, tol: float = 1e-13, max_iters: int = 50, delta_min: float = DELTA_MIN
) -> PointVortexState:
    """One implicit midpoint step followed by renormalization to the sphere."""
    return _advance(state, h, 1, 0, tol, max_iters, delta_min)[0]


def pv_integrate(
    state: PointVortexState,
    h: float,
    steps: int,
    every: int = 1,
    tol: float = 1e-13,
    max_iters: int = 50,
    delta_min: float = DELTA_MIN,
) -> tuple[PointVortexState, np.ndarray, np.ndarray]:
    """Run ``steps`` steps; returns the final state, sample times and positions.

    Positions are sampled at the start and after every ``every`` steps, so the
    returned array has shape ``(1 + steps // every, n, 3)``.
    """
    if every < 1:
        raise ValueError("every must be >= 1")
    final, traj = _advance(state, h, steps, every, tol, max_iters, delta_min)
    traj = np.concatenate([state.x[None], traj])
    times = state.t + h * every * np.arange(traj.shape[0])
    return final, times, traj


def pv_invariants(state: PointVortexState, delta_min: float = DELTA_MIN) -> tuple[float, np.ndarray]:
    """Hamiltonian and momentum ``sum G_i x_i``."""
    x, g = state.x, state.gamma
    H = 0.0
    for i in range(state.n):
        for j in range(i + 1, state.n):
            d = 1.0 - float(x[i] @ x[j])
            if d <= delta_min:
                raise Collision(f"vortices {i} and {j} within 1 - x.y <= {delta_min}")
            H -= g[i] * g[j] * math.log(d)
    return H / (4.0 * math.pi), g @ x


def strengths_from_positions(x, gamma1: float = 1.0, rcond: float = 1e-10) -> np.ndarray:
    """Strengths with ``sum G_i x_i = 0`` and ``G_1 = gamma1``.

    Solves the 3 x (n-1) system for the remaining strengths (least squares
    when n > 4).
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = x.shape[0]
    if n < 2 or x.shape[1] != 3:
        raise ValueError("need at least two positions in R^3")
    A = x[1:].T
    sv = np.linalg.svd(A, compute_uv=False)
    if sv.size < min(3, n - 1) or sv[-1] <= rcond * max(sv[0], 1.0):
        raise DegenerateConfiguration("positions do not determine the strengths uniquely")
    rest, *_ = np.linalg.lstsq(A, -gamma1 * x[0], rcond=None)
    return np.concatenate([[gamma1], rest])


def read_pv_file(path) -> PointVortexState:
    """CSV with header ``phi,theta,gamma`` (gamma column optional).

    Missing strengths are recovered from the positions with the first one
    set to 1.
    """
    rows = []
    header = None
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if header is None and not _is_number(parts[0]):
            header = [p.lower() for p in parts]
            continue
        rows.append([float(p) for p in parts])
    if not rows:
        raise ValueError(f"{path}: no vortices")
    header = header or ["phi", "theta", "gamma"][: len(rows[0])]
    a = np.array(rows)
    col = {name: k for k, name in enumerate(header)}
    x = positions_from_angles(a[:, col["phi"]], a[:, col["theta"]])
    g = a[:, col["gamma"]] if "gamma" in col else strengths_from_positions(x)
    return PointVortexState(x, g)


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def write_trajectory(out_dir, times, traj, gamma) -> tuple[Path, Path]:
    """Write ``trajectory.csv`` and ``invariants.csv``; returns both paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n = traj.shape[1]
    head = ["t"] + [f"{c}{i}" for i in range(n) for c in "xyz"]
    tpath, ipath = out / "trajectory.csv", out / "invariants.csv"
    write_csv(tpath, head, ([t, *x.ravel()] for t, x in zip(times, traj)))
    rows = []
    for t, x in zip(times, traj):
        H, L = pv_invariants(PointVortexState(x, gamma))
        rows.append([t, H, *L])
    write_csv(ipath, ["t", "H", "Lx", "Ly", "Lz"], rows)
    return tpath, ipath
