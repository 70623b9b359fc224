"""Run configuration and the precompute / time-step / output driver."""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .basis import QuantBasis, build_basis, coeffs_to_matrix
from .initial_conditions import (
    FOUR_BLOBS,
    BlobSpec,
    RandomFieldParams,
    RHWaveSpec,
    coriolis_matrix,
    gaussian_blobs,
    rh_wave,
    sample_l2_random,
    zero_momentum_projection,
)
from .integrators import SimState, diagnostics, heun_step, isomp_step, time_scale
from .io import fmt, load_matrix, save_matrix, sha256, write_csv
from .laplacian import LaplacianOperator, build_laplacian

__all__ = [
    "ConfigError",
    "SimConfig",
    "load_config",
    "parse_config",
    "read_blob_file",
    "initial_state",
    "make_stepper",
    "run",
    "RunResult",
    "DIAG_HEADER",
]

log = logging.getLogger(__name__)

DIAG_HEADER = ["step", "t", "H", "C2", "C3", "C4", "Lx", "Ly", "Lz", "gamma"]
IC_KINDS = ("random_l2", "random_l2_zero_momentum", "gauss_blobs", "rh_wave")


class ConfigError(ValueError):
    pass


def _parse_bool(v: str) -> bool:
    v = v.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _parse_amplitudes(text: str) -> dict:
    """``"4: 7.73, -4: 7.73"`` -> ``{4: 7.73, -4: 7.73}`` (values may be complex)."""
    out = {}
    for item in filter(None, (p.strip() for p in text.split(","))):
        m, _, v = item.partition(":")
        if not _:
            raise ValueError(f"amplitude entry {item!r} is not of the form m:value")
        out[int(m)] = complex(v.strip().replace(" ", ""))
    return out


@dataclass
class SimConfig:
    n: int = 33
    h: float = 0.1
    steps: int = 100
    integrator: str = "heun"
    tol: float = 1e-13
    max_iters: int = 50
    omega_rotation: float = 0.0
    ic: str = "random_l2"
    seed: int = 0
    eps: float = 0.01
    blob_file: str = ""
    rh_c: float = 1.0
    rh_l: int = 5
    rh_amplitudes: str = ""
    normalize: str = "auto"
    d_every: int = 1
    f_every: int = 0
    c_every: int = 0
    spectrum_every: int = 1000
    out_dir: str = "run"
    grid_phi: int = 128
    grid_theta: int = 64

    def validate(self) -> "SimConfig":
        problems = []
        if self.n < 2:
            problems.append("n must be >= 2")
        if not self.h > 0:
            problems.append("h must be positive")
        if self.steps < 0:
            problems.append("steps must be >= 0")
        if self.integrator not in ("isomp", "heun"):
            problems.append(f"integrator must be isomp or heun, got {self.integrator!r}")
        if self.ic not in IC_KINDS:
            problems.append(f"ic must be one of {', '.join(IC_KINDS)}, got {self.ic!r}")
        if not self.tol > 0 or self.max_iters < 1:
            problems.append("tol must be positive and max_iters >= 1")
        if self.eps <= 0:
            problems.append("eps must be positive")
        if min(self.d_every, self.f_every, self.c_every, self.spectrum_every) < 0:
            problems.append("output cadences must be >= 0")
        if self.grid_phi < 4 or self.grid_theta < 4:
            problems.append("grid sizes must be >= 4")
        if self.normalize not in ("auto", "true", "false"):
            problems.append("normalize must be auto, true or false")
        if self.ic == "rh_wave":
            try:
                _parse_amplitudes(self.rh_amplitudes)
            except ValueError as e:
                problems.append(str(e))
            if not 1 <= self.rh_l <= self.n - 1:
                problems.append(f"rh_l must lie in 1..{self.n - 1}")
        if problems:
            raise ConfigError("; ".join(problems))
        return self

    @property
    def normalized(self) -> bool:
        if self.normalize == "auto":
            return self.omega_rotation == 0.0
        return self.normalize == "true"

    def updated(self, **overrides) -> "SimConfig":
        known = {f.name for f in dataclasses.fields(self)}
        bad = set(overrides) - known
        if bad:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(bad))}")
        return dataclasses.replace(self, **overrides).validate()

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in dataclasses.asdict(self).items())


def parse_config(text: str, base: SimConfig | None = None) -> SimConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    fields = {f.name: f for f in dataclasses.fields(SimConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key, val = key.strip().lower(), val.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected key = value")
        if key not in fields:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        kind = fields[key].type
        try:
            if kind == "int":
                values[key] = int(val)
            elif kind == "float":
                values[key] = float(val)
            else:
                values[key] = val
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value {val!r} for {key}") from None
    return (base or SimConfig()).updated(**values)


def load_config(path) -> SimConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    return parse_config(text)


def read_blob_file(path) -> BlobSpec:
    """Blob CSV: optional ``# width = a`` line, a ``phi,theta,gamma`` header, then rows."""
    width = 20.0
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, val = line.lstrip("#").partition("=")
            if key.strip().lower() == "width":
                width = float(val)
            continue
        parts = [p.strip() for p in line.split(",")]
        if parts[0].lower() == "phi":
            continue
        if len(parts) != 3:
            raise ConfigError(f"{path}: expected phi,theta,gamma rows, got {line!r}")
        rows.append([float(p) for p in parts])
    if not rows:
        raise ConfigError(f"{path}: no blobs")
    a = np.array(rows)
    return BlobSpec.from_angles(a[:, 0], a[:, 1], a[:, 2], width)


def rh_spec(cfg: SimConfig) -> RHWaveSpec:
    return RHWaveSpec(
        C=cfg.rh_c, l=cfg.rh_l, amplitudes=_parse_amplitudes(cfg.rh_amplitudes), omega=cfg.omega_rotation
    )


def initial_state(cfg: SimConfig, basis: QuantBasis) -> tuple[SimState, float]:
    """Initial :class:`SimState` and the scale factor it was divided by."""
    N = cfg.n
    if cfg.ic in ("random_l2", "random_l2_zero_momentum"):
        c = sample_l2_random(RandomFieldParams(seed=cfg.seed, l_max=N - 1, eps=cfg.eps))
        if cfg.ic == "random_l2_zero_momentum":
            c = zero_momentum_projection(c)
        W = coeffs_to_matrix(c, basis)
    elif cfg.ic == "gauss_blobs":
        if cfg.blob_file:
            spec = read_blob_file(cfg.blob_file)
        else:
            spec = BlobSpec.from_angles(FOUR_BLOBS["phi"], FOUR_BLOBS["theta"], FOUR_BLOBS["gamma"])
        W = coeffs_to_matrix(gaussian_blobs(spec, N), basis)
    else:
        W = rh_wave(rh_spec(cfg), basis, 0.0)
    F = coriolis_matrix(cfg.omega_rotation, basis) if cfg.omega_rotation != 0.0 else None
    scale = 1.0
    if cfg.normalized:
        scale = float(np.linalg.norm(W))
        if scale == 0.0:
            raise ConfigError("initial vorticity is zero")
        W = W / scale
        if F is not None:
            F = F / scale
    sps = time_scale(N, cfg.h, scale)
    return SimState(W=W, step=0, h=cfg.h, F=F, seconds_per_step=sps), scale


def make_stepper(cfg: SimConfig, lap: LaplacianOperator):
    if cfg.integrator == "heun":
        return lambda s: heun_step(s, lap)
    return lambda s: isomp_step(s, lap, tol=cfg.tol, max_iters=cfg.max_iters)


@dataclass
class RunResult:
    out_dir: Path
    state: SimState
    scale: float
    files: dict = field(default_factory=dict)


def _frame_path(out: Path, step: int) -> Path:
    return out / "frames" / f"frame_{step:08d}.zsw"


def _truncate_csv(path: Path, last_step: int) -> None:
    """Drop rows written after ``last_step`` (used when resuming)."""
    if not path.exists():
        return
    lines = path.read_text().splitlines(keepends=True)
    keep = lines[:1] + [ln for ln in lines[1:] if int(ln.split(",", 1)[0]) <= last_step]
    path.write_text("".join(keep))


def run(cfg: SimConfig, resume=None, out_dir=None) -> RunResult:
    """Integrate ``cfg.steps`` steps and write outputs under ``out_dir``.

    Diagnostics are written at step 0, every ``d_every`` steps and at the end;
    frames (ZSW1 matrices) likewise with ``f_every``; checkpoints every
    ``c_every`` steps and at the end. With ``resume`` the run continues from a
    checkpoint and rows beyond that step in existing CSV files are discarded,
    so a split run reproduces the outputs of an uninterrupted one.
    """
    cfg.validate()
    out = Path(out_dir or cfg.out_dir)
    (out / "frames").mkdir(parents=True, exist_ok=True)
    (out / "checkpoints").mkdir(exist_ok=True)
    (out / "config.txt").write_text(cfg.to_text())

    basis = build_basis(cfg.n)
    lap = build_laplacian(cfg.n)
    state, scale = initial_state(cfg, basis)
    diag_path = out / "diagnostics.csv"
    spec_path = out / "spectrum.csv"
    if resume is not None:
        W, step, h = load_matrix(resume)
        if W.shape[0] != cfg.n or h != cfg.h:
            raise ConfigError(f"checkpoint {resume} has N={W.shape[0]}, h={h}; config has N={cfg.n}, h={cfg.h}")
        state = dataclasses.replace(state, W=W, step=step)
        _truncate_csv(diag_path, step)
        _truncate_csv(spec_path, step)
        log.info("resuming from %s at step %d", resume, step)
    else:
        write_csv(diag_path, DIAG_HEADER, [])
        write_csv(spec_path, ["step", *(f"e{k}" for k in range(cfg.n))], [])
        _emit(cfg, out, state, lap, basis, diag_path, spec_path, force=True)

    stepper = make_stepper(cfg, lap)
    try:
        while state.step < cfg.steps:
            state = stepper(state)
            _emit(cfg, out, state, lap, basis, diag_path, spec_path, force=state.step == cfg.steps)
    finally:
        # keep the last good state on disk whatever happened
        save_matrix(out / "checkpoints" / f"ckpt_{state.step:08d}.zsw", state.W, state.step, state.h)
    result = RunResult(out, state, scale)
    _write_manifest(cfg, result)
    return result


def _emit(cfg, out, state, lap, basis, diag_path, spec_path, force=False):
    k = state.step
    due = lambda every: force or (every > 0 and k % every == 0)
    if due(cfg.d_every):
        d = diagnostics(state.W, lap, basis, F=state.F, t=state.t)
        write_csv(diag_path, None, [d.row(k)], mode="a")
    if due(cfg.spectrum_every):
        ev = np.linalg.eigvalsh(-1j * state.W)
        write_csv(spec_path, None, [[k, *ev]], mode="a")
    if due(cfg.f_every):
        save_matrix(_frame_path(out, k), state.W, k, state.h)
    if cfg.c_every > 0 and k % cfg.c_every == 0 and k > 0:
        save_matrix(out / "checkpoints" / f"ckpt_{k:08d}.zsw", state.W, k, state.h)


def _write_manifest(cfg: SimConfig, result: RunResult) -> None:
    out = result.out_dir
    files = sorted(p for p in out.rglob("*") if p.is_file() and p.name != "manifest.json")
    result.files = {str(p.relative_to(out)): sha256(p) for p in files}
    manifest = {
        "config": dataclasses.asdict(cfg),
        "seed": cfg.seed,
        "version": __version__,
        "seconds_per_step": fmt(result.state.seconds_per_step),
        "initial_scale": fmt(result.scale),
        "final_step": result.state.step,
        "files": result.files,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
