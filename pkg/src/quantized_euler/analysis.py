"""Physical fields from matrix states, vortex-blob tracking and regime classification."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage, optimize

from .basis import QuantBasis, SpectralCoeffs, build_basis, matrix_to_coeffs
from .harmonics import equiangular_grid, gauss_grid, synthesize, unit_vectors
from .initial_conditions import coriolis_matrix
from .io import load_matrix, read_csv, save_pgm, save_raster, write_csv
from .laplacian import LaplacianOperator, build_laplacian

__all__ = [
    "FieldRaster",
    "Blob",
    "BlobTrack",
    "synthesize_raster",
    "stream_function",
    "detect_blobs",
    "link_tracks",
    "fit_rotation_axis",
    "classify_final_state",
    "regime_label",
    "scatter_data",
    "write_tracks",
    "analyze_run",
]


@dataclass
class FieldRaster:
    """Real field sampled on a (theta, phi) grid; ``values[i, j]`` is at ``theta[i], phi[j]``."""

    theta: np.ndarray
    phi: np.ndarray
    values: np.ndarray
    weights: np.ndarray
    t: float = 0.0

    @property
    def n_phi(self) -> int:
        return self.phi.size

    @property
    def n_theta(self) -> int:
        return self.theta.size

    def scaled(self, k: float) -> "FieldRaster":
        return FieldRaster(self.theta, self.phi, self.values * k, self.weights, self.t)


def synthesize_raster(
    c: SpectralCoeffs, n_phi: int, n_theta: int, t: float = 0.0, grid: str = "equiangular"
) -> FieldRaster:
    """Evaluate the field on a cell-centred equiangular grid (or Gauss-Legendre rows)."""
    if n_phi < 4 or n_theta < 4:
        raise ValueError("grid sizes must be >= 4")
    make = {"equiangular": equiangular_grid, "gauss": gauss_grid}[grid]
    theta, phi, w = make(n_theta, n_phi)
    values = synthesize(c, theta, phi).real
    return FieldRaster(theta, phi, values, w, t)


def stream_function(
    W: np.ndarray, lap: LaplacianOperator, basis: QuantBasis, F: np.ndarray | None = None, l_max: int | None = None
) -> SpectralCoeffs:
    """Coefficients of ``psi = lap^-1 (W - F)``; the mean is dropped."""
    X = W if F is None else W - F
    return matrix_to_coeffs(lap.solve(X), basis, l_max)


@dataclass
class Blob:
    center: np.ndarray
    sign: int
    strength: float
    area: float


def _find(parent, a):
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


def _label_sphere(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """8-connected components with periodic phi and all cells of a polar row adjacent."""
    labels, n = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    if n == 0:
        return labels, 0
    parent = list(range(n + 1))

    def union(a, b):
        ra, rb = _find(parent, a), _find(parent, b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    # seam between the last and first columns (including diagonals)
    n_theta = mask.shape[0]
    for i in range(n_theta):
        a = labels[i, -1]
        if not a:
            continue
        for di in (-1, 0, 1):
            if 0 <= i + di < n_theta and labels[i + di, 0]:
                union(a, labels[i + di, 0])
    for row in (0, n_theta - 1):
        ids = np.unique(labels[row][labels[row] > 0])
        for b in ids[1:]:
            union(ids[0], b)
    root = np.array([_find(parent, k) for k in range(n + 1)])
    uniq, compact = np.unique(root, return_inverse=True)
    # label 0 maps to itself because root[0] = 0 is the smallest root
    return compact[labels], uniq.size - 1


def detect_blobs(r: FieldRaster, threshold_frac: float = 0.3) -> list[Blob]:
    """Connected regions with ``|w| >= threshold_frac * max|w|``, split by sign."""
    if not 0 < threshold_frac < 1:
        raise ValueError("threshold_frac must lie in (0, 1)")
    v = r.values
    vmax = np.max(np.abs(v))
    if vmax == 0:
        return []
    x = unit_vectors(r.theta, r.phi)
    out = []
    for sign in (1, -1):
        mask = sign * v >= threshold_frac * vmax
        labels, n = _label_sphere(mask)
        for k in range(1, n + 1):
            sel = labels == k
            w = np.abs(v[sel]) * r.weights[sel]
            c = w @ x[sel]
            out.append(
                Blob(
                    center=c / np.linalg.norm(c),
                    sign=sign,
                    strength=float(np.sum(v[sel] * r.weights[sel])),
                    area=float(np.sum(r.weights[sel])),
                )
            )
    return out


@dataclass
class BlobTrack:
    id: int
    sign: int
    frames: list = field(default_factory=list)
    times: list = field(default_factory=list)
    centers: list = field(default_factory=list)
    strengths: list = field(default_factory=list)
    areas: list = field(default_factory=list)

    def append(self, frame: int, t: float, blob: Blob):
        self.frames.append(frame)
        self.times.append(t)
        self.centers.append(blob.center)
        self.strengths.append(blob.strength)
        self.areas.append(blob.area)

    @property
    def positions(self) -> np.ndarray:
        return np.array(self.centers)

    def __len__(self):
        return len(self.frames)


def _geodesic(a, b) -> float:
    return float(np.arctan2(np.linalg.norm(np.cross(a, b)), np.dot(a, b)))


def link_tracks(frames, radius: float = 0.5, max_gap: int = 1) -> list[BlobTrack]:
    """Greedy nearest-centroid linking.

    ``frames`` is a sequence of ``(t, blobs)`` in time order. A blob may join
    a track of the same sign whose last blob is at most ``max_gap`` frames
    back and within ``radius`` radians per frame of gap; closest pairs are
    matched first and unmatched blobs start new tracks.
    """
    tracks: list[BlobTrack] = []
    for k, (t, blobs) in enumerate(frames):
        live = [tr for tr in tracks if k - tr.frames[-1] <= max_gap]
        pairs = []
        for a, tr in enumerate(live):
            gap = k - tr.frames[-1]
            for b, blob in enumerate(blobs):
                if blob.sign != tr.sign:
                    continue
                d = _geodesic(tr.centers[-1], blob.center)
                if d <= radius * gap:
                    pairs.append((d, a, b))
        pairs.sort()
        used_t, used_b = set(), set()
        for d, a, b in pairs:
            if a in used_t or b in used_b:
                continue
            used_t.add(a)
            used_b.add(b)
            live[a].append(k, t, blobs[b])
        for b, blob in enumerate(blobs):
            if b not in used_b:
                tr = BlobTrack(id=len(tracks), sign=blob.sign)
                tr.append(k, t, blob)
                tracks.append(tr)
    return tracks


def fit_rotation_axis(tracks) -> tuple[np.ndarray, float]:
    """Axis about which every track keeps a constant polar angle.

    ``tracks`` holds :class:`BlobTrack` objects or ``(k, 3)`` arrays of unit
    vectors. The starting guess is the direction of least within-track
    scatter; it is refined by least squares on the deviations of each
    track's polar angles from that track's mean. Returns the unit axis
    (oriented to the positive hemisphere of its largest component) and the
    RMS deviation in radians.
    """
    paths = [np.asarray(tr.positions if isinstance(tr, BlobTrack) else tr, dtype=float) for tr in tracks]
    paths = [p for p in paths if p.shape[0] >= 2]
    if not paths:
        raise ValueError("rotation axis needs at least one track with two frames")
    centred = np.concatenate([p - p.mean(axis=0) for p in paths])
    cov = centred.T @ centred
    evals, evecs = np.linalg.eigh(cov)
    if evals[-1] <= 1e-24 * len(centred):
        raise ValueError("degenerate input: no motion to define a rotation axis")

    def residuals(a):
        a = a / np.linalg.norm(a)
        res = []
        for p in paths:
            ang = np.arccos(np.clip(p @ a, -1.0, 1.0))
            res.append(ang - ang.mean())
        return np.concatenate(res)

    best = None
    # the in-plane directions can win for short arcs, so try all three
    for k in range(3):
        sol = optimize.least_squares(residuals, evecs[:, k], xtol=1e-15, ftol=1e-15, gtol=1e-15)
        cost = float(np.mean(sol.fun**2))
        if best is None or cost < best[1]:
            best = (sol.x / np.linalg.norm(sol.x), cost)
    axis = best[0]
    if axis[np.argmax(np.abs(axis))] < 0:
        axis = -axis
    return axis, float(np.sqrt(np.mean(residuals(axis) ** 2)))


def classify_final_state(tracks, n_frames: int, window: int, strength_floor: float = 0.1) -> int:
    """Number of tracks present in every one of the last ``window`` frames.

    Tracks whose mean |strength| over the window is below ``strength_floor``
    times that of the strongest persistent track are not counted.
    """
    if window < 10:
        raise ValueError("window must cover at least 10 frames")
    if window > n_frames:
        raise ValueError("window longer than the run")
    first = n_frames - window
    persistent = []
    for tr in tracks:
        frames = set(tr.frames)
        if all(k in frames for k in range(first, n_frames)):
            s = [abs(st) for f, st in zip(tr.frames, tr.strengths) if f >= first]
            persistent.append(np.mean(s))
    if not persistent:
        return 0
    top = max(persistent)
    return int(sum(s >= strength_floor * top for s in persistent))


def regime_label(count: int) -> str:
    return str(count) if count in (2, 3, 4) else "other"


def scatter_data(
    W, lap, basis, F=None, n_phi: int = 128, n_theta: int = 64, max_points: int = 100_000, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """``(psi, omega)`` samples on a raster, subsampled to ``max_points``."""
    c = matrix_to_coeffs(W, basis)
    omega = synthesize_raster(c, n_phi, n_theta).values.ravel()
    psi = synthesize_raster(stream_function(W, lap, basis, F), n_phi, n_theta).values.ravel()
    if omega.size > max_points:
        idx = np.sort(np.random.default_rng(seed).choice(omega.size, max_points, replace=False))
        psi, omega = psi[idx], omega[idx]
    return psi, omega


def write_tracks(path, tracks) -> None:
    rows = []
    for tr in tracks:
        for f, t, x, s in zip(tr.frames, tr.times, tr.centers, tr.strengths):
            rows.append([tr.id, f, t, *x, tr.sign, s])
    write_csv(path, ["track_id", "frame", "t", "x", "y", "z", "sign", "strength"], rows)


def analyze_run(
    run_dir,
    threshold: float = 0.3,
    link_radius: float = 0.5,
    window_frac: float = 0.1,
    start_time: float = 0.0,
    pgm: bool = False,
) -> dict:
    """Rasters, tracks, axis fit, classification and scatter data for a run directory.

    Frames before ``start_time`` are rasterized but excluded from tracking
    (blobs need time to form from the initial data).
    """
    run_dir = Path(run_dir)
    manifest = json.loads((run_dir / "manifest.json").read_text())
    cfg = manifest["config"]
    sps = float(manifest["seconds_per_step"])
    frame_files = sorted((run_dir / "frames").glob("frame_*.zsw"))
    if not frame_files:
        raise FileNotFoundError(f"{run_dir}: no frames")
    N = cfg["n"]
    basis = build_basis(N)
    lap = build_laplacian(N)
    raster_dir = run_dir / "rasters"
    raster_dir.mkdir(exist_ok=True)
    frames = []
    W = None
    for path in frame_files:
        W, step, _ = load_matrix(path)
        t = step * sps
        r = synthesize_raster(matrix_to_coeffs(W, basis), cfg["grid_phi"], cfg["grid_theta"], t)
        save_raster(raster_dir / (path.stem + ".zsr"), r.values, t)
        if pgm:
            save_pgm(raster_dir / (path.stem + ".pgm"), r.values)
        if t >= start_time:
            frames.append((t, detect_blobs(r, threshold)))

    summary = {"frames": len(frame_files), "tracked_frames": len(frames)}
    header, diag = read_csv(run_dir / "diagnostics.csv")
    g = diag[:, header.index("gamma")]
    summary["gamma"] = float(g[0])
    summary["gamma_spread"] = float(np.ptp(g))

    tracks = link_tracks(frames, link_radius)
    write_tracks(run_dir / "tracks.csv", tracks)
    window = max(10, int(round(window_frac * len(frames))))
    if len(frames) >= window:
        count = classify_final_state(tracks, len(frames), window)
        summary["blob_count"] = count
        summary["regime"] = regime_label(count)
        keep = [tr for tr in tracks if len(tr) >= window]
        try:
            axis, res = fit_rotation_axis(keep)
            summary["axis"] = axis.tolist()
            summary["axis_residual"] = res
        except ValueError:
            pass
    F = None
    if cfg["omega_rotation"] != 0.0:
        F = coriolis_matrix(cfg["omega_rotation"], basis) / float(manifest["initial_scale"])
    psi, omega = scatter_data(W, lap, basis, F, cfg["grid_phi"], cfg["grid_theta"])
    write_csv(run_dir / "scatter.csv", ["psi", "omega"], zip(psi, omega))
    (run_dir / "analysis.json").write_text(json.dumps(summary, indent=2) + "\n")
    return summary
