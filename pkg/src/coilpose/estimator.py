"""Pose estimation: least-squares voltage cost and Nelder-Mead minimization.

The mobile pose is searched over five parameters: three Cartesian coordinates
plus azimuth/elevation of the attitude versor. The coil's axial symmetry makes
the sixth degree of freedom unobservable, and the attitude sign ambiguity is
resolved by canonicalizing the reported versor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fieldmodel import BeaconSet, Coil, MobilePose, vrms_profile
from .measurement import Measurement, SelectionPolicy, n_selected, select_measurements

# Reflection / expansion / contraction / shrink coefficients of the simplex.
ALPHA, GAMMA, RHO, SIGMA = 1.0, 2.0, 0.5, 0.5

# Poses closer than this to a beacon center take a flat penalty cost instead
# of evaluating the singular field.
SINGULARITY_RADIUS = 1e-3
PENALTY_COST = 1e12


class EstimationError(ValueError):
    """Estimation cannot proceed (empty selection, non-finite start, ...)."""


@dataclass(frozen=True)
class PoseParams:
    """Five-parameter pose: position plus attitude angles.

    attitude = (cos el * cos az, cos el * sin az, sin el); azimuth in
    [-pi, pi), elevation in [-pi/2, pi/2], azimuth pinned to 0 at the poles.
    """

    x: float
    y: float
    z: float
    azimuth: float
    elevation: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.azimuth, self.elevation])

    @classmethod
    def from_array(cls, arr) -> "PoseParams":
        x, y, z, az, el = (float(v) for v in arr)
        return cls(x, y, z, az, el)


@dataclass(frozen=True)
class FitOptions:
    """Nelder-Mead tuning knobs (all positive)."""

    max_iterations: int = 2000
    simplex_tolerance: float = 1e-9
    f_tolerance: float = 1e-24
    initial_step_position: float = 0.05
    initial_step_angle: float = 0.1
    restarts: int = 1

    def __post_init__(self) -> None:
        for name in ("max_iterations", "simplex_tolerance", "f_tolerance",
                     "initial_step_position", "initial_step_angle", "restarts"):
            if not getattr(self, name) > 0:
                raise EstimationError(f"{name} must be positive, got {getattr(self, name)}")

    def initial_steps(self) -> np.ndarray:
        p, a = self.initial_step_position, self.initial_step_angle
        return np.array([p, p, p, a, a])


@dataclass(frozen=True)
class EstimationResult:
    """Minimizer output plus fit diagnostics."""

    pose: MobilePose
    cost: float
    iterations: int
    converged: bool
    n_used: int


def pose_to_params(pose: MobilePose) -> PoseParams:
    """Five-parameter encoding of a pose; azimuth is 0 at the attitude poles."""
    nx, ny, nz = pose.attitude
    elevation = math.asin(min(1.0, max(-1.0, float(nz))))
    if abs(elevation) >= math.pi / 2 - 1e-15 or (nx == 0.0 and ny == 0.0):
        azimuth = 0.0
    else:
        azimuth = math.atan2(float(ny), float(nx))
    if azimuth == math.pi:  # keep azimuth in [-pi, pi)
        azimuth = -math.pi
    x, y, z = (float(v) for v in pose.position)
    return PoseParams(x, y, z, azimuth, elevation)


def params_to_pose(params: PoseParams) -> MobilePose:
    """Inverse of pose_to_params (attitude recovered up to sign conventions)."""
    return MobilePose(
        position=(params.x, params.y, params.z),
        attitude=_attitude_from_angles(params.azimuth, params.elevation),
    )


def _attitude_from_angles(azimuth: float, elevation: float) -> np.ndarray:
    ce = math.cos(elevation)
    return np.array([ce * math.cos(azimuth), ce * math.sin(azimuth), math.sin(elevation)])


def cost(
    theta: MobilePose,
    selected: list[Measurement],
    beacons: list[Coil],
    receiver: Coil,
    gain: float = 1.0,
    mode: str = "rms",
) -> float:
    """Sum of squared residuals between measured and modeled rms voltages.

    `selected` holds the measurements entering the fit (beacon ids index into
    `beacons`); the model side carries the same amplifier gain as the
    measurements. Near-singular poses take a flat penalty.
    """
    if not selected:
        raise EstimationError("cost requires at least one selected measurement")
    bset = BeaconSet.from_coils([beacons[m.beacon_id] for m in selected])
    v_hat = np.array([m.v_hat for m in selected])
    pos = theta.position
    dist = np.linalg.norm(bset.centers - pos[None, :], axis=1)
    if np.any(dist < SINGULARITY_RADIUS):
        return PENALTY_COST
    model = vrms_profile(bset, pos, theta.attitude, receiver, gain=gain, mode=mode)
    r = v_hat - model
    return float(r @ r)


def _cost_function(bset: BeaconSet, v_hat: np.ndarray, receiver: Coil,
                   gain: float, mode: str):
    # Inlined, allocation-light equivalent of gain * vrms_profile: this runs
    # a few hundred times per fit.
    from .fieldmodel import MU0_OVER_4PI, emf_coefficient

    cx, cy, cz = bset.centers.T.copy()
    mx, my, mz = bset.moments.T.copy()
    factor = gain * emf_coefficient(bset.frequency, mode) * receiver.windings * receiver.area
    singular_sq = SINGULARITY_RADIUS**2

    def f(params: np.ndarray) -> float:
        dx = params[0] - cx
        dy = params[1] - cy
        dz = params[2] - cz
        d_sq = dx * dx + dy * dy + dz * dz
        if d_sq.min() < singular_sq:
            return PENALTY_COST
        m_dot = mx * dx + my * dy + mz * dz  # (m . d), not yet normalized
        az, el = params[3], params[4]
        ce = math.cos(el)
        nx, ny, nz = ce * math.cos(az), ce * math.sin(az), math.sin(el)
        # B.n = mu0/(4 pi d^3) * (3 (m.dhat)(dhat.n) - m.n)
        n_dot_d = nx * dx + ny * dy + nz * dz
        m_dot_n = mx * nx + my * ny + mz * nz
        proj = (3.0 * m_dot * n_dot_d / d_sq - m_dot_n) / (d_sq * np.sqrt(d_sq))
        r = v_hat - (factor * MU0_OVER_4PI) * np.abs(proj)
        return float(r @ r)

    return f


def nelder_mead(
    f,
    x0,
    opts: FitOptions = FitOptions(),
    steps=None,
) -> tuple[np.ndarray, float, int, bool]:
    """Minimize f over R^n with the Nelder-Mead simplex method.

    The initial simplex is x0 plus one per-coordinate step. Terminates when
    both the simplex diameter and the function-value spread fall below their
    tolerances, or at max_iterations. Returns (argmin, f_min, iterations,
    converged); the best vertex value never increases.
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    if steps is None:
        steps = opts.initial_steps() if n == 5 else np.full(n, 0.1)
    steps = np.asarray(steps, dtype=float)

    best_x, best_f = x0.copy(), float(f(x0))
    if not math.isfinite(best_f):
        raise EstimationError(f"objective is not finite at the start point: {best_f}")

    total_iters = 0
    converged = False
    for _ in range(opts.restarts):
        verts = np.tile(best_x, (n + 1, 1))
        for i in range(n):
            verts[i + 1, i] += steps[i]
        fvals = np.array([best_f] + [float(f(v)) for v in verts[1:]])
        if not np.all(np.isfinite(fvals)):
            raise EstimationError("objective is not finite at an initial simplex vertex")

        converged = False
        while total_iters < opts.max_iterations:
            order = np.argsort(fvals, kind="stable")
            verts, fvals = verts[order], fvals[order]
            diameter = float(np.max(np.linalg.norm(verts[1:] - verts[0], axis=1)))
            spread = float(fvals[-1] - fvals[0])
            if diameter < opts.simplex_tolerance and spread < opts.f_tolerance:
                converged = True
                break
            total_iters += 1

            centroid = verts[:-1].mean(axis=0)
            xr = centroid + ALPHA * (centroid - verts[-1])
            fr = float(f(xr))
            if fr < fvals[0]:
                xe = centroid + GAMMA * (xr - centroid)
                fe = float(f(xe))
                if fe < fr:
                    verts[-1], fvals[-1] = xe, fe
                else:
                    verts[-1], fvals[-1] = xr, fr
            elif fr < fvals[-2]:
                verts[-1], fvals[-1] = xr, fr
            else:
                if fr < fvals[-1]:  # outside contraction
                    xc = centroid + RHO * (xr - centroid)
                else:  # inside contraction
                    xc = centroid - RHO * (centroid - verts[-1])
                fc = float(f(xc))
                if fc < min(fr, fvals[-1]):
                    verts[-1], fvals[-1] = xc, fc
                else:  # shrink toward the best vertex
                    for i in range(1, n + 1):
                        verts[i] = verts[0] + SIGMA * (verts[i] - verts[0])
                        fvals[i] = float(f(verts[i]))

        i_best = int(np.argmin(fvals))
        if fvals[i_best] <= best_f:
            best_x, best_f = verts[i_best].copy(), float(fvals[i_best])
        if total_iters >= opts.max_iterations:
            break

    return best_x, best_f, total_iters, converged


def estimate_pose(
    ms: list[Measurement],
    beacons: list[Coil],
    receiver: Coil,
    init: MobilePose,
    policy: SelectionPolicy,
    opts: FitOptions = FitOptions(),
    gain: float = 1.0,
    mode: str = "rms",
) -> EstimationResult:
    """Select measurements per policy and minimize the voltage cost from `init`.

    Raises EstimationError when the selection is empty; a fit that hits the
    iteration cap is returned with converged=False rather than raising. The
    reported attitude is unit-norm and canonicalized to the nonnegative-z
    hemisphere.
    """
    flagged = select_measurements(ms, policy)
    selected = [m for m in flagged if m.selected]
    used = n_selected(flagged)
    if used == 0:
        raise EstimationError("no measurements selected; estimation impossible")

    bset = BeaconSet.from_coils([beacons[m.beacon_id] for m in selected])
    v_hat = np.array([m.v_hat for m in selected])
    f = _cost_function(bset, v_hat, receiver, gain, mode)

    x0 = pose_to_params(init).as_array()
    x_best, f_best, iters, converged = nelder_mead(f, x0, opts)
    pose = params_to_pose(PoseParams.from_array(x_best)).canonical()
    return EstimationResult(pose=pose, cost=f_best, iterations=iters,
                            converged=converged, n_used=used)
