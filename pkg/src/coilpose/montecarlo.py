"""Monte Carlo experiment harness: trial batches, error metrics and reports.

A run sweeps every mobile pose of the scenario grid, synthesizes noisy
measurements (optionally from a perturbed copy of the constellation), fits the
pose and records the errors. Everything is derived deterministically from the
master seed: attitude draws, per-trial noise, perturbations and initial-guess
offsets each use their own counter-keyed substream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constellation import (
    Constellation,
    MobileGridSpec,
    PerturbationSpec,
    mobile_grid,
    perturb_beacons,
)
from .estimator import (
    EstimationError,
    FitOptions,
    PoseParams,
    estimate_pose,
    params_to_pose,
    pose_to_params,
)
from .fieldmodel import BeaconSet, Coil, MobilePose, vrms_profile
from .measurement import NoiseModel, SelectionPolicy, snr_db, synthesize_measurements

INIT_MODES = ("truth", "perturbed-truth", "fixed")

# Outlier flags follow the success targets: 1 cm position, 1 degree attitude.
D_TARGET = 0.01
ALPHA_TARGET_DEG = 1.0

# Recorded when estimation is impossible for a trial.
_NULL_POSE = MobilePose((0.0, 0.0, 0.0), (0.0, 0.0, 1.0))


class ExperimentError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class InitSpec:
    """How the optimizer is initialized for each trial.

    truth: start at the true pose. perturbed-truth: truth plus uniform errors
    in each coordinate and in the two attitude angles. fixed: a user-supplied
    pose shared by all trials.
    """

    mode: str = "truth"
    position_bound: float = 0.10
    angle_bound_deg: float = 18.0
    fixed_pose: MobilePose | None = None

    def __post_init__(self) -> None:
        if self.mode not in INIT_MODES:
            raise ExperimentError(f"unknown init mode {self.mode!r}, expected one of {INIT_MODES}")
        if self.mode == "fixed" and self.fixed_pose is None:
            raise ExperimentError("fixed init mode requires fixed_pose")
        if self.position_bound < 0 or self.angle_bound_deg < 0:
            raise ExperimentError("init perturbation bounds must be >= 0")


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one Monte Carlo scenario."""

    constellation: Constellation
    mobile: MobileGridSpec
    receiver: Coil
    noise: NoiseModel
    selection: SelectionPolicy
    gain: float = 1.0
    init: InitSpec = InitSpec()
    perturbation: PerturbationSpec | None = None
    trials_per_pose: int = 1
    master_seed: int = 0
    fit: FitOptions = field(default_factory=FitOptions)
    label: str = ""

    def __post_init__(self) -> None:
        if self.trials_per_pose < 1:
            raise ExperimentError("trials_per_pose must be >= 1")
        if not self.gain > 0:
            raise ExperimentError("gain must be > 0")


@dataclass(frozen=True)
class TrialRecord:
    """Outcome of one (pose, trial) estimation."""

    pose_index: int
    trial: int
    pose_true: MobilePose
    pose_est: MobilePose
    e_d: float
    e_alpha_deg: float
    n_used: int
    converged: bool
    cost: float

    @property
    def outlier(self) -> bool:
        return self.e_d > D_TARGET or self.e_alpha_deg > ALPHA_TARGET_DEG


@dataclass(frozen=True)
class ExperimentReport:
    """All trial records of a run plus the scenario-level statistics."""

    label: str
    records: tuple[TrialRecord, ...]
    p_d: float
    p_alpha: float
    p_d_alpha: float
    e_d_mean: float
    e_d_std: float
    e_alpha_mean_deg: float
    e_alpha_std_deg: float
    cdf_e_d: tuple[tuple[float, float], ...]
    cdf_e_alpha: tuple[tuple[float, float], ...]
    coverage: tuple[float, ...]
    n_poses: int
    trials_per_pose: int
    master_seed: int

    @property
    def n_outliers(self) -> int:
        return sum(1 for r in self.records if r.outlier)


def error_metrics(truth: MobilePose, est: MobilePose) -> tuple[float, float]:
    """(Euclidean position error [m], attitude angle error [deg] in [0, 90])."""
    e_d = float(np.linalg.norm(est.position - truth.position))
    dot = abs(float(est.attitude @ truth.attitude))
    e_alpha = math.degrees(math.acos(min(1.0, dot)))
    return e_d, e_alpha


def success_rates(
    records,
    d_target: float = D_TARGET,
    alpha_target_deg: float = ALPHA_TARGET_DEG,
) -> tuple[float, float, float]:
    """Empirical (P_d, P_alpha, P_d_alpha) success probabilities."""
    records = list(records)
    if not records:
        raise ExperimentError("success rates need at least one record")
    n = len(records)
    hit_d = [r.e_d <= d_target for r in records]
    hit_a = [r.e_alpha_deg <= alpha_target_deg for r in records]
    p_d = sum(hit_d) / n
    p_alpha = sum(hit_a) / n
    p_both = sum(1 for d, a in zip(hit_d, hit_a) if d and a) / n
    return p_d, p_alpha, p_both


def empirical_cdf(values) -> list[tuple[float, float]]:
    """Sorted (value, cumulative fraction) pairs; the last fraction is 1."""
    values = sorted(float(v) for v in values)
    if not values:
        raise ExperimentError("empirical cdf needs at least one value")
    n = len(values)
    return [(v, (k + 1) / n) for k, v in enumerate(values)]


def coverage_fraction(
    poses,
    constellation: Constellation,
    receiver: Coil,
    noise: NoiseModel,
    gain: float,
    snr_threshold_db: float,
) -> list[float]:
    """Per-pose fraction of beacons whose noiseless amplified voltage clears the SNR gate.

    Deterministic (no noise draw): the true voltage G*v against sigma decides
    which beacons are informative at each pose.
    """
    if not noise.sigma > 0:
        raise ExperimentError("coverage fraction needs sigma > 0")
    bset = BeaconSet.from_coils(constellation.beacons)
    out = []
    for pose in poses:
        v = vrms_profile(bset, pose.position, pose.attitude, receiver, gain=gain)
        n_above = sum(1 for vi in v if vi > 0 and snr_db(float(vi), noise.sigma) >= snr_threshold_db)
        out.append(n_above / len(bset))
    return out


def _trial_rng(master_seed: int, pose_index: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=master_seed, spawn_key=(1, pose_index, trial)))


def _attitude_rng(master_seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=master_seed, spawn_key=(0,)))


def _perturbed_init(truth: MobilePose, init: InitSpec, rng: np.random.Generator) -> MobilePose:
    p0 = pose_to_params(truth)
    b, a = init.position_bound, math.radians(init.angle_bound_deg)
    elevation = p0.elevation + rng.uniform(-a, a)
    elevation = float(np.clip(elevation, -math.pi / 2, math.pi / 2))
    azimuth = p0.azimuth + rng.uniform(-a, a)
    return params_to_pose(PoseParams(
        p0.x + rng.uniform(-b, b),
        p0.y + rng.uniform(-b, b),
        p0.z + rng.uniform(-b, b),
        azimuth,
        elevation,
    ))


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run all pose x trial estimations and assemble the report.

    Per-trial failures (empty selection, singular geometry) become
    non-converged records holding the initial guess; the batch never aborts.
    Identical configs produce identical reports.
    """
    poses = mobile_grid(config.mobile, _attitude_rng(config.master_seed))
    beacons = list(config.constellation.beacons)
    records = []
    for pose_index, truth in enumerate(poses):
        for trial in range(config.trials_per_pose):
            rng = _trial_rng(config.master_seed, pose_index, trial)
            if config.perturbation is not None:
                true_constellation = perturb_beacons(
                    config.constellation, config.perturbation, rng)
            else:
                true_constellation = config.constellation
            true_set = BeaconSet.from_coils(true_constellation.beacons)
            ms = synthesize_measurements(
                true_set, truth.position, truth.attitude, config.receiver,
                config.gain, config.noise, rng)

            if config.init.mode == "truth":
                init_pose = truth
            elif config.init.mode == "perturbed-truth":
                init_pose = _perturbed_init(truth, config.init, rng)
            else:
                init_pose = config.init.fixed_pose

            try:
                res = estimate_pose(
                    ms, beacons, config.receiver, init_pose, config.selection,
                    config.fit, gain=config.gain)
                est, n_used = res.pose, res.n_used
                converged, cost_val = res.converged, res.cost
            except EstimationError:
                # Estimation impossible (typically an empty selection): record
                # the null pose so the failure shows up as a gross error
                # instead of silently inheriting the initial guess.
                est, n_used = _NULL_POSE, 0
                converged, cost_val = False, math.inf
            e_d, e_alpha = error_metrics(truth, est)
            records.append(TrialRecord(
                pose_index=pose_index, trial=trial, pose_true=truth,
                pose_est=est, e_d=e_d, e_alpha_deg=e_alpha, n_used=n_used,
                converged=converged, cost=cost_val))

    p_d, p_alpha, p_both = success_rates(records)
    e_ds = np.array([r.e_d for r in records])
    e_as = np.array([r.e_alpha_deg for r in records])
    coverage = coverage_fraction(
        poses, config.constellation, config.receiver, config.noise,
        config.gain, config.selection.snr_threshold_db,
    ) if config.noise.sigma > 0 else [1.0] * len(poses)
    return ExperimentReport(
        label=config.label,
        records=tuple(records),
        p_d=p_d,
        p_alpha=p_alpha,
        p_d_alpha=p_both,
        e_d_mean=float(e_ds.mean()),
        e_d_std=float(e_ds.std()),
        e_alpha_mean_deg=float(e_as.mean()),
        e_alpha_std_deg=float(e_as.std()),
        cdf_e_d=tuple(empirical_cdf(e_ds)),
        cdf_e_alpha=tuple(empirical_cdf(e_as)),
        coverage=tuple(coverage),
        n_poses=len(poses),
        trials_per_pose=config.trials_per_pose,
        master_seed=config.master_seed,
    )
