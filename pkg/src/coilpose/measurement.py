"""Noisy rms-voltage measurement synthesis, SNR computation and selection policies.

Two noise modes are provided: `fast` adds Gaussian noise directly to the rms
value (suitable for large Monte Carlo batches), `time_domain` samples the
amplified sinewave with per-sample AWGN and estimates the rms, optionally
subtracting the known noise power. Both use an explicitly passed random
generator so trials are reproducible and parallelizable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .fieldmodel import BeaconSet, Coil, vrms_profile

NOISE_MODES = ("fast", "time_domain")
SELECTION_KINDS = ("snr_threshold", "top_n")


class MeasurementError(ValueError):
    """Invalid measurement-model parameters."""


@dataclass(frozen=True)
class NoiseModel:
    """Additive white Gaussian noise on the sampled receiver output.

    sigma: noise standard deviation [V]; samples_per_measurement and periods
    configure the time-domain sinewave synthesis (sample count must satisfy
    Nyquist for the simulated tone); noise_subtraction removes the known noise
    power from the rms estimate (time_domain only).
    """

    sigma: float = 1e-5
    mode: str = "fast"
    samples_per_measurement: int = 1024
    periods: int = 8
    noise_subtraction: bool = True

    def __post_init__(self) -> None:
        if self.sigma < 0:
            raise MeasurementError(f"sigma must be >= 0, got {self.sigma}")
        if self.mode not in NOISE_MODES:
            raise MeasurementError(f"unknown noise mode {self.mode!r}, expected one of {NOISE_MODES}")
        if self.periods < 1:
            raise MeasurementError(f"periods must be >= 1, got {self.periods}")
        if self.samples_per_measurement < 2 * self.periods:
            raise MeasurementError(
                f"samples_per_measurement must be >= 2*periods "
                f"({2 * self.periods}), got {self.samples_per_measurement}"
            )


@dataclass(frozen=True)
class Measurement:
    """One estimated rms voltage from one beacon."""

    beacon_id: int
    v_true: float
    v_hat: float
    snr_db: float
    selected: bool = False


@dataclass(frozen=True)
class SelectionPolicy:
    """Which of the available measurements enter the fit.

    snr_threshold keeps every measurement at or above the dB threshold;
    top_n keeps the n largest v_hat (ties broken by lower beacon id).
    """

    kind: str = "snr_threshold"
    snr_threshold_db: float = 10.0
    n: int = 7

    def __post_init__(self) -> None:
        if self.kind not in SELECTION_KINDS:
            raise MeasurementError(f"unknown selection kind {self.kind!r}, expected one of {SELECTION_KINDS}")
        if self.kind == "top_n" and self.n < 1:
            raise MeasurementError(f"top_n requires n >= 1, got {self.n}")


def simulate_measurement(
    v_true: float,
    gain: float,
    noise: NoiseModel,
    rng: np.random.Generator,
) -> float:
    """One noisy rms-voltage estimate of gain * v_true.

    fast mode: max(0, G*v + n) with n ~ N(0, sigma^2).
    time_domain mode: sample G*v*sqrt(2)*sin over full periods with i.i.d.
    AWGN per sample, take the rms, optionally subtract the noise power.
    """
    if v_true < 0:
        raise MeasurementError(f"v_true must be >= 0, got {v_true}")
    if not gain > 0:
        raise MeasurementError(f"gain must be > 0, got {gain}")
    v = gain * v_true
    if noise.sigma == 0.0:
        return v
    if noise.mode == "fast":
        return max(0.0, v + noise.sigma * rng.standard_normal())
    m = noise.samples_per_measurement
    k = np.arange(m)
    signal = v * math.sqrt(2.0) * np.sin(2.0 * math.pi * noise.periods * k / m)
    samples = signal + noise.sigma * rng.standard_normal(m)
    mean_square = float(np.mean(samples**2))
    if noise.noise_subtraction:
        return math.sqrt(max(0.0, mean_square - noise.sigma**2))
    return math.sqrt(mean_square)


def snr_db(v_hat: float, sigma: float) -> float:
    """Signal-to-noise ratio 20*log10(v_hat / sigma) in decibels.

    Returns -inf for a zero measurement; sigma must be strictly positive.
    """
    if not sigma > 0:
        raise MeasurementError(f"sigma must be > 0 for an SNR, got {sigma}")
    if v_hat <= 0:
        return -math.inf
    return 20.0 * math.log10(v_hat / sigma)


def _snr_or_inf(v_hat: float, sigma: float) -> float:
    # Noiseless runs carry sigma=0; any nonzero measurement is then infinitely
    # clean so that threshold gating keeps it.
    if sigma == 0.0:
        return math.inf if v_hat > 0 else -math.inf
    return snr_db(v_hat, sigma)


def select_measurements(
    ms: list[Measurement],
    policy: SelectionPolicy,
) -> list[Measurement]:
    """Copy of `ms` with the `selected` flags set per the policy.

    Order is preserved; the selected set never depends on input order. An
    empty selection is returned as-is so callers can flag the condition.
    """
    if not ms:
        raise MeasurementError("cannot select from an empty measurement list")
    if policy.kind == "snr_threshold":
        chosen = {m.beacon_id for m in ms if m.snr_db >= policy.snr_threshold_db}
    else:
        if policy.n > len(ms):
            raise MeasurementError(f"top_n n={policy.n} exceeds {len(ms)} measurements")
        ranked = sorted(ms, key=lambda m: (-m.v_hat, m.beacon_id))
        chosen = {m.beacon_id for m in ranked[: policy.n]}
    return [replace(m, selected=m.beacon_id in chosen) for m in ms]


def n_selected(ms: list[Measurement]) -> int:
    """Number of measurements entering the fit."""
    return sum(1 for m in ms if m.selected)


def synthesize_measurements(
    beacons: BeaconSet,
    position,
    attitude,
    receiver: Coil,
    gain: float,
    noise: NoiseModel,
    rng: np.random.Generator,
    mode: str = "rms",
) -> list[Measurement]:
    """Noisy measurements of every beacon at one mobile pose (unselected)."""
    v_true = vrms_profile(beacons, position, attitude, receiver, gain=1.0, mode=mode)
    out = []
    for i, v in enumerate(v_true):
        v_hat = simulate_measurement(float(v), gain, noise, rng)
        out.append(Measurement(
            beacon_id=i,
            v_true=float(v),
            v_hat=v_hat,
            snr_db=_snr_or_inf(v_hat, noise.sigma),
        ))
    return out
