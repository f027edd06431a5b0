"""Magnetic dipole forward model: coil moments, dipole fields, induced rms voltages.

All quantities are SI (meters, amperes, tesla, volts, hertz). Coils are treated
as point magnetic dipoles m = N * S * I along the coil axis, with S = pi * r^2.
The induced open-circuit rms voltage at a receiving coil follows Faraday's law
for sinusoidal steady state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

# Field coefficient mu0 / (4*pi), fixed exactly; MU0 is derived from it so the
# dipole formulas never accumulate a round-trip error on the 1e-7 factor.
MU0_OVER_4PI = 1e-7  # T*m/A
MU0 = 4.0 * math.pi * MU0_OVER_4PI  # H/m

# Coefficient linking |B.n| (rms field projection) to the induced rms voltage:
#   "rms":  V_rms = sqrt(2)*pi*f0 * N_c * S_c * |B.n|   (default)
#   "peak": V_rms =       2*pi*f0 * N_c * S_c * |B.n|
# Both are exposed so the overall voltage scale can be cross-checked; they only
# differ by a global sqrt(2) on every voltage.
EMF_MODES = ("rms", "peak")

_UNIT_TOL = 1e-12


class FieldModelError(ValueError):
    """Invalid geometry or parameters for the dipole forward model."""


def _as_vec3(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.shape != (3,):
        raise FieldModelError(f"{name} must be a 3-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise FieldModelError(f"{name} must be finite, got {arr}")
    return arr


def _unit(v: np.ndarray, name: str) -> np.ndarray:
    norm = float(np.linalg.norm(v))
    if norm < _UNIT_TOL:
        raise FieldModelError(f"{name} has near-zero length, cannot normalize")
    return v / norm


@dataclass(frozen=True)
class Coil:
    """A circular coil modeled as a point dipole source or receiver.

    center: coil center position [m]; axis: unit versor of the coil axis;
    windings: number of turns; radius [m]; current_rms [A] (0 for a passive
    receiver); frequency: drive frequency f0 [Hz]. The axis is renormalized
    on construction.
    """

    center: np.ndarray
    axis: np.ndarray
    windings: int
    radius: float
    current_rms: float = 0.0
    frequency: float = 200e3

    def __post_init__(self) -> None:
        center = _as_vec3(self.center, "center")
        axis = _unit(_as_vec3(self.axis, "axis"), "axis")
        if int(self.windings) != self.windings or self.windings < 1:
            raise FieldModelError(f"windings must be a positive integer, got {self.windings}")
        if not self.radius > 0:
            raise FieldModelError(f"radius must be > 0, got {self.radius}")
        if self.current_rms < 0:
            raise FieldModelError(f"current_rms must be >= 0, got {self.current_rms}")
        if not self.frequency > 0:
            raise FieldModelError(f"frequency must be > 0, got {self.frequency}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "windings", int(self.windings))
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "current_rms", float(self.current_rms))
        object.__setattr__(self, "frequency", float(self.frequency))

    @property
    def area(self) -> float:
        """Loop area S = pi * r^2 [m^2]."""
        return math.pi * self.radius**2

    @classmethod
    def from_moment(
        cls,
        center,
        axis,
        moment: float,
        frequency: float = 200e3,
        radius: float = 0.1,
    ) -> "Coil":
        """Build a single-turn coil whose dipole magnitude N*S*I equals `moment`."""
        if moment < 0:
            raise FieldModelError(f"moment must be >= 0, got {moment}")
        area = math.pi * radius**2
        return cls(
            center=center,
            axis=axis,
            windings=1,
            radius=radius,
            current_rms=moment / area,
            frequency=frequency,
        )

    def at_pose(self, position, axis) -> "Coil":
        """Same coil geometry relocated to a new center and axis."""
        return replace(self, center=_as_vec3(position, "position"), axis=axis)


@dataclass(frozen=True)
class DipoleMoment:
    """Magnetic dipole moment vector [A*m^2]."""

    vector: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "vector", _as_vec3(self.vector, "moment vector"))

    @property
    def magnitude(self) -> float:
        return float(np.linalg.norm(self.vector))


@dataclass(frozen=True)
class MobilePose:
    """Position and attitude versor of the mobile (receiving) coil.

    The attitude is only observable up to a 180 degree flip: `n` and `-n`
    produce identical rms voltages everywhere.
    """

    position: np.ndarray
    attitude: np.ndarray

    def __post_init__(self) -> None:
        position = _as_vec3(self.position, "position")
        attitude = _unit(_as_vec3(self.attitude, "attitude"), "attitude")
        object.__setattr__(self, "position", position)
        object.__setattr__(self, "attitude", attitude)

    def canonical(self) -> "MobilePose":
        """Attitude flipped into the nonnegative-z hemisphere (ties: +x, then +y)."""
        n = self.attitude
        flip = n[2] < 0 or (n[2] == 0 and (n[0] < 0 or (n[0] == 0 and n[1] < 0)))
        return MobilePose(self.position, -n) if flip else self


def dipole_moment(coil: Coil) -> DipoleMoment:
    """Dipole moment m = N * S * I along the coil axis."""
    return DipoleMoment(coil.windings * coil.area * coil.current_rms * coil.axis)


def dipole_field(m: DipoleMoment, displacement) -> np.ndarray:
    """Dipole field B = mu0/(4*pi*d^3) * (3(m.nhat)nhat - m) at the given displacement.

    `displacement` points from the source dipole to the field point. Singular
    at zero displacement.
    """
    d = _as_vec3(displacement, "displacement")
    dist = float(np.linalg.norm(d))
    if dist == 0.0:
        raise FieldModelError("dipole field is singular at zero displacement")
    n_hat = d / dist
    mv = m.vector
    return MU0_OVER_4PI / dist**3 * (3.0 * float(mv @ n_hat) * n_hat - mv)


def emf_coefficient(frequency: float, mode: str = "rms") -> float:
    """Voltage-per-(N*S*B) coefficient for the chosen convention."""
    if mode == "rms":
        return math.sqrt(2.0) * math.pi * frequency
    if mode == "peak":
        return 2.0 * math.pi * frequency
    raise FieldModelError(f"unknown emf mode {mode!r}, expected one of {EMF_MODES}")


def induced_vrms(b_field, receiver: Coil, mode: str = "rms") -> float:
    """Open-circuit rms voltage induced at the receiver by field `b_field`.

    The absolute value of the axial projection is taken: flipping the receiver
    axis by 180 degrees leaves the rms voltage unchanged.
    """
    b = _as_vec3(b_field, "b_field")
    coeff = emf_coefficient(receiver.frequency, mode)
    return coeff * receiver.windings * receiver.area * abs(float(b @ receiver.axis))


def forward_vrms(
    beacon: Coil,
    mobile_pose: MobilePose,
    receiver_geometry: Coil,
    mode: str = "rms",
) -> float:
    """Noise-free rms voltage induced at the mobile coil by one beacon.

    Composition of dipole_moment, dipole_field and induced_vrms, with the
    receiver geometry relocated to the mobile pose. The receiver picks up the
    beacon's drive frequency.
    """
    displacement = mobile_pose.position - beacon.center
    if float(np.linalg.norm(displacement)) == 0.0:
        raise FieldModelError("mobile position coincides with the beacon center")
    b = dipole_field(dipole_moment(beacon), displacement)
    receiver = replace(
        receiver_geometry,
        center=mobile_pose.position,
        axis=mobile_pose.attitude,
        frequency=beacon.frequency,
    )
    return induced_vrms(b, receiver, mode)


@dataclass(frozen=True)
class BeaconSet:
    """Precomputed arrays for fast voltage evaluation over many beacons.

    centers: (N, 3) beacon centers; moments: (N, 3) dipole moment vectors;
    frequency: shared drive frequency. Kept numerically identical to looping
    forward_vrms over the coils.
    """

    centers: np.ndarray
    moments: np.ndarray
    frequency: float

    @classmethod
    def from_coils(cls, coils) -> "BeaconSet":
        coils = list(coils)
        if not coils:
            raise FieldModelError("need at least one beacon coil")
        freqs = {c.frequency for c in coils}
        if len(freqs) != 1:
            raise FieldModelError(f"beacons must share one drive frequency, got {sorted(freqs)}")
        centers = np.array([c.center for c in coils], dtype=float)
        moments = np.array([dipole_moment(c).vector for c in coils], dtype=float)
        return cls(centers=centers, moments=moments, frequency=coils[0].frequency)

    def __len__(self) -> int:
        return self.centers.shape[0]


def vrms_profile(
    beacons: BeaconSet,
    position,
    attitude,
    receiver_geometry: Coil,
    gain: float = 1.0,
    mode: str = "rms",
) -> np.ndarray:
    """Amplified rms voltages from every beacon at one mobile pose, shape (N,).

    Vectorized equivalent of gain * forward_vrms per beacon. Raises if the
    position coincides with any beacon center.
    """
    pos = _as_vec3(position, "position")
    n_c = _unit(_as_vec3(attitude, "attitude"), "attitude")
    d = pos[None, :] - beacons.centers  # (N, 3)
    dist = np.linalg.norm(d, axis=1)
    if np.any(dist == 0.0):
        raise FieldModelError("mobile position coincides with a beacon center")
    n_hat = d / dist[:, None]
    m_dot = np.einsum("ij,ij->i", beacons.moments, n_hat)
    b = MU0_OVER_4PI / dist[:, None] ** 3 * (3.0 * m_dot[:, None] * n_hat - beacons.moments)
    coeff = emf_coefficient(beacons.frequency, mode)
    factor = gain * coeff * receiver_geometry.windings * receiver_geometry.area
    return factor * np.abs(b @ n_c)
