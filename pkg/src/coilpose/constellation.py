"""Beacon constellation generators, mobile pose grids and perturbation models.

Two reference layouts are provided: a mono-planar 7x4 floor array centered at
the origin and a tri-planar corner of three 3x3 wall arrays in the positive
octant. All offsets are configurable since placement itself is a design
variable under study.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .fieldmodel import Coil, FieldModelError, MobilePose

PERTURBATION_KINDS = ("axis_direction", "moment_magnitude", "center_position")


class ConstellationError(ValueError):
    """Invalid constellation geometry or perturbation parameters."""


@dataclass(frozen=True)
class Constellation:
    """An ordered set of beacon coils with pairwise distinct centers."""

    beacons: tuple[Coil, ...]
    label: str = ""

    def __post_init__(self) -> None:
        beacons = tuple(self.beacons)
        if not beacons:
            raise ConstellationError("constellation needs at least one beacon")
        centers = np.array([b.center for b in beacons])
        for i in range(len(beacons)):
            d = np.linalg.norm(centers[i + 1:] - centers[i], axis=1)
            if d.size and d.min() == 0.0:
                raise ConstellationError(f"beacon centers coincide (index {i})")
        object.__setattr__(self, "beacons", beacons)

    def __len__(self) -> int:
        return len(self.beacons)


@dataclass(frozen=True)
class PerturbationSpec:
    """Uniform perturbation of the true beacon parameters.

    kind selects what is perturbed; bound is degrees (axis_direction),
    a fraction (moment_magnitude) or meters (center_position). The estimator
    always keeps the nominal values; only measurement synthesis sees the
    perturbed constellation.
    """

    kind: str
    bound: float

    def __post_init__(self) -> None:
        if self.kind not in PERTURBATION_KINDS:
            raise ConstellationError(
                f"unknown perturbation kind {self.kind!r}, expected one of {PERTURBATION_KINDS}")
        if self.bound < 0:
            raise ConstellationError(f"bound must be >= 0, got {self.bound}")


def monoplanar_grid(
    extent: float = 1.5,
    rows: int = 4,
    cols: int = 7,
    moment: float = 1.0,
    frequency: float = 200e3,
    windings: int | None = None,
    radius: float | None = None,
    current_rms: float | None = None,
    label: str = "mono-planar",
) -> Constellation:
    """rows x cols array on the z=0 plane, centered at the origin, axes +z.

    cols span `extent` along x and rows span it along y (unequal spacing for
    a non-square count is accepted). Beacons are unit-moment single-turn coils
    unless explicit windings/radius/current are given.
    """
    if rows < 1 or cols < 1:
        raise ConstellationError("rows and cols must be >= 1")
    xs = _span(extent, cols)
    ys = _span(extent, rows)
    beacons = [
        _make_beacon((x, y, 0.0), (0.0, 0.0, 1.0), moment, frequency,
                     windings, radius, current_rms)
        for y in ys for x in xs
    ]
    return Constellation(tuple(beacons), label=label)


def triplanar_grid(
    extent: float = 1.2,
    per_side: int = 3,
    margin: float = 0.15,
    moment: float = 1.0,
    frequency: float = 200e3,
    windings: int | None = None,
    radius: float | None = None,
    current_rms: float | None = None,
    label: str = "tri-planar",
) -> Constellation:
    """Three per_side x per_side wall arrays on the z=0, y=0 and x=0 planes.

    Each array spans `extent` starting `margin` away from the coordinate axes
    (positive octant corner); axes are the respective plane normals. The
    margin keeps centers on different planes from coinciding.
    """
    if per_side < 1:
        raise ConstellationError("per_side must be >= 1")
    if margin <= 0:
        raise ConstellationError("margin must be > 0 to keep wall grids disjoint")
    us = [margin + v for v in _span(extent, per_side, centered=False)]
    beacons = []
    for u in us:
        for v in us:
            beacons.append(_make_beacon((u, v, 0.0), (0.0, 0.0, 1.0), moment,
                                        frequency, windings, radius, current_rms))
            beacons.append(_make_beacon((u, 0.0, v), (0.0, 1.0, 0.0), moment,
                                        frequency, windings, radius, current_rms))
            beacons.append(_make_beacon((0.0, u, v), (1.0, 0.0, 0.0), moment,
                                        frequency, windings, radius, current_rms))
    return Constellation(tuple(beacons), label=label)


def _span(extent: float, count: int, centered: bool = True) -> list[float]:
    if count == 1:
        return [0.0] if centered else [extent / 2.0]
    step = extent / (count - 1)
    start = -extent / 2.0 if centered else 0.0
    return [start + i * step for i in range(count)]


def _make_beacon(center, axis, moment, frequency, windings, radius, current_rms) -> Coil:
    if windings is not None or radius is not None or current_rms is not None:
        if None in (windings, radius, current_rms):
            raise ConstellationError(
                "windings, radius and current_rms must be given together")
        return Coil(center=center, axis=axis, windings=windings, radius=radius,
                    current_rms=current_rms, frequency=frequency)
    return Coil.from_moment(center, axis, moment=moment, frequency=frequency)


@dataclass(frozen=True)
class MobileGridSpec:
    """Square grid of mobile positions on a vertical plane parallel to xz.

    side_points^2 poses at y=plane_offset, x and z equispaced over `extent`
    around (x_center, z_center). Attitudes are drawn per-pose from the rng.
    """

    side_points: int = 20
    plane_offset: float = 0.75
    extent: float = 1.5
    x_center: float = 0.55
    z_center: float = 1.0

    def __post_init__(self) -> None:
        if self.side_points < 1:
            raise ConstellationError("side_points must be >= 1")
        if self.extent < 0:
            raise ConstellationError("extent must be >= 0")


def mobile_grid(spec: MobileGridSpec, rng: np.random.Generator) -> list[MobilePose]:
    """Poses of the spec's grid in row-major (x outer, z inner) order."""
    xs = [spec.x_center + v for v in _span(spec.extent, spec.side_points)]
    zs = [spec.z_center + v for v in _span(spec.extent, spec.side_points)]
    return [
        MobilePose((x, spec.plane_offset, z), random_versor(rng))
        for x in xs for z in zs
    ]


def random_versor(rng: np.random.Generator) -> np.ndarray:
    """Unit vector uniformly distributed on the sphere."""
    while True:
        v = rng.standard_normal(3)
        norm = float(np.linalg.norm(v))
        if norm > 1e-12:
            return v / norm


def perturb_beacons(
    constellation: Constellation,
    spec: PerturbationSpec,
    rng: np.random.Generator,
) -> Constellation:
    """Constellation with each beacon independently perturbed per the spec.

    axis_direction: axis tilted by an angle uniform in [0, bound] degrees
    toward a uniformly random transverse direction, so the deviation angle
    itself is the drawn bound-limited value. moment_magnitude: current scaled
    by (1+u), u uniform in [-bound, bound]. center_position: each center
    coordinate shifted by an independent uniform [-bound, bound] meters.
    """
    out = []
    for coil in constellation.beacons:
        if spec.kind == "axis_direction":
            transverse = _transverse_versor(coil.axis, rng)
            angle = rng.uniform(0.0, math.radians(spec.bound))
            tilted = math.cos(angle) * coil.axis + math.sin(angle) * transverse
            out.append(replace(coil, axis=tilted))
        elif spec.kind == "moment_magnitude":
            scale = 1.0 + rng.uniform(-spec.bound, spec.bound)
            out.append(replace(coil, current_rms=coil.current_rms * scale))
        else:  # center_position
            shift = rng.uniform(-spec.bound, spec.bound, size=3)
            out.append(replace(coil, center=coil.center + shift))
    return Constellation(tuple(out), label=constellation.label)


def _transverse_versor(axis: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # Unit vector uniformly distributed in the plane orthogonal to `axis`.
    while True:
        v = random_versor(rng)
        t = v - float(v @ axis) * axis
        norm = float(np.linalg.norm(t))
        if norm > 1e-9:
            return t / norm


def constellation_to_dict(c: Constellation) -> dict:
    """JSON-ready description (the custom-constellation config schema)."""
    return {
        "kind": "custom",
        "label": c.label,
        "beacons": [
            {
                "center_m": [float(v) for v in b.center],
                "axis": [float(v) for v in b.axis],
                "windings": b.windings,
                "radius_m": b.radius,
                "current_rms_a": b.current_rms,
                "frequency_hz": b.frequency,
            }
            for b in c.beacons
        ],
    }


def constellation_from_dict(d: dict) -> Constellation:
    """Inverse of constellation_to_dict."""
    try:
        beacons = tuple(
            Coil(
                center=b["center_m"],
                axis=b["axis"],
                windings=b["windings"],
                radius=b["radius_m"],
                current_rms=b["current_rms_a"],
                frequency=b.get("frequency_hz", 200e3),
            )
            for b in d["beacons"]
        )
    except (KeyError, TypeError, FieldModelError) as exc:
        raise ConstellationError(f"invalid beacon description: {exc}") from exc
    return Constellation(beacons, label=d.get("label", ""))
