"""Unit tests for the dipole forward model."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from coilpose import fieldmodel as fm
from coilpose.fieldmodel import (
    BeaconSet,
    Coil,
    DipoleMoment,
    FieldModelError,
    MobilePose,
    dipole_field,
    dipole_moment,
    forward_vrms,
    induced_vrms,
    vrms_profile,
)

from oracles import biot_savart_loop

EZ = np.array([0.0, 0.0, 1.0])
EX = np.array([1.0, 0.0, 0.0])


def make_coil(**kw):
    defaults = dict(center=(0, 0, 0), axis=EZ, windings=1, radius=0.1,
                    current_rms=1.0, frequency=200e3)
    defaults.update(kw)
    return Coil(**defaults)


def test_field_constant_is_exact():
    assert fm.MU0_OVER_4PI == 1e-7
    assert_allclose(fm.MU0, 4.0 * math.pi * 1e-7, rtol=0, atol=0)


class TestCoil:
    def test_axis_renormalized(self):
        c = make_coil(axis=(0.0, 0.0, 5.0))
        assert abs(np.linalg.norm(c.axis) - 1.0) < 1e-12

    def test_area(self):
        c = make_coil(radius=0.03)
        assert_allclose(c.area, math.pi * 9e-4)

    @pytest.mark.parametrize("bad", [
        dict(radius=0.0),
        dict(radius=-1.0),
        dict(windings=0),
        dict(windings=2.5),
        dict(current_rms=-0.1),
        dict(frequency=0.0),
        dict(axis=(0.0, 0.0, 0.0)),
    ])
    def test_invalid_parameters_rejected(self, bad):
        with pytest.raises(FieldModelError):
            make_coil(**bad)

    def test_from_moment_sets_unit_product(self):
        c = Coil.from_moment((0, 0, 0), EZ, moment=1.0)
        assert_allclose(c.windings * c.area * c.current_rms, 1.0, rtol=1e-14)


class TestDipoleMoment:
    def test_realistic_coil_moment(self):
        # 20 windings, 3 cm radius, 2 A rms: 20 * pi * 9e-4 * 2
        c = make_coil(windings=20, radius=0.03, current_rms=2.0)
        m = dipole_moment(c)
        assert_allclose(m.vector, [0.0, 0.0, 0.11309733552923255], rtol=1e-12)
        assert_allclose(m.magnitude, 0.113097, rtol=1e-5)

    def test_zero_current_gives_zero_moment(self):
        m = dipole_moment(make_coil(current_rms=0.0))
        assert_allclose(m.vector, np.zeros(3), atol=0)

    def test_unit_moment_is_axis(self):
        axis = np.array([1.0, 2.0, -0.5])
        axis /= np.linalg.norm(axis)
        c = Coil.from_moment((0, 0, 0), axis, moment=1.0)
        assert_allclose(dipole_moment(c).vector, axis, rtol=1e-12)


class TestDipoleField:
    def test_on_axis_point(self):
        b = dipole_field(DipoleMoment((0, 0, 1)), (0, 0, 1))
        assert_allclose(b, [0.0, 0.0, 2e-7], rtol=1e-14)

    def test_equatorial_point(self):
        b = dipole_field(DipoleMoment((0, 0, 1)), (1, 0, 0))
        assert_allclose(b, [0.0, 0.0, -1e-7], rtol=1e-14)

    def test_cubic_decay_on_axis(self):
        b = dipole_field(DipoleMoment((0, 0, 1)), (0, 0, 2))
        assert_allclose(b, [0.0, 0.0, 2.5e-8], rtol=1e-14)

    def test_singular_at_source(self):
        with pytest.raises(FieldModelError):
            dipole_field(DipoleMoment((0, 0, 1)), (0, 0, 0))

    def test_parity_in_displacement(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            m = DipoleMoment(rng.normal(size=3))
            d = rng.normal(size=3)
            assert_allclose(dipole_field(m, d), dipole_field(m, -d), rtol=1e-13)

    def test_linearity_in_moment(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            mv = rng.normal(size=3)
            d = rng.normal(size=3)
            alpha = rng.uniform(0.1, 10.0)
            assert_allclose(
                dipole_field(DipoleMoment(alpha * mv), d),
                alpha * dipole_field(DipoleMoment(mv), d),
                rtol=1e-12,
            )

    def test_cubic_decay_any_direction(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            m = DipoleMoment(rng.normal(size=3))
            d = rng.normal(size=3)
            lam = rng.uniform(0.5, 8.0)
            assert_allclose(
                np.linalg.norm(dipole_field(m, lam * d)),
                np.linalg.norm(dipole_field(m, d)) / lam**3,
                rtol=1e-12,
            )

    def test_matches_biot_savart_loop_oracle(self):
        # Far-field check against 360-segment quadrature of the physical loop.
        rng = np.random.default_rng(14)
        for _ in range(100):
            radius = rng.uniform(0.01, 0.1)
            windings = int(rng.integers(1, 30))
            current = rng.uniform(0.1, 5.0)
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            coil = make_coil(axis=axis, windings=windings, radius=radius,
                             current_rms=current)
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
            d = direction * radius * rng.uniform(10.0, 40.0)
            b_dip = dipole_field(dipole_moment(coil), d)
            b_bs = biot_savart_loop(coil.center, coil.axis, radius,
                                    windings * current, coil.center + d)
            assert np.linalg.norm(b_dip - b_bs) < 0.02 * np.linalg.norm(b_bs)


class TestInducedVrms:
    def test_orthogonal_coupling_is_zero(self):
        receiver = make_coil(axis=EX, windings=10, radius=0.01)
        assert induced_vrms((0.0, 0.0, 1e-6), receiver) == 0.0

    def test_axis_flip_invariance(self):
        rng = np.random.default_rng(15)
        for _ in range(50):
            b = rng.normal(size=3) * 1e-7
            axis = rng.normal(size=3)
            r1 = make_coil(axis=axis, windings=10, radius=0.01)
            r2 = make_coil(axis=-axis, windings=10, radius=0.01)
            v1, v2 = induced_vrms(b, r1), induced_vrms(b, r2)
            assert v1 == v2
            assert v1 >= 0.0

    def test_reference_voltage_value(self):
        # sqrt(2)*pi*2e5 * 10 * pi*1e-4 * 1e-9
        receiver = make_coil(axis=EZ, windings=10, radius=0.01, frequency=200e3)
        v = induced_vrms((0.0, 0.0, 1e-9), receiver)
        expected = math.sqrt(2) * math.pi * 200e3 * 10 * math.pi * 1e-4 * 1e-9
        assert_allclose(v, expected, rtol=1e-14)
        assert_allclose(v, 2.7916e-6, rtol=1e-4)

    def test_peak_mode_is_sqrt2_larger(self):
        receiver = make_coil(axis=EZ, windings=10, radius=0.01)
        b = (0.0, 0.0, 1e-9)
        assert_allclose(
            induced_vrms(b, receiver, mode="peak"),
            math.sqrt(2) * induced_vrms(b, receiver, mode="rms"),
            rtol=1e-14,
        )

    def test_unknown_mode_rejected(self):
        receiver = make_coil()
        with pytest.raises(FieldModelError):
            induced_vrms((0, 0, 1e-9), receiver, mode="bogus")


class TestForwardVrms:
    def setup_method(self):
        self.beacon = Coil.from_moment((0, 0, 0), EZ, moment=1.0)
        self.receiver = make_coil(windings=10, radius=0.01, current_rms=0.0)

    def test_on_axis_parallel_attitude(self):
        d = 0.8
        pose = MobilePose((0, 0, d), EZ)
        v = forward_vrms(self.beacon, pose, self.receiver)
        coeff = math.sqrt(2) * math.pi * 200e3
        expected = coeff * 10 * (math.pi * 1e-4) * 2e-7 / d**3
        assert_allclose(v, expected, rtol=1e-12)

    def test_perpendicular_attitude_is_zero(self):
        # On the beacon axis the field is axial, so an orthogonal attitude decouples.
        pose = MobilePose((0, 0, 0.8), EX)
        assert forward_vrms(self.beacon, pose, self.receiver) == 0.0

    def test_doubling_distance_divides_by_eight(self):
        direction = np.array([0.3, -0.5, 0.9])
        direction /= np.linalg.norm(direction)
        att = np.array([0.2, 0.9, 0.1])
        v1 = forward_vrms(self.beacon, MobilePose(direction, att), self.receiver)
        v2 = forward_vrms(self.beacon, MobilePose(2 * direction, att), self.receiver)
        assert_allclose(v2, v1 / 8.0, rtol=1e-12)

    def test_coincident_centers_rejected(self):
        with pytest.raises(FieldModelError):
            forward_vrms(self.beacon, MobilePose((0, 0, 0), EZ), self.receiver)


class TestMobilePose:
    def test_attitude_renormalized(self):
        p = MobilePose((0, 0, 0), (3.0, 0.0, 4.0))
        assert abs(np.linalg.norm(p.attitude) - 1.0) < 1e-12

    def test_canonical_flips_negative_z(self):
        p = MobilePose((0, 0, 0), (0.0, 0.1, -0.9)).canonical()
        assert p.attitude[2] > 0

    def test_canonical_tie_breaks(self):
        p = MobilePose((0, 0, 0), (-1.0, 0.0, 0.0)).canonical()
        assert p.attitude[0] > 0
        q = MobilePose((0, 0, 0), (0.0, -1.0, 0.0)).canonical()
        assert q.attitude[1] > 0


class TestVrmsProfile:
    def test_matches_scalar_forward_model(self):
        rng = np.random.default_rng(16)
        beacons = []
        for _ in range(9):
            axis = rng.normal(size=3)
            beacons.append(Coil.from_moment(rng.uniform(-1, 1, size=3), axis,
                                            moment=rng.uniform(0.1, 2.0)))
        receiver = make_coil(windings=10, radius=0.01)
        bset = BeaconSet.from_coils(beacons)
        for _ in range(10):
            pos = rng.uniform(-1, 1, size=3) + np.array([3.0, 0, 0])
            att = rng.normal(size=3)
            pose = MobilePose(pos, att)
            gain = rng.uniform(0.5, 20.0)
            fast = vrms_profile(bset, pose.position, pose.attitude, receiver, gain=gain)
            slow = [gain * forward_vrms(b, pose, receiver) for b in beacons]
            assert_allclose(fast, slow, rtol=1e-12)

    def test_mixed_frequencies_rejected(self):
        b1 = make_coil(frequency=200e3)
        b2 = make_coil(center=(1, 0, 0), frequency=100e3)
        with pytest.raises(FieldModelError):
            BeaconSet.from_coils([b1, b2])

    def test_singular_position_rejected(self):
        bset = BeaconSet.from_coils([make_coil()])
        receiver = make_coil(windings=10, radius=0.01)
        with pytest.raises(FieldModelError):
            vrms_profile(bset, (0, 0, 0), EZ, receiver)
