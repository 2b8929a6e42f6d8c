"""
Tests for the MEFET compact model.
"""

import pytest
import numpy as np

from meramCommon import ValidationError, ConfigError
from meramDevice import *


P = MefetParams()
UP = MefetState(polarization=Polarization.Up)
DOWN = MefetState(polarization=Polarization.Down)


class TestConstants:
    def test_on_off_ratio(self):
        assert onOffRatio(P) == pytest.approx(60380.95, abs=0.01)

    def test_me_capacitance(self):
        """Parallel plate: eps0 * 12 * 900 nm^2 / 10 nm."""
        assert meCapacitance(P) == pytest.approx(9.56e-18, rel=0.01)

    def test_write_energy(self):
        assert writeEnergy(P, 0.1) == pytest.approx(meCapacitance(P) * 0.01)
        assert writeEnergy(P, 0.0) == 0.0

    def test_channel_resistance(self):
        assert channelResistance(UP, P) == P.r_on
        assert channelResistance(DOWN, P) == P.r_off
        assert drainSpin(UP) == 1
        assert drainSpin(DOWN) == -1

    @pytest.mark.parametrize('overrides', [{'r_off': 1.0e3}, {'v_g_nominal': 0.05}, {'t_me': 0.0}, {'v_t': -0.1}])
    def test_invalid_params(self, overrides):
        with pytest.raises(ValidationError):
            paramsFromDict(overrides)


class TestNonVolatility:
    def test_zero_bias_keeps_state(self):
        for state in (UP, DOWN):
            assert applyGatePulse(state, P, 0.0, 1.0) == state

    def test_negative_duration(self):
        with pytest.raises(ValidationError):
            applyGatePulse(UP, P, 0.1, -1e-12)


class TestThreshold:
    def test_at_threshold_never_switches(self):
        """|v| equal to v_t is not over threshold, however long it lasts."""
        assert applyGatePulse(UP, P, -0.05, 1e-6) == UP
        assert applyGatePulse(DOWN, P, 0.05, 1e-6) == DOWN

    def test_just_above_threshold_switches(self):
        assert applyGatePulse(UP, P, -0.0500001, 200e-12).polarization == Polarization.Down

    def test_random_subthreshold_voltages(self):
        """No voltage in [-v_t, v_t] moves the polarization, for any duration."""
        rng = np.random.default_rng(5)
        voltages = np.concatenate([rng.uniform(-P.v_t, P.v_t, size=2000), [-P.v_t, P.v_t]])
        durations = rng.uniform(0.0, 1e-6, size=voltages.size)
        for v, duration in zip(voltages, durations):
            for state in (UP, DOWN):
                assert applyGatePulse(state, P, float(v), float(duration)) == state, v

    def test_subthreshold_clears_pending(self):
        s = applyGatePulse(UP, P, -0.1, 150e-12)
        assert s.pending is not None
        s = applyGatePulse(s, P, 0.02, 1e-12)
        assert s.pending is None
        s = applyGatePulse(s, P, -0.1, 150e-12)
        assert s.polarization == Polarization.Up


class TestDelay:
    def test_short_pulse_does_not_switch(self):
        s = applyGatePulse(UP, P, -0.1, 199e-12)
        assert s.polarization == Polarization.Up
        assert s.pending.target == Polarization.Down
        assert s.pending.elapsed == pytest.approx(199e-12)

    def test_accumulated_pulses_switch(self):
        s = applyGatePulse(UP, P, -0.1, 199e-12)
        s = applyGatePulse(s, P, -0.1, 1e-12)
        assert s == DOWN

    def test_opposite_polarity_resets_pending(self):
        s = applyGatePulse(UP, P, -0.1, 150e-12)
        s = applyGatePulse(s, P, 0.1, 100e-12)
        assert s == UP
        s = applyGatePulse(s, P, -0.1, 100e-12)
        assert s.polarization == Polarization.Up


class TestPolarity:
    def test_sign_selects_polarization(self):
        assert applyGatePulse(UP, P, -0.1, 1e-9) == DOWN
        assert applyGatePulse(DOWN, P, 0.1, 1e-9) == UP

    def test_same_polarity_is_idempotent(self):
        assert applyGatePulse(UP, P, 0.1, 1e-9) == UP
        assert applyGatePulse(DOWN, P, -0.1, 1e-9) == DOWN


def _bruteForce(pulses, v_t=0.05, t_switch_ps=200):
    """
    Step a pulse sequence in 1 ps increments.  Returns the final
    polarization and the over-threshold time (ps) accumulated toward a
    pending switch.
    """

    polarization, target, acc = 1, None, 0
    for v, duration_ps in pulses:
        for _ in range(duration_ps):
            if abs(v) <= v_t:
                target, acc = None, 0
                continue
            want = 1 if v > 0 else -1
            if want == polarization:
                target, acc = None, 0
                continue
            if want != target:
                target, acc = want, 0
            acc += 1
            if acc >= t_switch_ps:
                polarization, target, acc = want, None, 0
    return polarization, acc


class TestIntegratorOracle:
    VOLTAGES = [-0.1, -0.06, -0.05, -0.03, 0.0, 0.03, 0.05, 0.06, 0.1]

    def test_random_pulse_sequences(self):
        """Closed-form pulse model against a 1 ps step integrator."""
        rng = np.random.default_rng(2024)
        for _ in range(10000):
            npulse = int(rng.integers(1, 7))
            pulses = [(self.VOLTAGES[int(rng.integers(0, len(self.VOLTAGES)))], int(rng.integers(1, 401)))
                      for _ in range(npulse)]

            s = MefetState()
            for v, duration_ps in pulses:
                s = applyGatePulse(s, P, v, duration_ps * 1e-12)

            polarization, acc = _bruteForce(pulses)
            assert int(s.polarization) == polarization, pulses
            if acc == 0:
                assert s.pending is None, pulses
            else:
                assert s.pending.elapsed == pytest.approx(acc * 1e-12), pulses


class TestOverrides:
    def test_params_from_dict(self):
        p = paramsFromDict({'v_t': 0.04, 'r_on': '2000'})
        assert p.v_t == 0.04
        assert p.r_on == 2000.0
        assert p.r_off == P.r_off

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            paramsFromDict({'vt': 0.04})

    def test_load_overrides(self, tmp_path):
        filename = tmp_path / 'device.cfg'
        filename.write_text('# slower switch\nt_switch = 3e-10\n\nv_t=0.04   ; lower threshold\n')
        p = loadDeviceOverrides(str(filename))
        assert p.t_switch == 3e-10
        assert p.v_t == 0.04
        assert p.r_on == P.r_on

    def test_device_header(self):
        assert parseDeviceOverrides('[device]\nr_on = 2e3\n') == {'r_on': '2e3'}

    def test_empty_file(self, tmp_path):
        filename = tmp_path / 'device.cfg'
        filename.write_text('# nothing overridden\n')
        assert loadDeviceOverrides(str(filename)) == P

    @pytest.mark.parametrize('text', ['vt = 0.04\n', 't_switch 3e-10\n', 'v_t =\n',
                                      'v_t = 0.04\nv_t = 0.03\n', 'v_t = fast\n'])
    def test_bad_lines(self, tmp_path, text):
        filename = tmp_path / 'device.cfg'
        filename.write_text(text)
        with pytest.raises(ConfigError):
            loadDeviceOverrides(str(filename))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            loadDeviceOverrides(str(tmp_path / 'missing.cfg'))

    def test_switching_window(self):
        lo, hi = PHYSICAL_SWITCHING_WINDOW
        assert lo < hi < P.t_switch
