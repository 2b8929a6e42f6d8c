"""
Tests for the 2T-1MEFET array: bias protocol, sensing, round trips,
half-select safety, and transient traces.
"""

import pytest
import numpy as np
import pandas as pd

from meramCommon import ValidationError, ConfigError
from meramDevice import MefetParams, Polarization
from meramArray import *


class TestBiasTable:
    def test_unaccessed_rows(self):
        for op in Operation:
            assert biasFor(op, False) == BiasVector()

    def test_accessed_rows(self):
        assert biasFor(Operation.Read, True, i_sense=1e-6) == BiasVector(wwl=0, rwl=1, rbl_current=1e-6, sl_sensed=True)
        assert biasFor(Operation.Write1, True, v_write=0.1) == BiasVector(wwl=1, rwl=0, wbl=0.1)
        assert biasFor(Operation.Write0, True, v_write=0.1) == BiasVector(wwl=1, rwl=0, wbl=-0.1)
        assert biasFor(Operation.Hold, True) == BiasVector()

    def test_both_word_lines(self):
        with pytest.raises(ValidationError):
            BiasVector(wwl=1, rwl=1)


class TestSensing:
    def test_sense_voltage(self):
        assert senseVoltage(1.05e3, 0.0, 900e-9, 1.0) == pytest.approx(9.45e-4)
        assert senseVoltage(63.4e6, 0.0, 900e-9, 1.0) == 1.0
        assert senseVoltage(1.05e3, 0.0, 0.0, 1.0) == 0.0

    @pytest.mark.parametrize('args', [(-1.0, 0.0, 1e-6, 1.0), (1.0, -1.0, 1e-6, 1.0),
                                      (1.0, 0.0, -1e-6, 1.0), (1.0, 0.0, 1e-6, 0.0)])
    def test_sense_voltage_invalid(self, args):
        with pytest.raises(ValidationError):
            senseVoltage(*args)

    def test_reference(self):
        assert referenceVoltage(0.0, 1.0) == 0.5
        with pytest.raises(ValidationError):
            referenceVoltage(1.0, 1.0)

    def test_strongarm(self):
        assert strongarmDecide(0.6, 0.5)[0] == 1
        assert strongarmDecide(0.4, 0.5)[0] == 0
        assert strongarmDecide(0.5, 0.5)[0] == 0
        assert strongarmDecide(0.55, 0.5, sa_offset=0.1)[0] == 0

        bit, trace = strongarmDecide(0.6, 0.5, t_start=3e-9, clock_period=3e-9)
        assert trace.t_precharge == 3e-9
        assert trace.t_evaluate == pytest.approx(4.5e-9)
        assert trace.margin == pytest.approx(0.1)

    def test_margins(self):
        """Default sense current: both levels sit about half a volt from the reference."""
        levels = MeramArray(1, 1).senseLevels()
        assert levels.v_low == pytest.approx(9.45e-4)
        assert levels.v_high == 1.0
        assert levels.margin0 == pytest.approx(0.4995, abs=1e-4)
        assert levels.margin1 == pytest.approx(0.4995, abs=1e-4)

    def test_read_levels(self):
        array = MeramArray(1, 2, initial=np.array([[0, 1]]))
        bit0, trace0 = array.readBit(0, 0)
        bit1, trace1 = array.readBit(0, 1)
        assert (bit0, bit1) == (0, 1)
        assert trace0.margin == pytest.approx(0.4995, abs=1e-4)
        assert trace1.v_sense == 1.0

    def test_read_energy(self):
        assert readEnergy(1.0, 900e-9, 1.5e-9) == pytest.approx(1.35e-15)


class TestArray:
    def test_dimensions(self):
        with pytest.raises(ValidationError):
            MeramArray(0, 4)
        with pytest.raises(ValidationError):
            MeramArray(4, 4, clock_period=300e-12)
        with pytest.raises(ValidationError):
            MeramArray(2, 2, initial=np.zeros((3, 3)))

    def test_out_of_range(self):
        array = MeramArray(2, 2)
        with pytest.raises(ValidationError):
            array.writeBit(2, 0, 1)
        with pytest.raises(ValidationError):
            array.readBit(0, -1)
        with pytest.raises(ValidationError):
            array.writeBit(0, 0, 2)

    def test_write_convention(self):
        """A '1' is stored as the high resistance (Down) state."""
        array = MeramArray(1, 1)
        array.writeBit(0, 0, 1)
        assert array.cells[0][0].device.polarization == Polarization.Down
        array.writeBit(0, 0, 0)
        assert array.cells[0][0].device.polarization == Polarization.Up

    def test_roundtrip_exhaustive(self):
        """Every cell of a 4x4 array, both values: 32 cases."""
        array = MeramArray(4, 4)
        cases = 0
        for row in range(4):
            for col in range(4):
                for bit in (0, 1):
                    array.writeBit(row, col, bit)
                    assert array.readBit(row, col)[0] == bit
                    cases += 1
        assert cases == 32

    def test_half_select(self):
        rng = np.random.default_rng(7)
        initial = rng.integers(0, 2, size=(4, 4))
        array = MeramArray(4, 4, initial=initial)
        for row in range(4):
            for col in range(4):
                before = array.polarizationMap()
                array.writeBit(row, col, 1 - int(initial[row, col]))
                after = array.polarizationMap()
                changed = np.argwhere(before != after)
                assert changed.tolist() == [[row, col]]
                array.writeBit(row, col, int(initial[row, col]))

    def test_read_is_nondestructive(self):
        array = MeramArray(3, 3, initial=np.eye(3, dtype=int))
        digest = array.stateHash()
        for row in range(3):
            for col in range(3):
                array.readBit(row, col)
                array.readBit(row, col)
        assert array.stateHash() == digest

    def test_subthreshold_write(self):
        array = MeramArray(1, 1, v_write=0.04)
        array.writeBit(0, 0, 1)
        assert array.readBit(0, 0)[0] == 0

    def test_short_write_pulse(self):
        array = MeramArray(1, 1)
        array.writeBit(0, 0, 1, duration=100e-12)
        assert array.storedBit(0, 0) == 0
        array.writeBit(0, 0, 1, duration=100e-12)
        assert array.storedBit(0, 0) == 1

    def test_hold_clears_partial_write(self):
        array = MeramArray(1, 1)
        array.writeBit(0, 0, 1, duration=100e-12)
        array.hold(1e-6)
        assert array.cells[0][0].device.pending is None
        array.writeBit(0, 0, 1, duration=100e-12)
        assert array.storedBit(0, 0) == 0

    def test_read_clears_partial_write(self):
        array = MeramArray(1, 1)
        array.writeBit(0, 0, 1, duration=100e-12)
        assert array.readBit(0, 0)[0] == 0
        array.writeBit(0, 0, 1, duration=100e-12)
        assert array.storedBit(0, 0) == 0

    def test_other_cell_access_clears_partial_write(self):
        """A partial switch does not survive while another cell is driven."""
        array = MeramArray(2, 2)
        array.writeBit(0, 0, 1, duration=100e-12)
        array.writeBit(1, 1, 1)
        array.writeBit(0, 0, 1, duration=100e-12)
        assert array.storedBit(0, 0) == 0
        assert array.storedBit(1, 1) == 1

    def test_clamped_sense_levels(self):
        """Both levels at the supply cannot be told apart."""
        with pytest.raises(ValidationError):
            MeramArray(1, 1, i_sense=1e-3)
        with pytest.raises(ValidationError):
            MeramArray(1, 1, r_access=2e6)


class TestSenseMargins:
    @pytest.mark.parametrize('r_access', [0.0, 1e3, 50e3, 500e3])
    def test_margin_sum(self, r_access):
        levels = MeramArray(1, 1, r_access=r_access).senseLevels()
        assert levels.margin0 + levels.margin1 == pytest.approx(levels.v_high - levels.v_low, rel=1e-12)
        assert levels.margin0 == pytest.approx(levels.margin1, rel=1e-12)

    def test_access_resistance_shrinks_margin(self):
        margins = [MeramArray(1, 1, r_access=r).senseLevels().margin0 for r in (0.0, 10e3, 100e3, 500e3)]
        assert margins == sorted(margins, reverse=True)
        assert margins[-1] > 0.0

    def test_reads_with_access_resistance(self):
        initial = np.array([[0, 1], [1, 0]])
        array = MeramArray(2, 2, r_access=100e3, initial=initial)
        levels = array.senseLevels()
        assert levels.v_low == pytest.approx(900e-9 * (1.05e3 + 100e3))
        for row in range(2):
            for col in range(2):
                assert array.readBit(row, col)[0] == initial[row, col]

    def test_offset_robustness(self):
        """Any comparator offset smaller than both margins leaves every decision unchanged."""
        rng = np.random.default_rng(99)
        initial = rng.integers(0, 2, size=(4, 4))
        for r_access in (0.0, 200e3):
            limit = MeramArray(1, 1, r_access=r_access).senseLevels()
            limit = min(limit.margin0, limit.margin1)
            for offset in rng.uniform(-limit, limit, size=25):
                array = MeramArray(4, 4, r_access=r_access, sa_offset=float(offset), initial=initial)
                bits = [[array.readBit(row, col)[0] for col in range(4)] for row in range(4)]
                assert bits == initial.tolist(), offset


class TestBiasCompliance:
    def test_interceptor(self):
        """Every configuration the array drives matches the bias table."""
        array = MeramArray(4, 4)
        seen = []
        array.addBiasListener(lambda op, accessed, row, col, bias: seen.append((op, accessed, bias)))

        rng = np.random.default_rng(11)
        for _ in range(200):
            row, col = (int(v) for v in rng.integers(0, 4, size=2))
            if rng.random() < 0.5:
                array.readBit(row, col)
            else:
                array.writeBit(row, col, int(rng.integers(0, 2)))
        array.hold(1e-9)

        assert len(seen) == 2 * 200 + 1
        for op, accessed, bias in seen:
            assert bias == biasFor(op, accessed, v_write=array.v_write, i_sense=array.i_sense)
            if not accessed:
                assert bias.wwl == 0 and bias.rwl == 0


class TestLargeArray:
    def test_randomized_256(self):
        """1000 random operations on a 256x256 array against a shadow copy."""
        rng = np.random.default_rng(256)
        n = 256
        expected = rng.integers(0, 2, size=(n, n))
        array = MeramArray(n, n, initial=expected)
        expected = expected.copy()

        def lines(row, col):
            return ([cell.device for cell in array.cells[row]],
                    [array.cells[i][col].device for i in range(n)])

        for _ in range(1000):
            row, col = (int(v) for v in rng.integers(0, n, size=2))
            if rng.random() < 0.5:
                before = lines(row, col)
                assert array.readBit(row, col)[0] == expected[row, col]
                assert lines(row, col) == before
            else:
                bit = int(rng.integers(0, 2))
                before = lines(row, col)
                array.writeBit(row, col, bit)
                after = lines(row, col)
                expected[row, col] = bit
                assert all(b == a for j, (b, a) in enumerate(zip(before[0], after[0])) if j != col)
                assert all(b == a for i, (b, a) in enumerate(zip(before[1], after[1])) if i != row)

        polarization = np.where(expected == 1, int(Polarization.Down), int(Polarization.Up))
        assert (array.polarizationMap() == polarization).all()

        digest = array.stateHash()
        for row, col in rng.integers(0, n, size=(20, 2)):
            array.readBit(int(row), int(col))
        assert array.stateHash() == digest


class TestScripts:
    def test_parse(self):
        steps = parseScript("# write then read\n0 W 1 2 1\n\n3 read 1 2\n")
        assert steps == [ScriptStep(0.0, 'W', 1, 2, 1), ScriptStep(3.0, 'R', 1, 2, None)]

    @pytest.mark.parametrize('text', ['0 W 0 0', '0 R 0 0 1', 'x R 0 0', '0 X 0 0', '-1 R 0 0', '0 W 0 0 2'])
    def test_parse_errors(self, text):
        with pytest.raises(ConfigError):
            parseScript(text)

    def test_load_missing(self, tmp_path):
        with pytest.raises(ConfigError):
            loadScript(str(tmp_path / 'missing.txt'))

    def test_empty_script(self):
        assert transientTrace(MeramArray(1, 1), []) == []

    def test_overlap(self):
        with pytest.raises(ValidationError):
            transientTrace(MeramArray(1, 1), parseScript("0 W 0 0 1\n1 R 0 0\n"))


class TestExperiments:
    @pytest.mark.parametrize('name', sorted(EXPERIMENTS))
    def test_write_then_reread(self, name):
        """The written value is sensed in the write cycle and again one cycle later."""
        bit = EXPERIMENTS[name]
        array = MeramArray(1, 1, initial=np.array([[1 - bit]]))
        samples = transientTrace(array, experimentScript(bit, 3e-9))

        assert len(samples) == 4
        assert [s.time_s for s in samples] == pytest.approx([0.0, 1.5e-9, 3e-9, 4.5e-9])
        assert samples[0].wwl == 1
        assert samples[0].wbl_v == pytest.approx(0.1 if bit else -0.1)
        assert samples[1].sa_out == bit
        assert (samples[2].wwl, samples[2].rwl) == (0, 0)
        assert samples[2].wbl_v == samples[0].wbl_v
        assert samples[3].rwl == 1
        assert samples[3].sa_out == bit

    def test_subthreshold_experiments(self):
        for bit in EXPERIMENTS.values():
            array = MeramArray(1, 1, v_write=0.04, initial=np.array([[1 - bit]]))
            samples = transientTrace(array, experimentScript(bit))
            assert samples[1].sa_out == 1 - bit
            assert samples[3].sa_out == 1 - bit

    def test_waveform_csv(self, tmp_path):
        array = MeramArray(1, 1, initial=np.array([[1]]))
        samples = transientTrace(array, experimentScript(0))
        filename = tmp_path / 'wave.csv'
        writeWaveform(samples, str(filename))

        df = pd.read_csv(str(filename))
        assert list(df.columns) == WAVEFORM_COLUMNS
        assert df['sa_out'].tolist() == [0, 0, 0, 0]
        assert len(df) == 4
