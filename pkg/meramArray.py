# 2T-1MEFET bit-cell array: the bias protocol, the write path, the current-sense
# read path with a two-phase latch comparator, and transient waveform traces.
#
# Wiring convention: when its row's WWL is asserted, a cell's ME layer sees
# -V_WBL across its gate-source.  A Write1 (+V_write on WBL) therefore drives the
# MEFET Down into the high resistance state, which senses above the reference
# and latches as '1'.  Writing -V_write leaves the cell at R_on, which latches
# as '0'.

import enum
import hashlib
import logging
from typing import NamedTuple, Optional
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from meramCommon import *
from meramDevice import *

__version__ = '0.3'
__all__ = ['Operation', 'BiasVector', 'biasFor', 'senseVoltage', 'referenceVoltage',
           'strongarmDecide', 'readEnergy', 'SenseTrace', 'SenseLevels', 'MeramCell',
           'MeramArray', 'ScriptStep', 'WaveformSample', 'WAVEFORM_COLUMNS',
           'parseScript', 'loadScript', 'transientTrace', 'writeWaveform',
           'EXPERIMENTS', 'experimentScript', 'bitForState']


meramArrayLogger = logging.getLogger('__main__')


# Defaults for the sense/write path
DEFAULT_I_SENSE = 900e-9
DEFAULT_V_WRITE = 0.1
DEFAULT_V_DD = 1.0
DEFAULT_CLOCK_PERIOD = 3e-9


class Operation(enum.Enum):
    Read = 'read'
    Write1 = 'write1'
    Write0 = 'write0'
    Hold = 'hold'


@dataclass(frozen=True)
class BiasVector:
    """
    Levels on the five control lines of a cell.  None marks a floating (not
    driven) line.
    """

    wwl: int = 0
    rwl: int = 0
    wbl: Optional[float] = None
    rbl_current: Optional[float] = None
    sl_sensed: bool = False

    def __post_init__(self):
        if self.wwl not in (0, 1) or self.rwl not in (0, 1):
            raise ValidationError("Word lines are logic levels, got wwl=%r rwl=%r" % (self.wwl, self.rwl))
        if self.wwl == 1 and self.rwl == 1:
            raise ValidationError("WWL and RWL cannot both be asserted")


def biasFor(op, accessed, v_write=DEFAULT_V_WRITE, i_sense=DEFAULT_I_SENSE):
    """
    Return the bias configuration row for an operation on an accessed or an
    unaccessed row.  Unaccessed rows, and every row during Hold, see both word
    lines grounded and everything else floating.
    """

    if not accessed or op == Operation.Hold:
        return BiasVector()

    if op == Operation.Read:
        return BiasVector(wwl=0, rwl=1, rbl_current=i_sense, sl_sensed=True)
    elif op == Operation.Write1:
        return BiasVector(wwl=1, rwl=0, wbl=v_write)
    elif op == Operation.Write0:
        return BiasVector(wwl=1, rwl=0, wbl=-v_write)

    raise ValidationError("Unknown operation %r" % (op,))


def senseVoltage(r_cell, r_access, i_sense, v_dd):
    """
    Return the voltage developed on SL when i_sense is forced through the
    cell's series path, clamped at the supply.
    """

    checkNonNegative('r_cell', r_cell)
    checkNonNegative('r_access', r_access)
    checkNonNegative('i_sense', i_sense)
    checkPositive('v_dd', v_dd)

    return min(i_sense * (r_cell + r_access), v_dd)


def referenceVoltage(v_low, v_high):
    """
    Return the comparator reference, halfway between the two sense levels.
    """

    if not v_low < v_high:
        raise ValidationError("Sense levels must satisfy v_low < v_high, got %r and %r" % (v_low, v_high))

    return (v_low + v_high) / 2.0


@dataclass(frozen=True)
class SenseTrace:
    v_sense: float
    v_ref: float
    margin: float
    decision: int
    t_precharge: float
    t_evaluate: float


def strongarmDecide(v_sense, v_ref, sa_offset=0.0, t_start=0.0, clock_period=DEFAULT_CLOCK_PERIOD):
    """
    Behavioral StrongARM latch.  During precharge (first half of the clock)
    both outputs are reset; at the start of the evaluate phase the latch
    resolves to 1 only when v_sense is above v_ref + sa_offset.  Ties resolve
    to 0.

    Returns a two-element tuple of the decision and its SenseTrace.
    """

    decision = 1 if v_sense > v_ref + sa_offset else 0
    trace = SenseTrace(v_sense=v_sense, v_ref=v_ref, margin=abs(v_sense - v_ref),
                       decision=decision, t_precharge=t_start,
                       t_evaluate=t_start + clock_period / 2.0)

    return decision, trace


def readEnergy(v_sense, i_sense, duration):
    """
    Return the energy in J drawn from the sense current source over one
    evaluate phase.
    """

    return v_sense * i_sense * duration


class SenseLevels(NamedTuple):
    v_low: float
    v_high: float
    v_ref: float
    margin0: float
    margin1: float


def bitForState(state):
    """
    Return the logical bit held by a MefetState (R_off -> 1, R_on -> 0).
    """

    return 1 if state.polarization == Polarization.Down else 0


def _stateForBit(bit):
    return MefetState(polarization=Polarization.Down if bit else Polarization.Up)


@dataclass
class MeramCell:
    device: MefetState = field(default_factory=MefetState)
    r_access: float = 0.0

    def __post_init__(self):
        checkNonNegative('r_access', self.r_access)


class MeramArray(object):
    """
    Class holding an m x n array of 2T-1MEFET cells plus the read and write
    circuitry shared by the array.

    Every read, write, and hold goes through applyBias(), which publishes the
    bias configuration to any registered listeners.
    """

    def __init__(self, rows, cols, params=None, v_dd=DEFAULT_V_DD, i_sense=DEFAULT_I_SENSE,
                 v_write=DEFAULT_V_WRITE, sa_offset=0.0, r_access=0.0,
                 clock_period=DEFAULT_CLOCK_PERIOD, initial=None):
        if not isinstance(rows, (int, np.integer)) or not isinstance(cols, (int, np.integer)) \
           or rows < 1 or cols < 1:
            raise ValidationError("Array dimensions must be at least 1x1, got %rx%r" % (rows, cols))
        if params is None:
            params = MefetParams()
        checkPositive('i_sense', i_sense)
        checkPositive('v_dd', v_dd)
        checkNonNegative('v_write', v_write)
        checkNonNegative('r_access', r_access)
        if clock_period < 2 * params.t_switch:
            raise ValidationError("Clock period %.3e s is shorter than two switching delays (%.3e s)" \
                                  % (clock_period, 2 * params.t_switch))

        self.rows = int(rows)
        self.cols = int(cols)
        self.params = params
        self.v_dd = v_dd
        self.i_sense = i_sense
        self.v_write = v_write
        self.sa_offset = sa_offset
        self.r_access = r_access
        self.clock_period = clock_period

        if initial is None:
            initial = np.zeros((self.rows, self.cols), dtype=np.int8)
        initial = np.asarray(initial)
        if initial.shape != (self.rows, self.cols):
            raise ValidationError("Initial contents have shape %s, expected %s" \
                                  % (initial.shape, (self.rows, self.cols)))

        self.cells = [[MeramCell(device=_stateForBit(initial[i, j]), r_access=r_access)
                       for j in range(self.cols)] for i in range(self.rows)]

        self.biasListeners = []

        # Cells holding a partial switch
        self._pending = set()

        # Both sense levels must be resolvable before the first read
        self.senseLevels()

    def __str__(self):
        return "MeramArray %ix%i, I_sense=%.3e A, V_write=%.3f V" % (self.rows, self.cols, self.i_sense, self.v_write)

    def addBiasListener(self, callback):
        """
        Register a callable that receives (op, accessed, row, col, bias) for
        every bias configuration the array drives.
        """

        self.biasListeners.append(callback)

    def _publish(self, op, accessed, row, col, bias):
        for callback in self.biasListeners:
            callback(op, accessed, row, col, bias)

    def _checkIndex(self, row, col):
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise ValidationError("Cell (%r, %r) is outside of the %ix%i array" % (row, col, self.rows, self.cols))

    def applyBias(self, row, col, bias, duration, op=None):
        """
        Drive the lines of the selected cell with bias for duration seconds;
        all other rows see the unaccessed configuration.  Only an asserted WWL
        couples the WBL level onto the selected cell's ME layer.
        """

        self._checkIndex(row, col)
        if op is None:
            op = Operation.Hold

        self._publish(op, True, row, col, bias)
        self._publish(op, False, row, col, biasFor(op, False))

        driven = None
        if bias.wwl == 1 and bias.wbl is not None:
            driven = (row, col)
            cell = self.cells[row][col]
            cell.device = applyGatePulse(cell.device, self.params, -bias.wbl, duration)
            if cell.device.pending is None:
                self._pending.discard(driven)
            else:
                self._pending.add(driven)
        self._relax(duration, driven=driven)

    def _relax(self, duration, driven=None):
        """
        Apply 0 V for duration to every cell with a partial switch other than
        the driven one.
        """

        for row, col in list(self._pending):
            if (row, col) == driven:
                continue
            cell = self.cells[row][col]
            cell.device = applyGatePulse(cell.device, self.params, 0.0, duration)
            self._pending.discard((row, col))

    def hold(self, duration):
        """
        Leave the whole array unbiased for duration seconds.
        """

        if duration < 0:
            raise ValidationError("Hold duration must be non-negative, got %r" % duration)
        self._publish(Operation.Hold, False, None, None, biasFor(Operation.Hold, False))
        self._relax(duration)

    def writeBit(self, row, col, bit, duration=None):
        """
        Write a bit into the selected cell using a bipolar WBL pulse.  The
        pulse lasts half a clock period unless duration is given.  Returns the
        array.
        """

        self._checkIndex(row, col)
        if bit not in (0, 1):
            raise ValidationError("Bit must be 0 or 1, got %r" % (bit,))
        if duration is None:
            duration = self.clock_period / 2.0

        op = Operation.Write1 if bit else Operation.Write0
        bias = biasFor(op, True, v_write=self.v_write, i_sense=self.i_sense)
        self.applyBias(row, col, bias, duration, op=op)

        meramArrayLogger.debug('Wrote %i to (%i, %i) -> state %s', bit, row, col,
                               self.cells[row][col].device.polarization.name)

        return self

    def senseLevels(self, r_access=None):
        """
        Return the two sense voltages, the reference, and the margins of the
        '0' and '1' levels as a SenseLevels tuple.
        """

        if r_access is None:
            r_access = self.r_access
        v_low = senseVoltage(self.params.r_on, r_access, self.i_sense, self.v_dd)
        v_high = senseVoltage(self.params.r_off, r_access, self.i_sense, self.v_dd)
        v_ref = referenceVoltage(v_low, v_high)

        return SenseLevels(v_low=v_low, v_high=v_high, v_ref=v_ref,
                           margin0=abs(v_ref - v_low), margin1=abs(v_high - v_ref))

    def readBit(self, row, col, t_start=0.0):
        """
        Non-destructively read the selected cell.  Returns a two-element tuple
        of the latched bit and the SenseTrace.
        """

        self._checkIndex(row, col)

        bias = biasFor(Operation.Read, True, v_write=self.v_write, i_sense=self.i_sense)
        self.applyBias(row, col, bias, self.clock_period / 2.0, op=Operation.Read)

        cell = self.cells[row][col]
        r_cell = channelResistance(cell.device, self.params)
        v_sense = senseVoltage(r_cell, cell.r_access, bias.rbl_current, self.v_dd)
        levels = self.senseLevels(r_access=cell.r_access)

        bit, trace = strongarmDecide(v_sense, levels.v_ref, sa_offset=self.sa_offset,
                                     t_start=t_start, clock_period=self.clock_period)
        meramArrayLogger.debug('Read (%i, %i): V_sense=%.4e V, V_ref=%.4e V -> %i',
                               row, col, v_sense, levels.v_ref, bit)

        return bit, trace

    def storedBit(self, row, col):
        self._checkIndex(row, col)
        return bitForState(self.cells[row][col].device)

    def polarizationMap(self):
        """
        Return the polarization of every cell as an int8 numpy array.
        """

        return np.array([[int(cell.device.polarization) for cell in row] for row in self.cells],
                        dtype=np.int8)

    def stateHash(self):
        """
        Return a digest of the complete device state (polarization and any
        partial switch) of the array.
        """

        h = hashlib.sha1()
        h.update(self.polarizationMap().tobytes())
        for i, row in enumerate(self.cells):
            for j, cell in enumerate(row):
                if cell.device.pending is not None:
                    h.update(repr((i, j, cell.device.pending)).encode())

        return h.hexdigest()


class ScriptStep(NamedTuple):
    t_ns: float
    op: str
    row: int
    col: int
    bit: Optional[int] = None


WAVEFORM_COLUMNS = ['time_s', 'wwl', 'rwl', 'wbl_v', 'rbl_a', 'sl_v', 'v_sense', 'v_ref', 'sa_out']


class WaveformSample(NamedTuple):
    time_s: float
    wwl: int
    rwl: int
    wbl_v: float
    rbl_a: float
    sl_v: float
    v_sense: float
    v_ref: float
    sa_out: int


_OP_NAMES = {'W': 'W', 'WRITE': 'W', 'R': 'R', 'READ': 'R'}


def parseScript(text):
    """
    Parse a line-oriented timing script of "t_ns OP row col [bit]" entries.
    Blank lines and lines starting with '#' are ignored.  Returns a list of
    ScriptStep.
    """

    steps = []
    for lineno, line in enumerate(text.split('\n'), 1):
        line = line.split('#', 1)[0].strip()
        if line == '':
            continue

        fields = line.split()
        try:
            op = _OP_NAMES[fields[1].upper()]
            t_ns = float(fields[0])
            row, col = int(fields[2], 10), int(fields[3], 10)
        except (IndexError, KeyError, ValueError):
            raise ConfigError("Script line %i is not 't_ns OP row col [bit]': '%s'" % (lineno, line))

        bit = None
        if op == 'W':
            if len(fields) != 5 or fields[4] not in ('0', '1'):
                raise ConfigError("Script line %i: a write needs a 0/1 bit" % lineno)
            bit = int(fields[4], 10)
        elif len(fields) != 4:
            raise ConfigError("Script line %i: a read takes no bit" % lineno)
        if t_ns < 0 or row < 0 or col < 0:
            raise ConfigError("Script line %i: negative time or index" % lineno)

        steps.append(ScriptStep(t_ns, op, row, col, bit))

    return steps


def loadScript(filename):
    try:
        with open(filename, 'r') as fh:
            return parseScript(fh.read())
    except (OSError, IOError) as e:
        raise ConfigError("Cannot read script '%s': %s" % (filename, str(e)))


def transientTrace(array, script, clock_period=None):
    """
    Run a timing script against an array and return the list of
    WaveformSample taken at the start of each precharge and evaluate phase.

    A write cycle drives WWL and WBL during precharge and then reads the cell
    back in the evaluate phase with WWL and WBL grounded.  A read cycle leaves
    the WBL driver at its last level while WWL stays low.
    """

    if clock_period is None:
        clock_period = array.clock_period
    if clock_period < 2 * array.params.t_switch:
        raise ValidationError("Clock period %.3e s is too short for a %.3e s switching delay" \
                              % (clock_period, array.params.t_switch))

    samples = []
    half = clock_period / 2.0
    levels = array.senseLevels()
    wbl_level = 0.0
    t_free = 0.0
    for step in script:
        t0 = step.t_ns * 1e-9
        if t0 + 1e-15 < t_free:
            raise ValidationError("Script step at %.3f ns overlaps the previous clock cycle" % step.t_ns)
        if t0 > t_free:
            array.hold(t0 - t_free)

        if step.op == 'W':
            wbl_level = array.v_write if step.bit else -array.v_write
            samples.append(WaveformSample(t0, 1, 0, wbl_level, 0.0, 0.0, 0.0, levels.v_ref, 0))
            array.writeBit(step.row, step.col, step.bit, duration=half)
            wbl_eval = 0.0
        else:
            samples.append(WaveformSample(t0, 0, 0, wbl_level, 0.0, 0.0, 0.0, levels.v_ref, 0))
            wbl_eval = wbl_level

        bit, trace = array.readBit(step.row, step.col, t_start=t0)
        samples.append(WaveformSample(t0 + half, 0, 1, wbl_eval, array.i_sense, trace.v_sense,
                                      trace.v_sense, trace.v_ref, bit))
        t_free = t0 + clock_period

    return samples


def writeWaveform(samples, filename):
    """
    Write waveform samples to a CSV file with the standard header.
    """

    df = pd.DataFrame(list(samples), columns=WAVEFORM_COLUMNS)
    df.to_csv(filename, index=False, float_format='%.9g', lineterminator='\n')

    meramArrayLogger.debug('Wrote %i waveform samples to %s', len(df), filename)


# The two write/read experiments: experiment1 writes -V_write ('0') and
# experiment2 writes +V_write ('1') in the first cycle; both read the cell
# back again in the following cycle.  The cell starts out holding the
# opposite value so a successful write is visible as a switch.
EXPERIMENTS = {'experiment1': 0,
               'experiment2': 1}


def experimentScript(bit, clock_period=DEFAULT_CLOCK_PERIOD):
    """
    Return the steps of a write-then-reread experiment on cell (0, 0).
    """

    return parseScript("0 W 0 0 %i\n%.6g R 0 0\n" % (bit, clock_period * 1e9))
