"""
Behavioral compact model of the magneto-electric spin FET (MEFET).

The model has three stages:
 1) a threshold stage that compares the gate-source voltage against the
    chromia inversion threshold,
 2) a delay stage that only lets the polarization flip once the gate has
    been over threshold for the coupling delay, and
 3) a channel stage that maps the held polarization onto one of two channel
    resistances.

The polarization is non-volatile; with no bias it never changes.
"""

import enum
import logging
from typing import Optional
from dataclasses import dataclass, fields, replace

from scipy.constants import epsilon_0

from meramCommon import *

__version__ = '0.3'
__all__ = ['Polarization', 'MefetParams', 'PendingSwitch', 'MefetState',
           'meCapacitance', 'writeEnergy', 'applyGatePulse', 'channelResistance',
           'drainSpin', 'onOffRatio', 'paramsFromDict', 'parseDeviceOverrides', 'loadDeviceOverrides',
           'PHYSICAL_SWITCHING_WINDOW']


meramDeviceLogger = logging.getLogger('__main__')


# Range of ME switching times quoted for the physical device (s).  The model
# itself uses MefetParams.t_switch.
PHYSICAL_SWITCHING_WINDOW = (10e-12, 100e-12)


# Slack used when comparing accumulated over-threshold time to t_switch (s)
_TIME_EPS = 1e-18


class Polarization(enum.IntEnum):
    """
    Boundary polarization of the ME layer.
    """

    Down = -1
    Up = 1


@dataclass(frozen=True)
class MefetParams:
    """
    Compact model parameters.  Lengths are in nm, areas in nm^2, voltages in
    V, resistances in Ohm, and times in s.
    """

    eps_me: float = 12.0
    eps_backgate: float = 10.0
    t_me: float = 10.0
    area_me: float = 900.0
    t_ox: float = 2.0
    v_t: float = 0.05
    v_g_nominal: float = 0.1
    r_on: float = 1.05e3
    r_off: float = 63.4e6
    t_switch: float = 200e-12

    def __post_init__(self):
        for f in fields(self):
            checkPositive(f.name, getattr(self, f.name))
        if self.r_off <= self.r_on:
            raise ValidationError("r_off (%g) must be larger than r_on (%g)" % (self.r_off, self.r_on))
        if self.v_g_nominal <= self.v_t:
            raise ValidationError("v_g_nominal (%g) must be larger than v_t (%g)" % (self.v_g_nominal, self.v_t))


@dataclass(frozen=True)
class PendingSwitch:
    target: Polarization
    elapsed: float


@dataclass(frozen=True)
class MefetState:
    polarization: Polarization = Polarization.Up
    pending: Optional[PendingSwitch] = None


def meCapacitance(p):
    """
    Return the parallel-plate capacitance of the ME layer in F.  The alumina
    back-gate is left out of the series stack.
    """

    # nm^2 / nm -> m
    return epsilon_0 * p.eps_me * (p.area_me * 1e-18) / (p.t_me * 1e-9)


def writeEnergy(p, v):
    """
    Return the C*V^2 energy in J needed to charge the ME capacitor to v.
    """

    return meCapacitance(p) * v * v


def applyGatePulse(s, p, v_gate, duration):
    """
    Apply a constant gate-source voltage for the given duration (s) and
    return the resulting MefetState.

    Over-threshold time accumulates toward the polarization selected by the
    sign of v_gate (positive -> Up, negative -> Down) and the polarization
    flips once t_switch has been reached.  Dropping to or below v_t clears any
    partial switch.
    """

    if duration < 0:
        raise ValidationError("Pulse duration must be non-negative, got %r" % duration)

    if abs(v_gate) <= p.v_t:
        if s.pending is None:
            return s
        return MefetState(polarization=s.polarization)

    target = Polarization.Up if v_gate > 0 else Polarization.Down
    if target == s.polarization:
        return MefetState(polarization=s.polarization)

    elapsed = duration
    if s.pending is not None and s.pending.target == target:
        elapsed += s.pending.elapsed

    if elapsed + _TIME_EPS >= p.t_switch:
        meramDeviceLogger.debug('MEFET polarization %s -> %s after %.3e s over threshold',
                                s.polarization.name, target.name, elapsed)
        return MefetState(polarization=target)

    return MefetState(polarization=s.polarization,
                      pending=PendingSwitch(target=target, elapsed=elapsed))


def channelResistance(s, p):
    """
    Return the channel resistance in Ohm for the held polarization.
    """

    if s.polarization == Polarization.Up:
        return p.r_on
    return p.r_off


def drainSpin(s):
    """
    Return the spin label seen at the drain terminal (+1 up, -1 down).
    """

    return int(s.polarization)


def onOffRatio(p):
    return p.r_off / p.r_on


def paramsFromDict(overrides, base=None):
    """
    Apply a dictionary of device parameter overrides to the defaults (or to base) and
    return a validated MefetParams.  Unknown keys are errors.
    """

    if base is None:
        base = MefetParams()
    if overrides is None:
        return base

    known = set(f.name for f in fields(MefetParams))
    unknown = sorted(set(overrides) - known)
    if unknown:
        raise ConfigError("Unknown device parameter(s): %s" % ', '.join(unknown))

    values = {}
    for key, value in overrides.items():
        try:
            values[key] = float(value)
        except (TypeError, ValueError):
            raise ConfigError("Device parameter %s must be a number, got %r" % (key, value))

    return replace(base, **values)


def parseDeviceOverrides(text, source='<string>'):
    """
    Parse flat 'name = value' override text into a dictionary.  Blank lines
    and anything after '#' or ';' are ignored.  An optional '[device]' header
    is accepted.
    """

    overrides = {}
    for lineno, line in enumerate(text.split('\n'), 1):
        for marker in ('#', ';'):
            line = line.split(marker, 1)[0]
        line = line.strip()
        if line == '' or line.lower() == '[device]':
            continue
        if '=' not in line:
            raise ConfigError("%s line %i: expected 'name = value', got %r" % (source, lineno, line))

        key, value = (part.strip() for part in line.split('=', 1))
        if key == '' or value == '':
            raise ConfigError("%s line %i: empty name or value" % (source, lineno))
        if key in overrides:
            raise ConfigError("%s line %i: %s is set twice" % (source, lineno, key))
        overrides[key] = value

    return overrides


def loadDeviceOverrides(filename, base=None):
    """
    Load a device parameter override file and return a MefetParams.  Names
    are the MefetParams field names; unknown names are errors.
    """

    try:
        with open(filename, 'r') as fh:
            text = fh.read()
    except (OSError, IOError) as e:
        raise ConfigError("Cannot read device overrides '%s': %s" % (filename, str(e)))

    return paramsFromDict(parseDeviceOverrides(text, source=filename), base=base)
