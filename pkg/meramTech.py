import logging
from typing import Optional, Tuple
from dataclasses import dataclass, fields, asdict

from meramCommon import *

__version__ = '0.3'
__all__ = ['TechnologyProfile', 'SystemConfig', 'builtinProfiles', 'loadProfiles',
           'saveProfiles', 'effective', 'profileByName', 'TECHNOLOGY_NAMES',
           'PROFILE_FILE_HEADER']


meramTechLogger = logging.getLogger('__main__')


TECHNOLOGY_NAMES = ('ReRAM', 'STT-MRAM', 'SOT-MRAM', 'SRAM', 'eDRAM', 'MERAM')


PROFILE_FILE_HEADER = """Technology profiles for a 4 MB unified L2 cache with 64 B lines.

One object per technology.  Units:
  area                 mm^2
  *_latency            ns
  *_energy             nJ
  leakage_power        W
  endurance            [lo, hi] decades of switches, null = unlimited
A null miss_latency/miss_energy falls back to the matching hit value."""


_OPTIONAL_FIELDS = ('miss_latency', 'miss_energy', 'endurance')
_POSITIVE_FIELDS = ('area', 'hit_latency', 'miss_latency', 'write_latency', 'hit_energy',
                    'miss_energy', 'write_energy', 'leakage_power')


@dataclass(frozen=True)
class TechnologyProfile:
    name: str
    non_volatile: bool
    access_transistors: int
    area: float
    hit_latency: float
    miss_latency: Optional[float]
    write_latency: float
    hit_energy: float
    miss_energy: Optional[float]
    write_energy: float
    leakage_power: float
    endurance: Optional[Tuple[int, int]]
    overwrite_issue: bool

    def __post_init__(self):
        if not isinstance(self.name, str) or self.name == '':
            raise ValidationError("Profile name must be a non-empty string")
        if not isinstance(self.access_transistors, int) or self.access_transistors < 1:
            raise ValidationError("%s: access_transistors must be a positive integer" % self.name)
        for key in _POSITIVE_FIELDS:
            value = getattr(self, key)
            if value is None and key in _OPTIONAL_FIELDS:
                continue
            checkPositive("%s.%s" % (self.name, key), value)
        if self.endurance is not None:
            lo, hi = self.endurance
            if not (0 < lo <= hi):
                raise ValidationError("%s: endurance decades must satisfy 0 < lo <= hi" % self.name)

    def toDict(self):
        out = asdict(self)
        if self.endurance is not None:
            out['endurance'] = list(self.endurance)
        return out


def builtinProfiles():
    """
    Return the six published L2 profiles as a list of TechnologyProfile.
    """

    return [
        TechnologyProfile(name='ReRAM', non_volatile=True, access_transistors=1, area=1.77,
                          hit_latency=2.55, miss_latency=1.21, write_latency=20.5,
                          hit_energy=0.33, miss_energy=0.033, write_energy=0.82,
                          leakage_power=0.38, endurance=(5, 10), overwrite_issue=False),
        TechnologyProfile(name='STT-MRAM', non_volatile=True, access_transistors=1, area=5.42,
                          hit_latency=3.14, miss_latency=1.28, write_latency=10.7,
                          hit_energy=0.52, miss_energy=0.044, write_energy=1.27,
                          leakage_power=0.79, endurance=(10, 15), overwrite_issue=False),
        TechnologyProfile(name='SOT-MRAM', non_volatile=True, access_transistors=2, area=5.85,
                          hit_latency=5.07, miss_latency=1.32, write_latency=3.93,
                          hit_energy=0.21, miss_energy=0.03, write_energy=0.27,
                          leakage_power=0.21, endurance=(10, 15), overwrite_issue=False),
        TechnologyProfile(name='SRAM', non_volatile=False, access_transistors=6, area=12.4,
                          hit_latency=1.59, miss_latency=0.34, write_latency=0.78,
                          hit_energy=0.73, miss_energy=0.017, write_energy=0.72,
                          leakage_power=6.2, endurance=None, overwrite_issue=False),
        TechnologyProfile(name='eDRAM', non_volatile=False, access_transistors=1, area=4.46,
                          hit_latency=3.1, miss_latency=None, write_latency=3.1,
                          hit_energy=0.24, miss_energy=None, write_energy=0.24,
                          leakage_power=0.57, endurance=(15, 15), overwrite_issue=True),
        TechnologyProfile(name='MERAM', non_volatile=True, access_transistors=2, area=6.94,
                          hit_latency=0.65, miss_latency=0.22, write_latency=0.94,
                          hit_energy=0.22, miss_energy=0.037, write_energy=0.27,
                          leakage_power=0.19, endurance=(17, 17), overwrite_issue=False),
    ]


def _profileFromDict(entry, index):
    if not isinstance(entry, dict):
        raise ConfigError("Profile entry %i is not an object" % index)

    names = [f.name for f in fields(TechnologyProfile)]
    unknown = sorted(set(entry) - set(names))
    if unknown:
        raise ConfigError("Profile entry %i has unknown field(s): %s" % (index, ', '.join(unknown)))
    missing = [name for name in names if name not in entry and name not in _OPTIONAL_FIELDS]
    if missing:
        raise ConfigError("Profile entry %i is missing field(s): %s" % (index, ', '.join(missing)))

    values = dict(entry)
    for name in _OPTIONAL_FIELDS:
        values.setdefault(name, None)
    if values['endurance'] is not None:
        try:
            lo, hi = values['endurance']
            values['endurance'] = (int(lo), int(hi))
        except (TypeError, ValueError):
            raise ConfigError("Profile entry %i: endurance must be [lo, hi] or null" % index)
    if not isinstance(values['non_volatile'], bool) or not isinstance(values['overwrite_issue'], bool):
        raise ConfigError("Profile entry %i: non_volatile/overwrite_issue must be true or false" % index)

    try:
        return TechnologyProfile(**values)
    except ValidationError as e:
        raise ConfigError("Profile entry %i: %s" % (index, str(e)))


def loadProfiles(filename):
    """
    Load and validate a profile file.  Returns a list of TechnologyProfile in
    file order; an empty file gives an empty list.
    """

    contents = loadJSONConfig(filename)
    if contents is None:
        return []
    if not isinstance(contents, list):
        raise ConfigError("'%s' must contain a list of profile objects" % filename)

    profiles = []
    seen = set()
    for i, entry in enumerate(contents):
        profile = _profileFromDict(entry, i)
        if profile.name in seen:
            raise ConfigError("Duplicate profile '%s' in '%s'" % (profile.name, filename))
        seen.add(profile.name)
        profiles.append(profile)

    meramTechLogger.debug('Loaded %i technology profile(s) from %s', len(profiles), filename)

    return profiles


def saveProfiles(profiles, filename):
    """
    Write profiles in the format read by loadProfiles().
    """

    saveJSONConfig([p.toDict() for p in profiles], filename, header=PROFILE_FILE_HEADER)


def effective(profile, key):
    """
    Return miss_latency or miss_energy, substituting the hit value when the
    profile has none.
    """

    if key == 'miss_latency':
        return profile.hit_latency if profile.miss_latency is None else profile.miss_latency
    elif key == 'miss_energy':
        return profile.hit_energy if profile.miss_energy is None else profile.miss_energy

    raise ValidationError("No effective value rule for '%s'" % key)


def profileByName(profiles, name):
    for profile in profiles:
        if profile.name == name:
            return profile

    raise ConfigError("Unknown technology '%s'" % name)


@dataclass(frozen=True)
class SystemConfig:
    """
    Simulated system.  Cache sizes are in bytes and the clock in Hz; main
    memory is descriptive only.
    """

    cores: int = 4
    cpu_clock: float = 3.3e9
    l1_capacity: int = 32 * 1024
    l1_associativity: int = 8
    l1_line_size: int = 64
    l1_write_back: bool = True
    l2_capacity: int = 4 * 1024 * 1024
    l2_associativity: int = 8
    l2_line_size: int = 64
    l2_write_back: bool = True
    memory: str = '8 GB, 1 channel, 4 ranks/channel, 8 banks/rank'

    def __post_init__(self):
        checkPositive('cores', self.cores)
        checkPositive('cpu_clock', self.cpu_clock)
        for level in ('l1', 'l2'):
            capacity = getattr(self, level+'_capacity')
            assoc = getattr(self, level+'_associativity')
            line = getattr(self, level+'_line_size')
            for value in (capacity, assoc, line):
                checkPositive(level, value)
            if capacity % line != 0:
                raise ValidationError("%s line size %i does not divide capacity %i" % (level, line, capacity))
            if (capacity // line) % assoc != 0:
                raise ValidationError("%s associativity %i does not divide the %i lines" % (level, assoc, capacity // line))

    @classmethod
    def default(cls):
        return cls()
