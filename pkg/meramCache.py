import logging
from typing import NamedTuple
from dataclasses import dataclass

import numpy as np

from meramCommon import *
from meramTech import effective

__version__ = '0.3'
__all__ = ['CacheConfig', 'AccessRecord', 'SimStats', 'WorkloadSpec', 'CacheSet',
           'simulateCounts', 'execTime', 'simulate', 'energy', 'iterTrace', 'genTrace',
           'readTrace', 'writeTrace', 'presetWorkloads']


meramCacheLogger = logging.getLogger('__main__')


# Number of random draws made per batch by the trace generator
_BATCH_SIZE = 65536


@dataclass(frozen=True)
class CacheConfig:
    """
    Cache geometry in bytes plus the main memory penalty in ns.  Only LRU,
    write-back, write-allocate caches are modeled.
    """

    capacity: int = 4 * 1024 * 1024
    associativity: int = 8
    line_size: int = 64
    memory_penalty: float = 50.0
    write_policy: str = 'write-back'
    allocate_policy: str = 'write-allocate'
    replacement: str = 'LRU'

    def __post_init__(self):
        for key in ('capacity', 'associativity', 'line_size'):
            value = getattr(self, key)
            if not isinstance(value, int) or value < 1:
                raise ValidationError("%s must be a positive integer, got %r" % (key, value))
        checkNonNegative('memory_penalty', self.memory_penalty)
        if self.capacity % (self.associativity * self.line_size) != 0:
            raise ValidationError("Capacity %i is not a whole number of %i-way sets of %i B lines" \
                                  % (self.capacity, self.associativity, self.line_size))
        if (self.write_policy, self.allocate_policy, self.replacement) != ('write-back', 'write-allocate', 'LRU'):
            raise ValidationError("Only write-back, write-allocate, LRU caches are supported")

    @property
    def sets(self):
        return self.capacity // (self.associativity * self.line_size)

    @classmethod
    def fromSystem(cls, system, memory_penalty=50.0):
        """
        Build the L2 configuration of a SystemConfig.
        """

        return cls(capacity=system.l2_capacity, associativity=system.l2_associativity,
                   line_size=system.l2_line_size, memory_penalty=memory_penalty)


class AccessRecord(NamedTuple):
    op: str
    address: int
    core: int = 0


@dataclass
class SimStats:
    read_hits: int = 0
    read_misses: int = 0
    write_hits: int = 0
    write_misses: int = 0
    writebacks: int = 0
    exec_time: float = 0.0

    @property
    def hits(self):
        return self.read_hits + self.write_hits

    @property
    def misses(self):
        return self.read_misses + self.write_misses

    @property
    def accesses(self):
        return self.hits + self.misses

    @property
    def write_accesses(self):
        return self.write_hits + self.write_misses

    @property
    def writes(self):
        """
        Array writes charged at write energy: write accesses plus writebacks.
        """

        return self.write_accesses + self.writebacks

    @property
    def miss_rate(self):
        if self.accesses == 0:
            return 0.0
        return self.misses / self.accesses

    def counters(self):
        return (self.read_hits, self.read_misses, self.write_hits, self.write_misses, self.writebacks)

    def check(self):
        """
        Return a list of descriptions of the violated counter invariants.
        """

        problems = []
        if min(self.counters()) < 0:
            problems.append('negative counter in %s' % (self.counters(),))
        if self.writebacks > self.misses:
            problems.append('%i writebacks exceed %i misses' % (self.writebacks, self.misses))
        if self.exec_time < 0:
            problems.append('negative execution time %r' % self.exec_time)

        return problems


class CacheSet(LimitedSizeDict):
    """
    One LRU set: tags ordered from least to most recently used, each mapped
    to its dirty flag.  Inserting past the associativity evicts the least
    recently used line and counts it if dirty.
    """

    def __init__(self, associativity):
        self.dirtyEvictions = 0
        LimitedSizeDict.__init__(self, size_limit=associativity)

    def _check_size_limit(self):
        while len(self) > self.size_limit:
            tag, dirty = self.popitem(last=False)
            if dirty:
                self.dirtyEvictions += 1


def simulateCounts(cfg, trace):
    """
    Run a trace through the cache and return a SimStats holding only the
    hit/miss/writeback counters.  The counters do not depend on the memory
    technology.
    """

    nsets = cfg.sets
    line_size = cfg.line_size
    assoc = cfg.associativity

    cache = {}
    read_hits = read_misses = write_hits = write_misses = 0
    for record in trace:
        line = record.address // line_size
        index = line % nsets
        tag = line // nsets
        is_write = record.op == 'W'

        try:
            cset = cache[index]
        except KeyError:
            cset = cache[index] = CacheSet(assoc)

        if tag in cset:
            cset.move_to_end(tag)
            if is_write:
                cset[tag] = True
                write_hits += 1
            else:
                read_hits += 1
        else:
            cset[tag] = is_write
            if is_write:
                write_misses += 1
            else:
                read_misses += 1

    writebacks = sum(cset.dirtyEvictions for cset in cache.values())

    return SimStats(read_hits=read_hits, read_misses=read_misses, write_hits=write_hits,
                    write_misses=write_misses, writebacks=writebacks)


def execTime(stats, cfg, profile):
    """
    Return the accumulated L2 access time in s.  A read hit costs the hit
    latency and a write hit the write latency.  A miss costs the miss
    latency, the memory penalty, and one array write for the fill; every
    dirty eviction adds another array write.
    """

    miss_cost = effective(profile, 'miss_latency') + cfg.memory_penalty + profile.write_latency
    total_ns = stats.read_hits * profile.hit_latency \
               + stats.write_hits * profile.write_latency \
               + stats.misses * miss_cost \
               + stats.writebacks * profile.write_latency

    return total_ns * 1e-9


def simulate(cfg, trace, profile):
    """
    Simulate a trace for one technology and return its SimStats.
    """

    stats = simulateCounts(cfg, trace)
    stats.exec_time = execTime(stats, cfg, profile)

    meramCacheLogger.debug('%s: %i accesses, %i misses, %i writebacks, %.6e s',
                           profile.name, stats.accesses, stats.misses, stats.writebacks, stats.exec_time)

    return stats


def energy(stats, profile):
    """
    Return a two-element tuple of the dynamic and the leakage energy in J.
    """

    dynamic_nj = stats.hits * profile.hit_energy \
                 + stats.misses * effective(profile, 'miss_energy') \
                 + stats.writes * profile.write_energy
    leakage = profile.leakage_power * stats.exec_time

    return dynamic_nj * 1e-9, leakage


@dataclass(frozen=True)
class WorkloadSpec:
    """
    Synthetic workload description.  With probability `locality` an access
    reuses one of the last `reuse_window` distinct lines touched, picked
    uniformly by LRU stack depth, otherwise it picks a line uniformly from
    the footprint (bytes).  Each access is a write with
    probability `write_fraction`.
    """

    name: str = 'balanced'
    n_accesses: int = 1000000
    write_fraction: float = 0.3
    footprint: int = 4 * 1024 * 1024
    locality: float = 0.9
    seed: int = 0
    line_size: int = 64
    reuse_window: int = 64
    cores: int = 1

    def __post_init__(self):
        for key in ('n_accesses', 'seed'):
            value = getattr(self, key)
            if not isinstance(value, int) or value < 0:
                raise ValidationError("%s must be a non-negative integer, got %r" % (key, value))
        for key in ('footprint', 'line_size', 'reuse_window', 'cores'):
            value = getattr(self, key)
            if not isinstance(value, int) or value < 1:
                raise ValidationError("%s must be a positive integer, got %r" % (key, value))
        for key in ('write_fraction', 'locality'):
            value = getattr(self, key)
            if not (0.0 <= value <= 1.0):
                raise ValidationError("%s must be within [0, 1], got %r" % (key, value))
        if self.footprint < self.line_size:
            raise ValidationError("Footprint %i B is smaller than one %i B line" % (self.footprint, self.line_size))


def iterTrace(spec):
    """
    Generate the AccessRecords of a WorkloadSpec one at a time.  Equal specs
    (including the seed) always produce the same sequence.
    """

    rng = np.random.default_rng(spec.seed)
    n_lines = spec.footprint // spec.line_size
    stack = []      # distinct recent lines, most recent last

    done = 0
    while done < spec.n_accesses:
        count = min(_BATCH_SIZE, spec.n_accesses - done)
        reuse = (rng.random(count) < spec.locality).tolist()
        depth = rng.random(count).tolist()
        writes = (rng.random(count) < spec.write_fraction).tolist()
        lines = rng.integers(0, n_lines, size=count).tolist()
        offsets = rng.integers(0, spec.line_size, size=count).tolist()

        for i in range(count):
            if reuse[i] and stack:
                line = stack.pop(-1 - int(depth[i] * len(stack)))
            else:
                line = lines[i]
                if line in stack:
                    stack.remove(line)
                elif len(stack) == spec.reuse_window:
                    del stack[0]
            stack.append(line)

            yield AccessRecord('W' if writes[i] else 'R', line * spec.line_size + offsets[i],
                               (done + i) % spec.cores)
        done += count


def genTrace(spec):
    return list(iterTrace(spec))


def readTrace(filename):
    """
    Read a trace file of "R <hex-address>" / "W <hex-address>" lines.  Text
    after a '#' is ignored.
    """

    trace = []
    try:
        fh = open(filename, 'r')
    except (OSError, IOError) as e:
        raise ConfigError("Cannot read trace '%s': %s" % (filename, str(e)))

    with fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split('#', 1)[0].strip()
            if line == '':
                continue
            try:
                op, address = line.split()
                op = op.upper()
                if op not in ('R', 'W'):
                    raise ValueError(op)
                address = int(address, 16)
            except ValueError:
                raise ConfigError("%s line %i is not 'R|W <hex-address>': '%s'" % (filename, lineno, line))
            trace.append(AccessRecord(op, address))

    meramCacheLogger.debug('Read %i accesses from %s', len(trace), filename)

    return trace


def writeTrace(trace, filename, comment=None):
    with open(filename, 'w') as fh:
        if comment is not None:
            for line in comment.split('\n'):
                fh.write('# %s\n' % line)
        for record in trace:
            fh.write('%s %x\n' % (record.op, record.address))


def presetWorkloads(n_accesses=1000000, footprint=5*1024*1024, seed=0):
    """
    Return the standard workload grid: read-intensive, balanced, and
    write-intensive mixes (write fractions 0.1, 0.3, 0.5), each at a locality
    of 0.5 and 0.9.  Seeds are derived from the base seed.  The default
    footprint is 1.25x the 4 MB L2, so lines are evicted.
    """

    workloads = []
    for mix, write_fraction in (('read_intensive', 0.1), ('balanced', 0.3), ('write_intensive', 0.5)):
        for locality in (0.5, 0.9):
            workloads.append(WorkloadSpec(name='%s_l%02i' % (mix, round(locality*100)),
                                          n_accesses=n_accesses, write_fraction=write_fraction,
                                          footprint=footprint, locality=locality,
                                          seed=seed + len(workloads)))

    return workloads
