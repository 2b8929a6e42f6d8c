import os
import copy
import time
import logging
from dataclasses import asdict, fields, replace

import numpy as np

from meramCommon import *
from meramDevice import *
from meramArray import *
from meramTech import *
from meramEstimator import *
from meramCache import *
from meramReport import *
from meramThreads import *

__version__ = '0.3'
__all__ = ['commandExitCodes', 'RunConfig', 'MeramSim']


meramFunctionsLogger = logging.getLogger('__main__')


commandExitCodes = {0x00: 'Process accepted without error',
                    0x01: 'Invalid arguments, configuration, or input file',
                    0x02: 'Internal consistency check failed during the run',}


_SECTIONS = ('device', 'array', 'cache', 'workloads', 'profiles', 'technologies',
             'report', 'output', 'seed')
_DICT_SECTIONS = ('array', 'cache', 'workloads', 'report', 'output')


def _mergeConfig(base, update, source):
    """
    Merge a user configuration over the defaults, section by section.
    """

    if not isinstance(update, dict):
        raise ConfigError("'%s' must contain a single object" % source)
    unknown = sorted(set(update) - set(_SECTIONS))
    if unknown:
        raise ConfigError("Unknown configuration section(s) in '%s': %s" % (source, ', '.join(unknown)))

    merged = copy.deepcopy(base)
    for section, value in update.items():
        if section == 'device':
            if isinstance(value, str):
                merged['device'] = value
            elif isinstance(value, dict):
                merged['device'].update(value)
            else:
                raise ConfigError("Section 'device' must be an object or the name of an override file")
        elif section in _DICT_SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError("Section '%s' must be an object" % section)
            unknown = sorted(set(value) - set(base[section]))
            if unknown:
                raise ConfigError("Unknown key(s) in section '%s': %s" % (section, ', '.join(unknown)))
            merged[section].update(value)
        else:
            merged[section] = value

    return merged


class RunConfig(object):
    """
    Validated run configuration.  The raw values are the defaults file merged
    with a user file; every derived object (device parameters, cache,
    workloads, profiles) is built and checked when the RunConfig is created.
    """

    def __init__(self, values):
        self.values = copy.deepcopy(values)
        self._resolve()

    @classmethod
    def load(cls, filename=None, defaults=DEFAULTS_FILENAME):
        values = loadJSONConfig(defaults)
        if values is None:
            raise ConfigError("Defaults file '%s' is empty" % defaults)
        if filename is not None:
            user = loadJSONConfig(filename)
            if user is not None:
                values = _mergeConfig(values, user, filename)

        meramFunctionsLogger.debug('Loaded configuration from %s%s', defaults,
                                   '' if filename is None else ' and %s' % filename)

        return cls(values)

    def withOverrides(self, out=None, fmt=None, seed=None, profiles=None):
        """
        Return a new RunConfig with the command line overrides applied.
        """

        values = copy.deepcopy(self.values)
        if out is not None:
            values['output']['directory'] = out
        if fmt is not None:
            values['output']['formats'] = [fmt,]
        if seed is not None:
            values['seed'] = seed
        if profiles is not None:
            values['profiles'] = profiles

        return RunConfig(values)

    def _resolve(self):
        v = self.values
        missing = [section for section in _SECTIONS if section not in v]
        if missing:
            raise ConfigError("Missing configuration section(s): %s" % ', '.join(missing))

        # Seed
        seed = v['seed']
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise ConfigError("seed must be a non-negative integer, got %r" % (seed,))
        self.seed = seed

        # Device
        if isinstance(v['device'], str):
            self.params = loadDeviceOverrides(v['device'])
        else:
            self.params = paramsFromDict(v['device'])

        # Array
        a = v['array']
        try:
            for key in ('rows', 'cols', 'random_ops', 'exhaustive_limit'):
                if not isinstance(a[key], int) or isinstance(a[key], bool):
                    raise ValidationError("array.%s must be an integer, got %r" % (key, a[key]))
            for key in ('random_ops', 'exhaustive_limit'):
                checkNonNegative('array.'+key, a[key])
            for key in ('i_sense', 'v_dd', 'clock_period'):
                checkPositive('array.'+key, a[key])
            for key in ('v_write', 'r_access'):
                checkNonNegative('array.'+key, a[key])
            float(a['sa_offset'])
            if a['script'] is not None and not isinstance(a['script'], str):
                raise ValidationError("array.script must be a file name or null")
            if a['clock_period'] < 2 * self.params.t_switch:
                raise ValidationError("array.clock_period %.3e s is shorter than two switching delays" % a['clock_period'])
        except (TypeError, ValueError) as e:
            raise ConfigError("Invalid array section: %s" % str(e))
        self.array = dict(a)

        # Cache, null geometry entries come from the simulated system's L2
        c = dict(v['cache'])
        try:
            cache = CacheConfig.fromSystem(SystemConfig.default(), memory_penalty=c.pop('memory_penalty'))
            self.cache = replace(cache, **{key: value for key, value in c.items() if value is not None})
        except (TypeError, ValidationError) as e:
            raise ConfigError("Invalid cache section: %s" % str(e))

        # Workloads
        w = v['workloads']
        if not isinstance(w['custom'], list):
            raise ConfigError("workloads.custom must be a list")
        try:
            workloads = []
            if w['presets']:
                workloads.extend(presetWorkloads(n_accesses=w['n_accesses'], footprint=w['footprint'],
                                                 seed=self.seed))
            for entry in w['custom']:
                if not isinstance(entry, dict):
                    raise ConfigError("workloads.custom entries must be objects")
                entry = dict(entry)
                entry.setdefault('seed', self.seed + len(workloads))
                workloads.append(WorkloadSpec(**entry))
        except (TypeError, ValidationError) as e:
            raise ConfigError("Invalid workloads section: %s" % str(e))
        names = [spec.name for spec in workloads]
        if len(set(names)) != len(names):
            raise ConfigError("Workload names must be unique: %s" % ', '.join(names))
        self.workloads = workloads

        # Technology profiles
        if v['profiles'] is None:
            profiles = builtinProfiles()
        elif isinstance(v['profiles'], str):
            profiles = loadProfiles(v['profiles'])
        else:
            raise ConfigError("profiles must be a file name or null")
        if v['technologies'] is None:
            self.technologies = profiles
        elif isinstance(v['technologies'], list):
            self.technologies = [profileByName(profiles, name) for name in v['technologies']]
        else:
            raise ConfigError("technologies must be a list of names or null")
        if not self.technologies:
            raise ConfigError("No technology profiles selected")

        # Report
        r = v['report']
        if r['latency_mode'] not in ('total', 'average'):
            raise ConfigError("report.latency_mode must be 'total' or 'average', got %r" % (r['latency_mode'],))
        self.report = dict(r)

        # Output
        o = v['output']
        if not isinstance(o['directory'], str) or o['directory'] == '':
            raise ConfigError("output.directory must be a non-empty string")
        if not isinstance(o['formats'], list) or not o['formats'] \
           or any(fmt not in REPORT_FORMATS for fmt in o['formats']):
            raise ConfigError("output.formats must be a non-empty list drawn from %s" % ', '.join(REPORT_FORMATS))
        self.output = {'directory': o['directory'], 'formats': list(o['formats'])}

    def toDict(self):
        """
        Return the fully resolved configuration.  Workloads are written out
        explicitly, seeds included, so that reloading the result gives an
        equal RunConfig.
        """

        return {'device': {f.name: getattr(self.params, f.name) for f in fields(self.params)},
                'array': dict(self.array),
                'cache': {'capacity': self.cache.capacity,
                          'associativity': self.cache.associativity,
                          'line_size': self.cache.line_size,
                          'memory_penalty': self.cache.memory_penalty},
                'workloads': {'presets': False,
                              'n_accesses': self.values['workloads']['n_accesses'],
                              'footprint': self.values['workloads']['footprint'],
                              'custom': [asdict(spec) for spec in self.workloads]},
                'profiles': self.values['profiles'],
                'technologies': [p.name for p in self.technologies],
                'report': dict(self.report),
                'output': dict(self.output),
                'seed': self.seed}

    def save(self, filename):
        saveJSONConfig(self.toDict(), filename,
                       header='Resolved configuration written by meram_sim.py %s' % __version__)

    def __eq__(self, other):
        if not isinstance(other, RunConfig):
            return NotImplemented
        return self.toDict() == other.toDict()


class MeramSim(object):
    """
    Class implementing the meram_sim.py subcommands.

    A note about exit codes from the commands:
     *  See commandExitCodes
    """

    def __init__(self, config):
        self.config = config
        self.version = str(__version__)
        self.lastLog = 'Welcome to meram_sim, version %s' % self.version
        self.outputs = []
        self.summary = None
        self.reports = []

    def _fail(self, name, exitCode, message):
        self.lastLog = '%s: %s - %s' % (name, commandExitCodes[exitCode], message)
        meramFunctionsLogger.error('%s', self.lastLog)
        return False, exitCode

    def _run(self, name, function, *args):
        tStart = time.time()
        try:
            function(*args)
        except InvariantError as e:
            return self._fail(name, 0x02, str(e))
        except (ValidationError, RuntimeError) as e:
            return self._fail(name, 0x01, str(e))
        except (OSError, IOError) as e:
            return self._fail(name, 0x01, 'I/O error: %s' % str(e))

        self.lastLog = '%s: finished in %.3f s' % (name, time.time() - tStart)
        meramFunctionsLogger.info('%s', self.lastLog)
        return True, 0x00

    def _outPath(self, basename):
        directory = self.config.output['directory']
        if not os.path.exists(directory):
            os.makedirs(directory)
        filename = os.path.join(directory, basename)
        self.outputs.append(filename)
        return filename

    def _writeTable(self, table, schema, basename=None):
        if basename is None:
            basename = schema
        for fmt in self.config.output['formats']:
            writeDocument(table, schema, fmt, self._outPath('%s.%s' % (basename, fmt)))

    def _newArray(self, rows, cols, initial=None):
        a = self.config.array
        return MeramArray(rows, cols, params=self.config.params, v_dd=a['v_dd'], i_sense=a['i_sense'],
                          v_write=a['v_write'], sa_offset=a['sa_offset'], r_access=a['r_access'],
                          clock_period=a['clock_period'], initial=initial)

    #
    # device
    #

    def cmdDevice(self, script=None):
        """
        Run the two write/re-read experiments (plus an optional user timing
        script) and write the waveforms and the device summary.
        """

        return self._run('DEVICE', self._device, script)

    def _device(self, script):
        p = self.config.params
        a = self.config.array
        if script is None:
            script = a['script']

        subthreshold = a['v_write'] <= p.v_t
        if subthreshold:
            meramFunctionsLogger.warning('Write voltage %.3f V does not exceed the %.3f V threshold; cells will not switch',
                                         a['v_write'], p.v_t)

        experiments = {}
        for name in sorted(EXPERIMENTS.keys()):
            bit = EXPERIMENTS[name]
            array = self._newArray(1, 1, initial=np.array([[1 - bit]]))
            samples = transientTrace(array, experimentScript(bit, a['clock_period']))
            writeWaveform(samples, self._outPath('waveform_%s.csv' % name))

            written, reread = samples[1].sa_out, samples[3].sa_out
            switched = array.storedBit(0, 0) == bit
            experiments[name] = {'written_bit': bit,
                                 'sa_write_cycle': written,
                                 'sa_reread_cycle': reread,
                                 'switched': switched}
            meramFunctionsLogger.info('%s: wrote %i, SA %i then %i, %s', name, bit, written, reread,
                                      'switched' if switched else 'not switched')

        if script is not None:
            steps = loadScript(script)
            rows = max([s.row for s in steps] + [0]) + 1
            cols = max([s.col for s in steps] + [0]) + 1
            array = self._newArray(max(rows, a['rows']), max(cols, a['cols']))
            writeWaveform(transientTrace(array, steps), self._outPath('waveform_script.csv'))

        levels = self._newArray(1, 1).senseLevels()
        half = a['clock_period'] / 2.0
        summary = {'me_capacitance_F': meCapacitance(p),
                   'write_voltage_V': a['v_write'],
                   'write_energy_J': writeEnergy(p, a['v_write']),
                   'nominal_write_energy_J': writeEnergy(p, p.v_g_nominal),
                   'on_off_ratio': onOffRatio(p),
                   'r_on_Ohm': p.r_on,
                   'r_off_Ohm': p.r_off,
                   't_switch_s': p.t_switch,
                   'physical_switching_window_s': list(PHYSICAL_SWITCHING_WINDOW),
                   'subthreshold_write': subthreshold,
                   'v_sense_low_V': levels.v_low,
                   'v_sense_high_V': levels.v_high,
                   'v_ref_V': levels.v_ref,
                   'read_energy_low_J': readEnergy(levels.v_low, a['i_sense'], half),
                   'read_energy_high_J': readEnergy(levels.v_high, a['i_sense'], half),
                   'experiments': experiments}
        saveJSONConfig(summary, self._outPath('device_summary.json'),
                       header='MEFET device summary (SI units)')

        meramFunctionsLogger.info('C_ME = %.4e F, E_write = %.4e J, ON/OFF = %.2f',
                                  summary['me_capacitance_F'], summary['write_energy_J'], summary['on_off_ratio'])
        self.summary = summary

    #
    # array
    #

    def cmdArray(self, rows=None, cols=None):
        """
        Check write/read round trips, half-select safety, read
        non-destructiveness, and bias compliance on an array, and report the
        sense margins.
        """

        return self._run('ARRAY', self._array, rows, cols)

    def _array(self, rows, cols):
        a = self.config.array
        if rows is None:
            rows = a['rows']
        if cols is None:
            cols = a['cols']

        rng = np.random.default_rng(self.config.seed)
        initial = rng.integers(0, 2, size=(rows, cols)) if rows > 0 and cols > 0 else None
        array = self._newArray(rows, cols, initial=initial)
        expected = np.array(initial, dtype=np.int8)

        problems = {'roundtrip': 0, 'half_select': 0, 'destructive_read': 0, 'bias': 0}

        def biasCheck(op, accessed, row, col, bias):
            reference = biasFor(op, accessed, v_write=array.v_write, i_sense=array.i_sense)
            if bias != reference:
                problems['bias'] += 1
        array.addBiasListener(biasCheck)

        def lines(row, col):
            return ([cell.device for cell in array.cells[row]],
                    [array.cells[i][col].device for i in range(array.rows)])

        def unchangedExcept(before, after, row, col):
            ok = all(b == c for j, (b, c) in enumerate(zip(before[0], after[0])) if j != col)
            ok &= all(b == c for i, (b, c) in enumerate(zip(before[1], after[1])) if i != row)
            return ok

        def write(row, col, bit):
            before = lines(row, col)
            array.writeBit(row, col, bit)
            expected[row, col] = bit
            if not unchangedExcept(before, lines(row, col), row, col):
                problems['half_select'] += 1

        def read(row, col):
            before = lines(row, col)
            bit, _ = array.readBit(row, col)
            if bit != expected[row, col]:
                problems['roundtrip'] += 1
            if lines(row, col) != before:
                problems['destructive_read'] += 1

        if rows * cols <= a['exhaustive_limit']:
            mode = 'exhaustive'
            cases = 0
            for row in range(rows):
                for col in range(cols):
                    for bit in (0, 1):
                        write(row, col, bit)
                        read(row, col)
                        cases += 1
        else:
            mode = 'randomized'
            cases = a['random_ops']
            ops = rng.integers(0, 3, size=cases)
            where = rng.integers(0, [rows, cols], size=(cases, 2))
            for op, (row, col) in zip(ops, where):
                row, col = int(row), int(col)
                if op == 2:
                    read(row, col)
                else:
                    write(row, col, int(op))

        # Final full comparison against the shadow copy
        polarization = np.where(expected == 1, int(Polarization.Down), int(Polarization.Up))
        mismatched = int(np.count_nonzero(array.polarizationMap() != polarization))

        levels = array.senseLevels()
        half = array.clock_period / 2.0
        report = {'rows': rows, 'cols': cols, 'mode': mode, 'cases': cases,
                  'roundtrip_failures': problems['roundtrip'],
                  'half_select_violations': problems['half_select'],
                  'destructive_reads': problems['destructive_read'],
                  'bias_violations': problems['bias'],
                  'final_mismatches': mismatched,
                  'v_sense_low_V': levels.v_low, 'v_sense_high_V': levels.v_high, 'v_ref_V': levels.v_ref,
                  'margin0_V': levels.margin0, 'margin1_V': levels.margin1,
                  'read_energy_low_J': readEnergy(levels.v_low, array.i_sense, half),
                  'read_energy_high_J': readEnergy(levels.v_high, array.i_sense, half)}
        saveJSONConfig(report, self._outPath('array_report.json'), header='MERAM array check report')
        self.summary = report

        meramFunctionsLogger.info('%ix%i %s check: %i case(s), margins %.4f V / %.4f V',
                                  rows, cols, mode, cases, levels.margin0, levels.margin1)

        failures = sum(problems.values()) + mismatched
        if failures:
            raise InvariantError("%i array check failure(s): %s, %i final mismatch(es)" % (failures, problems, mismatched))

    #
    # simulate / compare
    #

    def _countGrid(self, trace=None):
        """
        Return a list of (workload name, SimStats counters) pairs.  The
        counters do not depend on the technology so each workload is only
        simulated once.
        """

        cfg = self.config.cache
        if trace is not None:
            records = readTrace(trace)
            name = os.path.splitext(os.path.basename(trace))[0]
            jobs = [(name, lambda records=records: records)]
        else:
            jobs = [(spec.name, lambda spec=spec: iterTrace(spec)) for spec in self.config.workloads]
        if not jobs:
            raise ConfigError("No workloads to simulate")

        def count(job):
            name, source = job
            return name, simulateCounts(cfg, source())

        runner = GridRunner(count, name='workload')
        results = runner.run(jobs)

        problems = []
        expected = {spec.name: spec.n_accesses for spec in self.config.workloads}
        for name, counts in results:
            problems.extend('%s: %s' % (name, p) for p in counts.check())
            if trace is None and counts.accesses != expected[name]:
                problems.append('%s: %i accesses counted for %i generated' % (name, counts.accesses, expected[name]))
        if problems:
            raise InvariantError('; '.join(problems))

        return results

    def _perTechnology(self, grid):
        results = []
        for name, counts in grid:
            for profile in self.config.technologies:
                stats = copy.copy(counts)
                stats.exec_time = execTime(counts, self.config.cache, profile)
                results.append((name, profile, stats))

        return results

    def cmdSimulate(self, trace=None):
        """
        Simulate the configured workloads (or a trace file) for every selected
        technology and write the statistics and energy tables.
        """

        return self._run('SIMULATE', self._simulate, trace)

    def _simulate(self, trace):
        results = self._perTechnology(self._countGrid(trace))
        reports = [buildReport(name, profile, stats, self.config.report['latency_mode'])
                   for name, profile, stats in results]

        self._writeTable(simstatsRows([(name, profile.name, stats) for name, profile, stats in results]), 'simstats')
        self._writeTable(energyRows(reports), 'energy')
        self.config.save(self._outPath('resolved_config.json'))
        self.reports = reports

    def cmdCompare(self, trace=None):
        """
        Run every workload against every technology and write the statistics,
        energy, latency, EAT, reduction, and radar tables.
        """

        return self._run('COMPARE', self._compare, trace)

    def _compare(self, trace):
        baseline = self.config.report['baseline']
        candidate = self.config.report['candidate']
        names = [p.name for p in self.config.technologies]

        results = self._perTechnology(self._countGrid(trace))
        reports = [buildReport(name, profile, stats, self.config.report['latency_mode'])
                   for name, profile, stats in results]
        if baseline in names:
            reports = normalize(reports, baseline)
        else:
            meramFunctionsLogger.warning("Baseline '%s' is not among the selected technologies; EAT is not normalized", baseline)
            baseline = None

        problems = checkReports(reports, baseline=baseline)
        if problems:
            raise InvariantError('; '.join(problems))

        self._writeTable(simstatsRows([(name, profile.name, stats) for name, profile, stats in results]), 'simstats')
        self._writeTable(energyRows(reports), 'energy')
        self._writeTable(latencyRows(reports, baseline=baseline), 'latency')
        self._writeTable(eatRows(reports), 'eat')
        if len(names) > 1 and candidate in names:
            reductions = reductionTable(reports, candidate=candidate)
            self._writeTable(reductions, 'reductions')
            for _, row in reductions.iterrows():
                meramFunctionsLogger.info('%s vs %s: %.2f%% average EAT reduction', row['candidate'],
                                          row['reference'], row['mean_reduction_pct'])
        else:
            meramFunctionsLogger.info('Only one technology selected or no %s; reductions omitted', candidate)
        self._writeTable(radarRows(self.config.technologies), 'radar')
        area = areaRows(self.config.technologies, self.config.cache.capacity * 8, candidate=candidate)
        self._writeTable(area, 'area')
        for _, row in area.iterrows():
            meramFunctionsLogger.info('%s: %.4f mm^2 bare cell array vs %.4f mm^2 macro, overhead %.4f, %.1f F^2/bit cell vs %.1f F^2/bit macro',
                                      row['technology'], row['bare_array_mm2'], row['macro_area_mm2'],
                                      row['calibrated_overhead'], row['cell_f2_per_bit'], row['macro_f2_per_bit'])
        self.config.save(self._outPath('resolved_config.json'))

        for workload in sorted(set(r.workload for r in reports)):
            best = min((r for r in reports if r.workload == workload), key=lambda r: r.eat)
            meramFunctionsLogger.info('%s: lowest EAT %s (%.4e J mm^2 s)', workload, best.technology, best.eat)

        self.reports = reports

    #
    # report
    #

    def cmdReport(self, source=None, baseline=None):
        """
        Reload an EAT JSON document, normalize it against a (possibly new)
        baseline, and re-emit it with its reduction table.
        """

        return self._run('REPORT', self._report, source, baseline)

    def _report(self, source, baseline):
        if source is None:
            source = os.path.join(self.config.output['directory'], 'eat.json')
        if baseline is None:
            baseline = self.config.report['baseline']
        candidate = self.config.report['candidate']

        reports = normalize(reportsFromDocument(loadDocument(source)), baseline)
        problems = checkReports(reports, baseline=baseline)
        if problems:
            raise InvariantError('; '.join(problems))

        self._writeTable(eatRows(reports), 'eat', 'eat_%s' % baseline)
        if candidate in set(r.technology for r in reports) and len(set(r.technology for r in reports)) > 1:
            self._writeTable(reductionTable(reports, candidate=candidate), 'reductions', 'reductions_%s' % baseline)
        self._writeTable(latencyRows(reports, baseline=baseline), 'latency', 'latency_%s' % baseline)

        self.reports = reports
