import json
import math
import logging
from typing import Optional
from dataclasses import dataclass, replace

import pandas as pd

from meramCommon import *
from meramCache import energy
from meramEstimator import LAYOUT_MODELS, cellArea, macroArea, calibrateOverhead, areaPerBitF2

__version__ = '0.3'
__all__ = ['EatReport', 'eat', 'reductionPct', 'normalize', 'buildReport', 'checkReports',
           'reductionTable', 'radarRows', 'areaRows', 'energyRows', 'latencyRows', 'simstatsRows',
           'eatRows', 'reportsFromDocument', 'emit', 'writeDocument', 'loadDocument',
           'REPORT_FORMATS', 'SCHEMA_VERSION']


meramReportLogger = logging.getLogger('__main__')


REPORT_FORMATS = ('csv', 'json')
SCHEMA_VERSION = 1


# Report field -> column header
_EAT_COLUMNS = [('technology', 'technology'),
                ('workload', 'workload'),
                ('dynamic_energy', 'dynamic_energy_J'),
                ('leakage_energy', 'leakage_energy_J'),
                ('total_energy', 'total_energy_J'),
                ('area', 'area_mm2'),
                ('total_latency', 'total_latency_s'),
                ('eat', 'eat_J_mm2_s'),
                ('normalized_eat', 'normalized_eat')]


@dataclass(frozen=True)
class EatReport:
    technology: str
    workload: str
    dynamic_energy: float
    leakage_energy: float
    total_energy: float
    area: float
    total_latency: float
    eat: float
    normalized_eat: Optional[float] = None


def eat(total_energy, area, total_latency):
    """
    Return the EAT product in J*mm^2*s.
    """

    checkNonNegative('total_energy', total_energy)
    checkNonNegative('area', area)
    checkNonNegative('total_latency', total_latency)

    return total_energy * area * total_latency


def reductionPct(candidate_eat, reference_eat):
    """
    Return how much smaller the candidate is than the reference, in percent.
    """

    try:
        ok = reference_eat > 0
    except TypeError:
        ok = False
    if not ok:
        raise ValidationError("Reference EAT must be positive, got %r" % (reference_eat,))

    return 100.0 * (1.0 - candidate_eat / reference_eat)


def buildReport(workload, profile, stats, latency_mode='total'):
    """
    Combine the simulation statistics of one workload with a technology
    profile.  With latency_mode 'total' the accumulated access time enters
    the product; with 'average' the mean time per access does.
    """

    if latency_mode not in ('total', 'average'):
        raise ValidationError("latency_mode must be 'total' or 'average', got %r" % (latency_mode,))

    dynamic, leakage = energy(stats, profile)
    total = dynamic + leakage
    latency = stats.exec_time
    if latency_mode == 'average':
        latency = latency / stats.accesses if stats.accesses else 0.0

    return EatReport(technology=profile.name, workload=workload,
                     dynamic_energy=dynamic, leakage_energy=leakage, total_energy=total,
                     area=profile.area, total_latency=latency,
                     eat=eat(total, profile.area, latency))


def _baselineMean(reports, baseline, key):
    values = [getattr(r, key) for r in reports if r.technology == baseline]
    if not values:
        raise ValidationError("Baseline technology '%s' is not in the report set" % baseline)

    return sum(values) / len(values)


def normalize(reports, baseline):
    """
    Return copies of the reports with normalized_eat set relative to the mean
    baseline EAT across workloads.
    """

    mean = _baselineMean(reports, baseline, 'eat')
    if mean <= 0:
        raise ValidationError("Baseline technology '%s' has a zero mean EAT" % baseline)

    return [replace(r, normalized_eat=r.eat / mean) for r in reports]


def checkReports(reports, baseline=None, rel_tol=1e-9):
    """
    Return a list of descriptions of the report invariants that do not hold.
    """

    problems = []
    for r in reports:
        expected = r.total_energy * r.area * r.total_latency
        if not math.isclose(r.eat, expected, rel_tol=rel_tol, abs_tol=0.0):
            problems.append('%s/%s: eat %r is not energy*area*latency %r' % (r.technology, r.workload, r.eat, expected))
        if not math.isclose(r.total_energy, r.dynamic_energy + r.leakage_energy, rel_tol=rel_tol):
            problems.append('%s/%s: total energy is not dynamic + leakage' % (r.technology, r.workload))

    if baseline is not None:
        base = [r.normalized_eat for r in reports if r.technology == baseline]
        if base and (None in base or not math.isclose(sum(base) / len(base), 1.0, rel_tol=rel_tol)):
            problems.append('%s mean normalized EAT is not 1' % baseline)

    return problems


def reductionTable(reports, candidate='MERAM'):
    """
    Return a DataFrame with the average per-workload EAT reduction of the
    candidate against every other technology.  Empty when the candidate is
    the only technology.
    """

    candidates = {r.workload: r.eat for r in reports if r.technology == candidate}
    if not candidates:
        raise ValidationError("Candidate technology '%s' is not in the report set" % candidate)

    rows = []
    others = []
    for r in reports:
        if r.technology != candidate and r.technology not in others:
            others.append(r.technology)
    for tech in others:
        values = [reductionPct(candidates[r.workload], r.eat)
                  for r in reports if r.technology == tech and r.workload in candidates]
        if not values:
            continue
        rows.append({'candidate': candidate, 'reference': tech,
                     'mean_reduction_pct': sum(values) / len(values),
                     'min_reduction_pct': min(values),
                     'max_reduction_pct': max(values),
                     'workloads': len(values)})

    return pd.DataFrame(rows, columns=['candidate', 'reference', 'mean_reduction_pct',
                                       'min_reduction_pct', 'max_reduction_pct', 'workloads'])


_RADAR_AXES = ['hit_latency', 'write_latency', 'write_energy', 'leakage_power', 'area']


def radarRows(profiles):
    """
    Return the benchmarking radar table: every axis divided by its largest
    value across the profiles.  The endurance axis uses the upper decade,
    and an unlimited endurance maps to 1.
    """

    rows = []
    if not profiles:
        return pd.DataFrame(rows, columns=['technology'] + _RADAR_AXES + ['endurance'])

    maxima = {axis: max(getattr(p, axis) for p in profiles) for axis in _RADAR_AXES}
    finite = [p.endurance[1] for p in profiles if p.endurance is not None]
    max_endurance = max(finite) if finite else 1
    for p in profiles:
        row = {'technology': p.name}
        for axis in _RADAR_AXES:
            row[axis] = getattr(p, axis) / maxima[axis]
        row['endurance'] = 1.0 if p.endurance is None else p.endurance[1] / max_endurance
        rows.append(row)

    return pd.DataFrame(rows, columns=['technology'] + _RADAR_AXES + ['endurance'])


_AREA_COLUMNS = ['technology', 'cell_area_lambda2', 'cell_area_nm2', 'cell_f2_per_bit',
                 'bare_array_mm2', 'macro_area_mm2', 'macro_f2_per_bit', 'calibrated_overhead',
                 'cell_ratio_to_candidate', 'macro_ratio_to_candidate']


def areaRows(profiles, capacity_bits, candidate='MERAM'):
    """
    Layout versus macro area check for every profile with a cell layout.
    The bare cell array is compared against the profile's macro area and
    the overhead that reconciles the two is reported; a negative overhead
    is logged by calibrateOverhead().
    """

    by_name = {p.name: p for p in profiles if p.name in LAYOUT_MODELS}
    base = None
    if candidate in by_name:
        base = (cellArea(LAYOUT_MODELS[candidate]), by_name[candidate].area)

    rows = []
    for name, profile in by_name.items():
        model = LAYOUT_MODELS[name]
        cell = cellArea(model)
        rows.append({'technology': name,
                     'cell_area_lambda2': model.cell_area_lambda2,
                     'cell_area_nm2': cell,
                     'cell_f2_per_bit': areaPerBitF2(cell / 1e12, 1, model.lambda_nm),
                     'bare_array_mm2': macroArea(capacity_bits, model),
                     'macro_area_mm2': profile.area,
                     'macro_f2_per_bit': areaPerBitF2(profile.area, capacity_bits, model.lambda_nm),
                     'calibrated_overhead': calibrateOverhead(capacity_bits, profile.area, model),
                     'cell_ratio_to_candidate': None if base is None else cell / base[0],
                     'macro_ratio_to_candidate': None if base is None else profile.area / base[1]})

    return pd.DataFrame(rows, columns=_AREA_COLUMNS)


def energyRows(reports):
    """
    Dynamic and leakage energy split per technology and workload.
    """

    rows = []
    for r in reports:
        share = r.leakage_energy / r.total_energy if r.total_energy > 0 else 0.0
        rows.append({'technology': r.technology, 'workload': r.workload,
                     'dynamic_energy_J': r.dynamic_energy, 'leakage_energy_J': r.leakage_energy,
                     'total_energy_J': r.total_energy, 'leakage_share': share})

    return pd.DataFrame(rows, columns=['technology', 'workload', 'dynamic_energy_J',
                                       'leakage_energy_J', 'total_energy_J', 'leakage_share'])


def latencyRows(reports, baseline=None):
    """
    Latency per technology and workload, normalized to the mean baseline
    latency when a baseline is given.
    """

    mean = None
    if baseline is not None:
        mean = _baselineMean(reports, baseline, 'total_latency')

    rows = []
    for r in reports:
        row = {'technology': r.technology, 'workload': r.workload, 'total_latency_s': r.total_latency}
        if mean is not None:
            row['normalized_latency'] = r.total_latency / mean if mean > 0 else 0.0
        rows.append(row)

    columns = ['technology', 'workload', 'total_latency_s']
    if mean is not None:
        columns.append('normalized_latency')
    return pd.DataFrame(rows, columns=columns)


def simstatsRows(results):
    """
    Cache statistics table from (workload, technology, SimStats) entries.
    """

    rows = []
    for workload, technology, stats in results:
        rows.append({'workload': workload, 'technology': technology,
                     'read_hits': stats.read_hits, 'read_misses': stats.read_misses,
                     'write_hits': stats.write_hits, 'write_misses': stats.write_misses,
                     'writebacks': stats.writebacks, 'accesses': stats.accesses,
                     'miss_rate': stats.miss_rate, 'exec_time_s': stats.exec_time})

    return pd.DataFrame(rows, columns=['workload', 'technology', 'read_hits', 'read_misses',
                                       'write_hits', 'write_misses', 'writebacks', 'accesses',
                                       'miss_rate', 'exec_time_s'])


def eatRows(reports):
    rows = [{header: getattr(r, key) for key, header in _EAT_COLUMNS} for r in reports]

    return pd.DataFrame(rows, columns=[header for _, header in _EAT_COLUMNS])


def reportsFromDocument(document):
    """
    Rebuild EatReports from a decoded 'eat' JSON document.
    """

    if not isinstance(document, dict) or document.get('schema') != 'eat v%i' % SCHEMA_VERSION:
        raise ConfigError("Not an 'eat v%i' report document" % SCHEMA_VERSION)

    reports = []
    try:
        for row in document['rows']:
            values = {key: row[header] for key, header in _EAT_COLUMNS}
            reports.append(EatReport(**values))
    except (KeyError, TypeError) as e:
        raise ConfigError("Malformed eat report row: %s" % str(e))

    return reports


def emit(table, schema, fmt='csv'):
    """
    Render a table as a CSV or JSON document string.  Column order is the
    order of the DataFrame.
    """

    if fmt == 'csv':
        body = table.to_csv(index=False, float_format='%.9g', lineterminator='\n')
        return '# schema: %s v%i\n%s' % (schema, SCHEMA_VERSION, body)
    elif fmt == 'json':
        rows = json.loads(table.to_json(orient='records', double_precision=15))
        document = {'schema': '%s v%i' % (schema, SCHEMA_VERSION),
                    'columns': list(table.columns),
                    'rows': rows}
        return json.dumps(document, indent=2) + '\n'

    raise ValidationError("Unsupported report format '%s'" % fmt)


def writeDocument(table, schema, fmt, filename):
    with open(filename, 'w') as fh:
        fh.write(emit(table, schema, fmt))

    meramReportLogger.debug('Wrote %s (%i rows)', filename, len(table))


def loadDocument(filename):
    try:
        with open(filename, 'r') as fh:
            return json.load(fh)
    except (OSError, IOError) as e:
        raise ConfigError("Cannot read report '%s': %s" % (filename, str(e)))
    except ValueError as e:
        raise ConfigError("Cannot parse report '%s': %s" % (filename, str(e)))
