
import os
import json
import logging
from collections import OrderedDict

import json_minify

__version__ = '0.3'
__all__ = ['ValidationError', 'ConfigError', 'InvariantError', 'LimitedSizeDict',
           'loadJSONConfig', 'saveJSONConfig', 'checkPositive', 'checkNonNegative',
           'DEFAULTS_FILENAME']


meramCommonLogger = logging.getLogger('__main__')


#
# Default Configuration File
#
DEFAULTS_FILENAME = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'defaults.json')


class ValidationError(ValueError):
    """
    Raised when a parameter, index, or input value is outside of what the
    models accept.
    """

    pass


class ConfigError(ValidationError):
    """
    Raised for problems with configuration, profile, script, and trace files.
    """

    pass


class InvariantError(RuntimeError):
    """
    Raised when a run-time consistency check fails during a simulation run.
    """

    pass


class LimitedSizeDict(OrderedDict):
    """
    OrderedDict that drops its oldest entries once it grows past size_limit.
    Each cache set is built on it.

    From:
     https://stackoverflow.com/questions/2437617/limiting-the-size-of-a-python-dictionary
    """

    def __init__(self, *args, **kwds):
        self.size_limit = kwds.pop("size_limit", None)
        OrderedDict.__init__(self, *args, **kwds)
        self._check_size_limit()

    def __setitem__(self, key, value):
        OrderedDict.__setitem__(self, key, value)
        self._check_size_limit()

    def _check_size_limit(self):
        if self.size_limit is not None:
            while len(self) > self.size_limit:
                self.popitem(last=False)


def loadJSONConfig(filename):
    """
    Load a JSON file that may contain C-style comments and return the
    decoded contents.  An empty (or comment-only) file returns None.
    """

    try:
        with open(filename, 'r') as fh:
            contents = fh.read()
    except (OSError, IOError) as e:
        raise ConfigError("Cannot read '%s': %s" % (filename, str(e)))

    contents = json_minify.json_minify(contents)
    if contents.strip() == '':
        return None

    try:
        return json.loads(contents)
    except ValueError as e:
        raise ConfigError("Cannot parse '%s': %s" % (filename, str(e)))


def saveJSONConfig(value, filename, header=None):
    """
    Write a value as indented JSON with sorted keys, optionally preceded by a
    comment block.  The output is byte-stable for equal inputs.
    """

    with open(filename, 'w') as fh:
        if header is not None:
            fh.write('/*\n')
            for line in header.split('\n'):
                fh.write(' * %s\n' % line if line else ' *\n')
            fh.write(' */\n')
        fh.write(json.dumps(value, indent=2, sort_keys=True))
        fh.write('\n')

    meramCommonLogger.debug('Wrote %s', filename)


def checkPositive(name, value):
    """
    Raise a ValidationError unless value is a finite number > 0.
    """

    try:
        ok = value > 0 and value != float('inf')
    except TypeError:
        ok = False
    if not ok:
        raise ValidationError("%s must be positive, got %r" % (name, value))


def checkNonNegative(name, value):
    """
    Raise a ValidationError unless value is a finite number >= 0.
    """

    try:
        ok = value >= 0 and value != float('inf')
    except TypeError:
        ok = False
    if not ok:
        raise ValidationError("%s must be non-negative, got %r" % (name, value))
