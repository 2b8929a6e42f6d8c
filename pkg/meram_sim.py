#!/usr/bin/env python3

import os
import git
import sys
import time
import logging
import argparse
try:
    from logging.handlers import WatchedFileHandler
except ImportError:
    from logging import FileHandler as WatchedFileHandler
import traceback
from io import StringIO

from meramCommon import *
from meramFunctions import *

__version__ = '0.3'
__all__ = ['MeramArgumentParser', 'buildParser', 'main']


class MeramArgumentParser(argparse.ArgumentParser):
    """
    ArgumentParser that exits with the usage/config error code instead of
    argparse's default of 2.
    """

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, '%s: error: %s\n' % (self.prog, message))


def buildParser():
    parser = MeramArgumentParser(
        description='MEFET device to L2 cache architecture simulator',
        formatter_class=argparse.ArgumentDefaultsHelpFormatter
        )
    parser.add_argument('-c', '--config', type=str,
                        help='name of a configuration file to merge over the defaults')
    parser.add_argument('-o', '--out', type=str,
                        help='output directory')
    parser.add_argument('-f', '--format', type=str, choices=('csv', 'json'),
                        help='write only this report format')
    parser.add_argument('-s', '--seed', type=int,
                        help='base random seed')
    parser.add_argument('-p', '--profiles', type=str,
                        help='technology profile file to use instead of the built-in table')
    parser.add_argument('-l', '--log', type=str,
                        help='name of the logfile to write logging information to')
    parser.add_argument('-d', '--debug', action='store_true',
                        help='print debug messages as well as info and higher')
    parser.add_argument('-v', '--version', action='version', version='%(prog)s ' + __version__)

    subparsers = parser.add_subparsers(dest='command', metavar='command')
    subparsers.required = True

    sub = subparsers.add_parser('device', help='run the MEFET write/re-read experiments',
                                formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub.add_argument('--script', type=str,
                     help='additional timing script to run')

    sub = subparsers.add_parser('array', help='check array round trips, half-select safety, and margins',
                                formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub.add_argument('--rows', type=int,
                     help='number of rows')
    sub.add_argument('--cols', type=int,
                     help='number of columns')

    sub = subparsers.add_parser('simulate', help='simulate workloads for every technology',
                                formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub.add_argument('--trace', type=str,
                     help='trace file to simulate instead of the configured workloads')

    sub = subparsers.add_parser('compare', help='compare technologies by their EAT product',
                                formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub.add_argument('--trace', type=str,
                     help='trace file to simulate instead of the configured workloads')

    sub = subparsers.add_parser('report', help='re-normalize and re-emit an EAT report',
                                formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub.add_argument('--input', type=str,
                     help='EAT JSON document to read, defaults to eat.json in the output directory')
    sub.add_argument('--baseline', type=str,
                     help='technology to normalize against')

    return parser


def main(argv=None):
    """
    Main function of meram_sim.py.  This sets up logging and the
    configuration and runs the requested command.  Returns the exit code.
    """

    args = buildParser().parse_args(argv)

    # Setup logging
    logger = logging.getLogger('__main__')
    logFormat = logging.Formatter('%(asctime)s.%(msecs)03d [%(levelname)-8s] %(message)s', datefmt='%Y-%m-%d %H:%M:%S')
    logFormat.converter = time.gmtime
    if args.log is None:
        logHandler = logging.StreamHandler(sys.stdout)
    else:
        logHandler = WatchedFileHandler(args.log)
    logHandler.setFormatter(logFormat)
    logger.addHandler(logHandler)
    if args.debug:
        logger.setLevel(logging.DEBUG)
    else:
        logger.setLevel(logging.INFO)

    # Git information
    try:
        repo = git.Repo(os.path.dirname(os.path.abspath(__file__)))
        branch = repo.active_branch.name
        hexsha = repo.active_branch.commit.hexsha
        shortsha = hexsha[-7:]
        dirty = ' (dirty)' if repo.is_dirty() else ''
    except (git.exc.GitError, TypeError, ValueError):
        branch = 'unknown'
        hexsha = 'unknown'
        shortsha = 'unknown'
        dirty = ''

    # Report on who we are
    logger.info('Starting meram_sim.py with PID %i', os.getpid())
    logger.info('Version: %s', __version__)
    logger.info('Revision: %s.%s%s', branch, shortsha, dirty)
    logger.info('Command: %s', args.command)
    logger.info('All dates and times are in UTC except where noted')

    try:
        # Read in the configuration
        try:
            config = RunConfig.load(args.config)
            config = config.withOverrides(out=args.out, fmt=args.format, seed=args.seed,
                                          profiles=args.profiles)
        except ValidationError as e:
            logger.error('Configuration error: %s', str(e))
            return 0x01

        sim = MeramSim(config)
        if args.command == 'device':
            status, exitCode = sim.cmdDevice(script=args.script)
        elif args.command == 'array':
            status, exitCode = sim.cmdArray(rows=args.rows, cols=args.cols)
        elif args.command == 'simulate':
            status, exitCode = sim.cmdSimulate(trace=args.trace)
        elif args.command == 'compare':
            status, exitCode = sim.cmdCompare(trace=args.trace)
        else:
            status, exitCode = sim.cmdReport(source=args.input, baseline=args.baseline)

        if status:
            for filename in sim.outputs:
                logger.debug('Wrote %s', filename)
        return exitCode

    except Exception as e:
        exc_type, exc_value, exc_traceback = sys.exc_info()
        logger.error("meram_sim.py failed with: %s at line %i", str(e), exc_traceback.tb_lineno)

        ## Grab the full traceback and save it to a string via StringIO
        fileObject = StringIO()
        traceback.print_tb(exc_traceback, file=fileObject)
        tbString = fileObject.getvalue()
        fileObject.close()
        ## Print the traceback to the logger as a series of DEBUG messages
        for line in tbString.split('\n'):
            logger.debug("%s", line)
        return 0x02

    finally:
        # Exit
        logger.info('Finished')
        logger.removeHandler(logHandler)
        logHandler.close()


if __name__ == "__main__":
    sys.exit(main())
