import os
import sys
import queue as Queue
import threading
import traceback
import logging
from io import StringIO

from meramCommon import *

__version__ = '0.3'
__all__ = ['LogThreadException', 'GridRunner', 'threadCount']


meramThreadsLogger = logging.getLogger('__main__')


def LogThreadException(cls, exception, logger=None):
    """
    Function to help with logging exceptions within the worker threads.
    This will add a ERROR line to the logs and print the full traceback as
    DEBUG.
    """

    # Get the logger
    if logger is None:
        logger = logging.getLogger('__main__')

    # Extract the traceback and generate the ERROR message
    exc_type, exc_value, exc_traceback = sys.exc_info()
    cls_name = type(cls).__name__
    try:
        cls_name = "%s - %s" % (cls.name, cls_name)
    except AttributeError:
        pass
    fnc_name = traceback.extract_tb(exc_traceback, 1)[0][2]
    lineno = exc_traceback.tb_lineno
    logger.error("%s: %s failed with: %s at line %i", cls_name, fnc_name, str(exception), lineno)

    # Grab the full traceback and save it to a string via StringIO so that we
    # can print it to DEBUG
    fileObject = StringIO()
    traceback.print_tb(exc_traceback, file=fileObject)
    tbString = fileObject.getvalue()
    fileObject.close()
    ## Print the traceback to the logger as a series of DEBUG messages
    for line in tbString.split('\n'):
        logger.debug("%s", line)


def threadCount(jobs):
    """
    Return how many workers to start for a number of jobs: the
    MERAM_SIM_THREADS environment variable if set, the CPU count otherwise,
    never more than the number of jobs.
    """

    limit = os.environ.get('MERAM_SIM_THREADS', None)
    if limit is not None:
        try:
            limit = int(limit, 10)
        except ValueError:
            raise ConfigError("MERAM_SIM_THREADS must be an integer, got '%s'" % limit)
        if limit < 1:
            raise ConfigError("MERAM_SIM_THREADS must be at least 1, got %i" % limit)
    else:
        limit = os.cpu_count() or 1

    return max(1, min(limit, jobs))


class GridRunner(object):
    """
    Run a function over a list of jobs with a pool of worker threads.  The
    results come back in job order no matter which worker finished first.
    """

    def __init__(self, function, name='grid'):
        self.function = function
        self.name = name

        # Setup threading
        self.threads = []
        self.alive = threading.Event()
        self.lastError = None

    def _worker(self, jobs, results):
        while self.alive.is_set():
            try:
                index, job = jobs.get_nowait()
            except Queue.Empty:
                break

            try:
                results[index] = self.function(job)
            except Exception as e:
                LogThreadException(self, e, logger=meramThreadsLogger)
                self.lastError = e
                self.alive.clear()
            finally:
                jobs.task_done()

    def run(self, jobs):
        """
        Process every job and return the list of results.  If a worker fails
        the remaining jobs are abandoned and a RuntimeError is raised once all
        of the workers have stopped.
        """

        jobs = list(jobs)
        if not jobs:
            return []

        queue = Queue.Queue()
        for i, job in enumerate(jobs):
            queue.put((i, job))
        results = {}

        self.lastError = None
        self.alive.set()
        nthread = threadCount(len(jobs))
        self.threads = []
        for i in range(nthread):
            thread = threading.Thread(target=self._worker, args=(queue, results),
                                      name='%s-%i' % (self.name, i))
            thread.daemon = True
            thread.start()
            self.threads.append(thread)
        meramThreadsLogger.debug('Started %i worker thread(s) for %i %s job(s)', nthread, len(jobs), self.name)

        for thread in self.threads:
            thread.join()
        self.threads = []
        self.alive.clear()

        if self.lastError is not None:
            raise RuntimeError("%s worker failed: %s" % (self.name, str(self.lastError)))

        return [results[i] for i in range(len(jobs))]
