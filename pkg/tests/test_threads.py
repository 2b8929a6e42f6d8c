import time
import logging

import pytest

from meramCommon import ConfigError
from meramThreads import *


class TestThreadCount:
    def test_environment_cap(self, monkeypatch):
        monkeypatch.setenv('MERAM_SIM_THREADS', '2')
        assert threadCount(10) == 2
        assert threadCount(1) == 1

    def test_default(self, monkeypatch):
        monkeypatch.delenv('MERAM_SIM_THREADS', raising=False)
        assert 1 <= threadCount(3) <= 3

    @pytest.mark.parametrize('value', ['zero', '0'])
    def test_invalid(self, monkeypatch, value):
        monkeypatch.setenv('MERAM_SIM_THREADS', value)
        with pytest.raises(ConfigError):
            threadCount(4)


class TestGridRunner:
    def test_results_in_job_order(self, monkeypatch):
        monkeypatch.setenv('MERAM_SIM_THREADS', '4')

        def slowSquare(x):
            time.sleep(0.001 * (10 - x))
            return x * x

        assert GridRunner(slowSquare).run(range(10)) == [x * x for x in range(10)]

    def test_no_jobs(self):
        assert GridRunner(abs).run([]) == []

    def test_worker_failure(self, monkeypatch, caplog):
        monkeypatch.setenv('MERAM_SIM_THREADS', '2')

        def fail(x):
            if x == 3:
                raise ValueError('bad job %i' % x)
            return x

        with caplog.at_level(logging.DEBUG):
            with pytest.raises(RuntimeError):
                GridRunner(fail, name='test').run(range(6))
        assert any('bad job 3' in record.getMessage() and record.levelno == logging.ERROR
                   for record in caplog.records)
