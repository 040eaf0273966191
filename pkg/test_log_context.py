import json
import logging
from concurrent.futures import ThreadPoolExecutor

from tools import log_context
from tools.log_context import Timer, bind, in_context, slog


def _events(caplog):
    return [json.loads(r.getMessage()) for r in caplog.records if r.name == log_context.LOGGER_NAME]


def test_bind_nests_and_restores():
    assert log_context.get_context() == {}
    with bind(run_id="abc", command="eval"):
        with bind(command="verify", check=None):
            assert log_context.get_context() == {"run_id": "abc", "command": "verify"}
        assert log_context.get_context() == {"run_id": "abc", "command": "eval"}
    assert log_context.get_context() == {}


def test_lines_carry_bound_fields(caplog):
    caplog.set_level(logging.INFO, logger=log_context.LOGGER_NAME)
    with bind(run_id="r1"):
        slog.info("suite.check.ok", value=complex(1, 2))
    (event,) = _events(caplog)
    assert event == {"event": "suite.check.ok", "run_id": "r1", "value": "(1+2j)"}


def test_worker_threads_inherit_context(caplog):
    caplog.set_level(logging.INFO, logger=log_context.LOGGER_NAME)

    def _work(i):
        slog.info("grid.point", index=i)
        return log_context.get_context()

    with bind(run_id="r2"), ThreadPoolExecutor(max_workers=2) as pool:
        seen = list(pool.map(in_context(_work), range(4)))
    assert all(ctx == {"run_id": "r2"} for ctx in seen)
    assert [e["run_id"] for e in _events(caplog)] == ["r2"] * 4


def test_disabled_level_is_skipped(caplog):
    caplog.set_level(logging.WARNING, logger=log_context.LOGGER_NAME)
    slog.debug("kernel.series", terms=40)
    assert _events(caplog) == []


def test_timer_records_elapsed():
    with Timer() as timer:
        sum(range(1000))
    assert timer.elapsed_ms >= 0.0
    assert len(log_context.new_run_id()) == 8
