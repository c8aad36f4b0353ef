"""
logger: datasync 계층, stderr 출력
"""

import logging
import sys

from core.logging.logger import ROOT_LOGGER, get_logger


class TestLogger:

    def test_children_share_the_datasync_root(self):
        log = get_logger("core.lmi")
        assert log.name == "datasync.core.lmi"
        root = logging.getLogger(ROOT_LOGGER)
        assert root.propagate is False
        assert root.handlers

    def test_stdout_stays_free(self):
        get_logger("mcp_server")
        streams = [h.stream for h in logging.getLogger(ROOT_LOGGER).handlers if type(h) is logging.StreamHandler]
        assert sys.stdout not in streams
        assert logging.getLogger("cvxpy").level >= logging.WARNING
