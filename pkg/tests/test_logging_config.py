"""
Tests for logging setup.
"""

import logging

import pytest

from curvednet.logging_config import setup_logging, resolve_level, CONSOLE_HANDLER, FILE_HANDLER


@pytest.fixture
def clean_root():
    """Detach curvednet handlers before and after the test."""
    root = logging.getLogger()

    def strip():
        for handler in list(root.handlers):
            if handler.get_name() in (CONSOLE_HANDLER, FILE_HANDLER):
                root.removeHandler(handler)
                handler.close()

    strip()
    yield root
    strip()


class TestResolveLevel:
    """Tests for level resolution."""

    def test_explicit(self):
        assert resolve_level("debug") == logging.DEBUG
        assert resolve_level(logging.WARNING) == logging.WARNING

    def test_environment(self, monkeypatch):
        monkeypatch.setenv("CURVEDNET_LOG_LEVEL", "ERROR")
        assert resolve_level() == logging.ERROR

    def test_unknown_falls_back_to_info(self):
        assert resolve_level("chatty") == logging.INFO


class TestSetupLogging:
    """Tests for handler installation."""

    def test_writes_into_log_dir(self, clean_root, log_dir):
        path = setup_logging("INFO")
        assert path.startswith(str(log_dir))
        logging.getLogger("curvednet.test").info("hello from the test")
        for handler in clean_root.handlers:
            handler.flush()
        with open(path, encoding="utf-8") as f:
            assert "hello from the test" in f.read()

    def test_idempotent(self, clean_root):
        setup_logging()
        setup_logging()
        names = [h.get_name() for h in clean_root.handlers]
        assert names.count(CONSOLE_HANDLER) == 1
        assert names.count(FILE_HANDLER) == 1
