"""Utility modules"""
from .errors import (
    AsrServiceError,
    ConfigError,
    DataError,
    NumericError,
    RadioClassError,
)
from .formatters import ReportFormatter
from .log import setup_logging
from .seeding import make_rng
from .validators import CorpusValidator, InputValidator

__all__ = [
    'AsrServiceError',
    'ConfigError',
    'DataError',
    'NumericError',
    'RadioClassError',
    'ReportFormatter',
    'setup_logging',
    'make_rng',
    'CorpusValidator',
    'InputValidator',
]
