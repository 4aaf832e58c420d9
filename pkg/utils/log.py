"""Root logger setup for the command line"""
import logging
import os

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def setup_logging(level: str = None) -> None:
    """Configure the root logger once; RADIOCLASS_LOG_LEVEL is the default level"""
    level = (level or os.getenv('RADIOCLASS_LOG_LEVEL', 'INFO')).upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO), format=LOG_FORMAT, force=True)
