import logging
import os
import sys

LOG_LEVEL_ENV = "V2VSIM_LOG_LEVEL"


def get_logger(name: str) -> logging.Logger:
    logger = logging.getLogger(name)
    logger.setLevel(logging.DEBUG)
    if logger.handlers:
        return logger
    stdout_handler = logging.StreamHandler(sys.stdout)
    stdout_handler.setLevel(os.getenv(LOG_LEVEL_ENV, "WARNING").upper())
    formatter = logging.Formatter(
        fmt="\x1b[1;33m[%(asctime)s \x1b[31m%(levelname)s\x1b[1;33m] \x1b[0m%(message)s"
    )
    stdout_handler.setFormatter(formatter)
    logger.addHandler(stdout_handler)
    logger.propagate = False
    return logger
