import logging
import os

from dotenv import load_dotenv

from config.logging_config import log_level, log_format
from config.pipeline_config import log_level_env

load_dotenv()


class LockedLogger(logging.RootLogger):
    def __init__(self, level=logging.WARNING):
        super().__init__(level)
        self._locked = False

    def setLevel(self, level):
        if self._locked:
            self.debug(f"Logger level is locked at {logging.getLevelName(self.level)}. "
                       f"Ignoring attempt to set to {logging.getLevelName(level)}.")
            return
        super().setLevel(level)
        self._locked = True


class LockedStreamHandler(logging.StreamHandler):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._formatter_locked = False

    def setFormatter(self, fmt):
        if self._formatter_locked:
            return
        super().setFormatter(fmt)
        self._formatter_locked = True


def get_locked_root_logger():
    """
    Lock the existing root logger in place, so loggers created before activation keep propagating to it.
    """
    root = logging.getLogger()
    if not isinstance(root, LockedLogger):
        root.__class__ = LockedLogger
        root._locked = False
    return root


def resolve_log_level(level=None):
    """
    Turn a level name into its numeric value, falling back to the environment and then the config default.
    :param level: level name such as 'debug', or None
    :return: numeric logging level
    """
    name = level or os.getenv(log_level_env) or log_level
    numeric_level = getattr(logging, str(name).upper(), None)
    if not isinstance(numeric_level, int):
        raise ValueError(f'Invalid log level: {name}')
    return numeric_level


def activate_logging_system(level=None, log_file=None):
    """
    Install the locked root logger with a console handler and, optionally, a file handler.
    Calling this again only attaches a file handler that is not attached yet.
    :param level: level name, overrides environment and config
    :param log_file: path of a log file to append to
    :return: the root logger
    """
    logger = get_locked_root_logger()
    numeric_level = resolve_log_level(level)
    formatter = logging.Formatter(log_format)

    if not any(isinstance(handler, LockedStreamHandler) for handler in logger.handlers):
        logger.setLevel(numeric_level)
        console_handler = LockedStreamHandler()
        console_handler.setLevel(numeric_level)
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

    if log_file is not None:
        log_file = os.path.abspath(log_file)
        attached = [getattr(handler, 'baseFilename', None) for handler in logger.handlers]
        if log_file not in attached:
            os.makedirs(os.path.dirname(log_file), exist_ok=True)
            file_handler = logging.FileHandler(log_file, encoding="utf-8")
            file_handler.setLevel(numeric_level)
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)

    return logger
