import logging
import logging.handlers
import sys
from pathlib import Path
from typing import Optional

DEFAULT_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
VALID_LEVELS = ['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL']

# Handlers installed by setup_logging, so a second call replaces rather than duplicates them
_installed_handlers = []


def setup_logging(level: str = 'INFO',
                  log_file: Optional[str] = None,
                  fmt: str = DEFAULT_FORMAT,
                  max_size: int = 10 * 1024 * 1024,
                  backup_count: int = 5) -> None:
    """Setup logging configuration"""
    try:
        root_logger = logging.getLogger()
        clear_handlers(root_logger)

        formatter = logging.Formatter(fmt)

        # Console output goes to stderr; stdout carries command results
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setFormatter(formatter)
        root_logger.addHandler(console_handler)
        _installed_handlers.append(console_handler)

        if log_file:
            log_path = Path(log_file)
            log_path.parent.mkdir(parents=True, exist_ok=True)
            file_handler = logging.handlers.RotatingFileHandler(
                log_path,
                maxBytes=max_size,
                backupCount=backup_count
            )
            file_handler.setFormatter(formatter)
            root_logger.addHandler(file_handler)
            _installed_handlers.append(file_handler)

        set_log_level(level)
        logging.debug("Logging system initialized")

    except Exception as e:
        print(f"Error setting up logging: {str(e)}", file=sys.stderr)
        raise


def get_logger(name: str) -> logging.Logger:
    """Get a logger instance with the specified name"""
    return logging.getLogger(name)


def set_log_level(level: str) -> None:
    """Set the logging level"""
    level = str(level).upper()
    if level not in VALID_LEVELS:
        raise ValueError(f"Invalid log level: {level}")
    logging.getLogger().setLevel(level)


def clear_handlers(logger: logging.Logger) -> None:
    """Remove the handlers previously installed by setup_logging"""
    for handler in _installed_handlers[:]:
        if handler in logger.handlers:
            logger.removeHandler(handler)
        handler.close()
        _installed_handlers.remove(handler)
