"""
Logging configuration for svperturb using AWS Lambda Powertools.

Log lines are structured JSON written to stderr; stdout is reserved for
command output (reports, vectors) so it can be piped.
"""
import logging
import sys
from typing import Any, Dict, Optional

from aws_lambda_powertools import Logger

from .settings import settings


def _stderr_handler() -> logging.Handler:
    return logging.StreamHandler(sys.stderr)


# Initialize AWS Lambda Powertools
logger = Logger(
    service=settings.app_name,
    level=settings.logging.level,
    logger_handler=_stderr_handler(),
    serialize_stacktrace=True,
)

# Service loggers by name; configure_logging re-levels all of them
_service_loggers: Dict[str, Logger] = {}


def configure_logging(level: Optional[str] = None, environment: Optional[str] = None) -> None:
    """Configure Powertools logging for a CLI run."""
    effective_level = (level or settings.logging.level).upper()
    settings.logging.level = effective_level
    logger.setLevel(effective_level)
    for service_logger in _service_loggers.values():
        service_logger.setLevel(effective_level)

    extra_keys = {
        "environment": environment or settings.environment,
        "version": settings.app_version,
    }
    logger.append_keys(**extra_keys)
    for service_logger in _service_loggers.values():
        service_logger.append_keys(**extra_keys)

    # Library loggers (numpy, scipy warnings routed through logging) follow the same level
    logging.basicConfig(
        level=getattr(logging, effective_level),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )


def get_logger(name: Optional[str] = None) -> Logger:
    """Get a configured logger instance."""
    if not name:
        return logger
    if name not in _service_loggers:
        _service_loggers[name] = Logger(
            service=f"{settings.app_name}.{name}",
            level=settings.logging.level,
            logger_handler=_stderr_handler(),
        )
    return _service_loggers[name]


def log_error(error: Exception, context: Optional[Dict[str, Any]] = None) -> None:
    """Log error with structured data and stack trace."""
    logger.exception(
        "Error occurred",
        error_type=type(error).__name__,
        error_message=str(error),
        context=context or {},
    )
