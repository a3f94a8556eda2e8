"""
Powertools logging decorators for svperturb services and commands.
"""
import functools
import time
from typing import Any, Callable, Optional, TypeVar

from config.logging import get_logger, log_error

F = TypeVar('F', bound=Callable[..., Any])

logger = get_logger("instrumentation")


def log_operation(component: str, operation: Optional[str] = None):
    """
    Decorator that logs start, completion and failure of a service operation.

    Args:
        component: Name of the owning component (e.g., 'MonteCarloExperimentService')
        operation: Operation name (defaults to the function name)
    """
    def decorator(func: F) -> F:
        operation_name = operation or func.__name__
        full_operation_name = f"{component}.{operation_name}"

        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            start_time = time.perf_counter()
            logger.debug(
                f"Starting operation: {full_operation_name}",
                component=component,
                operation=operation_name
            )
            try:
                result = func(*args, **kwargs)
            except Exception as e:
                log_error(
                    e,
                    context={
                        "component": component,
                        "operation": operation_name,
                        "duration_ms": (time.perf_counter() - start_time) * 1000
                    }
                )
                raise

            logger.info(
                f"Operation completed: {full_operation_name}",
                component=component,
                operation=operation_name,
                duration_ms=(time.perf_counter() - start_time) * 1000,
                success=True
            )
            return result

        return wrapper  # type: ignore[return-value]

    return decorator


class OperationTimer:
    """Context manager timing a block and logging it on exit."""

    def __init__(self, operation_name: str, **metadata):
        self.operation_name = operation_name
        self.metadata = metadata
        self.start_time = 0.0
        self.duration_s = 0.0

    def __enter__(self) -> "OperationTimer":
        self.start_time = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        self.duration_s = time.perf_counter() - self.start_time
        if exc_type is None:
            logger.info(
                f"Operation completed: {self.operation_name}",
                duration_ms=self.duration_s * 1000,
                success=True,
                **self.metadata
            )
        else:
            logger.warning(
                f"Operation failed: {self.operation_name}",
                duration_ms=self.duration_s * 1000,
                success=False,
                error_type=exc_type.__name__,
                error_message=str(exc_val),
                **self.metadata
            )
