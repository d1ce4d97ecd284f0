"""
Base class for experiment orchestrators

Owns the per-orchestrator logger and an action log: every action run through
execute_with_tracking is timed and appended as an ActionRecord, failures
included, before the exception propagates to the CLI's exit-status mapping.
"""

import logging
import time
from abc import ABC, abstractmethod
from typing import Any, Callable, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, NonNegativeFloat


class ActionRecord(BaseModel):
    """One tracked action: name, wall-clock duration and the error text if it raised."""

    model_config = ConfigDict(frozen=True)

    action: str
    duration: NonNegativeFloat
    error: Optional[str] = None

    @property
    def succeeded(self) -> bool:
        return self.error is None


def _orchestrator_logger(name: str, debug: bool) -> logging.Logger:
    logger = logging.getLogger(f"camsim.{name}")
    logger.setLevel(logging.DEBUG if debug else logging.INFO)
    logger.propagate = False
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(f"🔬 [{name}] %(levelname)s: %(message)s"))
        logger.addHandler(handler)
    return logger


class BaseSimulator(ABC):
    """Named orchestrator with logging and an action log."""

    def __init__(self, name: str, debug: bool = False):
        self.name = name
        self.debug = debug
        self.actions: List[ActionRecord] = []
        self.logger = _orchestrator_logger(name, debug)

    def log(self, message: str, level: str = "info") -> None:
        getattr(self.logger, level.lower())(message)

    def execute_with_tracking(
        self, action_name: str, func: Callable[..., Any], *args, **kwargs
    ) -> Any:
        """
        Run func(*args, **kwargs) and append an ActionRecord for it.

        A raised exception is recorded with its message and then re-raised
        unchanged.

        Args:
            action_name: Name stored in the record
            func: Callable to run
            *args: Positional arguments for func
            **kwargs: Keyword arguments for func

        Returns:
            Whatever func returns
        """
        self.log(f"Starting action: {action_name}", "debug")
        start = time.perf_counter()
        error: Optional[str] = None
        try:
            return func(*args, **kwargs)
        except Exception as e:
            error = f"{type(e).__name__}: {e}"
            self.log(f"Failed action: {action_name} ❌ {error}", "error")
            raise
        finally:
            record = ActionRecord(
                action=action_name, duration=time.perf_counter() - start, error=error
            )
            self.actions.append(record)
            if record.succeeded:
                self.log(f"Completed action: {action_name} ✅ ({record.duration:.2f}s)")

    def get_execution_summary(self) -> Dict[str, Any]:
        """
        Totals over the action log.

        Returns:
            total_actions, failed_actions, total_time (s) and failed, the
            names of the actions that raised
        """
        failed = [record.action for record in self.actions if not record.succeeded]
        return {
            "total_actions": len(self.actions),
            "failed_actions": len(failed),
            "total_time": sum(record.duration for record in self.actions),
            "failed": failed,
        }

    @abstractmethod
    def execute(self, action: str, **kwargs) -> Any:
        """Dispatch a named action through execute_with_tracking."""
