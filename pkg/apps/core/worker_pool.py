"""Bounded thread pool whose results come back ordered by task key."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Hashable, Iterable, List, Optional, Tuple

from django.conf import settings

logger = logging.getLogger("clipforge.core")


@dataclass(frozen=True)
class TaskOutcome:
    key: Any
    value: Any = None
    error: Optional[BaseException] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def default_workers() -> int:
    return max(1, int(settings.CLIPFORGE.get("WORKERS", 1)))


def run_keyed(
    tasks: Iterable[Tuple[Hashable, Callable[[], Any]]],
    workers: Optional[int] = None,
) -> List[TaskOutcome]:
    """Run (key, thunk) pairs; one failing task does not stop the others."""
    tasks = list(tasks)
    workers = workers or default_workers()
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")

    def _run(task):
        key, thunk = task
        try:
            return TaskOutcome(key, thunk())
        except Exception as exc:
            logger.warning(f"task {key!r} failed: {exc}")
            return TaskOutcome(key, error=exc)

    if workers == 1 or len(tasks) <= 1:
        outcomes = [_run(task) for task in tasks]
    else:
        with ThreadPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            outcomes = list(pool.map(_run, tasks))
    return sorted(outcomes, key=lambda outcome: outcome.key)


def map_keyed(func: Callable[[Any], Any], keys: Iterable[Hashable], workers: Optional[int] = None) -> List[Any]:
    """Apply func to every key, re-raising the first failure in key order."""
    outcomes = run_keyed(((key, (lambda k=key: func(k))) for key in keys), workers)
    for outcome in outcomes:
        if not outcome.ok:
            raise outcome.error
    return [outcome.value for outcome in outcomes]
