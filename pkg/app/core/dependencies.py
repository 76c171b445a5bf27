"""Shared process-wide resources."""

import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import structlog

from app.core.config import settings

logger = structlog.get_logger()

# Global instances
_worker_pool: Optional[ThreadPoolExecutor] = None
_worker_pool_lock = threading.Lock()


def get_worker_pool(max_workers: Optional[int] = None) -> ThreadPoolExecutor:
    """Get the shared worker pool.

    ``max_workers`` only sizes the pool when it is first created; runs that
    need a different size use their own executor instead.
    """
    global _worker_pool

    with _worker_pool_lock:
        if _worker_pool is None:
            size = max_workers or settings.WORKER_THREADS
            _worker_pool = ThreadPoolExecutor(max_workers=size, thread_name_prefix="rcs-verify")
            logger.info("Worker pool created", workers=size)
        return _worker_pool


def shutdown_worker_pool() -> None:
    """Release the shared worker pool."""
    global _worker_pool

    with _worker_pool_lock:
        pool, _worker_pool = _worker_pool, None
    if pool is not None:
        pool.shutdown(wait=True)
        logger.info("Worker pool shut down")
