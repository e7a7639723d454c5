# lkengine/extensions.py
"""Process-wide extension objects, initialised from the app config."""
import logging
from concurrent.futures import ThreadPoolExecutor

logger = logging.getLogger(__name__)


class WorkerPool:
    """Maps independent work units over threads, returning results in input order.

    Work units are sized by the callers (fixed node chunks, fixed sample
    batches), never by the worker count, so reductions over the returned
    list give the same bits for any number of workers.
    """

    def __init__(self, workers=1):
        self.workers = max(1, int(workers))

    def init_app(self, app):
        self.workers = max(1, int(app.config.get("LK_WORKERS", 1)))
        app.extensions["lk_workers"] = self
        logger.debug(f"worker pool configured with {self.workers} workers")

    def map(self, fn, items):
        items = list(items)
        if self.workers == 1 or len(items) <= 1:
            return [fn(item) for item in items]
        with ThreadPoolExecutor(max_workers=self.workers) as executor:
            return list(executor.map(fn, items))


# Initialize extensions
workers = WorkerPool()