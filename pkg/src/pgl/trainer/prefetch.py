"""
A bounded queue that prepares batches ahead of the training step.
"""

import logging
import queue
import threading

logger = logging.getLogger(__name__)

_DONE = object()


class _Failure:
    def __init__(self, error):
        self.error = error


class Prefetcher:
    """
    Produce batches `make_batch(index)` for consecutive indices.

    With a positive capacity a single background thread fills a queue
    holding at most `capacity` batches; with a capacity of 0 batches are
    made on demand. The batches (and their order) do not depend on the
    capacity, provided `make_batch` draws only from streams derived from
    its index.

    Parameters
    ----------
    make_batch : callable
        Maps a step index to a batch.
    start, stop : int
        The range of indices to produce.
    capacity : int
        The number of batches prepared ahead (default: 2).
    """

    def __init__(self, make_batch, start, stop, capacity=2):
        if capacity < 0:
            raise ValueError(f"Provide a non-negative prefetch capacity, not {capacity}.")
        self.make_batch = make_batch
        self.start = start
        self.stop = stop
        self.capacity = capacity
        self._queue = None
        self._halt = threading.Event()
        self._thread = None

    def __enter__(self):
        if self.capacity:
            self._queue = queue.Queue(maxsize=self.capacity)
            self._thread = threading.Thread(target=self._produce, daemon=True)
            self._thread.start()
        return self

    def __exit__(self, *exc_info):
        self.close()

    def _put(self, item):
        while not self._halt.is_set():
            try:
                self._queue.put(item, timeout=0.1)
                return True
            except queue.Full:
                continue
        return False

    def _produce(self):
        try:
            for index in range(self.start, self.stop):
                if not self._put(self.make_batch(index)):
                    return
        except Exception as error:  # Handed to the consumer thread
            self._put(_Failure(error))
            return
        self._put(_DONE)

    def __iter__(self):
        if not self.capacity:
            for index in range(self.start, self.stop):
                yield self.make_batch(index)
            return
        if self._thread is None:
            raise RuntimeError("Enter the prefetcher as a context manager before iterating.")
        while True:
            item = self._queue.get()
            if item is _DONE:
                return
            if isinstance(item, _Failure):
                raise item.error
            yield item

    def close(self):
        self._halt.set()
        if self._thread is not None:
            self._thread.join()
            logger.debug("Stopped the prefetching thread.")
            self._thread = None
