""" COORDINATOR MODULE

    - This module contains the TaskCoordinator, which fans tasks out over TaskWorkers.

    Results are reassembled by task index, so the output never depends on how many
    workers ran or in which order they finished.
"""
import logging
from hbnpuf.workqueue import WorkQueue
from hbnpuf.worker import TaskWorker

LOGGER = logging.getLogger(__name__)

class TaskCoordinator(object):
    """ Runs a list of callables over a bounded pool of worker threads.

        Attributes:
            - workers (int): maximum number of worker threads.

        Args:
            - workers: number of worker threads, 1 runs everything in the calling thread.
    """
    def __init__(self, workers: int = 1):
        if isinstance(workers, bool) or not isinstance(workers, int):
            raise TypeError('Worker count {} should be an int.'.format(workers))
        if workers < 1:
            raise ValueError('At least one worker is required, got {}.'.format(workers))
        self.workers = workers

    def run(self, tasks: list) -> list:
        """ Run every task and return their results in task order.

            The first failing task (by index) has its exception re-raised once all
            workers have stopped.

            Args:
                - tasks: list of zero-argument callables.
        """
        if self.workers == 1 or len(tasks) <= 1:
            return [task() for task in tasks]

        queue = WorkQueue()
        results = WorkQueue()
        for item in enumerate(tasks):
            queue.put(item)
        pool_size = min(self.workers, len(tasks))
        for _ in range(pool_size):
            queue.put(None) # One stop marker per worker.
        pool = [TaskWorker(queue, results, worker_id) for worker_id in range(pool_size)]
        LOGGER.debug('Started %d workers for %d tasks.', pool_size, len(tasks))

        collected = [None] * len(tasks)
        errors = {}
        for _ in range(len(tasks)):
            index, result, error = results.get()
            if error is not None:
                errors[index] = error
            collected[index] = result
        for worker in pool:
            worker.join()
        if errors:
            raise errors[min(errors)]
        return collected
