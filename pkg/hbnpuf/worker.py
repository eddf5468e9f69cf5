""" WORKER MODULE

    - This module contains the base Worker and the TaskWorker used by campaigns.

    Workers pull (index, task) pairs from a shared WorkQueue, run them and push
    (index, result, error) triples onto the coordinator's result queue. A None task
    tells the worker to stop.
"""
import threading
import logging
from pydispatch import dispatcher
from hbnpuf.workqueue import WorkQueue

LOGGER = logging.getLogger(__name__)

class Worker(threading.Thread):
    """ Base worker class, responsible for initializing shared attributes.

        Attributes:
            - queue: queue of tasks to be processed by a worker.
            - results: queue the worker reports back on.
            - worker_id: id of the worker, used as the dispatcher sender.
    """
    def __init__(self, queue: WorkQueue, results: WorkQueue, worker_id: int = 0):
        threading.Thread.__init__(self, args=(), kwargs=None)
        self.queue = queue
        self.results = results
        self.worker_id = worker_id
        self.daemon = True
        self.start()

    def run(self):
        raise NotImplementedError("Run should be implemented")

class TaskWorker(Worker):
    """ Worker running plain callables until it receives a stop marker.

        Each finished task is announced on the 'task' signal, errors are handed
        back to the coordinator rather than killing the thread.
    """
    def run(self):
        while True:
            item = self.queue.get()
            if item is None:
                break
            index, task = item
            try:
                result = task()
                dispatcher.send(signal='task', sender=self.worker_id, data=index)
            except Exception as error: # Reported to, and re-raised by, the coordinator.
                self.results.put((index, None, error))
                continue
            self.results.put((index, result, None))
        LOGGER.debug('Worker %d stopped.', self.worker_id)
