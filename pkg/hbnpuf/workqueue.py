""" WORK QUEUE MODULE

    - This module contains the WorkQueue shared between the coordinator and its workers.

    Tasks travel one way, (index, result, error) triples the other. Both directions are
    unbounded FIFOs guarded by a single Condition.
"""
from collections import deque
from threading import Condition

class WorkQueue(object):
    """ Unbounded FIFO with a blocking get.

        Attributes:
            - condition: lock that readers sleep on until an item is put.
            - items: pending items, oldest first.
    """
    def __init__(self):
        self.condition = Condition()
        self.items = deque()

    def get(self) -> object:
        """ Pop the oldest item, sleeping while the queue is empty. """
        with self.condition:
            self.condition.wait_for(lambda: self.items)
            return self.items.popleft()

    def put(self, item: object):
        """ Append an item and wake one waiting reader. """
        with self.condition:
            self.items.append(item)
            self.condition.notify()

    def __len__(self):
        with self.condition:
            return len(self.items)
