""" HBN-PUF LAB API MODULE

    - This module contains any API based methods that users interact with.

    When the library is installed, this is the module users should interact with.
    The command line (hbnpuf.cli) drives the same pipeline file by file.
"""
import logging
from pydispatch import dispatcher
from hbnpuf.configuration import PhysicsConfig
from hbnpuf.harness import (QueryProtocol, CRPDataset, collect, glitch_check, cherry_pick,
                            DEFAULT_CHIPS, DEFAULT_THRESHOLD)
from hbnpuf.hdl import export_hdl
from hbnpuf.physics import sample_chip
from hbnpuf.topology import NetworkTopology, generate_topology
from hbnpuf.analysis import metrics, entropy, sensitivity

FORMATTER = logging.Formatter('%(asctime)s [%(levelname)s]: %(message)s')
LOGGER = logging.getLogger(__name__)
MODES = ['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL']

def configure_logging(mode: str = 'WARNING', log_file: str = None):
    """ Attach the shared formatter to a stream handler and an optional debug log file.

        Args:
            - mode: stream handler level, options = {'DEBUG','INFO','WARNING','ERROR','CRITICAL'}
            - log_file: file receiving every DEBUG record, none if not set.
    """
    if not mode in MODES:
        raise ValueError("The logging mode {} doesn't exist".format(mode))
    root = logging.getLogger('hbnpuf')
    root.setLevel(logging.DEBUG)
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()
    stream = logging.StreamHandler()
    stream.setLevel(mode)
    stream.setFormatter(FORMATTER)
    root.addHandler(stream)
    if log_file:
        output = logging.FileHandler(log_file, mode='w')
        output.setLevel(logging.DEBUG)
        output.setFormatter(FORMATTER)
        root.addHandler(output)
    return root

class PufLab(object):
    """ Interface for simulating and analysing one HBN-PUF class.

        Args:
            - topology: wiring of the class, generate one with PufLab.generate.
            - config: dict of physics settings to change (see PhysicsConfig).
            - callbacks: list of dicts with a callback and the signal that triggers it.

        Kwargs:
            - mode: logging mode, options = {'DEBUG','INFO','WARNING','ERROR','CRITICAL'}

        Example:
            ```python
                callbacks = [{'function': on_cell, 'signal': 'cell'}]
                lab = PufLab.generate(16, seed=7, config={'sigma_noise': 5.0},
                                      callbacks=callbacks)
                enroll = lab.collect(range(8), QueryProtocol(n_repeats=100))
                report = lab.metrics(enroll)
            ```
    """
    def __init__(self, topology: NetworkTopology, config: dict = None, callbacks: list = (),
                 **kwargs):
        self.topology = topology
        self.config = PhysicsConfig()
        if config:
            self.config.set_config(**config)
        self.set_callbacks(callbacks)
        if 'mode' in kwargs:
            configure_logging(kwargs['mode'])
        LOGGER.debug('PufLab initialized for %s.', topology)

    @classmethod
    def generate(cls, n: int, seed: int, strict: bool = False, **kwargs) -> 'PufLab':
        """ Build a lab around a freshly generated topology.

            Args:
                - n: number of nodes.
                - seed: topology seed.
                - strict: force every out-degree to 3.
                - kwargs: passed on to PufLab.
        """
        return cls(generate_topology(n, seed, strict), **kwargs)

    def set_config(self, **kwargs: dict):
        """ Change physics settings, chips sampled afterwards use the new values. """
        self.config.set_config(**kwargs)

    def chips(self, chip_seeds: list) -> list:
        """ Manufacture one chip per seed. """
        return [sample_chip(self.topology, self.config, seed, chip_id)
                for chip_id, seed in enumerate(chip_seeds)]

    def collect(self, chip_seeds: list = range(DEFAULT_CHIPS), protocol: QueryProtocol = None,
                workers: int = 1) -> CRPDataset:
        """ Run a campaign, see hbnpuf.harness.collect. """
        protocol = protocol if protocol is not None else QueryProtocol()
        return collect(self.topology, self.config, list(chip_seeds), protocol, workers)

    @staticmethod
    def glitch_check(dataset: CRPDataset):
        return glitch_check(dataset)

    @staticmethod
    def metrics(dataset: CRPDataset):
        """ Curves, t_opt and tables, see hbnpuf.analysis.metrics.analyze. """
        return metrics.analyze(dataset)

    @staticmethod
    def entropy(dataset: CRPDataset, stage: int, estimators=('min',), **kwargs):
        """ Entropy estimates of the class, see hbnpuf.analysis.entropy.entropy_report. """
        return entropy.entropy_report(dataset, stage, estimators=estimators, **kwargs)

    @staticmethod
    def cherry_pick(enroll: CRPDataset, threshold: float = DEFAULT_THRESHOLD, stage: int = None):
        return cherry_pick(enroll, threshold, stage)

    def sensitivity(self, chip_seed: int, stage: int, targets: list, **kwargs) -> list:
        """ Sensitivity of response bits of one chip, see hbnpuf.analysis.sensitivity. """
        chip = sample_chip(self.topology, self.config, chip_seed)
        return sensitivity.sensitivity_report(chip, self.config, stage, targets, **kwargs)

    def export_hdl(self, source_hash: str = ''):
        """ Network and delay-line HDL of the class. """
        return export_hdl(self.topology, self.config.get_config('m_stages'), source_hash)

    @staticmethod
    def set_callbacks(callbacks: list):
        """ Attach supplied callbacks to signals on the dispatcher.

            Signals and their data:
                - 'cell': (temperature index, chip id, challenge index) of a simulated cell.
                - 'campaign': the finished CRPDataset.
                - 'task': index of a task finished by a worker thread (workers > 1).

            Example:
            ```python
                set_callbacks([{'function': callback_method, 'signal': 'cell'}])
            ```
        """
        if isinstance(callbacks, (tuple, list)):
            for callback in callbacks:
                __validate_callback__(callback)
                dispatcher.connect(callback['function'], callback['signal'], sender=dispatcher.Any)
        else:
            raise TypeError('Provided callbacks {}, should be in the form of a list. '
                            .format(callbacks))

    @staticmethod
    def remove_callbacks(callbacks: list):
        """ Remove supplied callbacks from the dispatcher.

            Example:
            ```python
                remove_callbacks([{'function': callback_method, 'signal': 'cell'}])
            ```
        """
        if isinstance(callbacks, (tuple, list)):
            for callback in callbacks:
                __validate_callback__(callback)
                dispatcher.disconnect(callback['function'], callback['signal'],
                                      sender=dispatcher.Any)
        else:
            raise TypeError('Provided callbacks {}, should be in the form of a list/tuple. '
                            .format(callbacks))

def __validate_callback__(callback: dict):
    """ Validate that a given callbacks parameters.

        Expected signature:
            {'function': callback_method, 'signal': 'cell'}

        Args:
            - callback: callback signature to validate.
    """
    if 'function' in callback and 'signal' in callback:
        if not callable(callback['function']):
            raise TypeError('Provided function {} is not callable.'
                            .format(callback['function']))
        if not isinstance(callback['signal'], str):
            raise TypeError('Provided signal {} is not of type str'
                            .format(callback['signal']))
    else:
        raise ValueError('Callback {}, missing required attribute signal or function.'
                         .format(callback))
