""" PHYSICS MODULE
    Frozen manufacturing variation of a chip and its temperature dependence.

    Each "manufactured" chip draws one multiplicative Gaussian factor per network edge
    and per delay-line inverter pair. Gate delay is an inverter pair (2 * tau_mean),
    the XOR and multiplexer switch on the same timescale as an inverter.

    INPUTS:
        Topology, PhysicsConfig, chip seed, temperature.

    OUTPUTS:
        ChipInstance and its temperature scaled DelayView.
"""
import logging
from numpy import cumsum, maximum, random, arange, full
from hbnpuf.configuration import PhysicsConfig, validate_temperature
from hbnpuf.topology import NetworkTopology, IN_DEGREE

LOGGER = logging.getLogger(__name__)

class ChipInstance(object):
    """ One seeded copy of a PUF class with its frozen delays.

        Attributes:
            - chip_id (int): index of the chip within a campaign.
            - topology (NetworkTopology): wiring shared by the class.
            - edge_delay (ndarray): (N, 3) delay of node i's k-th input, ns.
            - readout_delay (ndarray): (M,) delay of each delay-line inverter pair, ns.
            - chip_seed (int): 64-bit seed the delays were drawn from.
    """
    def __init__(self, chip_id: int, topology: NetworkTopology, edge_delay, readout_delay,
                 chip_seed: int):
        if (edge_delay <= 0).any() or (readout_delay <= 0).any():
            raise ValueError('Chip delays must be strictly positive.')
        self.chip_id = int(chip_id)
        self.topology = topology
        self.edge_delay = edge_delay
        self.readout_delay = readout_delay
        self.chip_seed = int(chip_seed)
        self.edge_delay.setflags(write=False)
        self.readout_delay.setflags(write=False)

    def __repr__(self):
        return 'ChipInstance(chip_id={}, chip_seed={}, n_nodes={})'.format(
            self.chip_id, self.chip_seed, self.topology.n_nodes)

class DelayView(object):
    """ Delays of a chip at one temperature. Never aliases the chip's own arrays.

        Attributes:
            - edge_delay (ndarray): scaled network edge delays, ns.
            - readout_delay (ndarray): scaled delay-line pair delays, ns.
            - capture_times (ndarray): register trigger times, strictly increasing, ns.
            - pulse_filter_width (float): scaled rejection width, ns.
            - net_factor (float): multiplier applied to network delays.
            - dl_factor (float): multiplier applied to delay-line delays.
    """
    def __init__(self, edge_delay, readout_delay, capture_times, pulse_filter_width,
                 net_factor, dl_factor):
        self.edge_delay = edge_delay
        self.readout_delay = readout_delay
        self.capture_times = capture_times
        self.pulse_filter_width = pulse_filter_width
        self.net_factor = net_factor
        self.dl_factor = dl_factor

def _settings(config):
    """ Accept either a PhysicsConfig or one of its frozen snapshots. """
    return config.frozen() if isinstance(config, PhysicsConfig) else config

def sample_chip(topology: NetworkTopology, config, chip_seed: int, chip_id: int = 0):
    """ Draw the frozen delays of one chip.

        edge_delay = 2 * tau_mean * max(floor, Normal(1, sigma_mfg)), likewise per readout pair.

        Args:
            - topology: wiring of the PUF class.
            - config: PhysicsConfig (or frozen settings).
            - chip_seed: 64-bit seed of this chip.
            - chip_id: index of the chip in a campaign.
    """
    settings = _settings(config)
    rng = random.default_rng(random.SeedSequence([int(chip_seed) & 0xFFFFFFFFFFFFFFFF,
                                                  topology.n_nodes, topology.seed & 0xFFFFFFFF]))
    tau_gate = 2 * settings['tau_mean']
    sigma = settings['sigma_mfg']
    floor = settings['delay_floor']
    edge_variation = rng.standard_normal((topology.n_nodes, IN_DEGREE))
    readout_variation = rng.standard_normal(settings['m_stages'])
    edge_delay = tau_gate * maximum(floor, 1 + sigma * edge_variation)
    readout_delay = tau_gate * maximum(floor, 1 + sigma * readout_variation)
    chip = ChipInstance(chip_id, topology, edge_delay, readout_delay, chip_seed)
    LOGGER.debug('Sampled %s.', chip)
    return chip

def scaling_factors(config, temperature: float) -> tuple:
    """ Multipliers (network, delay line) at a temperature, exactly linear in T - t_ref.

        Args:
            - config: PhysicsConfig (or frozen settings).
            - temperature: temperature in degrees Celsius.
    """
    validate_temperature(temperature)
    settings = _settings(config)
    offset = temperature - settings['t_ref']
    return 1 + settings['alpha_net'] * offset, 1 + settings['alpha_dl'] * offset

def effective_delays(chip: ChipInstance, config, temperature: float = None) -> DelayView:
    """ Scale a chip's frozen delays to the given temperature.

        At t_ref the view equals the frozen delays exactly. Clock readout ignores
        both manufacturing variation and temperature, its capture grid is fixed.

        Args:
            - chip: chip to scale.
            - config: PhysicsConfig (or frozen settings).
            - temperature: degrees Celsius, defaults to t_ref.
    """
    settings = _settings(config)
    if temperature is None:
        temperature = settings['t_ref']
    net_factor, dl_factor = scaling_factors(settings, temperature)
    if temperature == settings['t_ref']:
        edge_delay = chip.edge_delay.copy()
        readout_delay = chip.readout_delay.copy()
    else:
        edge_delay = chip.edge_delay * net_factor
        readout_delay = chip.readout_delay * dl_factor
    if settings['readout'] == 'clock':
        period = 2 * settings['tau_mean']
        readout_delay = full(len(chip.readout_delay), period)
        capture_times = period * arange(1, len(chip.readout_delay) + 1)
    else:
        capture_times = cumsum(readout_delay)
    return DelayView(edge_delay, readout_delay, capture_times,
                     settings['pulse_filter_width'] * net_factor, net_factor, dl_factor)
