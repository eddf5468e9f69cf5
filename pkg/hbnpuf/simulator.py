""" SIMULATOR MODULE
    Event-driven continuous-time simulation of the autonomous XOR network.

    The network is held at the challenge until t = 0, then released. A transition on
    source s at time t_s reaches node i's input k at t_s + edge_delay[i][k], node i then
    re-evaluates the XOR of its delayed inputs and, if its output changes, schedules a
    transition jittered by truncated Normal(0, sigma_noise). Opposite transitions on one
    node closer than the pulse filter width annihilate. The delay-line registers snapshot
    every node at the capture times.

    INPUTS:
        ChipInstance, PhysicsConfig, challenge bits, noise seed, temperature.

    OUTPUTS:
        Bitstream: M Booleanized N-bit snapshots.
"""
import hashlib
import heapq
import logging
from collections import deque
from numpy import array, asarray, uint8, zeros, random, float64
from scipy.stats import truncnorm
from hbnpuf.errors import EventBudgetExhausted
from hbnpuf.physics import effective_delays, _settings

LOGGER = logging.getLogger(__name__)

# Event kinds, also the tie-break order at equal times.
EVALUATE = 0
COMMIT = 1
CAPTURE = 2

JITTER_BATCH = 1024

class Bitstream(object):
    """ Snapshots recorded by the delay line during one transient run.

        Attributes:
            - capture_times (ndarray): (M,) register trigger times, ns.
            - states (ndarray): (M, N) captured bits.
            - challenge (ndarray): (N,) challenge the network was released from.
            - chip_id (int): chip the run was made on.
            - repeat (int): repeat index within a campaign.
            - temperature (float): temperature in degrees Celsius.
            - events (int): number of events processed.
    """
    def __init__(self, capture_times, states, challenge, chip_id, repeat, temperature, events):
        self.capture_times = capture_times
        self.states = states
        self.challenge = challenge
        self.chip_id = chip_id
        self.repeat = repeat
        self.temperature = temperature
        self.events = events

def booleanize(level):
    """ Threshold a node level into a bit.

        The event-driven backend already works on Boolean levels, so this is the
        identity. It is kept as the seam an analog backend would plug into.

        Args:
            - level: node level(s), scalar or array.
    """
    if isinstance(level, (int, bool)):
        return int(level)
    return asarray(level, dtype=uint8)

def derive_seed(*parts) -> int:
    """ Hash run coordinates into a 64-bit seed, independent of scheduling order.

        Args:
            - parts: values identifying the run (chip seed, challenge, repeat, tag...).
    """
    digest = hashlib.sha256(repr(parts).encode('utf-8')).digest()
    return int.from_bytes(digest[:8], 'little')

class _Jitter(object):
    """ Normal(0, sigma) jitter truncated at +-truncation sigma, drawn in batches. """
    def __init__(self, seed: int, sigma: float, truncation: float):
        self.sigma = sigma
        self.truncation = truncation
        self.rng = random.default_rng(random.SeedSequence(seed))
        self.batch = []
        self.position = 0

    def draw(self) -> float:
        if self.sigma == 0:
            return 0.0
        if self.position >= len(self.batch):
            self.batch = truncnorm.rvs(-self.truncation, self.truncation, scale=self.sigma,
                                       size=JITTER_BATCH, random_state=self.rng).tolist()
            self.position = 0
        value = self.batch[self.position]
        self.position += 1
        return value

def run_transient(chip, config, challenge, noise_seed: int, temperature: float = None,
                  repeat: int = 0, capture_times=None) -> Bitstream:
    """ Release the network from a challenge and record the delay-line snapshots.

        Fully deterministic given (chip, challenge, noise_seed, temperature).

        Args:
            - chip: ChipInstance to simulate.
            - config: PhysicsConfig (or frozen settings).
            - challenge: N bits, the state the network is held at before release.
            - noise_seed: seed of the jitter stream of this run.
            - temperature: degrees Celsius, defaults to t_ref.
            - repeat: repeat index recorded on the Bitstream.
            - capture_times: optional override of the delay-line trigger times, ns.
    """
    settings = _settings(config)
    if temperature is None:
        temperature = settings['t_ref']
    topology = chip.topology
    n_nodes = topology.n_nodes
    challenge = asarray(challenge, dtype=uint8)
    if challenge.shape != (n_nodes,):
        raise ValueError('Challenge has {} bits, the network has {} nodes.'
                         .format(challenge.size, n_nodes))
    if ((challenge != 0) & (challenge != 1)).any():
        raise ValueError('Challenge bits must be 0 or 1.')

    delays = effective_delays(chip, settings, temperature)
    if capture_times is None:
        capture_times = delays.capture_times
    capture_times = asarray(capture_times, dtype=float64)
    if len(capture_times) > 1 and (capture_times[1:] <= capture_times[:-1]).any():
        raise ValueError('Capture times must be strictly increasing.')

    sigma = settings['sigma_noise'] / 1000.0 # ps -> ns
    jitter_bound = settings['jitter_truncation'] * sigma
    width = delays.pulse_filter_width
    # Evaluations run this far ahead of nominal time so a transition stays pending
    # for at least the pulse width before it commits.
    lead = width + jitter_bound
    edge_delay = delays.edge_delay.tolist()
    if lead > 0 and min(min(row) for row in edge_delay) <= lead:
        LOGGER.warning('Edge delays shorter than the scheduling lead %.4f ns, '
                       'some short pulses may escape the filter.', lead)
    jitter = _Jitter(noise_seed, sigma, settings['jitter_truncation'])
    budget = settings['event_budget']

    bits = challenge.tolist()
    level = list(bits) # Committed output of every node.
    target = list(bits) # Output once all pending transitions commit.
    pending = [deque() for _ in range(n_nodes)]
    in_edges = topology.in_edges
    in_val = [[bits[source] for source in in_edges[node]] for node in range(n_nodes)]
    fanout = [[(node, slot, edge_delay[node][slot]) for node, slot in targets]
              for targets in topology.fanout()]

    queue = []
    sequence = 0
    for stage, time in enumerate(capture_times.tolist()):
        queue.append((time, CAPTURE, -1, sequence, stage))
        sequence += 1
    # Release: each multiplexer switches to its XOR gate, reaching the output
    # after the node's fastest input path.
    for node in range(n_nodes):
        release = min(edge_delay[node])
        queue.append((max(0.0, release - lead), EVALUATE, node, sequence, (-1, 0, release)))
        sequence += 1
    heapq.heapify(queue)

    states = zeros((len(capture_times), n_nodes), dtype=uint8)
    captured = 0
    processed = 0
    push = heapq.heappush
    pop = heapq.heappop
    while captured < len(capture_times):
        now, kind, node, _, payload = pop(queue)
        if kind == CAPTURE:
            states[payload] = level
            captured += 1
            continue
        processed += 1
        if processed > budget:
            raise EventBudgetExhausted(budget, 'chip {}, t={:.3f} ns'.format(chip.chip_id, now))
        if kind == EVALUATE:
            slot, new_level, nominal = payload
            inputs = in_val[node]
            if slot >= 0:
                inputs[slot] = new_level
            # Coincident arrivals on one node are a single net change.
            while queue and queue[0][:3] == (now, EVALUATE, node):
                slot, new_level, arrival = pop(queue)[4]
                processed += 1
                if slot >= 0:
                    inputs[slot] = new_level
                nominal = max(nominal, arrival)
            if processed > budget:
                raise EventBudgetExhausted(budget, 'chip {}, t={:.3f} ns'
                                           .format(chip.chip_id, now))
            desired = inputs[0] ^ inputs[1] ^ inputs[2]
            if desired == target[node]:
                continue
            when = nominal + jitter.draw()
            queued = pending[node]
            if queued and (when <= queued[-1][0] or when - queued[-1][0] < width):
                queued.pop()[2] = False # Pulse too short to propagate.
            else:
                entry = [when, desired, True]
                queued.append(entry)
                push(queue, (max(when, now), COMMIT, node, sequence, entry))
                sequence += 1
            target[node] = desired
        else:
            if not payload[2]:
                continue
            pending[node].popleft()
            level[node] = payload[1]
            for downstream, slot, delay in fanout[node]:
                arrival = now + delay
                push(queue, (max(now, arrival - lead), EVALUATE, downstream, sequence,
                             (slot, payload[1], arrival)))
                sequence += 1

    return Bitstream(capture_times, booleanize(states), challenge, chip.chip_id, repeat,
                     temperature, processed)

def challenge_label(challenge) -> str:
    """ Challenge as a bit string, node 0 first. """
    return ''.join(str(int(bit)) for bit in challenge)

def run_noise_seed(chip_seed: int, challenge, repeat: int, temperature: float,
                   campaign_seed: int, tag: str = 'noise') -> int:
    """ Seed of a single run's jitter stream, derived from its coordinates only.

        Args:
            - chip_seed: seed of the chip.
            - challenge: challenge bits.
            - repeat: repeat index.
            - temperature: degrees Celsius.
            - campaign_seed: seed of the collection campaign.
            - tag: purpose of the stream.
    """
    return derive_seed(int(chip_seed), challenge_label(challenge), int(repeat),
                       float(temperature), int(campaign_seed), tag)

def states_array(bitstreams) -> 'ndarray':
    """ Stack the snapshots of several runs into a (runs, M, N) array. """
    return array([bitstream.states for bitstream in bitstreams], dtype=uint8)
