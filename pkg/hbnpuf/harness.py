""" HARNESS MODULE

    Runs enrollment and query campaigns over a PUF class and manages their results.

    - Challenge spaces: every valid challenge (N <= 16) or a seeded sample of them.
    - Campaigns: chips x challenges x repeats x temperatures transient runs.
    - Datasets: a JSON manifest plus a flat little-endian packed bit file.
    - Glitch check: the all-zero/all-one challenges must reproduce themselves.
    - Cherry picking: per chip, challenge and stage masks of bits stable at enrollment.

    The two trivial challenges are collected into their own section and only the
    glitch check ever reads it.
"""
import hashlib
import json
import logging
from numpy import (arange, asarray, array, concatenate, empty, lexsort, minimum, packbits,
                   random, stack, uint8, unpackbits, fromfile, frombuffer, ones, zeros, prod)
from pydispatch import dispatcher
from hbnpuf.configuration import PhysicsConfig, validate_temperature
from hbnpuf.coordinator import TaskCoordinator
from hbnpuf.errors import DataError, EventBudgetExhausted, InfeasibleAnalysisError
from hbnpuf.physics import sample_chip, effective_delays
from hbnpuf.simulator import run_transient, run_noise_seed, challenge_label
from hbnpuf.topology import NetworkTopology

LOGGER = logging.getLogger(__name__)

FORMAT_VERSION = 1
EXHAUSTIVE_LIMIT = 16
DEFAULT_CHIPS = 8
DEFAULT_REPEATS = 100
DEFAULT_SAMPLED = 1000
DEFAULT_THRESHOLD = 0.01
ROLES = ['enrollment', 'query']
CHALLENGE_MODES = ['exhaustive', 'sampled']
LAYOUT = ['temperature', 'chip', 'challenge', 'repeat', 'stage', 'node']
MAX_EVIDENCE = 100

def enumerate_valid_challenges(n: int):
    """ Every challenge except all-zero and all-one, in lexicographic order.

        Node 0 is the first character of the challenge string, so "001" sets node 2.

        Args:
            - n: number of nodes.
    """
    if n > EXHAUSTIVE_LIMIT:
        raise InfeasibleAnalysisError(
            '2^{} challenges is too many for exhaustive mode (N <= {}), use sampled mode.'
            .format(n, EXHAUSTIVE_LIMIT))
    values = arange(1, 2 ** n - 1)
    shifts = arange(n - 1, -1, -1)
    return ((values[:, None] >> shifts[None, :]) & 1).astype(uint8)

def sample_valid_challenges(n: int, count: int, seed: int):
    """ Unique, valid, uniformly drawn challenges, sorted lexicographically.

        Args:
            - n: number of nodes.
            - count: number of challenges to draw.
            - seed: sampling seed.
    """
    if count < 1:
        raise ValueError('Need at least one sampled challenge, got {}.'.format(count))
    if n < 63 and count > 2 ** n - 2:
        raise ValueError('Only {} valid challenges exist for N={}, {} requested.'
                         .format(2 ** n - 2, n, count))
    rng = random.default_rng(random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, n]))
    seen = set()
    rows = []
    while len(rows) < count:
        for row in rng.integers(0, 2, (count - len(rows), n), dtype=uint8):
            key = row.tobytes()
            if row.all() or not row.any() or key in seen:
                continue
            seen.add(key)
            rows.append(row)
    challenges = array(rows, dtype=uint8)
    return challenges[lexsort(challenges.T[::-1])]

def trivial_challenges(n: int):
    """ The all-zero and all-one challenges, kept only for the glitch check. """
    return array([zeros(n), ones(n)], dtype=uint8)

def parse_challenge(label: str):
    """ Bit string (node 0 first) back to a bit array. """
    if not label or set(label) - {'0', '1'}:
        raise DataError('Malformed challenge {!r}.'.format(label))
    return frombuffer(label.encode('ascii'), dtype=uint8) - ord('0')

class QueryProtocol(object):
    """ How a campaign presents challenges to each chip.

        Attributes:
            - n_challenges (int): challenges to sample (ignored in exhaustive mode).
            - n_repeats (int): repeats of every challenge.
            - challenge_mode (str): 'exhaustive' or 'sampled'.
            - sample_seed (int): seed of the challenge sample.
            - stages (list): 1-based delay-line stages kept in the dataset (None = all).
            - temperatures (list): query temperatures, degrees Celsius.
            - noise_seed (int): campaign seed mixed into every run's jitter stream.
            - role (str): 'enrollment' or 'query'.
    """
    def __init__(self, n_challenges: int = DEFAULT_SAMPLED, n_repeats: int = DEFAULT_REPEATS,
                 challenge_mode: str = 'exhaustive', sample_seed: int = 0, stages: list = None,
                 temperatures: list = (20.0,), noise_seed: int = 0, role: str = 'enrollment'):
        for name, value in (('n_challenges', n_challenges), ('n_repeats', n_repeats),
                            ('sample_seed', sample_seed), ('noise_seed', noise_seed)):
            if isinstance(value, bool) or not isinstance(value, int):
                raise TypeError('{} should be an int, got {!r}.'.format(name, value))
        if n_repeats < 1:
            raise ValueError('n_repeats must be at least 1.')
        if n_challenges < 1:
            raise ValueError('n_challenges must be at least 1.')
        if not challenge_mode in CHALLENGE_MODES:
            raise ValueError("The challenge mode {} doesn't exist".format(challenge_mode))
        if not role in ROLES:
            raise ValueError("The role {} doesn't exist".format(role))
        temperatures = [float(temperature) for temperature in temperatures]
        if not temperatures or len(set(temperatures)) != len(temperatures):
            raise ValueError('Temperatures must be a non-empty list without duplicates.')
        for temperature in temperatures:
            validate_temperature(temperature)
        if stages is not None:
            stages = sorted(set(int(stage) for stage in stages))
            if not stages or stages[0] < 1:
                raise ValueError('Stages are 1-based and at least one is required.')
        self.n_challenges = n_challenges
        self.n_repeats = n_repeats
        self.challenge_mode = challenge_mode
        self.sample_seed = sample_seed
        self.stages = stages
        self.temperatures = temperatures
        self.noise_seed = noise_seed
        self.role = role

    def challenges(self, n: int):
        """ The challenge list this protocol presents to an N-node network. """
        if self.challenge_mode == 'exhaustive':
            return enumerate_valid_challenges(n)
        return sample_valid_challenges(n, self.n_challenges, self.sample_seed)

    def resolve_stages(self, m_stages: int) -> list:
        """ 1-based stages to keep, checked against the delay-line length. """
        if self.stages is None:
            return list(range(1, m_stages + 1))
        if self.stages[-1] > m_stages:
            raise ValueError('Stage {} exceeds the {} delay-line stages.'
                             .format(self.stages[-1], m_stages))
        return list(self.stages)

    def to_dict(self) -> dict:
        """ JSON ready representation, stored in dataset manifests. """
        return {'n_challenges': self.n_challenges, 'n_repeats': self.n_repeats,
                'challenge_mode': self.challenge_mode, 'sample_seed': self.sample_seed,
                'stages': self.stages, 'temperatures': self.temperatures,
                'noise_seed': self.noise_seed, 'role': self.role}

    @classmethod
    def from_dict(cls, data: dict) -> 'QueryProtocol':
        """ Rebuild a protocol from its manifest entry. """
        return cls(**data)

def _packed_width(n_nodes: int) -> int:
    return (n_nodes + 7) // 8

def _pack_nodes(bits):
    """ Pack the node axis, node 0 in the least significant bit of the first byte. """
    return packbits(asarray(bits, dtype=uint8), axis=-1, bitorder='little')

class CRPDataset(object):
    """ All responses of a campaign, indexed (temperature, chip, challenge, repeat, stage, node).

        Responses are held packed along the node axis, little bit order, and unpacked
        one section at a time by the analyses.

        Attributes:
            - manifest (dict): everything needed to regenerate the data.
            - packed (ndarray): packed bits over the valid challenges.
            - packed_trivial (ndarray): packed bits of the all-zero/all-one challenges.
    """
    def __init__(self, manifest: dict, responses, trivial, packed: bool = False):
        self.manifest = manifest
        expected = (len(manifest['temperatures']), len(manifest['chip_seeds']),
                    len(manifest['challenges']), manifest['protocol']['n_repeats'],
                    len(manifest['stages']), manifest['topology']['n'])
        expected_trivial = expected[:2] + (2,) + expected[3:]
        responses = asarray(responses, dtype=uint8)
        trivial = asarray(trivial, dtype=uint8)
        if packed:
            # Packed arrays hold bytes on the node axis.
            width = _packed_width(expected[-1])
            expected = expected[:-1] + (width,)
            expected_trivial = expected_trivial[:-1] + (width,)
        if responses.shape != expected:
            raise DataError('Responses have shape {}, manifest describes {}.'
                            .format(responses.shape, expected))
        if trivial.size and trivial.shape != expected_trivial:
            raise DataError('Trivial section has shape {}.'.format(trivial.shape))
        if not packed:
            responses = _pack_nodes(responses)
            trivial = _pack_nodes(trivial) if trivial.size else trivial
        self.packed = responses
        self.packed_trivial = trivial
        self.packed.setflags(write=False)
        self.packed_trivial.setflags(write=False)

    @property
    def responses(self):
        """ Every response unpacked, the full campaign in memory. """
        return self._unpack(self.packed)

    @property
    def trivial(self):
        if self.packed_trivial.size == 0:
            return self.packed_trivial
        return self._unpack(self.packed_trivial)

    def section(self, t_index: int, s_index: int = None):
        """ Unpacked (chip, challenge, repeat[, stage], node) bits of one temperature.

            Args:
                - t_index: position on the temperature axis.
                - s_index: position on the stage axis, all stages when omitted.
        """
        if s_index is None:
            return self._unpack(self.packed[t_index])
        return self._unpack(self.packed[t_index, :, :, :, s_index])

    def _unpack(self, packed):
        bits = unpackbits(packed, axis=-1, count=self.n_nodes, bitorder='little')
        bits.setflags(write=False)
        return bits

    @property
    def topology(self) -> NetworkTopology:
        return NetworkTopology.from_dict(self.manifest['topology'])

    @property
    def config(self) -> PhysicsConfig:
        return PhysicsConfig.from_dict(self.manifest['physics'])

    @property
    def challenges(self):
        return array([parse_challenge(label) for label in self.manifest['challenges']])

    @property
    def stages(self) -> list:
        return list(self.manifest['stages'])

    @property
    def temperatures(self) -> list:
        return list(self.manifest['temperatures'])

    @property
    def n_nodes(self) -> int:
        return self.manifest['topology']['n']

    @property
    def n_chips(self) -> int:
        return len(self.manifest['chip_seeds'])

    @property
    def n_repeats(self) -> int:
        return self.manifest['protocol']['n_repeats']

    @property
    def capture_times(self):
        """ (temperature, chip, stage) register trigger times, ns. """
        return array(self.manifest['capture_times'], dtype=float)

    def temperature_index(self, temperature: float = None) -> int:
        """ Index of a temperature section, defaulting to t_ref (or the first section). """
        temperatures = self.temperatures
        if temperature is None:
            t_ref = self.manifest['physics']['t_ref']
            return temperatures.index(t_ref) if t_ref in temperatures else 0
        if not float(temperature) in temperatures:
            raise DataError('Dataset has no {} C section, only {}.'
                            .format(temperature, temperatures))
        return temperatures.index(float(temperature))

    def stage_index(self, stage: int) -> int:
        """ Position of a 1-based delay-line stage in the stored stage axis. """
        if not stage in self.manifest['stages']:
            raise DataError('Stage {} was not collected, stages are {}.'
                            .format(stage, self.manifest['stages']))
        return self.manifest['stages'].index(stage)

    def manifest_bytes(self) -> bytes:
        """ Canonical manifest encoding, the same bytes save() writes. """
        return (json.dumps(self.manifest, indent=2, sort_keys=True) + '\n').encode('utf-8')

    def manifest_hash(self) -> str:
        """ SHA-256 of the canonical manifest, embedded in derived outputs. """
        return hashlib.sha256(self.manifest_bytes()).hexdigest()

    def save(self, prefix: str):
        """ Write <prefix>.manifest.json and <prefix>.crp.bin.

            Bits are packed row-major over LAYOUT, node 0 of the first response is the
            least significant bit of byte 0.
        """
        with open(prefix + '.manifest.json', 'wb') as manifest_file:
            manifest_file.write(self.manifest_bytes())
        if self.n_nodes % 8 == 0:
            # Byte aligned responses, the packed store is already the file layout.
            data = concatenate([self.packed.ravel(), self.packed_trivial.ravel()])
        else:
            data = packbits(concatenate([self.responses.ravel(), self.trivial.ravel()]),
                            bitorder='little')
        data.tofile(prefix + '.crp.bin')
        LOGGER.info('Saved dataset %s (%d response bytes).', prefix, data.size)

    @classmethod
    def load(cls, prefix: str) -> 'CRPDataset':
        """ Read a dataset written by save. """
        with open(prefix + '.manifest.json') as manifest_file:
            manifest = json.load(manifest_file)
        if manifest.get('format_version') != FORMAT_VERSION:
            raise DataError('Unsupported dataset format {}.'.format(manifest.get('format_version')))
        layout = manifest['layout']
        response_shape = tuple(layout['responses_shape'])
        trivial_shape = tuple(layout['trivial_shape'])
        total = int(prod(response_shape)) + int(prod(trivial_shape))
        packed = fromfile(prefix + '.crp.bin', dtype=uint8)
        if packed.size * 8 < total:
            raise DataError('{}.crp.bin holds {} bits, manifest needs {}.'
                            .format(prefix, packed.size * 8, total))
        n_nodes = response_shape[-1]
        split = int(prod(response_shape))
        if n_nodes % 8 == 0:
            width = n_nodes // 8
            return cls(manifest, packed[:split // 8].reshape(response_shape[:-1] + (width,)),
                       packed[split // 8:total // 8].reshape(trivial_shape[:-1] + (width,)),
                       packed=True)
        bits = unpackbits(packed, count=total, bitorder='little')
        return cls(manifest, bits[:split].reshape(response_shape),
                   bits[split:].reshape(trivial_shape))

def _cell_task(chip, settings, challenge, protocol, temperature, stage_indices, cell):
    """ Build the task simulating every repeat of one (temperature, chip, challenge) cell. """
    def task():
        block = empty((protocol.n_repeats, len(stage_indices), len(challenge)), dtype=uint8)
        for repeat in range(protocol.n_repeats):
            seed = run_noise_seed(chip.chip_seed, challenge, repeat, temperature,
                                  protocol.noise_seed)
            try:
                bitstream = run_transient(chip, settings, challenge, seed, temperature, repeat)
            except EventBudgetExhausted as error:
                raise EventBudgetExhausted(error.cap, 'temperature {} C, chip {}, challenge {}, '
                                           'repeat {}'.format(temperature, chip.chip_id,
                                                              challenge_label(challenge),
                                                              repeat)) from error
            except Exception as error:
                error.args = error.args + ('temperature {} C, chip {}, challenge {}, repeat {}'
                                           .format(temperature, chip.chip_id,
                                                   challenge_label(challenge), repeat),)
                raise
            block[repeat] = bitstream.states[stage_indices]
        dispatcher.send(signal='cell', sender='harness', data=cell)
        return _pack_nodes(block)
    return task

def collect(topology: NetworkTopology, config: PhysicsConfig, chip_seeds: list,
            protocol: QueryProtocol, workers: int = 1) -> CRPDataset:
    """ Present every challenge to every chip, n_repeats times, at every temperature.

        The network is reset to the same challenge before each repeat. Results are
        deterministic in all seeds and independent of the worker count. Each cell is
        bit packed by its own task, so the campaign never exists unpacked.

        Args:
            - topology: wiring of the PUF class.
            - config: physics of the class.
            - chip_seeds: one seed per manufactured chip.
            - protocol: challenges, repeats, stages and temperatures.
            - workers: worker threads running the cells.
    """
    if not chip_seeds:
        raise ValueError('At least one chip seed is required.')
    if len(set(chip_seeds)) != len(chip_seeds):
        LOGGER.warning('Duplicate chip seeds, those chips are clones.')
    settings = config.frozen()
    n = topology.n_nodes
    challenges = protocol.challenges(n)
    everything = concatenate([challenges, trivial_challenges(n)])
    stages = protocol.resolve_stages(settings['m_stages'])
    stage_indices = [stage - 1 for stage in stages]
    chips = [sample_chip(topology, settings, seed, chip_id)
             for chip_id, seed in enumerate(chip_seeds)]

    tasks = []
    capture_times = []
    for t_index, temperature in enumerate(protocol.temperatures):
        capture_times.append([])
        for chip in chips:
            delays = effective_delays(chip, settings, temperature)
            capture_times[-1].append(delays.capture_times[stage_indices].tolist())
            for c_index, challenge in enumerate(everything):
                tasks.append(_cell_task(chip, settings, challenge, protocol, temperature,
                                        stage_indices, (t_index, chip.chip_id, c_index)))
    LOGGER.info('Collecting %d cells (%d chips, %d challenges, %d repeats, %d temperatures).',
                len(tasks), len(chips), len(challenges), protocol.n_repeats,
                len(protocol.temperatures))
    blocks = TaskCoordinator(workers).run(tasks)

    shape = (len(protocol.temperatures), len(chips), len(everything), protocol.n_repeats,
             len(stages), n)
    data = array(blocks, dtype=uint8).reshape(shape[:-1] + (_packed_width(n),))
    manifest = {
        'format_version': FORMAT_VERSION,
        'role': protocol.role,
        'topology': topology.to_dict(),
        'physics': config.to_dict(),
        'protocol': protocol.to_dict(),
        'chip_seeds': [int(seed) for seed in chip_seeds],
        'temperatures': protocol.temperatures,
        'stages': stages,
        'challenges': [challenge_label(challenge) for challenge in challenges],
        'trivial_challenges': [challenge_label(challenge) for challenge in trivial_challenges(n)],
        'capture_times': capture_times,
        'layout': {'order': LAYOUT, 'bit_order': 'little',
                   'responses_shape': list(shape[:2]) + [len(challenges)] + list(shape[3:]),
                   'trivial_shape': list(shape[:2]) + [2] + list(shape[3:])},
    }
    dataset = CRPDataset(manifest, data[:, :, :len(challenges)], data[:, :, len(challenges):],
                         packed=True)
    dispatcher.send(signal='campaign', sender='harness', data=dataset)
    return dataset

class GlitchReport(object):
    """ Outcome of the fixed-point sanity check.

        Attributes:
            - passed (bool): every trivial response reproduced its challenge.
            - evidence (list): offending (temperature, chip, challenge, repeat, stage) dicts.
            - violations (int): total number of offending snapshots.
    """
    def __init__(self, passed: bool, evidence: list, violations: int):
        self.passed = passed
        self.evidence = evidence
        self.violations = violations

    def __bool__(self):
        return self.passed

def glitch_check(dataset: CRPDataset) -> GlitchReport:
    """ A class whose all-zero/all-one challenges don't reproduce themselves is glitchy.

        Args:
            - dataset: dataset including the trivial challenge section.
    """
    trivial = dataset.trivial
    if trivial.size == 0:
        raise DataError('Dataset has no trivial challenge section to check.')
    names = ['all-zero', 'all-one']
    wrong = zeros(trivial.shape[:-1], dtype=bool)
    for which in (0, 1):
        wrong[:, :, which] = (trivial[:, :, which] != which).any(axis=-1)
    evidence = []
    for t_index, chip, which, repeat, s_index in zip(*wrong.nonzero()):
        if len(evidence) >= MAX_EVIDENCE:
            break
        evidence.append({'temperature': dataset.temperatures[t_index], 'chip': int(chip),
                         'challenge': names[which], 'repeat': int(repeat),
                         'stage': dataset.stages[s_index]})
    violations = int(wrong.sum())
    if violations:
        LOGGER.warning('Glitch check failed with %d offending snapshots.', violations)
    return GlitchReport(violations == 0, evidence, violations)

def majority_vote(bits, axis: int):
    """ Most common bit along an axis, ties resolve to 0.

        Args:
            - bits: uint8 bit array.
            - axis: axis to vote over (usually repeats).
    """
    bits = asarray(bits)
    return (2 * bits.sum(axis=axis, dtype=int) > bits.shape[axis]).astype(uint8)

class HelperMask(object):
    """ Cherry picking helper data: which bits to keep per chip, challenge and stage.

        Attributes:
            - keep (ndarray): (chip, challenge, stage, node) booleans.
            - threshold (float): enrollment flip-rate threshold used.
            - stages (list): 1-based stages the mask covers.
            - temperature (float): enrollment temperature.
            - source_hash (str): manifest hash of the enrollment dataset.
    """
    def __init__(self, keep, threshold: float, stages: list, temperature: float,
                 source_hash: str = ''):
        self.keep = asarray(keep, dtype=bool)
        self.threshold = threshold
        self.stages = list(stages)
        self.temperature = temperature
        self.source_hash = source_hash

    def stable_bits(self):
        """ Mean number of kept bits per response, for each stage. """
        return self.keep.sum(axis=-1).mean(axis=(0, 1))

    def mask(self, chip: int, challenge: int, stage: int):
        """ Keep-mask of one response.

            Args:
                - chip: chip index.
                - challenge: challenge index within the dataset.
                - stage: 1-based delay-line stage.
        """
        return self.keep[chip, challenge, self.stages.index(stage)]

    def save(self, prefix: str):
        """ Write <prefix>.mask.json and <prefix>.mask.bin (little-endian packed bits). """
        meta = {'format_version': FORMAT_VERSION, 'threshold': self.threshold,
                'stages': self.stages, 'temperature': self.temperature,
                'source_manifest_sha256': self.source_hash, 'shape': list(self.keep.shape)}
        with open(prefix + '.mask.json', 'w') as meta_file:
            json.dump(meta, meta_file, indent=2, sort_keys=True)
            meta_file.write('\n')
        packbits(self.keep.ravel(), bitorder='little').tofile(prefix + '.mask.bin')

    @classmethod
    def load(cls, prefix: str) -> 'HelperMask':
        """ Read helper data written by save. """
        with open(prefix + '.mask.json') as meta_file:
            meta = json.load(meta_file)
        shape = tuple(meta['shape'])
        bits = unpackbits(fromfile(prefix + '.mask.bin', dtype=uint8),
                          count=int(prod(shape)), bitorder='little')
        return cls(bits.reshape(shape).astype(bool), meta['threshold'], meta['stages'],
                   meta['temperature'], meta['source_manifest_sha256'])

def cherry_pick(enroll: CRPDataset, threshold: float = DEFAULT_THRESHOLD, stage: int = None,
                temperature: float = None) -> HelperMask:
    """ Keep only bits whose enrollment flip rate stays within the threshold.

        The flip rate of a bit is the fraction of repeats disagreeing with its
        majority value. The mask depends on the enrollment data alone.

        Args:
            - enroll: enrollment dataset, at least 2 repeats.
            - threshold: highest tolerated flip rate, within [0, 0.5].
            - stage: restrict the mask to one 1-based stage (default: all stages).
            - temperature: enrollment section to use (default t_ref).
    """
    if isinstance(threshold, bool) or not isinstance(threshold, (int, float)):
        raise TypeError('Threshold {} should be numeric.'.format(threshold))
    if not 0 <= threshold <= 0.5:
        raise ValueError('Threshold {} is outside [0, 0.5].'.format(threshold))
    if enroll.n_repeats < 2:
        raise DataError('Cherry picking needs at least 2 enrollment repeats.')
    t_index = enroll.temperature_index(temperature)
    stages = enroll.stages if stage is None else [stage]
    ones_count = stack([enroll.section(t_index, enroll.stage_index(each)).sum(axis=2, dtype=int)
                        for each in stages], axis=2)
    flips = minimum(ones_count, enroll.n_repeats - ones_count) / enroll.n_repeats
    mask = HelperMask(flips <= threshold, float(threshold), stages,
                      enroll.temperatures[t_index], enroll.manifest_hash())
    LOGGER.info('Cherry picked at threshold %.4f, %.1f stable bits at stage %d.',
                threshold, mask.stable_bits()[0], stages[0])
    return mask

def apply_mask(response, mask) -> tuple:
    """ Select the kept bits of a response, in ascending node order.

        Returns (kept bits, kept count).

        Args:
            - response: N response bits.
            - mask: N keep flags from the matching chip, challenge and stage.
    """
    response = asarray(response, dtype=uint8)
    mask = asarray(mask, dtype=bool)
    if response.ndim != 1 or response.shape != mask.shape:
        raise ValueError('Response shape {} does not match mask shape {}.'
                         .format(response.shape, mask.shape))
    kept = response[mask]
    return kept, int(kept.size)
