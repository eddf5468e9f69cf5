""" SENSITIVITY MODULE
    Boolean-function sensitivity of single response bits, and of their XOR.

    A response bit, read at one stage of a noise-free chip, is a Boolean function of
    the challenge. Average sensitivity counts how many single-bit challenge flips
    change it, noise sensitivity is the probability an epsilon-noisy challenge does.
    Both are estimated by Monte Carlo, or enumerated exactly for small N.

    Functions are evaluated in batches: f maps a (k, N) uint8 challenge array to k bits.
"""
import logging
from numpy import (asarray, eye, uint8, random, sqrt, arange, float64, packbits,
                   bitwise_xor, empty)
from scipy.stats import sem
from hbnpuf.errors import InfeasibleAnalysisError
from hbnpuf.exporter import write_csv
from hbnpuf.harness import enumerate_valid_challenges
from hbnpuf.physics import effective_delays, _settings
from hbnpuf.simulator import run_transient, derive_seed

LOGGER = logging.getLogger(__name__)

EXACT_LIMIT = 12
DEFAULT_EPSILON = 0.05
DEFAULT_SAMPLES = 10000
XOR_ALL = 'xor'

class ResponseBitFunction(object):
    """ Noise-free response bit of one chip as a function of the challenge.

        Attributes:
            - chip (ChipInstance): chip to evaluate.
            - stage (int): 1-based delay-line stage, 0 reads the network at release.
            - target: node index, or 'xor' for the parity of the whole response.
            - temperature (float): degrees Celsius.
            - evaluations (int): simulator runs made so far (repeats are cached).
    """
    def __init__(self, chip, config, stage: int, target, temperature: float = None):
        settings = dict(_settings(config))
        settings['sigma_noise'] = 0.0
        n_nodes = chip.topology.n_nodes
        if target != XOR_ALL and not (isinstance(target, int) and 0 <= target < n_nodes):
            raise ValueError("Target must be a node index 0..{} or '{}', got {!r}."
                             .format(n_nodes - 1, XOR_ALL, target))
        if not 0 <= stage <= settings['m_stages']:
            raise ValueError('Stage {} outside 0..{}.'.format(stage, settings['m_stages']))
        self.chip = chip
        self.settings = settings
        self.stage = stage
        self.target = target
        self.temperature = settings['t_ref'] if temperature is None else temperature
        if stage == 0:
            self.capture_time = [0.0]
        else:
            delays = effective_delays(chip, settings, self.temperature)
            self.capture_time = [float(delays.capture_times[stage - 1])]
        self.cache = {}
        self.evaluations = 0

    def _evaluate(self, challenge) -> int:
        key = packbits(challenge).tobytes()
        if not key in self.cache:
            states = run_transient(self.chip, self.settings, challenge, 0, self.temperature,
                                   capture_times=self.capture_time).states[0]
            self.evaluations += 1
            bit = int(states.sum() % 2) if self.target == XOR_ALL else int(states[self.target])
            self.cache[key] = bit
        return self.cache[key]

    def __call__(self, challenges):
        challenges = asarray(challenges, dtype=uint8)
        if challenges.ndim == 1:
            return self._evaluate(challenges)
        return asarray([self._evaluate(challenge) for challenge in challenges], dtype=uint8)

def response_bit_function(chip, config, stage: int, target, temperature: float = None):
    """ Evaluator from challenge to one response bit (or the XOR of all of them).

        Args:
            - chip: ChipInstance.
            - config: PhysicsConfig (or frozen settings), the noise is switched off.
            - stage: 1-based delay-line stage, 0 for the state at release.
            - target: node index, or 'xor'.
            - temperature: degrees Celsius, defaults to t_ref.
    """
    return ResponseBitFunction(chip, config, stage, target, temperature)

def _generator(seed: int):
    """ Counter-based stream, so estimates depend on the seed alone. """
    return random.Generator(random.Philox(seed))

def _valid_sample(rng, n: int, count: int):
    """ Uniform draws from the valid challenges (all-zero and all-one rejected). """
    challenges = rng.integers(0, 2, (count, n), dtype=uint8)
    while True:
        trivial = (challenges.sum(axis=1) % n) == 0
        if not trivial.any():
            return challenges
        challenges[trivial] = rng.integers(0, 2, (int(trivial.sum()), n), dtype=uint8)

def _check(n: int, n_samples: int):
    if n < 2:
        raise ValueError('Sensitivity needs at least 2 challenge bits.')
    if n_samples < 1:
        raise ValueError('At least one sample is required.')

def _flip_counts(function, challenges):
    """ Output changes under each single-bit flip, one count per challenge. """
    n = challenges.shape[1]
    base = asarray(function(challenges), dtype=uint8)
    neighbours = bitwise_xor(challenges[:, None, :], eye(n, dtype=uint8)[None, :, :])
    flipped = asarray(function(neighbours.reshape(-1, n)), dtype=uint8).reshape(-1, n)
    return (flipped != base[:, None]).sum(axis=1)

def average_sensitivity(function, n: int, n_samples: int = DEFAULT_SAMPLES, seed: int = 0):
    """ Expected number of single-bit challenge flips that change the output.

        Returns (estimate, standard error), the estimate lies in [0, n].

        Args:
            - function: batch evaluator, (k, n) challenges to k bits.
            - n: challenge bits.
            - n_samples: sampled valid challenges.
            - seed: sampling seed.
    """
    _check(n, n_samples)
    counts = _flip_counts(function, _valid_sample(_generator(seed), n, n_samples))
    error = float(sem(counts)) if n_samples > 1 else 0.0
    return float(counts.mean()), error

def noise_sensitivity(function, n: int, epsilon: float = DEFAULT_EPSILON,
                      n_samples: int = DEFAULT_SAMPLES, seed: int = 0):
    """ Probability the output changes when each challenge bit flips with probability epsilon.

        Returns (estimate, binomial standard error).

        Args:
            - function: batch evaluator, (k, n) challenges to k bits.
            - n: challenge bits.
            - epsilon: per-bit flip probability, in (0, 0.5].
            - n_samples: sampled valid challenges.
            - seed: sampling seed.
    """
    _check(n, n_samples)
    if not 0 < epsilon <= 0.5:
        raise ValueError('Epsilon {} is outside (0, 0.5].'.format(epsilon))
    rng = _generator(seed)
    challenges = _valid_sample(rng, n, n_samples)
    noise = (rng.random((n_samples, n)) < epsilon).astype(uint8)
    base = asarray(function(challenges), dtype=uint8)
    noisy = asarray(function(challenges ^ noise), dtype=uint8)
    probability = float((base != noisy).mean())
    return probability, float(sqrt(probability * (1 - probability) / n_samples))

def _check_exact(n: int):
    if n > EXACT_LIMIT:
        raise InfeasibleAnalysisError('Exact sensitivity enumerates 2^{} challenges, '
                                      'limit is N <= {}.'.format(n, EXACT_LIMIT))

def exact_average_sensitivity(function, n: int) -> float:
    """ Average sensitivity enumerated over every valid challenge (n <= 12). """
    _check_exact(n)
    return float(_flip_counts(function, enumerate_valid_challenges(n)).mean())

def exact_noise_sensitivity(function, n: int, epsilon: float = DEFAULT_EPSILON) -> float:
    """ Noise sensitivity enumerated over every valid challenge and noise pattern (n <= 12). """
    _check_exact(n)
    if not 0 < epsilon <= 0.5:
        raise ValueError('Epsilon {} is outside (0, 0.5].'.format(epsilon))
    challenges = enumerate_valid_challenges(n)
    base = asarray(function(challenges), dtype=uint8)
    patterns = ((arange(2 ** n)[:, None] >> arange(n)[None, :]) & 1).astype(uint8)
    weights = epsilon ** patterns.sum(axis=1) * (1 - epsilon) ** (n - patterns.sum(axis=1))
    changed = empty(len(patterns), dtype=float64)
    for index, pattern in enumerate(patterns):
        noisy = asarray(function(challenges ^ pattern[None, :]), dtype=uint8)
        changed[index] = (noisy != base).mean()
    return float((weights * changed).sum())

class SensitivityReport(object):
    """ Sensitivity statistics of one target.

        Attributes:
            - target: node index or 'xor'.
            - average_sensitivity (float), as_stderr (float): unnormalised, in [0, N].
            - noise_sensitivity (float), ns_stderr (float): in [0, 1].
            - epsilon (float), n_samples (int), exact (bool).
    """
    def __init__(self, target, average, as_stderr, noise, ns_stderr, epsilon, n_samples, exact):
        self.target = target
        self.average_sensitivity = average
        self.as_stderr = as_stderr
        self.noise_sensitivity = noise
        self.ns_stderr = ns_stderr
        self.epsilon = epsilon
        self.n_samples = n_samples
        self.exact = exact

    def row(self) -> list:
        return [self.target, self.average_sensitivity, self.noise_sensitivity, self.epsilon,
                self.n_samples, self.as_stderr, self.ns_stderr, int(self.exact)]

REPORT_HEADER = ['target', 'AS', 'NS', 'epsilon', 'n_samples', 'AS_stderr', 'NS_stderr',
                 'exact']

def sensitivity_report(chip, config, stage: int, targets: list, epsilon: float = DEFAULT_EPSILON,
                       n_samples: int = DEFAULT_SAMPLES, seed: int = 0, exact: bool = False,
                       temperature: float = None) -> list:
    """ Sensitivity of each target bit of a chip at one stage.

        Args:
            - chip: ChipInstance.
            - config: PhysicsConfig.
            - stage: 1-based stage (0 = release).
            - targets: node indices and/or 'xor'.
            - epsilon: noise sensitivity flip probability.
            - n_samples: Monte Carlo samples per estimate.
            - seed: sampling seed, mixed with the target.
            - exact: enumerate instead of sampling (N <= 12).
            - temperature: degrees Celsius, defaults to t_ref.
    """
    n = chip.topology.n_nodes
    reports = []
    for target in targets:
        function = response_bit_function(chip, config, stage, target, temperature)
        if exact:
            report = SensitivityReport(target, exact_average_sensitivity(function, n), 0.0,
                                       exact_noise_sensitivity(function, n, epsilon), 0.0,
                                       epsilon, 2 ** n - 2, True)
        else:
            target_seed = derive_seed(seed, str(target), 'sensitivity')
            average, as_error = average_sensitivity(function, n, n_samples, target_seed)
            noise, ns_error = noise_sensitivity(function, n, epsilon, n_samples, target_seed)
            report = SensitivityReport(target, average, as_error, noise, ns_error, epsilon,
                                       n_samples, False)
        LOGGER.info('Target %s: AS %.4f, NS %.4f (%d simulator runs).', target,
                    report.average_sensitivity, report.noise_sensitivity, function.evaluations)
        reports.append(report)
    return reports

def export_reports(reports: list, path: str, source_hash: str = ''):
    """ sensitivity_report.csv: one row per target. """
    write_csv(path, REPORT_HEADER, [report.row() for report in reports], source_hash)
