""" SIMULATOR MODULE TESTS

    - Any tests against the event driven network simulation will be contained here.

    With no manufacturing variation, no jitter and no pulse filter every gate takes
    exactly one 0.5 ns step, so the snapshot at stage k must equal k synchronous
    updates of the challenge.
"""
import unittest
from numpy import array, array_equal, full, random, uint8, zeros, ones
from hbnpuf.configuration import PhysicsConfig
from hbnpuf.errors import EventBudgetExhausted
from hbnpuf.physics import ChipInstance, sample_chip
from hbnpuf.simulator import (run_transient, booleanize, run_noise_seed, derive_seed,
                              challenge_label, _Jitter)
from hbnpuf.topology import (NetworkTopology, generate_topology, synchronous_update,
                             find_fixed_points_bruteforce)

def ideal_config(**kwargs):
    """ Physics where the continuous network behaves like the synchronous map. """
    settings = {'sigma_mfg': 0.0, 'sigma_noise': 0.0, 'pulse_filter_width': 0.0,
                'm_stages': 8}
    settings.update(kwargs)
    return PhysicsConfig(**settings)

class TestSuite(unittest.TestCase):
    """ Test Suite for the simulator module. """

    def setUp(self):
        """ Perform setup of initial parameters. """
        self.rng = random.default_rng(0)

    def test_synchronous_oracle(self):
        """ Snapshot k equals the k-step synchronous update, for several sizes. """
        config = ideal_config()
        for n in (4, 7, 12, 16):
            topology = generate_topology(n, n)
            chip = sample_chip(topology, config, 1)
            for _ in range(5):
                challenge = self.rng.integers(0, 2, n, dtype=uint8)
                states = run_transient(chip, config, challenge, 0).states
                expected = challenge
                for stage in range(8):
                    expected = synchronous_update(topology, expected)
                    self.assertTrue(array_equal(states[stage], expected),
                                    'N={} stage {} challenge {}'.format(
                                        n, stage + 1, challenge_label(challenge)))

    def test_trivial_challenges(self):
        """ All-zero and all-one reproduce themselves even with noise and variation. """
        topology = generate_topology(16, 3)
        config = PhysicsConfig()
        chip = sample_chip(topology, config, 4)
        for challenge in (zeros(16, dtype=uint8), ones(16, dtype=uint8)):
            states = run_transient(chip, config, challenge, 99).states
            self.assertTrue((states == challenge[None, :]).all())

    def test_fixed_point_absorption(self):
        """ A released fixed point never moves. """
        topology = generate_topology(10, 5)
        config = ideal_config()
        chip = sample_chip(topology, config, 1)
        for state in find_fixed_points_bruteforce(topology):
            states = run_transient(chip, config, state, 0).states
            self.assertTrue((states == state[None, :]).all())

    def test_deterministic(self):
        """ Same chip, challenge and noise seed: bit identical bitstreams. """
        topology = generate_topology(16, 2)
        config = PhysicsConfig()
        chip = sample_chip(topology, config, 8)
        challenge = self.rng.integers(0, 2, 16, dtype=uint8)
        first = run_transient(chip, config, challenge, 1234)
        second = run_transient(chip, config, challenge, 1234)
        self.assertTrue(array_equal(first.states, second.states))
        self.assertEqual(first.events, second.events)
        self.assertEqual(first.states.shape, (32, 16))

    def test_temperature_invariance(self):
        """ Matched coefficients keep noise-free bitstreams unchanged across temperature. """
        config = ideal_config(alpha_net=0.001, alpha_dl=0.001)
        topology = generate_topology(12, 6)
        chip = sample_chip(topology, config, 1)
        challenge = self.rng.integers(0, 2, 12, dtype=uint8)
        reference = run_transient(chip, config, challenge, 0, 20.0).states
        for temperature in (-20.0, 0.0, 40.0):
            states = run_transient(chip, config, challenge, 0, temperature).states
            self.assertTrue(array_equal(states, reference))

    def test_event_budget(self):
        """ Exceeding the event cap raises instead of running forever. """
        config = PhysicsConfig(event_budget=1)
        topology = generate_topology(16, 2)
        chip = sample_chip(topology, config, 1)
        challenge = zeros(16, dtype=uint8)
        challenge[0] = 1
        with self.assertRaises(EventBudgetExhausted) as context:
            run_transient(chip, config, challenge, 0)
        self.assertEqual(context.exception.cap, 1)

    def test_invalid_challenge(self):
        """ Challenge length and values are checked. """
        config = PhysicsConfig()
        chip = sample_chip(generate_topology(8, 0), config, 1)
        self.assertRaises(ValueError, run_transient, chip, config, zeros(7, dtype=uint8), 0)
        self.assertRaises(ValueError, run_transient, chip, config, [0, 1, 2, 0, 0, 0, 0, 0], 0)

    def test_capture_override(self):
        """ Custom capture times must increase, time zero reads the challenge back. """
        config = PhysicsConfig()
        chip = sample_chip(generate_topology(8, 0), config, 1)
        challenge = self.rng.integers(0, 2, 8, dtype=uint8)
        states = run_transient(chip, config, challenge, 0, capture_times=[0.0]).states
        self.assertTrue(array_equal(states[0], challenge))
        self.assertRaises(ValueError, run_transient, chip, config, challenge, 0,
                          capture_times=[1.0, 0.5])

    def test_booleanize(self):
        """ The event driven levels are already bits. """
        self.assertEqual(booleanize(0), 0)
        self.assertEqual(booleanize(1), 1)
        states = self.rng.integers(0, 2, (4, 8), dtype=uint8)
        self.assertTrue(array_equal(booleanize(states), states))

    def test_noise_seeds(self):
        """ Run seeds depend on the run coordinates only. """
        challenge = [0, 1, 1, 0]
        first = run_noise_seed(7, challenge, 0, 20.0, 1)
        self.assertEqual(first, run_noise_seed(7, challenge, 0, 20.0, 1))
        self.assertNotEqual(first, run_noise_seed(7, challenge, 1, 20.0, 1))
        self.assertNotEqual(first, run_noise_seed(7, challenge, 0, 40.0, 1))
        self.assertLess(derive_seed('a', 1), 2 ** 64)

def complete_chip(node_zero_delays):
    """ 4-node complete network, every edge 0.5 ns except node 0's inputs. """
    topology = NetworkTopology(4, [(1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)], 1, False)
    edge_delay = full((4, 3), 0.5)
    edge_delay[0] = node_zero_delays
    return ChipInstance(0, topology, edge_delay, full(8, 0.5), 1)

def traces(chip, width, capture_times):
    """ Noise-free trace of every node, one character per capture time. """
    config = ideal_config(pulse_filter_width=width)
    challenge = array([0, 1, 0, 0], dtype=uint8)
    states = run_transient(chip, config, challenge, 0, capture_times=capture_times).states
    return [''.join(str(bit) for bit in states[:, node]) for node in range(4)]

class PulseFilterTestSuite(unittest.TestCase):
    """ Short pulse rejection on hand-built delays with worked out traces.

        Released from 0100, node 0 sees each of its inputs toggle twice, 0.5 ns apart,
        so its output is the XOR of three 0.5 ns windows offset by its input delays.
    """

    def test_coincident_arrivals_keep_wide_pulses(self):
        """ Inputs arriving together cancel as one event and leave a pending fall alone. """
        chip = complete_chip([0.5, 0.7, 0.5])
        capture_times = [0.05 + 0.1 * step for step in range(20)]
        expected = ['00000111111100000111',
                    '11111000001111111000',
                    '00000111110000000111',
                    '00000111110000000111']
        self.assertEqual(traces(chip, 0.0, capture_times), expected)
        # Every pulse is at least 0.5 ns wide, so the filter changes nothing.
        self.assertEqual(traces(chip, 0.35, capture_times), expected)

    def test_narrow_pulses_removed(self):
        """ Pulses of 0.1 and 0.05 ns vanish under a 0.2 ns filter, the 0.35 ns one merges. """
        chip = complete_chip([0.5, 0.6, 0.95])
        capture_times = [0.025 + 0.05 * step for step in range(39)]
        ideal = traces(chip, 0.0, capture_times)
        self.assertEqual(ideal[0], '0' * 10 + '1' * 10 + '00' + '1' * 7 + '0' + '11' + '0' * 7)
        filtered = traces(chip, 0.2, capture_times)
        self.assertEqual(filtered[0], '0' * 10 + '1' * 22 + '0' * 7)
        # Node 0 first differs at 1.0 ns, the other nodes see that from 1.5 ns.
        for node in (1, 2, 3):
            self.assertEqual(filtered[node][:30], ideal[node][:30])

    def test_pulse_at_least_width_survives(self):
        """ Under a 0.08 ns filter the 0.1 ns pulses survive, the 0.05 ns one does not. """
        chip = complete_chip([0.5, 0.6, 0.95])
        capture_times = [0.025 + 0.05 * step for step in range(39)]
        filtered = traces(chip, 0.08, capture_times)
        self.assertEqual(filtered[0], '0' * 10 + '1' * 10 + '00' + '1' * 10 + '0' * 7)

    def test_jitter_truncated(self):
        """ Jitter never leaves the truncation window and has no mass on its edges. """
        jitter = _Jitter(3, 1.0, 0.5)
        values = array([jitter.draw() for _ in range(5000)])
        self.assertTrue((abs(values) < 0.5).all())
        self.assertGreater(values.std(), 0.2)
        self.assertEqual(_Jitter(3, 0.0, 4.0).draw(), 0.0)

class NoiseTestSuite(unittest.TestCase):
    """ Repeats of one cell differ only through timing noise. """

    def setUp(self):
        """ Perform setup of initial parameters. """
        self.topology = generate_topology(16, 11)
        self.challenges = random.default_rng(4).integers(0, 2, (5, 16), dtype=uint8)

    def repeats(self, sigma_noise, challenge):
        config = PhysicsConfig(sigma_noise=sigma_noise)
        chip = sample_chip(self.topology, config, 2)
        return [run_transient(chip, config, challenge,
                              run_noise_seed(2, challenge, repeat, 20.0, 1)).states
                for repeat in range(10)]

    def test_noise_free_repeats_identical(self):
        """ sigma_noise = 0 gives the same bitstream for every repeat. """
        for challenge in self.challenges:
            runs = self.repeats(0.0, challenge)
            for states in runs[1:]:
                self.assertTrue(array_equal(states, runs[0]))

    def test_noisy_repeats_differ(self):
        """ Jitter of 50 ps makes late snapshots of the chaotic network diverge. """
        diverged = 0
        for challenge in self.challenges:
            runs = self.repeats(50.0, challenge)
            diverged += any(not array_equal(states, runs[0]) for states in runs[1:])
        self.assertGreater(diverged, 0)
