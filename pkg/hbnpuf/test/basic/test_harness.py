""" HARNESS MODULE TESTS

    - Any tests against challenge spaces, campaigns, datasets, the glitch check and
      cherry picking will be contained here.
"""
import os
import tempfile
import unittest
from numpy import array, array_equal, concatenate, packbits, uint8, zeros
from pydispatch import dispatcher
from hbnpuf.configuration import PhysicsConfig
from hbnpuf.errors import DataError, InfeasibleAnalysisError
from hbnpuf.harness import (enumerate_valid_challenges, sample_valid_challenges, parse_challenge,
                            QueryProtocol, CRPDataset, HelperMask, collect, glitch_check,
                            majority_vote, cherry_pick, apply_mask)
from hbnpuf.simulator import challenge_label
from hbnpuf.topology import generate_topology
from hbnpuf.test.synthetic import make_dataset

class ChallengeTestSuite(unittest.TestCase):
    """ Test Suite for challenge enumeration and sampling. """

    def test_three_nodes(self):
        """ N=3 has exactly six valid challenges, in lexicographic order. """
        labels = [challenge_label(challenge) for challenge in enumerate_valid_challenges(3)]
        self.assertEqual(labels, ['001', '010', '011', '100', '101', '110'])

    def test_four_nodes(self):
        """ 2^4 - 2 challenges, none of them trivial. """
        challenges = enumerate_valid_challenges(4)
        self.assertEqual(len(challenges), 14)
        self.assertFalse((challenges.sum(axis=1) == 0).any())
        self.assertFalse((challenges.sum(axis=1) == 4).any())

    def test_exhaustive_limit(self):
        """ Exhaustive enumeration stops at N=16. """
        self.assertRaises(InfeasibleAnalysisError, enumerate_valid_challenges, 17)

    def test_sampled(self):
        """ Samples are unique, valid, sorted and reproducible. """
        challenges = sample_valid_challenges(64, 200, 3)
        labels = [challenge_label(challenge) for challenge in challenges]
        self.assertEqual(len(set(labels)), 200)
        self.assertEqual(labels, sorted(labels))
        self.assertNotIn('0' * 64, labels)
        self.assertTrue(array_equal(challenges, sample_valid_challenges(64, 200, 3)))

    def test_sampled_too_many(self):
        """ Can't sample more challenges than exist. """
        self.assertRaises(ValueError, sample_valid_challenges, 4, 15, 0)
        self.assertEqual(len(sample_valid_challenges(4, 14, 0)), 14)

    def test_parse_challenge(self):
        """ Labels parse back to bits, node 0 first. """
        self.assertEqual(list(parse_challenge('0110')), [0, 1, 1, 0])
        self.assertRaises(DataError, parse_challenge, '01a')

    def test_protocol_validation(self):
        """ Protocol arguments are checked up front. """
        self.assertRaises(ValueError, QueryProtocol, n_repeats=0)
        self.assertRaises(ValueError, QueryProtocol, challenge_mode='random')
        self.assertRaises(ValueError, QueryProtocol, temperatures=[20.0, 20.0])
        self.assertRaises(ValueError, QueryProtocol, temperatures=[90.0])
        self.assertRaises(TypeError, QueryProtocol, n_repeats=2.5)
        self.assertRaises(ValueError, QueryProtocol(stages=[40]).resolve_stages, 32)

class CampaignTestSuite(unittest.TestCase):
    """ Test Suite for campaigns on a small simulated class. """

    def setUp(self):
        """ Perform setup of initial parameters. """
        self.topology = generate_topology(4, 1)
        self.config = PhysicsConfig(m_stages=6)
        self.protocol = QueryProtocol(n_repeats=3, noise_seed=5)
        self.dataset = collect(self.topology, self.config, [11, 12], self.protocol)

    def test_shape(self):
        """ chips x challenges x repeats bitstreams of every stage. """
        self.assertEqual(self.dataset.responses.shape, (1, 2, 14, 3, 6, 4))
        self.assertEqual(self.dataset.trivial.shape, (1, 2, 2, 3, 6, 4))
        self.assertEqual(self.dataset.capture_times.shape, (1, 2, 6))

    def test_trivial_excluded(self):
        """ The trivial challenges only live in their own section. """
        self.assertNotIn('0000', self.dataset.manifest['challenges'])
        self.assertNotIn('1111', self.dataset.manifest['challenges'])

    def test_deterministic(self):
        """ Same seeds, identical data, independent of the worker count. """
        again = collect(self.topology, self.config, [11, 12], self.protocol, workers=3)
        self.assertTrue(array_equal(again.responses, self.dataset.responses))
        self.assertEqual(again.manifest_bytes(), self.dataset.manifest_bytes())

    def test_noise_free_repeats(self):
        """ Without jitter every repeat is identical. """
        config = PhysicsConfig(m_stages=6, sigma_noise=0.0)
        dataset = collect(self.topology, config, [11, 12], self.protocol)
        self.assertTrue((dataset.responses == dataset.responses[:, :, :, :1]).all())

    def test_stage_selection(self):
        """ Only the requested stages are stored. """
        protocol = QueryProtocol(n_repeats=2, stages=[2, 5], noise_seed=5)
        dataset = collect(self.topology, self.config, [11], protocol)
        self.assertEqual(dataset.stages, [2, 5])
        self.assertEqual(dataset.responses.shape, (1, 1, 14, 2, 2, 4))
        self.assertTrue(array_equal(dataset.responses[0, 0, :, :, 1],
                                    self.dataset.responses[0, 0, :, :2, 4]))

    def test_temperatures(self):
        """ One section per temperature, indexed by value. """
        protocol = QueryProtocol(n_repeats=2, temperatures=[0.0, 40.0], role='query')
        dataset = collect(self.topology, self.config, [11], protocol)
        self.assertEqual(dataset.responses.shape[0], 2)
        self.assertEqual(dataset.temperature_index(40.0), 1)
        self.assertEqual(dataset.temperature_index(), 0)
        self.assertRaises(DataError, dataset.temperature_index, 20.0)

    def test_signals(self):
        """ Every cell and the finished campaign are announced. """
        cells = []
        campaigns = []
        def on_cell(data):
            cells.append(data)
        def on_campaign(data):
            campaigns.append(data)
        dispatcher.connect(on_cell, signal='cell', sender=dispatcher.Any)
        dispatcher.connect(on_campaign, signal='campaign', sender=dispatcher.Any)
        try:
            collect(self.topology, self.config, [11], QueryProtocol(n_repeats=1))
        finally:
            dispatcher.disconnect(on_cell, signal='cell', sender=dispatcher.Any)
            dispatcher.disconnect(on_campaign, signal='campaign', sender=dispatcher.Any)
        self.assertEqual(len(cells), 16)
        self.assertEqual(len(campaigns), 1)

    def test_save_load(self):
        """ save -> load -> save is byte stable. """
        with tempfile.TemporaryDirectory() as directory:
            first = os.path.join(directory, 'first')
            second = os.path.join(directory, 'second')
            self.dataset.save(first)
            loaded = CRPDataset.load(first)
            loaded.save(second)
            for suffix in ('.manifest.json', '.crp.bin'):
                with open(first + suffix, 'rb') as left, open(second + suffix, 'rb') as right:
                    self.assertEqual(left.read(), right.read())
        self.assertTrue(array_equal(loaded.responses, self.dataset.responses))
        self.assertTrue(array_equal(loaded.trivial, self.dataset.trivial))
        self.assertEqual(loaded.topology, self.topology)

    def test_packed_cells(self):
        """ Cells are stored one byte per response and unpack to the same bits. """
        self.assertEqual(self.dataset.packed.shape, (1, 2, 14, 3, 6, 1))
        self.assertEqual(self.dataset.packed_trivial.shape, (1, 2, 2, 3, 6, 1))
        responses = self.dataset.responses
        self.assertTrue(array_equal(self.dataset.section(0), responses[0]))
        self.assertTrue(array_equal(self.dataset.section(0, 2), responses[0, :, :, :, 2]))
        rebuilt = CRPDataset(self.dataset.manifest, responses, self.dataset.trivial)
        self.assertTrue(array_equal(rebuilt.packed, self.dataset.packed))
        self.assertRaises(DataError, CRPDataset, self.dataset.manifest,
                          self.dataset.packed[:, :1], self.dataset.packed_trivial, packed=True)

    def test_byte_aligned_file(self):
        """ With N=8 the packed store is written as is and reads back unchanged. """
        protocol = QueryProtocol(n_challenges=10, n_repeats=2, challenge_mode='sampled',
                                 sample_seed=3)
        dataset = collect(generate_topology(8, 1), PhysicsConfig(m_stages=2), [11], protocol)
        self.assertEqual(dataset.packed.shape, (1, 1, 10, 2, 2, 1))
        with tempfile.TemporaryDirectory() as directory:
            prefix = os.path.join(directory, 'aligned')
            dataset.save(prefix)
            with open(prefix + '.crp.bin', 'rb') as bit_file:
                written = bit_file.read()
            loaded = CRPDataset.load(prefix)
        bits = concatenate([dataset.responses.ravel(), dataset.trivial.ravel()])
        self.assertEqual(len(written), (10 + 2) * 2 * 2)
        self.assertEqual(written, packbits(bits, bitorder='little').tobytes())
        self.assertTrue(array_equal(loaded.responses, dataset.responses))
        self.assertTrue(array_equal(loaded.trivial, dataset.trivial))

    def test_load_truncated(self):
        """ A bit file shorter than the manifest describes is a data error. """
        with tempfile.TemporaryDirectory() as directory:
            prefix = os.path.join(directory, 'broken')
            self.dataset.save(prefix)
            with open(prefix + '.crp.bin', 'r+b') as bit_file:
                bit_file.truncate(3)
            self.assertRaises(DataError, CRPDataset.load, prefix)

    def test_glitch_check_passes(self):
        """ The simulator always reproduces the fixed points. """
        report = glitch_check(self.dataset)
        self.assertTrue(report.passed)
        self.assertTrue(report)
        self.assertEqual(report.evidence, [])

class GlitchTestSuite(unittest.TestCase):
    """ Test Suite for the glitch check on synthetic data. """

    def test_injected_fault(self):
        """ One flipped bit on an all-zero response fails and is located. """
        responses = zeros((1, 3, 14, 2, 4, 4), dtype=uint8)
        trivial = zeros((1, 3, 2, 2, 4, 4), dtype=uint8)
        trivial[:, :, 1] = 1
        trivial[0, 2, 0, 1, 3, 0] = 1
        report = glitch_check(make_dataset(responses, trivial=trivial))
        self.assertFalse(report.passed)
        self.assertEqual(report.violations, 1)
        self.assertEqual(report.evidence, [{'temperature': 20.0, 'chip': 2,
                                            'challenge': 'all-zero', 'repeat': 1, 'stage': 4}])

    def test_empty_trivial(self):
        """ Without the trivial section there is nothing to check. """
        responses = zeros((1, 2, 14, 2, 4, 4), dtype=uint8)
        dataset = make_dataset(responses, trivial=zeros((0,), dtype=uint8))
        self.assertRaises(DataError, glitch_check, dataset)

class CherryPickTestSuite(unittest.TestCase):
    """ Test Suite for helper data. """

    def test_majority_ties(self):
        """ Majority over repeats, ties resolve to 0. """
        bits = array([[1, 1, 0], [1, 0, 0], [1, 0, 1]], dtype=uint8)
        self.assertEqual(list(majority_vote(bits, axis=0)), [1, 0, 0])
        self.assertEqual(list(majority_vote(array([[1, 0]]), axis=1)), [0])

    def test_stable_keeps_everything(self):
        """ Noise free enrollment keeps all N bits. """
        responses = zeros((1, 2, 14, 5, 3, 4), dtype=uint8)
        responses[..., 1] = 1
        mask = cherry_pick(make_dataset(responses))
        self.assertTrue(mask.keep.all())
        self.assertEqual(list(mask.stable_bits()), [4.0, 4.0, 4.0])

    def test_alternating_bit_dropped(self):
        """ A bit alternating over repeats is dropped for any threshold below 0.5. """
        responses = zeros((1, 2, 14, 6, 1, 4), dtype=uint8)
        responses[0, 1, 3, ::2, 0, 2] = 1
        mask = cherry_pick(make_dataset(responses), threshold=0.49)
        self.assertFalse(mask.mask(1, 3, 1)[2])
        self.assertEqual(int(mask.keep.sum()), 2 * 14 * 4 - 1)
        self.assertTrue(cherry_pick(make_dataset(responses), threshold=0.5).keep.all())

    def test_threshold_flip_rate(self):
        """ One flip in 100 repeats is kept at 0.01, two are not. """
        responses = zeros((1, 1, 14, 100, 1, 4), dtype=uint8)
        responses[0, 0, 0, 0, 0, 0] = 1
        responses[0, 0, 1, :2, 0, 0] = 1
        mask = cherry_pick(make_dataset(responses), threshold=0.01)
        self.assertTrue(mask.mask(0, 0, 1)[0])
        self.assertFalse(mask.mask(0, 1, 1)[0])

    def test_stage_restriction(self):
        """ Restricting to one stage gives a single-stage mask. """
        responses = zeros((1, 2, 14, 3, 4, 4), dtype=uint8)
        mask = cherry_pick(make_dataset(responses), stage=3)
        self.assertEqual(mask.stages, [3])
        self.assertEqual(mask.keep.shape, (2, 14, 1, 4))
        self.assertRaises(DataError, cherry_pick, make_dataset(responses), stage=9)

    def test_errors(self):
        """ Bad thresholds and single-repeat enrollments are rejected. """
        dataset = make_dataset(zeros((1, 2, 14, 3, 1, 4), dtype=uint8))
        self.assertRaises(ValueError, cherry_pick, dataset, 0.6)
        self.assertRaises(ValueError, cherry_pick, dataset, -0.1)
        self.assertRaises(TypeError, cherry_pick, dataset, '0.01')
        self.assertRaises(DataError, cherry_pick,
                          make_dataset(zeros((1, 2, 14, 1, 1, 4), dtype=uint8)))

    def test_mask_save_load(self):
        """ Helper data round trips through its files. """
        responses = zeros((1, 2, 14, 4, 2, 4), dtype=uint8)
        responses[0, 0, 0, 0, 0, 1] = 1
        dataset = make_dataset(responses)
        mask = cherry_pick(dataset, 0.1)
        with tempfile.TemporaryDirectory() as directory:
            prefix = os.path.join(directory, 'helper')
            mask.save(prefix)
            loaded = HelperMask.load(prefix)
        self.assertTrue(array_equal(loaded.keep, mask.keep))
        self.assertEqual(loaded.stages, [1, 2])
        self.assertEqual(loaded.source_hash, dataset.manifest_hash())

    def test_apply_mask(self):
        """ Kept bits in ascending node order, with their count. """
        response = array([1, 1, 1, 1], dtype=uint8)
        kept, count = apply_mask(response, [False, True, False, True])
        self.assertEqual((list(kept), count), ([1, 1], 2))
        kept, count = apply_mask(array([0, 1, 1, 0]), [True] * 4)
        self.assertEqual(list(kept), [0, 1, 1, 0])
        kept, count = apply_mask(response, [False] * 4)
        self.assertEqual((kept.size, count), (0, 0))
        self.assertRaises(ValueError, apply_mask, response, [True] * 3)
