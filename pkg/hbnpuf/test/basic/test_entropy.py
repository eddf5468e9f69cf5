""" ENTROPY MODULE TESTS

    - Any tests against the min-entropy, joint entropy and CTW estimators will be
      contained here.
"""
import os
import tempfile
import unittest
from itertools import permutations
from math import log2
from numpy import (array, zeros, uint8, random, allclose, log2 as np_log2, concatenate, isnan,
                   arange)
from hbnpuf.errors import DataError, InfeasibleAnalysisError
from hbnpuf.exporter import read_csv
from hbnpuf.analysis import entropy
from hbnpuf.test.synthetic import make_dataset

def joint_histogram_information(first, second) -> float:
    """ Mutual information of two bit columns from their 2x2 joint histogram. """
    total = len(first)
    information = 0.0
    for a in (0, 1):
        for b in (0, 1):
            joint = ((first == a) & (second == b)).sum() / total
            if joint == 0:
                continue
            information += joint * log2(joint / (((first == a).sum() / total)
                                                 * ((second == b).sum() / total)))
    return information

class BitMatrixTestSuite(unittest.TestCase):
    """ Test Suite for the bit ordering. """

    def test_three_nodes(self):
        """ N=3 exhaustive gives 3 x 6 = 18 columns. """
        dataset = make_dataset(zeros((1, 2, 6, 1, 1, 3), dtype=uint8))
        matrix = entropy.build_bit_matrix(dataset, 1)
        self.assertEqual(matrix.n_columns, 18)
        self.assertEqual(matrix.rows.shape, (2, 18))

    def test_four_nodes(self):
        """ N=4 exhaustive gives 4 x 14 = 56 columns. """
        dataset = make_dataset(zeros((1, 2, 14, 1, 1, 4), dtype=uint8))
        self.assertEqual(entropy.build_bit_matrix(dataset, 1).n_columns, 56)

    def test_column_order(self):
        """ Column jN + i holds node i's response to challenge j ('010' is j=1). """
        responses = zeros((1, 1, 6, 1, 1, 3), dtype=uint8)
        responses[0, 0, 1, 0, 0, 2] = 1
        matrix = entropy.build_bit_matrix(make_dataset(responses), 1)
        self.assertEqual(matrix.challenges[1], '010')
        self.assertEqual(matrix.column(1, 2), 5)
        self.assertEqual(list(matrix.rows[0].nonzero()[0]), [5])

    def test_votes(self):
        """ Majority over repeats or a single chosen repeat. """
        responses = zeros((1, 1, 6, 3, 1, 3), dtype=uint8)
        responses[0, 0, 0, :2, 0, 0] = 1
        dataset = make_dataset(responses)
        self.assertEqual(entropy.build_bit_matrix(dataset, 1).rows[0, 0], 1)
        self.assertEqual(entropy.build_bit_matrix(dataset, 1, 'single', 2).rows[0, 0], 0)
        self.assertRaises(ValueError, entropy.build_bit_matrix, dataset, 1, 'mean')
        self.assertRaises(ValueError, entropy.build_bit_matrix, dataset, 1, 'single', 3)

class MinEntropyTestSuite(unittest.TestCase):
    """ Test Suite for min-entropy. """

    def matrix(self, rows, mode='exhaustive', n_nodes=None, challenges=None):
        rows = array(rows, dtype=uint8)
        n_nodes = rows.shape[1] if n_nodes is None else n_nodes
        return entropy.BitMatrix(rows, n_nodes, challenges or ['0'], mode)

    def test_column_contributions(self):
        """ Balanced column 1 bit, constant column 0 bits, 3/4 column -log2(0.75). """
        matrix = self.matrix([[0, 1, 1], [1, 1, 1], [0, 1, 1], [1, 1, 0]])
        value, density = entropy.h_min(matrix)
        self.assertAlmostEqual(value, 1.0 - log2(0.75))
        self.assertAlmostEqual(density, value / 3)

    def test_row_permutation(self):
        """ Reordering chips doesn't change min-entropy. """
        rows = random.default_rng(2).integers(0, 2, (8, 40), dtype=uint8)
        self.assertAlmostEqual(entropy.h_min(self.matrix(rows))[0],
                               entropy.h_min(self.matrix(rows[::-1]))[0])

    def test_empty(self):
        """ Empty matrices have no entropy to estimate. """
        self.assertRaises(DataError, entropy.h_min, self.matrix(zeros((0, 4))))

    def test_sampled_scaling(self):
        """ Sampled matrices are scaled up to the whole challenge space. """
        matrix = self.matrix([[0, 1], [1, 0]], mode='sampled', n_nodes=2,
                             challenges=['01'])
        value, _ = entropy.h_min(matrix)
        self.assertAlmostEqual(value, 2.0)
        expected = log2(2.0) + log2(2 ** 2 - 2) - log2(1)
        self.assertAlmostEqual(entropy.h_min_log2(matrix, value), expected)
        self.assertAlmostEqual(entropy.log2_valid_challenges(40), log2(2 ** 40 - 2))

class JointEntropyTestSuite(unittest.TestCase):
    """ Test Suite for mutual information, 2-opt and joint entropy. """

    def setUp(self):
        """ Perform setup of initial parameters. """
        self.rng = random.default_rng(3)

    def test_information_oracle(self):
        """ Matches the joint histogram computation on random 8 x 20 matrices. """
        for _ in range(5):
            rows = self.rng.integers(0, 2, (8, 20), dtype=uint8)
            information = entropy.mutual_information_matrix(entropy.BitMatrix(rows, 4, ['0']))
            for first in range(20):
                for second in range(20):
                    expected = (0.0 if first == second else
                                joint_histogram_information(rows[:, first], rows[:, second]))
                    self.assertAlmostEqual(information[first, second], expected, delta=1e-12)

    def test_information_properties(self):
        """ Symmetric, non-negative, zero diagonal. """
        rows = self.rng.integers(0, 2, (16, 30), dtype=uint8)
        information = entropy.mutual_information_matrix(entropy.BitMatrix(rows, 3, ['0']))
        self.assertTrue(allclose(information, information.T))
        self.assertTrue((information >= 0).all())
        self.assertTrue((information.diagonal() == 0).all())

    def test_duplicated_column(self):
        """ A duplicated fair column carries exactly one bit of mutual information. """
        column = array([0, 1, 0, 1, 1, 0, 1, 0], dtype=uint8)[:, None]
        matrix = entropy.BitMatrix(concatenate([column, column], axis=1), 2, ['0'])
        self.assertAlmostEqual(entropy.mutual_information_matrix(matrix)[0, 1], 1.0)

    def test_column_cap(self):
        """ Too many columns is an infeasible analysis. """
        matrix = entropy.BitMatrix(zeros((2, 50), dtype=uint8), 5, ['0'])
        self.assertRaises(InfeasibleAnalysisError, entropy.mutual_information_matrix, matrix, 40)

    def test_zero_weights(self):
        """ Without information every order scores 0. """
        order = entropy.order_2opt(zeros((6, 6)))
        self.assertEqual(sorted(order), list(range(6)))
        self.assertEqual(entropy.path_score(zeros((6, 6)), order), 0.0)

    def test_correlated_pair_adjacent(self):
        """ The one strongly linked pair ends up next to each other. """
        weights = zeros((4, 4))
        weights[0, 3] = weights[3, 0] = 1.0
        order = list(entropy.order_2opt(weights))
        self.assertEqual(abs(order.index(0) - order.index(3)), 1)

    def test_local_optimum(self):
        """ No single reversal improves the returned path, which beats the identity. """
        for trial in range(20):
            weights = self.rng.random((7, 7))
            weights = weights + weights.T
            order = entropy.order_2opt(weights, restarts=3, seed=trial)
            self.assertEqual(sorted(order), list(range(7)))
            self.assertLessEqual(entropy.best_two_opt_gain(weights, order), entropy.TOLERANCE)
            self.assertGreaterEqual(entropy.path_score(weights, order) + 1e-12,
                                    entropy.path_score(weights, arange(7)))

    def test_near_exhaustive(self):
        """ Random 6-bit instances: 2-opt never beats, and mostly matches, the exhaustive best. """
        matches = 0
        for trial in range(30):
            weights = self.rng.random((6, 6))
            weights = weights + weights.T
            best = max(entropy.path_score(weights, order) for order in permutations(range(6)))
            found = entropy.path_score(weights, entropy.order_2opt(weights, 4, trial))
            self.assertLessEqual(found, best + 1e-9)
            matches += abs(found - best) < 1e-9
        self.assertGreater(matches, 0)

    def test_deterministic(self):
        """ Same seed, same order. """
        weights = self.rng.random((9, 9))
        weights = weights + weights.T
        self.assertEqual(list(entropy.order_2opt(weights, 4, 1)),
                         list(entropy.order_2opt(weights, 4, 1)))

    def test_joint_independent(self):
        """ Independent columns carry no penalty. """
        rows = array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=uint8)
        joint, _, penalty, _ = entropy.h_joint(entropy.BitMatrix(rows, 2, ['0']))
        self.assertAlmostEqual(penalty, 0.0)
        self.assertAlmostEqual(joint, 2.0)

    def test_joint_duplicates(self):
        """ Each duplicated fair pair costs at least one bit. """
        fair = array([0] * 32 + [1] * 32, dtype=uint8)
        base = array([self.rng.permutation(fair) for _ in range(4)]).T
        rows = concatenate([base, base], axis=1)
        matrix = entropy.BitMatrix(rows, 4, ['0', '1'])
        joint, _, penalty, _ = entropy.h_joint(matrix)
        self.assertGreaterEqual(penalty, 4.0 - 1e-9)
        self.assertLessEqual(joint, entropy.h_min(matrix)[0])

    def test_joint_never_exceeds_min(self):
        """ H_joint <= H_min on random inputs. """
        for _ in range(10):
            matrix = entropy.BitMatrix(self.rng.integers(0, 2, (8, 24), dtype=uint8), 4, ['0'])
            self.assertLessEqual(entropy.h_joint(matrix)[0], entropy.h_min(matrix)[0] + 1e-12)

class CtwEstimateTestSuite(unittest.TestCase):
    """ Test Suite for the leave-one-chip-out CTW estimate and reports. """

    def setUp(self):
        """ Perform setup of initial parameters. """
        self.rng = random.default_rng(4)

    def test_identical_chips(self):
        """ Chips identical to each other compress far below their raw length. """
        row = self.rng.integers(0, 2, (1, 1, 30, 1, 1, 5), dtype=uint8)
        dataset = make_dataset(row.repeat(4, axis=1))
        value, lengths = entropy.h_ctw(dataset, 1, depths=range(0, 17))
        self.assertEqual(len(lengths), 4)
        self.assertLess(value, 0.5 * 30 * 5)

    def test_random_chips(self):
        """ Independent fair-coin chips don't compress. """
        dataset = make_dataset(self.rng.integers(0, 2, (1, 4, 126, 1, 1, 7), dtype=uint8))
        value, _ = entropy.h_ctw(dataset, 1, depths=range(0, 5), workers=2)
        self.assertGreater(value, 0.85 * 126 * 7)

    def test_needs_two_chips(self):
        """ Leave-one-out needs another chip as context. """
        dataset = make_dataset(zeros((1, 1, 14, 1, 1, 4), dtype=uint8))
        self.assertRaises(DataError, entropy.h_ctw, dataset, 1)

    def test_report(self):
        """ Reports hold every requested estimate, the rest are nan. """
        dataset = make_dataset(self.rng.integers(0, 2, (1, 6, 14, 3, 1, 4), dtype=uint8))
        report = entropy.entropy_report(dataset, 1, 'a', ('min', 'joint'))
        self.assertLessEqual(report.h_joint, report.h_min)
        self.assertTrue(isnan(report.h_ctw))
        self.assertFalse(report.extrapolated)
        self.assertAlmostEqual(report.h_min_log2, float(np_log2(report.h_min)))
        self.assertRaises(ValueError, entropy.entropy_report, dataset, 1, 'a', ('max',))

    def test_summary_and_export(self):
        """ Class summaries and the CSV exports. """
        reports = []
        for class_id in range(3):
            dataset = make_dataset(self.rng.integers(0, 2, (1, 4, 14, 1, 1, 4), dtype=uint8))
            reports.append(entropy.entropy_report(dataset, 1, str(class_id), entropy.ESTIMATORS,
                                                  depths=range(0, 4)))
        summary = entropy.summarize_classes(reports)
        self.assertEqual(set(summary), set(entropy.SUMMARY_FIELDS))
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, 'entropy_report.csv')
            entropy.export_reports(reports, path, 'abc')
            source, header, rows = read_csv(path)
            self.assertEqual(source, 'abc')
            self.assertEqual(header, entropy.REPORT_HEADER)
            self.assertEqual([row[1] for row in rows], ['0', '1', '2'])
            path = os.path.join(directory, 'entropy_summary.csv')
            entropy.export_summary(summary, 3, path)
            self.assertEqual(len(read_csv(path)[2]), len(entropy.SUMMARY_FIELDS))
