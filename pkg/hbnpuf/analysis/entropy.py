""" ENTROPY MODULE
    Three estimates of how much entropy a PUF class's responses hold.

    - Min-entropy, one column at a time, of the bit matrix (chips x ordered bits).
    - Joint entropy: min-entropy less the mutual information of neighbouring bits,
      with bits ordered by 2-opt so that the penalty is as large as possible.
    - CTW: leave-one-chip-out compressed length of each chip given all the others.

    Bits are ordered x_{jN+i}: response of node i to the j-th valid challenge, with
    challenges in lexicographic order. All logarithms are base 2.

    INPUTS:
        CRPDataset(s), a delay-line stage.

    OUTPUTS:
        EntropyReport per class, a summary over classes, CSV exports.
"""
import logging
from numpy import (asarray, arange, argmax, float64, isfinite, nan, uint8, zeros, concatenate,
                   random, std, mean, maximum, log, log2, log1p)
from scipy.special import xlogy
from hbnpuf.analysis.ctw import ctw_codeword_lengths, MAX_DEPTH, MEMORY_BUDGET
from hbnpuf.coordinator import TaskCoordinator
from hbnpuf.errors import DataError, InfeasibleAnalysisError
from hbnpuf.exporter import write_csv
from hbnpuf.harness import majority_vote

LOGGER = logging.getLogger(__name__)

VOTES = ['majority', 'single']
COLUMN_CAP = 2048
TOLERANCE = 1e-12
DEFAULT_RESTARTS = 4

class BitMatrix(object):
    """ One row of ordered response bits per chip.

        Attributes:
            - rows (ndarray): (chips, challenges * N) uint8.
            - n_nodes (int): bits per response.
            - challenges (list): challenge labels, in column-block order.
            - mode (str): 'exhaustive' or 'sampled'.
            - stage (int): 1-based stage the bits were taken from.
            - vote (str): how repeats were reduced, 'majority' or 'single'.
    """
    def __init__(self, rows, n_nodes: int, challenges: list, mode: str = 'exhaustive',
                 stage: int = 0, vote: str = 'majority'):
        self.rows = asarray(rows, dtype=uint8)
        if self.rows.ndim != 2:
            raise ValueError('Bit matrix must be two dimensional.')
        self.n_nodes = n_nodes
        self.challenges = list(challenges)
        self.mode = mode
        self.stage = stage
        self.vote = vote

    @property
    def n_columns(self) -> int:
        return self.rows.shape[1]

    def column(self, challenge: int, node: int) -> int:
        """ Column of node i's response to the j-th challenge. """
        return challenge * self.n_nodes + node

def build_bit_matrix(dataset, stage: int, vote: str = 'majority', repeat: int = 0,
                     temperature: float = None) -> BitMatrix:
    """ Reduce a dataset section to a chips x bits matrix.

        Args:
            - dataset: CRPDataset.
            - stage: 1-based delay-line stage.
            - vote: 'majority' over repeats, or 'single' to take one repeat.
            - repeat: repeat used by the single vote.
            - temperature: dataset section (default t_ref).
    """
    if not vote in VOTES:
        raise ValueError("The vote {} doesn't exist".format(vote))
    section = dataset.section(dataset.temperature_index(temperature),
                              dataset.stage_index(stage))
    if vote == 'majority':
        bits = majority_vote(section, axis=2)
    else:
        if not 0 <= repeat < dataset.n_repeats:
            raise ValueError('Repeat {} outside 0..{}.'.format(repeat, dataset.n_repeats - 1))
        bits = section[:, :, repeat]
    return BitMatrix(bits.reshape(dataset.n_chips, -1), dataset.n_nodes,
                     dataset.manifest['challenges'],
                     dataset.manifest['protocol']['challenge_mode'], stage, vote)

def _column_min_entropy(rows):
    frequency = asarray(rows, dtype=float64).mean(axis=0)
    return -log2(maximum(frequency, 1 - frequency))

def h_min(matrix: BitMatrix) -> tuple:
    """ Min-entropy summed over columns and its density, (H_min, rho_min).

        Each column contributes -log2(max(f, 1 - f)), f the fraction of chips with a 1.

        Args:
            - matrix: bit matrix, at least one row and one column.
    """
    if matrix.rows.size == 0:
        raise DataError('Cannot estimate entropy of an empty bit matrix.')
    if matrix.rows.shape[0] < 2:
        LOGGER.warning('Min-entropy from a single chip is always 0.')
    entropy = float(_column_min_entropy(matrix.rows).sum())
    return entropy, entropy / matrix.n_columns

def log2_valid_challenges(n_nodes: int) -> float:
    """ log2(2^N - 2) without forming 2^N. """
    return n_nodes + log1p(-2.0 ** (1 - n_nodes)) / log(2)

def h_min_log2(matrix: BitMatrix, entropy: float) -> float:
    """ log2 of the min-entropy of the whole challenge space.

        A sampled matrix only covers part of the challenges, its entropy is scaled up
        by the unused fraction: H * N_vc / n_sampled.

        Args:
            - matrix: the matrix the entropy was measured on.
            - entropy: H_min of that matrix, bits.
    """
    if entropy <= 0:
        return float('-inf')
    value = log2(entropy)
    if matrix.mode == 'sampled':
        value += log2_valid_challenges(matrix.n_nodes) - log2(len(matrix.challenges))
    return value

def _entropy_bits(probability):
    return -xlogy(probability, probability) / log(2)

def mutual_information_matrix(matrix: BitMatrix, column_cap: int = COLUMN_CAP):
    """ Plug-in mutual information of every pair of columns, bits.

        Symmetric, non-negative and zero on the diagonal. Joint counts of all pairs
        come from one product of the matrix with itself.

        Args:
            - matrix: bit matrix.
            - column_cap: largest column count accepted.
    """
    if matrix.n_columns > column_cap:
        raise InfeasibleAnalysisError(
            'Joint entropy infeasible: {} bits exceed the cap of {} (use N <= 8).'
            .format(matrix.n_columns, column_cap))
    if matrix.rows.size == 0:
        raise DataError('Cannot estimate entropy of an empty bit matrix.')
    bits = asarray(matrix.rows, dtype=float64)
    samples = bits.shape[0]
    ones = bits.sum(axis=0)
    both = bits.T @ bits
    first_only = ones[:, None] - both
    second_only = ones[None, :] - both
    neither = samples - both - first_only - second_only
    marginal = _entropy_bits(ones / samples) + _entropy_bits(1 - ones / samples)
    joint = sum(_entropy_bits(counts / samples)
                for counts in (both, first_only, second_only, neither))
    information = marginal[:, None] + marginal[None, :] - joint
    information[information < 0] = 0.0
    information[arange(len(ones)), arange(len(ones))] = 0.0
    return information

def path_score(weights, order) -> float:
    """ Sum of the weights of neighbouring entries of an open path. """
    order = asarray(order)
    if order.size < 2:
        return 0.0
    return float(asarray(weights)[order[:-1], order[1:]].sum())

def _padded(weights):
    """ Weights with an extra zero-weight sentinel node, index n. """
    size = len(weights)
    padded = zeros((size + 1, size + 1))
    padded[:size, :size] = weights
    return padded

def _best_move(padded, path, position: int) -> tuple:
    """ Best reversal of path[position + 1 .. j], returns (gain, j). """
    first, second = path[position], path[position + 1]
    ends = arange(position + 1, len(path) - 1)
    inner = path[ends]
    outer = path[ends + 1]
    gains = (padded[first, inner] + padded[second, outer]
             - padded[first, second] - padded[inner, outer])
    best = int(argmax(gains))
    return float(gains[best]), int(ends[best])

def best_two_opt_gain(weights, order) -> float:
    """ Largest increase of the path score any single segment reversal achieves. """
    size = len(order)
    if size < 2:
        return 0.0
    path = concatenate([[size], asarray(order), [size]])
    padded = _padded(asarray(weights, dtype=float64))
    return max(_best_move(padded, path, position)[0] for position in range(size))

def _two_opt(padded, order, tolerance: float):
    size = len(order)
    path = concatenate([[size], order, [size]]) # Sentinels make prefix/suffix moves uniform.
    improved = True
    while improved:
        improved = False
        for position in range(size):
            gain, end = _best_move(padded, path, position)
            if gain > tolerance:
                path[position + 1:end + 1] = path[position + 1:end + 1][::-1].copy()
                improved = True
    return path[1:-1]

def order_2opt(weights, restarts: int = DEFAULT_RESTARTS, seed: int = 0,
               tolerance: float = TOLERANCE):
    """ Open path through all bits maximizing the summed neighbour weights.

        Local search by segment reversal until no move gains more than the tolerance.
        The first start is the identity order, the others are seeded permutations;
        the best final path is returned.

        Args:
            - weights: square symmetric matrix (mutual information).
            - restarts: number of starting orders, at least 1.
            - seed: seed of the random starts.
            - tolerance: smallest gain counted as an improvement.
    """
    weights = asarray(weights, dtype=float64)
    if weights.ndim != 2 or weights.shape[0] != weights.shape[1]:
        raise ValueError('Weights must be a square matrix.')
    if restarts < 1:
        raise ValueError('At least one start is required.')
    size = len(weights)
    if size < 3:
        return arange(size)
    padded = _padded(weights)
    rng = random.default_rng(seed)
    best_order, best_score = None, None
    for start in range(restarts):
        initial = arange(size) if start == 0 else rng.permutation(size)
        order = _two_opt(padded, initial, tolerance)
        score = path_score(weights, order)
        if best_score is None or score > best_score + tolerance:
            best_order, best_score = order, score
    return best_order

def h_joint(matrix: BitMatrix, restarts: int = DEFAULT_RESTARTS, seed: int = 0,
            column_cap: int = COLUMN_CAP) -> tuple:
    """ (H_joint, rho_joint, penalty, order): H_min less neighbouring mutual information.

        Args:
            - matrix: bit matrix.
            - restarts: 2-opt starts.
            - seed: 2-opt seed.
            - column_cap: largest column count accepted.
    """
    information = mutual_information_matrix(matrix, column_cap)
    order = order_2opt(information, restarts, seed)
    penalty = path_score(information, order)
    entropy, _ = h_min(matrix)
    joint = entropy - penalty
    assert joint <= entropy + TOLERANCE
    return joint, joint / matrix.n_columns, penalty, order

def h_ctw(dataset, stage: int, depths=range(0, MAX_DEPTH + 1), repeat: int = 0,
          temperature: float = None, workers: int = 1, budget: int = MEMORY_BUDGET) -> tuple:
    """ Leave-one-chip-out CTW estimate, (H_CTW, lengths per held-out chip).

        For each chip, the other chips' rows in ascending chip order form the context
        and the chip's own row is coded. Each length is the minimum over the depths.

        Args:
            - dataset: CRPDataset with at least 2 chips.
            - stage: 1-based stage.
            - depths: tree depths to minimize over.
            - repeat: repeat used as each chip's row.
            - temperature: dataset section (default t_ref).
            - workers: worker threads, one hold-out per task.
            - budget: CTW memory guard.
    """
    if dataset.n_chips < 2:
        raise DataError('CTW needs at least 2 chips, dataset has {}.'.format(dataset.n_chips))
    depths = sorted(set(depths))
    if not depths:
        raise ValueError('At least one depth is required.')
    rows = build_bit_matrix(dataset, stage, 'single', repeat, temperature).rows

    def held_out(chip):
        def task():
            context = concatenate([rows[other] for other in range(len(rows)) if other != chip])
            lengths = ctw_codeword_lengths(context, rows[chip], depths[-1], budget)
            return int(min(lengths[depth] for depth in depths))
        return task

    lengths = TaskCoordinator(workers).run([held_out(chip) for chip in range(len(rows))])
    return float(mean(lengths)), lengths

class EntropyReport(object):
    """ Entropy estimates of one PUF class. Estimates not computed are nan.

        Attributes:
            - n_nodes (int), class_id (str), mode (str), stage (int), n_columns (int).
            - h_min (float), rho_min (float), h_min_log2 (float).
            - h_joint (float), rho_joint (float), penalty (float).
            - h_ctw (float).
    """
    def __init__(self, n_nodes: int, class_id: str, mode: str, stage: int, n_columns: int):
        self.n_nodes = n_nodes
        self.class_id = class_id
        self.mode = mode
        self.stage = stage
        self.n_columns = n_columns
        self.h_min = nan
        self.rho_min = nan
        self.h_min_log2 = nan
        self.h_joint = nan
        self.rho_joint = nan
        self.penalty = nan
        self.h_ctw = nan

    @property
    def extrapolated(self) -> bool:
        return self.mode == 'sampled'

    def row(self) -> list:
        return [self.n_nodes, self.class_id, self.h_min_log2, self.rho_min, self.h_joint,
                self.rho_joint, self.h_ctw, self.mode]

ESTIMATORS = ['min', 'joint', 'ctw']
REPORT_HEADER = ['N', 'class_id', 'H_min_bits_log2', 'rho_min', 'H_joint_bits', 'rho_joint',
                 'H_ctw_bits', 'mode']

def entropy_report(dataset, stage: int, class_id: str = '0', estimators=('min',),
                   vote: str = 'majority', restarts: int = DEFAULT_RESTARTS, seed: int = 0,
                   depths=range(0, MAX_DEPTH + 1), temperature: float = None,
                   workers: int = 1) -> EntropyReport:
    """ Run the chosen estimators on one class.

        Args:
            - dataset: CRPDataset of the class.
            - stage: 1-based stage.
            - class_id: label of the class in exports.
            - estimators: any of 'min', 'joint', 'ctw'.
            - vote: repeat reduction for min and joint entropy.
            - restarts: 2-opt starts.
            - seed: 2-opt seed.
            - depths: CTW depths.
            - temperature: dataset section (default t_ref).
            - workers: CTW worker threads.
    """
    for estimator in estimators:
        if not estimator in ESTIMATORS:
            raise ValueError("The estimator {} doesn't exist".format(estimator))
    matrix = build_bit_matrix(dataset, stage, vote, temperature=temperature)
    report = EntropyReport(dataset.n_nodes, class_id, matrix.mode, stage, matrix.n_columns)
    report.h_min, report.rho_min = h_min(matrix)
    report.h_min_log2 = h_min_log2(matrix, report.h_min)
    if 'joint' in estimators:
        report.h_joint, report.rho_joint, report.penalty, _ = h_joint(matrix, restarts, seed)
    if 'ctw' in estimators:
        report.h_ctw, _ = h_ctw(dataset, stage, depths, temperature=temperature,
                                workers=workers)
    LOGGER.info('Class %s: H_min %.3f, H_joint %.3f, H_ctw %.3f bits.', class_id,
                report.h_min, report.h_joint, report.h_ctw)
    return report

SUMMARY_FIELDS = ['h_min', 'rho_min', 'h_joint', 'rho_joint', 'h_ctw']

def summarize_classes(reports: list) -> dict:
    """ Mean and standard deviation of every estimate over classes.

        Returns {field: (mean, std)}, nan where no class has the estimate.
    """
    if not reports:
        raise ValueError('No reports to summarize.')
    summary = {}
    for field in SUMMARY_FIELDS:
        values = asarray([getattr(report, field) for report in reports], dtype=float64)
        values = values[isfinite(values)]
        summary[field] = (float(values.mean()), float(std(values))) if values.size else (nan, nan)
    return summary

def export_reports(reports: list, path: str, source_hash: str = ''):
    """ entropy_report.csv: one row per class. """
    write_csv(path, REPORT_HEADER, [report.row() for report in reports], source_hash)

def export_summary(summary: dict, n_classes: int, path: str, source_hash: str = ''):
    """ entropy_summary.csv: mean and std of each estimate over classes. """
    rows = [[field, summary[field][0], summary[field][1], n_classes] for field in SUMMARY_FIELDS]
    write_csv(path, ['quantity', 'mean', 'std', 'n_classes'], rows, source_hash)
