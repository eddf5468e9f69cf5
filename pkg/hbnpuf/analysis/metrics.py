""" METRICS MODULE
    Reliability and uniqueness of a PUF class from its collected responses.

    Intra-device distances compare repeats of the same chip, inter-device distances
    compare chips at the same repeat index. Both are fractional Hamming distances
    averaged over all unordered pairs, computed from per-bit ones counts: among k ones
    in n samples exactly k * (n - k) pairs disagree.

    INPUTS:
        CRPDataset (optionally a reference dataset and a HelperMask).

    OUTPUTS:
        mu_intra(t), mu_inter(t), delta_mu(t), t_opt, per challenge and per chip tables,
        histograms, CSV exports.
"""
import logging
from numpy import (asarray, argmax, histogram, linspace, nan, uint8, zeros, float64,
                   count_nonzero, errstate)
from scipy.stats import sem
from hbnpuf.errors import DataError
from hbnpuf.exporter import write_csv
from hbnpuf.harness import majority_vote

LOGGER = logging.getLogger(__name__)

def hamming(first, second) -> tuple:
    """ Hamming distance D and fractional distance d = D / N of two bit strings.

        Args:
            - first: bit string or bit array.
            - second: bit string or bit array of the same length.
    """
    first = _bits(first)
    second = _bits(second)
    if first.shape != second.shape:
        raise ValueError('Bit strings differ in length: {} vs {}.'.format(first.size, second.size))
    if first.size == 0:
        raise ValueError('Cannot compare empty bit strings.')
    distance = int(count_nonzero(first ^ second))
    return distance, distance / first.size

def _bits(value):
    if isinstance(value, str):
        return asarray([int(char) for char in value], dtype=uint8)
    return asarray(value, dtype=uint8)

def _pair_distance(ones, samples: int, n_nodes: int):
    """ Mean fractional distance over all unordered sample pairs, from ones counts.

        Args:
            - ones: ones count per bit, the last axis runs over nodes.
            - samples: number of samples the counts were taken over.
            - n_nodes: bits per response.
    """
    ones = asarray(ones, dtype=float64)
    pairs = samples * (samples - 1) / 2
    return (ones * (samples - ones)).sum(axis=-1) / (pairs * n_nodes)

def _section(dataset, stage: int, temperature: float):
    """ (chip, challenge, repeat, node) responses of one stage and temperature. """
    t_index = dataset.temperature_index(temperature)
    return dataset.section(t_index, dataset.stage_index(stage))

def per_chip_reliability(dataset, stage: int, temperature: float = None):
    """ Intra-device distance r_p(c) of every chip and challenge, shape (chips, challenges).

        Args:
            - dataset: CRPDataset with at least 2 repeats.
            - stage: 1-based delay-line stage.
            - temperature: dataset section (default t_ref).
    """
    if dataset.n_repeats < 2:
        raise DataError('Reliability needs at least 2 repeats, dataset has {}.'
                        .format(dataset.n_repeats))
    ones = _section(dataset, stage, temperature).sum(axis=2, dtype=int)
    return _pair_distance(ones, dataset.n_repeats, dataset.n_nodes)

def reliability_per_challenge(dataset, stage: int, temperature: float = None):
    """ Intra-device distance r(c): over repeat pairs, then over chips.

        Args:
            - dataset: CRPDataset with at least 2 repeats.
            - stage: 1-based delay-line stage.
            - temperature: dataset section (default t_ref).
    """
    return per_chip_reliability(dataset, stage, temperature).mean(axis=0)

def uniqueness_per_challenge(dataset, stage: int, temperature: float = None):
    """ Inter-device distance u(c): over chip pairs at matched repeats, then over repeats.

        Args:
            - dataset: CRPDataset with at least 2 chips.
            - stage: 1-based delay-line stage.
            - temperature: dataset section (default t_ref).
    """
    if dataset.n_chips < 2:
        raise DataError('Uniqueness needs at least 2 chips, dataset has {}.'
                        .format(dataset.n_chips))
    ones = _section(dataset, stage, temperature).sum(axis=0, dtype=int)
    return _pair_distance(ones, dataset.n_chips, dataset.n_nodes).mean(axis=-1)

class MuCurves(object):
    """ Challenge averaged distances per delay-line stage at one temperature.

        Attributes:
            - temperature (float): section the curves were computed on.
            - stages (list): 1-based stages.
            - times (ndarray): mean capture time of each stage over chips, ns.
            - mu_intra (ndarray), mu_inter (ndarray), delta_mu (ndarray): per stage.
            - t_opt_index (int): position of the earliest stage attaining max delta_mu.
    """
    def __init__(self, temperature, stages, times, mu_intra, mu_inter):
        self.temperature = temperature
        self.stages = stages
        self.times = times
        self.mu_intra = mu_intra
        self.mu_inter = mu_inter
        self.delta_mu = mu_inter - mu_intra
        self.t_opt_index = int(argmax(self.delta_mu))

    @property
    def t_opt_stage(self) -> int:
        return self.stages[self.t_opt_index]

    @property
    def t_opt_ns(self) -> float:
        return float(self.times[self.t_opt_index])

def mu_curves(dataset, temperature: float = None) -> MuCurves:
    """ mu_intra(t), mu_inter(t) and delta_mu(t) over every collected stage.

        Args:
            - dataset: CRPDataset with at least 2 chips and 2 repeats.
            - temperature: dataset section (default t_ref).
    """
    t_index = dataset.temperature_index(temperature)
    stages = dataset.stages
    mu_intra = zeros(len(stages))
    mu_inter = zeros(len(stages))
    for s_index, stage in enumerate(stages):
        mu_intra[s_index] = reliability_per_challenge(dataset, stage, temperature).mean()
        mu_inter[s_index] = uniqueness_per_challenge(dataset, stage, temperature).mean()
    times = dataset.capture_times[t_index].mean(axis=0)
    curves = MuCurves(dataset.temperatures[t_index], stages, times, mu_intra, mu_inter)
    LOGGER.info('t_opt at stage %d (%.3f ns) for %.1f C: delta_mu %.4f.', curves.t_opt_stage,
                curves.t_opt_ns, curves.temperature, curves.delta_mu[curves.t_opt_index])
    return curves

def _check_coverage(query, reference):
    for key in ('topology', 'chip_seeds', 'challenges'):
        if query.manifest[key] != reference.manifest[key]:
            raise DataError('Query and reference datasets differ in {}.'.format(key))
    if query.manifest['physics'] != reference.manifest['physics']:
        raise DataError('Query and reference datasets were collected with different physics.')

def mu_vs_reference(query, reference, mask=None, reference_temperature: float = None):
    """ Distance of every query repeat to the enrollment majority response.

        Returns (stages, curves) where curves has shape (temperature, chip, stage):
        the challenge and repeat averaged fractional distance per chip. With a mask only
        the kept bits are compared, responses whose mask keeps nothing are skipped.

        Args:
            - query: CRPDataset to evaluate, any temperatures.
            - reference: enrollment CRPDataset of the same chips and challenges.
            - mask: optional HelperMask cherry picked from the reference.
            - reference_temperature: enrollment section (default t_ref).
    """
    _check_coverage(query, reference)
    stages = mask.stages if mask is not None else query.stages
    r_t_index = reference.temperature_index(reference_temperature)
    n_temps = len(query.temperatures)
    curves = zeros((n_temps, query.n_chips, len(stages)))
    for s_pos, stage in enumerate(stages):
        q_index = query.stage_index(stage)
        enrolled = majority_vote(reference.section(r_t_index, reference.stage_index(stage)),
                                 axis=2)
        empty_chips = set()
        if mask is not None:
            for chip in range(query.n_chips):
                if not mask.keep[chip, :, s_pos].any():
                    LOGGER.warning('Mask keeps no bits for chip %d at stage %d.', chip, stage)
                    empty_chips.add(chip)
        for t_index in range(n_temps):
            wrong = query.section(t_index, q_index) ^ enrolled[:, :, None, :]
            for chip in range(query.n_chips):
                if mask is None:
                    curves[t_index, chip, s_pos] = wrong[chip].mean()
                    continue
                if chip in empty_chips:
                    curves[t_index, chip, s_pos] = nan
                    continue
                keep = mask.keep[chip, :, s_pos]
                kept = keep.sum(axis=-1)
                flips = (wrong[chip] & keep[:, None, :]).sum(axis=-1)
                with errstate(invalid='ignore', divide='ignore'):
                    fractions = flips / kept[:, None]
                curves[t_index, chip, s_pos] = fractions[kept > 0].mean()
    return stages, curves

def bit_histogram(values, n_nodes: int) -> tuple:
    """ Histogram of fractional distances with one bin per bit, on [0, 1].

        Returns (edges, counts).

        Args:
            - values: distances per challenge.
            - n_nodes: bits per response, sets the bin width 1/N.
    """
    edges = linspace(0.0, 1.0, n_nodes + 1)
    counts, _ = histogram(asarray(values, dtype=float64), bins=edges)
    return edges, counts

def spread(values) -> dict:
    """ Mean, standard deviation and standard error of per-challenge values. """
    values = asarray(values, dtype=float64)
    if values.size < 2:
        return {'mean': float(values.mean()), 'std_dev': 0.0, 'std_err': 0.0}
    return {'mean': float(values.mean()), 'std_dev': float(values.std(ddof=1)),
            'std_err': float(sem(values))}

class MetricsReport(object):
    """ Everything the metrics command exports for one PUF class.

        Attributes:
            - curves (list): MuCurves per temperature section.
            - reference (MuCurves): curves at t_ref, they fix t_opt for the class.
            - reliability (ndarray): r(c) at t_opt.
            - uniqueness (ndarray): u(c) at t_opt.
            - per_chip (ndarray): r_p(c) at t_opt, shape (chips, challenges).
            - delta_mu_at_t_opt (dict): delta_mu at the class t_opt for each temperature.
            - intra_spread (dict), inter_spread (dict): mean, std_dev and std_err over challenges.
            - histogram (tuple): (edges, intra counts, inter counts).
    """
    def __init__(self, curves, reference, reliability, uniqueness, per_chip, n_nodes):
        self.curves = curves
        self.reference = reference
        self.reliability = reliability
        self.uniqueness = uniqueness
        self.per_chip = per_chip
        self.delta_mu_at_t_opt = {entry.temperature: float(entry.delta_mu[reference.t_opt_index])
                                  for entry in curves}
        self.intra_spread = spread(reliability)
        self.inter_spread = spread(uniqueness)
        edges, intra_counts = bit_histogram(reliability, n_nodes)
        _, inter_counts = bit_histogram(uniqueness, n_nodes)
        self.histogram = (edges, intra_counts, inter_counts)

    @property
    def t_opt_stage(self) -> int:
        return self.reference.t_opt_stage

    @property
    def t_opt_ns(self) -> float:
        return self.reference.t_opt_ns

def analyze(dataset) -> MetricsReport:
    """ Curves at every temperature, t_opt once for the class, tables at t_opt.

        Args:
            - dataset: CRPDataset with at least 2 chips and 2 repeats.
    """
    curves = [mu_curves(dataset, temperature) for temperature in dataset.temperatures]
    reference = curves[dataset.temperature_index()]
    stage = reference.t_opt_stage
    temperature = reference.temperature
    return MetricsReport(curves, reference,
                         reliability_per_challenge(dataset, stage, temperature),
                         uniqueness_per_challenge(dataset, stage, temperature),
                         per_chip_reliability(dataset, stage, temperature), dataset.n_nodes)

def export_mu_curves(report: MetricsReport, path: str, source_hash: str = ''):
    """ mu_curves.csv: one row per (temperature, stage), the class t_opt row is flagged. """
    rows = []
    for entry in report.curves:
        for s_index, stage in enumerate(entry.stages):
            rows.append([stage, float(entry.times[s_index]), float(entry.mu_intra[s_index]),
                         float(entry.mu_inter[s_index]), float(entry.delta_mu[s_index]),
                         entry.temperature, int(s_index == report.reference.t_opt_index)])
    write_csv(path, ['stage', 't_ns', 'mu_intra', 'mu_inter', 'delta_mu', 'temperature_c',
                     'is_t_opt'], rows, source_hash)

def export_histogram(report: MetricsReport, path: str, source_hash: str = ''):
    """ hist.csv: per-challenge r(c) and u(c) at t_opt, binned one bit wide. """
    edges, intra_counts, inter_counts = report.histogram
    rows = [[float(edges[index]), float(edges[index + 1]), int(intra_counts[index]),
             int(inter_counts[index])] for index in range(len(intra_counts))]
    write_csv(path, ['bin_lo', 'bin_hi', 'intra_count', 'inter_count'], rows, source_hash)

def export_per_chip(report: MetricsReport, path: str, source_hash: str = ''):
    """ per_chip.csv: mean reliability of each chip at t_opt. """
    rows = [[chip, float(values.mean())] for chip, values in enumerate(report.per_chip)]
    write_csv(path, ['chip', 'mu_intra'], rows, source_hash)

def export_summary(report: MetricsReport, path: str, source_hash: str = ''):
    """ metrics_summary.csv: t_opt, error bar estimators and delta_mu per temperature. """
    rows = [['t_opt_stage', report.t_opt_stage], ['t_opt_ns', report.t_opt_ns]]
    for label, values in (('mu_intra', report.intra_spread), ('mu_inter', report.inter_spread)):
        for key in ('mean', 'std_dev', 'std_err'):
            rows.append(['{}_{}'.format(label, key), values[key]])
    for temperature, value in sorted(report.delta_mu_at_t_opt.items()):
        rows.append(['delta_mu_at_t_opt_{}C'.format(temperature), value])
    write_csv(path, ['quantity', 'value'], rows, source_hash)
