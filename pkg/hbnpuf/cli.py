""" COMMAND LINE MODULE

    One subcommand per pipeline stage, each reading and writing files:

        gen          topology JSON
        collect      <out>.manifest.json + <out>.crp.bin, prints the glitch verdict
        metrics      mu_curves.csv, hist.csv, per_chip.csv, metrics_summary.csv (+ reference.csv)
        entropy      entropy_report.csv, entropy_summary.csv
        sensitivity  sensitivity_report.csv
        cherry       <out>.mask.json + <out>.mask.bin, stable_bits.csv
        export-hdl   <out>_abn.v, <out>_tdl.v

    Exit codes: 0 success, 1 usage, 2 data error, 3 infeasible analysis.
    Negative temperatures need the '=' form: --temps=-20,0,20,40
"""
import argparse
import hashlib
import logging
import os
import sys
from hbnpuf.configuration import PhysicsConfig
from hbnpuf.errors import HbnPufError, InfeasibleAnalysisError
from hbnpuf.harness import (QueryProtocol, CRPDataset, HelperMask, collect, glitch_check,
                            cherry_pick, DEFAULT_CHIPS, DEFAULT_REPEATS, DEFAULT_SAMPLED,
                            DEFAULT_THRESHOLD, EXHAUSTIVE_LIMIT)
from hbnpuf.hbnpuf import configure_logging, MODES
from hbnpuf.hdl import export_hdl
from hbnpuf.physics import sample_chip
from hbnpuf.simulator import derive_seed
from hbnpuf.topology import NetworkTopology, generate_topology, find_fixed_points_bruteforce
from hbnpuf.analysis import metrics, entropy, sensitivity
from hbnpuf.exporter import write_csv

LOGGER = logging.getLogger(__name__)

FIXED_POINT_REPORT_LIMIT = 20

class UsageError(Exception):
    """ Raised instead of exiting when the command line can't be parsed. """

class ArgumentParser(argparse.ArgumentParser):
    """ argparse parser reporting usage errors as exceptions, mapped to exit code 1. """
    def error(self, message):
        raise UsageError('{}\n{}'.format(self.format_usage().strip(), message))

def parse_int_list(text: str) -> list:
    """ '1,4,8-12' -> [1, 4, 8, 9, 10, 11, 12] """
    values = []
    for part in text.split(','):
        if '-' in part.strip()[1:]:
            start, end = part.strip().split('-', 1)
            values.extend(range(int(start), int(end) + 1))
        else:
            values.append(int(part))
    return values

def parse_temperatures(text: str) -> list:
    """ '-20,0,20,40' -> [-20.0, 0.0, 20.0, 40.0] """
    return [float(part) for part in text.split(',')]

def parse_targets(text: str) -> list:
    """ '0,5,xor' -> [0, 5, 'xor'] """
    return [part if part == sensitivity.XOR_ALL else int(part) for part in text.split(',')]

def file_hash(path: str) -> str:
    with open(path, 'rb') as input_file:
        return hashlib.sha256(input_file.read()).hexdigest()

def chip_seeds(seed: int, count: int) -> list:
    """ Independent chip seeds derived from one class seed. """
    return [derive_seed(seed, 'chip', chip) for chip in range(count)]

def _out_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path

def _default_stage(dataset: CRPDataset, stage: int) -> int:
    if stage is not None:
        return stage
    if dataset.n_chips < 2 or dataset.n_repeats < 2:
        raise UsageError('--stage is required when t_opt cannot be computed '
                         '(fewer than 2 chips or 2 repeats).')
    return metrics.mu_curves(dataset).t_opt_stage

def cmd_gen(args) -> int:
    """ Generate a topology file. """
    topology = generate_topology(args.n, args.seed, args.strict)
    topology.save(args.out)
    print('Topology written to {}'.format(args.out))
    if args.n <= FIXED_POINT_REPORT_LIMIT:
        fixed = find_fixed_points_bruteforce(topology)
        print('Fixed points: {}'.format(len(fixed)))
    return 0

def cmd_collect(args) -> int:
    """ Collect an enrollment or query dataset. """
    topology = NetworkTopology.load(args.topology)
    config = PhysicsConfig.from_file(args.config) if args.config else PhysicsConfig()
    if args.sample is None and topology.n_nodes > EXHAUSTIVE_LIMIT:
        raise InfeasibleAnalysisError('N={} is too large for exhaustive challenges, '
                                      'use --sample (default {} challenges).'
                                      .format(topology.n_nodes, DEFAULT_SAMPLED))
    protocol = QueryProtocol(
        n_challenges=args.sample or DEFAULT_SAMPLED, n_repeats=args.repeats,
        challenge_mode='sampled' if args.sample else 'exhaustive',
        sample_seed=args.chip_seed if args.sample_seed is None else args.sample_seed,
        stages=args.stages, temperatures=args.temps, noise_seed=args.seed, role=args.role)
    dataset = collect(topology, config, chip_seeds(args.chip_seed, args.chips), protocol,
                      args.workers)
    dataset.save(args.out)
    report = glitch_check(dataset)
    print('Dataset written to {}.manifest.json'.format(args.out))
    print('Glitch check: {}'.format('pass' if report.passed else
                                    'FAIL ({} snapshots)'.format(report.violations)))
    for evidence in report.evidence[:10]:
        print('    {}'.format(evidence))
    return 0

def cmd_metrics(args) -> int:
    """ Reliability and uniqueness exports. """
    dataset = CRPDataset.load(args.dataset)
    source = dataset.manifest_hash()
    directory = _out_dir(args.out)
    report = metrics.analyze(dataset)
    metrics.export_mu_curves(report, os.path.join(directory, 'mu_curves.csv'), source)
    metrics.export_histogram(report, os.path.join(directory, 'hist.csv'), source)
    metrics.export_per_chip(report, os.path.join(directory, 'per_chip.csv'), source)
    metrics.export_summary(report, os.path.join(directory, 'metrics_summary.csv'), source)
    print('t_opt: stage {} ({:.3f} ns), mu_intra {:.4f}, mu_inter {:.4f}'.format(
        report.t_opt_stage, report.t_opt_ns, report.intra_spread['mean'],
        report.inter_spread['mean']))
    if args.reference:
        reference = CRPDataset.load(args.reference)
        mask = HelperMask.load(args.mask) if args.mask else None
        stages, raw = metrics.mu_vs_reference(dataset, reference)
        rows = []
        if mask is not None:
            masked_stages, masked = metrics.mu_vs_reference(dataset, reference, mask)
        for t_index, temperature in enumerate(dataset.temperatures):
            for s_index, stage in enumerate(stages):
                value = ''
                if mask is not None and stage in masked_stages:
                    value = float(masked[t_index, :, masked_stages.index(stage)].mean())
                rows.append([temperature, stage, float(raw[t_index, :, s_index].mean()), value])
        sources = ','.join([source, reference.manifest_hash()] +
                           ([mask.source_hash] if mask is not None else []))
        write_csv(os.path.join(directory, 'reference.csv'),
                  ['temperature_c', 'stage', 'mu_intra_ref', 'mu_intra_ref_masked'],
                  rows, sources)
    return 0

def cmd_entropy(args) -> int:
    """ Entropy report over one or more PUF classes. """
    estimators = entropy.ESTIMATORS if args.mode == 'all' else [args.mode]
    if args.max_depth > entropy.MAX_DEPTH:
        raise UsageError('--max-depth is at most {}.'.format(entropy.MAX_DEPTH))
    reports = []
    sources = []
    for class_id, prefix in enumerate(args.dataset):
        dataset = CRPDataset.load(prefix)
        sources.append(dataset.manifest_hash())
        reports.append(entropy.entropy_report(
            dataset, _default_stage(dataset, args.stage), str(class_id), estimators,
            args.vote, args.restarts, args.seed, range(0, args.max_depth + 1),
            workers=args.workers))
    directory = _out_dir(args.out)
    source = ','.join(sources)
    entropy.export_reports(reports, os.path.join(directory, 'entropy_report.csv'), source)
    entropy.export_summary(entropy.summarize_classes(reports), len(reports),
                           os.path.join(directory, 'entropy_summary.csv'), source)
    for report in reports:
        print('class {}: H_min {:.3f} bits (rho {:.3f}), H_joint {:.3f}, H_ctw {:.3f}'.format(
            report.class_id, report.h_min, report.rho_min, report.h_joint, report.h_ctw))
    return 0

def cmd_sensitivity(args) -> int:
    """ Sensitivity of response bits of one chip of a dataset's class. """
    dataset = CRPDataset.load(args.dataset)
    if not 0 <= args.chip < dataset.n_chips:
        raise UsageError('--chip must lie in 0..{}.'.format(dataset.n_chips - 1))
    config = dataset.config
    chip = sample_chip(dataset.topology, config, dataset.manifest['chip_seeds'][args.chip],
                       args.chip)
    reports = sensitivity.sensitivity_report(
        chip, config, args.stage, args.targets, args.epsilon, args.samples, args.seed,
        args.exact)
    directory = _out_dir(args.out)
    sensitivity.export_reports(reports, os.path.join(directory, 'sensitivity_report.csv'),
                               dataset.manifest_hash())
    return 0

def cmd_cherry(args) -> int:
    """ Cherry pick stable bits from an enrollment dataset. """
    dataset = CRPDataset.load(args.dataset)
    mask = cherry_pick(dataset, args.threshold, args.stage)
    mask.save(args.out)
    t_index = dataset.temperature_index(mask.temperature)
    times = dataset.capture_times[t_index].mean(axis=0)
    counts = mask.stable_bits()
    rows = [[stage, float(times[dataset.stage_index(stage)]), float(counts[index])]
            for index, stage in enumerate(mask.stages)]
    write_csv(args.out + '_stable_bits.csv', ['stage', 't_ns', 'stable_bits'], rows,
              mask.source_hash)
    print('Mask written to {}.mask.json'.format(args.out))
    return 0

def cmd_export_hdl(args) -> int:
    """ Emit the network and delay-line HDL of a class. """
    if args.dataset:
        dataset = CRPDataset.load(args.dataset)
        topology, m_stages = dataset.topology, dataset.config.get_config('m_stages')
        source = dataset.manifest_hash()
    else:
        topology = NetworkTopology.load(args.topology)
        m_stages = PhysicsConfig().get_config('m_stages')
        source = file_hash(args.topology)
    if args.m_stages is not None:
        m_stages = args.m_stages
    export_hdl(topology, m_stages, source).save(args.out)
    return 0

def build_parser() -> ArgumentParser:
    """ Parser with one subparser per pipeline stage. """
    parser = ArgumentParser(
        prog='hbnpuf',
        description="Simulate and analyse hybrid Boolean network PUFs.")
    parser.add_argument("--log-level", help="Console logging level.", choices=MODES,
                        default='WARNING')
    parser.add_argument("--log-file", help="File receiving the full debug log.", default=None)
    commands = parser.add_subparsers(dest='command', required=True)

    ##--- gen ---##
    gen = commands.add_parser('gen', help="Generate a random 3-in-regular topology.")
    gen.add_argument("--n", help="Number of nodes (>= 4).", type=int, required=True)
    gen.add_argument("--seed", help="Topology seed.", type=int, required=True)
    gen.add_argument("--strict", help="Force every out-degree to 3.", action='store_true')
    gen.add_argument("--out", help="Topology file.", default='topology.json')
    gen.set_defaults(func=cmd_gen)

    ##--- collect ---##
    col = commands.add_parser('collect', help="Collect a CRP dataset.")
    col.add_argument("--topology", help="Topology file.", required=True)
    col.add_argument("--config", help="Physics config JSON.", default=None)
    col.add_argument("--chip-seed", help="Class seed the chip seeds derive from.",
                     type=int, required=True)
    col.add_argument("--seed", help="Campaign seed driving the timing noise.",
                     type=int, required=True)
    col.add_argument("--chips", help="Number of chips.", type=int, default=DEFAULT_CHIPS)
    col.add_argument("--repeats", help="Repeats per challenge.", type=int,
                     default=DEFAULT_REPEATS)
    col.add_argument("--sample", help="Sample this many valid challenges (default {})."
                     .format(DEFAULT_SAMPLED), type=int, nargs='?', const=DEFAULT_SAMPLED,
                     default=None)
    col.add_argument("--sample-seed", help="Challenge sampling seed (default: --chip-seed).",
                     type=int, default=None)
    col.add_argument("--stages", help="Stages to keep, e.g. 1-8,16.", type=parse_int_list,
                     default=None)
    col.add_argument("--temps", help="Temperatures in C, e.g. --temps=-20,0,20,40.",
                     type=parse_temperatures, default=[20.0])
    col.add_argument("--role", help="Dataset role.", choices=['enrollment', 'query'],
                     default='enrollment')
    col.add_argument("--workers", help="Worker threads.", type=int, default=1)
    col.add_argument("--out", help="Dataset prefix.", default='dataset')
    col.set_defaults(func=cmd_collect)

    ##--- metrics ---##
    met = commands.add_parser('metrics', help="Reliability / uniqueness curves.")
    met.add_argument("--dataset", help="Dataset prefix.", required=True)
    met.add_argument("--reference", help="Enrollment dataset prefix.", default=None)
    met.add_argument("--mask", help="Helper mask prefix (needs --reference).", default=None)
    met.add_argument("--out", help="Output directory.", default='metrics')
    met.set_defaults(func=cmd_metrics)

    ##--- entropy ---##
    ent = commands.add_parser('entropy', help="Entropy estimates.")
    ent.add_argument("--dataset", help="Dataset prefix, one per PUF class.", nargs='+',
                     required=True)
    ent.add_argument("--mode", help="Estimator.", choices=['min', 'joint', 'ctw', 'all'],
                     default='min')
    ent.add_argument("--stage", help="Stage (default: t_opt).", type=int, default=None)
    ent.add_argument("--vote", help="Repeat reduction.", choices=entropy.VOTES,
                     default='majority')
    ent.add_argument("--seed", help="2-opt seed.", type=int, default=0)
    ent.add_argument("--restarts", help="2-opt starts.", type=int,
                     default=entropy.DEFAULT_RESTARTS)
    ent.add_argument("--max-depth", help="Largest CTW depth.", type=int,
                     default=entropy.MAX_DEPTH)
    ent.add_argument("--workers", help="Worker threads for CTW hold-outs.", type=int, default=1)
    ent.add_argument("--out", help="Output directory.", default='entropy')
    ent.set_defaults(func=cmd_entropy)

    ##--- sensitivity ---##
    sen = commands.add_parser('sensitivity', help="Boolean sensitivity of response bits.")
    sen.add_argument("--dataset", help="Dataset prefix (topology, physics, chips).",
                     required=True)
    sen.add_argument("--chip", help="Chip index.", type=int, default=0)
    sen.add_argument("--stage", help="Stage, 0 reads the state at release.", type=int,
                     required=True)
    sen.add_argument("--targets", help="Node indices and/or xor, e.g. 0,3,xor.",
                     type=parse_targets, default=[0, sensitivity.XOR_ALL])
    sen.add_argument("--epsilon", help="Noise sensitivity flip probability.", type=float,
                     default=sensitivity.DEFAULT_EPSILON)
    sen.add_argument("--samples", help="Monte Carlo samples.", type=int,
                     default=sensitivity.DEFAULT_SAMPLES)
    sen.add_argument("--seed", help="Sampling seed.", type=int, required=True)
    sen.add_argument("--exact", help="Enumerate all challenges (N <= 12).",
                     action='store_true')
    sen.add_argument("--out", help="Output directory.", default='sensitivity')
    sen.set_defaults(func=cmd_sensitivity)

    ##--- cherry ---##
    che = commands.add_parser('cherry', help="Cherry pick stable bits.")
    che.add_argument("--dataset", help="Enrollment dataset prefix.", required=True)
    che.add_argument("--threshold", help="Highest enrollment flip rate kept.", type=float,
                     default=DEFAULT_THRESHOLD)
    che.add_argument("--stage", help="Restrict to one stage.", type=int, default=None)
    che.add_argument("--out", help="Mask prefix.", default='helper')
    che.set_defaults(func=cmd_cherry)

    ##--- export-hdl ---##
    hdl = commands.add_parser('export-hdl', help="Emit Verilog for a class.")
    source = hdl.add_mutually_exclusive_group(required=True)
    source.add_argument("--topology", help="Topology file.")
    source.add_argument("--dataset", help="Dataset prefix.")
    hdl.add_argument("--m-stages", help="Delay-line stages.", type=int, default=None)
    hdl.add_argument("--out", help="Output prefix.", default='hbn')
    hdl.set_defaults(func=cmd_export_hdl)
    return parser

def main(argv: list = None) -> int:
    """ Entry point, returns the process exit code. """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        configure_logging(args.log_level, args.log_file)
        return args.func(args)
    except UsageError as error:
        print(error, file=sys.stderr)
        return 1
    except HbnPufError as error:
        print('Error: {}'.format(error), file=sys.stderr)
        return error.exit_code
    except (ValueError, TypeError, KeyError) as error:
        print('Error: {}'.format(error), file=sys.stderr)
        return 1
    except OSError as error:
        print('Error: {}'.format(error), file=sys.stderr)
        return 2

if __name__ == '__main__':
    sys.exit(main())
