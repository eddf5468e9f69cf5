""" HBN-PUF EXPERIMENT RUNNER

    Runs the desk-scale versions of the class-level experiments end to end, printing
    the tables they produce and how long each took:

        curves       mu_intra(t), mu_inter(t), delta_mu(t) and t_opt of one class
        temperature  reliability against a 20 C enrollment, raw and cherry picked,
                     for delay-line and clocked readout
        entropy      H_min, H_joint and H_ctw over several small classes

    The pipeline commands themselves live in hbnpuf.cli (console script 'hbnpuf').
"""
import argparse
import time
from hbnpuf.configuration import PhysicsConfig
from hbnpuf.harness import QueryProtocol, collect, cherry_pick, glitch_check
from hbnpuf.hbnpuf import configure_logging
from hbnpuf.simulator import derive_seed
from hbnpuf.topology import generate_topology
from hbnpuf.analysis import metrics, entropy

PARSER = argparse.ArgumentParser(
    description="Run class-level HBN-PUF experiments on simulated chips."
    )

##--- PARSER ARGUMENTS ---##
PARSER.add_argument("experiment", help="Experiment to run.",
                    choices=['curves', 'temperature', 'entropy'])
PARSER.add_argument("-n", "--nodes", help="Network size N.", type=int, default=64)
PARSER.add_argument("-c", "--chips", help="Chips per class.", type=int, default=8)
PARSER.add_argument("-k", "--challenges", help="Sampled challenges.", type=int, default=200)
PARSER.add_argument("-r", "--repeats", help="Repeats per challenge.", type=int, default=20)
PARSER.add_argument("-s", "--seed", help="Seed of everything random.", type=int, default=1)
PARSER.add_argument("-w", "--workers", help="Worker threads.", type=int, default=1)
PARSER.add_argument("--classes", help="Classes per size (entropy).", type=int, default=3)
PARSER.add_argument("--log-level", help="Console logging level.", default='WARNING')

def chip_seeds(seed: int, count: int) -> list:
    return [derive_seed(seed, 'chip', chip) for chip in range(count)]

def sampled(args, **kwargs) -> QueryProtocol:
    mode = 'exhaustive' if args.nodes <= 8 else 'sampled'
    return QueryProtocol(n_challenges=args.challenges, n_repeats=args.repeats,
                         challenge_mode=mode, sample_seed=args.seed, **kwargs)

def run_curves(args):
    """ Delta mu curve of one class. """
    topology = generate_topology(args.nodes, args.seed)
    dataset = collect(topology, PhysicsConfig(), chip_seeds(args.seed, args.chips),
                      sampled(args, noise_seed=args.seed), args.workers)
    print('Glitch check: {}'.format('pass' if glitch_check(dataset).passed else 'FAIL'))
    curves = metrics.mu_curves(dataset)
    print('{:>5} {:>8} {:>9} {:>9} {:>9}'.format('stage', 't_ns', 'mu_intra', 'mu_inter',
                                                 'delta_mu'))
    for index, stage in enumerate(curves.stages):
        marker = ' <- t_opt' if index == curves.t_opt_index else ''
        print('{:>5} {:>8.3f} {:>9.4f} {:>9.4f} {:>9.4f}{}'.format(
            stage, curves.times[index], curves.mu_intra[index], curves.mu_inter[index],
            curves.delta_mu[index], marker))

def run_temperature(args):
    """ Query sets at other temperatures against a 20 C enrollment. """
    topology = generate_topology(args.nodes, args.seed)
    seeds = chip_seeds(args.seed, args.chips)
    for readout in ('delay_line', 'clock'):
        config = PhysicsConfig(readout=readout)
        enroll = collect(topology, config, seeds, sampled(args, noise_seed=args.seed),
                         args.workers)
        query = collect(topology, config, seeds,
                        sampled(args, noise_seed=args.seed + 1, role='query',
                                temperatures=[-20.0, 0.0, 20.0, 40.0]), args.workers)
        stage = metrics.mu_curves(enroll).t_opt_stage
        mask = cherry_pick(enroll, stage=stage)
        _, raw = metrics.mu_vs_reference(query, enroll)
        _, masked = metrics.mu_vs_reference(query, enroll, mask)
        index = enroll.stage_index(stage)
        print('{} readout, t_opt stage {}, {:.1f} stable bits'.format(
            readout, stage, mask.stable_bits()[0]))
        for t_index, temperature in enumerate(query.temperatures):
            print('    {:>6.1f} C: raw {:.4f}, cherry picked {:.4f}'.format(
                temperature, raw[t_index, :, index].mean(), masked[t_index, :, 0].mean()))

def run_entropy(args):
    """ Entropy estimates over several classes for N = 4..8. """
    print('{:>3} {:>6} {:>9} {:>8} {:>9} {:>8} {:>9}'.format(
        'N', 'class', 'H_min', 'rho_min', 'H_joint', 'rho_jnt', 'H_ctw'))
    for n in range(4, 9):
        reports = []
        for class_id in range(args.classes):
            seed = derive_seed(args.seed, n, class_id)
            topology = generate_topology(n, seed)
            dataset = collect(topology, PhysicsConfig(), chip_seeds(seed, args.chips),
                              QueryProtocol(n_repeats=args.repeats, noise_seed=seed),
                              args.workers)
            stage = metrics.mu_curves(dataset).t_opt_stage
            report = entropy.entropy_report(dataset, stage, str(class_id), entropy.ESTIMATORS,
                                            seed=seed, workers=args.workers)
            reports.append(report)
            print('{:>3} {:>6} {:>9.3f} {:>8.3f} {:>9.3f} {:>8.3f} {:>9.3f}'.format(
                n, class_id, report.h_min, report.rho_min, report.h_joint, report.rho_joint,
                report.h_ctw))
        summary = entropy.summarize_classes(reports)
        print('{:>3} {:>6} {:>9.3f} {:>8.3f} {:>9.3f} {:>8.3f} {:>9.3f}'.format(
            n, 'mean', *(summary[field][0] for field in entropy.SUMMARY_FIELDS)))

EXPERIMENTS = {'curves': run_curves, 'temperature': run_temperature, 'entropy': run_entropy}

def main():
    """ Run the chosen experiment and report its runtime. """
    args = PARSER.parse_args()
    configure_logging(args.log_level)
    print('Options used in this run are:')
    for key, value in args.__dict__.items():
        print('\t{}: {}'.format(key, value))
    start_time = time.time()
    EXPERIMENTS[args.experiment](args)
    print('Finished in {:.1f} s'.format(time.time() - start_time))

if __name__ == '__main__':
    main()
