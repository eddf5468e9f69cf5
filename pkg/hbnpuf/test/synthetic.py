""" Synthetic datasets for analysis tests, built without running the simulator. """
from numpy import asarray, uint8, zeros, ones
from hbnpuf.configuration import PhysicsConfig
from hbnpuf.harness import LAYOUT, FORMAT_VERSION, CRPDataset, enumerate_valid_challenges
from hbnpuf.simulator import challenge_label

def make_dataset(responses, challenges: list = None, stages: list = None,
                 temperatures: list = None, trivial=None, mode: str = 'exhaustive',
                 chip_seeds: list = None) -> CRPDataset:
    """ Wrap a (temperature, chip, challenge, repeat, stage, node) bit array as a dataset.

        Args:
            - responses: bits over the valid challenges.
            - challenges: challenge labels (default: the first valid challenges in order).
            - stages: 1-based stages (default 1..S).
            - temperatures: section temperatures (default [20.0]).
            - trivial: bits of the trivial challenges (default: perfect fixed points).
            - mode: challenge mode recorded in the protocol.
            - chip_seeds: recorded chip seeds (default 0..P-1).
    """
    responses = asarray(responses, dtype=uint8)
    n_temps, n_chips, n_challenges, n_repeats, n_stages, n_nodes = responses.shape
    if challenges is None:
        challenges = [challenge_label(challenge)
                      for challenge in enumerate_valid_challenges(n_nodes)[:n_challenges]]
    stages = list(range(1, n_stages + 1)) if stages is None else stages
    temperatures = [20.0] if temperatures is None else temperatures
    if trivial is None:
        trivial = zeros((n_temps, n_chips, 2, n_repeats, n_stages, n_nodes), dtype=uint8)
        trivial[:, :, 1] = 1
    trivial = asarray(trivial, dtype=uint8)
    manifest = {
        'format_version': FORMAT_VERSION,
        'role': 'enrollment',
        'topology': {'n': n_nodes, 'seed': 0, 'strict': False,
                     'in_edges': [[(node + step) % n_nodes for step in (1, 2, 3)]
                                  for node in range(n_nodes)]},
        'physics': PhysicsConfig().to_dict(),
        'protocol': {'n_challenges': n_challenges, 'n_repeats': n_repeats,
                     'challenge_mode': mode, 'sample_seed': 0, 'stages': stages,
                     'temperatures': temperatures, 'noise_seed': 0, 'role': 'enrollment'},
        'chip_seeds': list(range(n_chips)) if chip_seeds is None else chip_seeds,
        'temperatures': temperatures,
        'stages': stages,
        'challenges': challenges,
        'trivial_challenges': ['0' * n_nodes, '1' * n_nodes],
        'capture_times': [[[0.5 * stage for stage in stages] for _ in range(n_chips)]
                          for _ in temperatures],
        'layout': {'order': LAYOUT, 'bit_order': 'little',
                   'responses_shape': list(responses.shape),
                   'trivial_shape': list(trivial.shape)},
    }
    return CRPDataset(manifest, responses, trivial)

def constant_responses(shape, value: int = 0):
    """ Every bit of every response equal to value. """
    return (ones(shape) * value).astype(uint8)
