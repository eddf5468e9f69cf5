""" TOPOLOGY MODULE
    Generates and analyses the random wiring that defines a PUF class.

    Every node XORs exactly three other nodes. In strict mode every node also
    feeds exactly three nodes (3-regular in and out).

    INPUTS:
        Node count, topology seed, strictness flag.

    OUTPUTS:
        NetworkTopology: the wiring diagram, and its synchronous fixed points.
"""
import json
import logging
from numpy import (array, arange, bincount, uint8, uint64, zeros, random, lexsort,
                   int64, asarray)
from hbnpuf.errors import UnsatisfiableRegularityError, InfeasibleAnalysisError

LOGGER = logging.getLogger(__name__)

IN_DEGREE = 3
MAX_RETRIES = 1000
FIXED_POINT_LIMIT = 20

class NetworkTopology(object):
    """ Immutable wiring diagram of an N-node, 3-input XOR network.

        Attributes:
            - n_nodes (int): number of nodes N.
            - in_edges (tuple): per node, an ordered triple of distinct source indices.
            - seed (int): topology seed it was generated from.
            - strict (bool): whether out-degrees were forced to 3.
    """
    def __init__(self, n_nodes: int, in_edges, seed: int, strict: bool):
        self.n_nodes = int(n_nodes)
        self.in_edges = tuple(tuple(int(source) for source in edges) for edges in in_edges)
        self.seed = int(seed)
        self.strict = bool(strict)
        validate_topology(self)

    def __eq__(self, other):
        return (isinstance(other, NetworkTopology) and self.n_nodes == other.n_nodes
                and self.seed == other.seed and self.strict == other.strict
                and self.in_edges == other.in_edges)

    def __hash__(self):
        return hash((self.n_nodes, self.seed, self.strict, self.in_edges))

    def __repr__(self):
        return 'NetworkTopology(n_nodes={}, seed={}, strict={})'.format(
            self.n_nodes, self.seed, self.strict)

    def sources(self):
        """ Source indices as an (N, 3) integer array. """
        return array(self.in_edges, dtype=int64).reshape(self.n_nodes, IN_DEGREE)

    def out_degrees(self):
        """ Number of nodes each node feeds. """
        return bincount(self.sources().ravel(), minlength=self.n_nodes)

    def fanout(self) -> list:
        """ For each source node, the (target node, input slot) pairs it drives. """
        fanout = [[] for _ in range(self.n_nodes)]
        for node, edges in enumerate(self.in_edges):
            for slot, source in enumerate(edges):
                fanout[source].append((node, slot))
        return fanout

    def to_dict(self) -> dict:
        """ JSON ready representation, node indices are 0-based. """
        return {'n': self.n_nodes, 'seed': self.seed, 'strict': self.strict,
                'in_edges': [list(edges) for edges in self.in_edges]}

    @classmethod
    def from_dict(cls, data: dict) -> 'NetworkTopology':
        """ Rebuild a topology from its JSON representation. """
        for key in ('n', 'seed', 'strict', 'in_edges'):
            if not key in data:
                raise KeyError('Topology is missing field {}.'.format(key))
        return cls(data['n'], data['in_edges'], data['seed'], data['strict'])

    def save(self, path: str):
        """ Write the topology as JSON. """
        with open(path, 'w') as topology_file:
            json.dump(self.to_dict(), topology_file, sort_keys=True)
            topology_file.write('\n')

    @classmethod
    def load(cls, path: str) -> 'NetworkTopology':
        """ Read a topology written by save. """
        with open(path) as topology_file:
            return cls.from_dict(json.load(topology_file))

def validate_topology(topology: NetworkTopology):
    """ Check the wiring invariants, raising ValueError on the first violation.

        Args:
            - topology: topology to check.
    """
    if topology.n_nodes < IN_DEGREE + 1:
        raise ValueError('A network needs at least {} nodes, got {}.'
                         .format(IN_DEGREE + 1, topology.n_nodes))
    if len(topology.in_edges) != topology.n_nodes:
        raise ValueError('Expected in-edges for {} nodes, got {}.'
                         .format(topology.n_nodes, len(topology.in_edges)))
    for node, edges in enumerate(topology.in_edges):
        if len(edges) != IN_DEGREE:
            raise ValueError('Node {} has {} inputs instead of {}.'
                             .format(node, len(edges), IN_DEGREE))
        if len(set(edges)) != IN_DEGREE:
            raise ValueError('Node {} has repeated inputs {}.'.format(node, edges))
        for source in edges:
            if source == node:
                raise ValueError('Node {} feeds itself.'.format(node))
            if not 0 <= source < topology.n_nodes:
                raise ValueError('Node {} has out of range input {}.'.format(node, source))
    if topology.strict and not (topology.out_degrees() == IN_DEGREE).all():
        raise ValueError('Strict topology has out-degrees other than {}.'.format(IN_DEGREE))

def generate_topology(n: int, seed: int, strict_out_regular: bool = False,
                      max_retries: int = MAX_RETRIES) -> NetworkTopology:
    """ Draw a random network where every node takes three distinct non-self inputs.

        Relaxed mode picks each node's inputs independently. Strict mode stacks three
        permutations, each rejected until it avoids self loops and earlier picks,
        giving every node out-degree 3 as well.

        Args:
            - n: number of nodes, at least 4.
            - seed: 64-bit topology seed.
            - strict_out_regular: force every out-degree to 3.
            - max_retries: permutation draws allowed before giving up.
    """
    if n < IN_DEGREE + 1:
        raise ValueError('Can not choose {} distinct non-self inputs among {} nodes.'
                         .format(IN_DEGREE, n - 1))
    rng = random.default_rng(random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, n,
                                                  int(bool(strict_out_regular))]))
    if strict_out_regular:
        in_edges = _permutation_edges(n, rng, max_retries)
    else:
        in_edges = []
        for node in range(n):
            others = [other for other in range(n) if other != node]
            in_edges.append(tuple(rng.choice(others, IN_DEGREE, replace=False)))
    topology = NetworkTopology(n, in_edges, seed, strict_out_regular)
    LOGGER.debug('Generated %s.', topology)
    return topology

def _permutation_edges(n: int, rng, max_retries: int) -> list:
    """ Stack three permutations so that column k gives every node its k-th input. """
    nodes = arange(n)
    draws = 0
    while draws < max_retries:
        columns = []
        stage_draws = 0
        while len(columns) < IN_DEGREE and draws < max_retries:
            candidate = rng.permutation(n)
            draws += 1
            stage_draws += 1
            if (candidate != nodes).all() and all((candidate != col).all() for col in columns):
                columns.append(candidate)
                stage_draws = 0
            elif stage_draws > 50 * IN_DEGREE:
                break # Earlier picks may leave no completion, start over.
        if len(columns) == IN_DEGREE:
            return [tuple(int(col[node]) for col in columns) for node in range(n)]
    raise UnsatisfiableRegularityError(
        'unsatisfiable regularity: no strict 3-regular wiring for n={} within {} draws'
        .format(n, max_retries))

def state_to_int(state) -> int:
    """ Pack a bit vector into an int with node 0 as the least significant bit. """
    value = 0
    for node, bit in enumerate(state):
        value |= int(bit) << node
    return value

def synchronous_update(topology: NetworkTopology, states):
    """ One synchronous step of the XOR map: node i becomes the XOR of its three sources.

        Args:
            - topology: wiring to apply.
            - states: bit array of shape (N,) or (k, N).
    """
    states = asarray(states, dtype=uint8)
    sources = topology.sources()
    return (states[..., sources[:, 0]] ^ states[..., sources[:, 1]]
            ^ states[..., sources[:, 2]]).astype(uint8)

def find_fixed_points_bruteforce(topology: NetworkTopology, limit: int = FIXED_POINT_LIMIT):
    """ Enumerate every state left unchanged by the synchronous XOR map.

        A state held constant in continuous time must satisfy the combinatorial equations,
        so these are the network's steady states. All-zero and all-one are always present.

        Returns a (k, N) bit array in lexicographic order (node 0 is the first character).

        Args:
            - topology: wiring to search.
            - limit: largest N for which the exhaustive search is attempted.
    """
    n = topology.n_nodes
    if n > limit:
        raise InfeasibleAnalysisError(
            'exhaustive search infeasible: 2^{} states exceeds the limit of N={}'.format(n, limit))
    states = arange(2 ** n, dtype=uint64)
    sources = topology.sources()
    image = zeros(2 ** n, dtype=uint64)
    one = uint64(1)
    for node in range(n):
        bit = zeros(2 ** n, dtype=uint64)
        for source in sources[node]:
            bit ^= (states >> uint64(source)) & one
        image |= bit << uint64(node)
    fixed = states[image == states]
    bits = ((fixed[:, None] >> arange(n, dtype=uint64)[None, :]) & one).astype(uint8)
    order = lexsort(bits.T[::-1]) # Sort by node 0 first.
    LOGGER.debug('Found %d fixed points for %s.', len(fixed), topology)
    return bits[order]
