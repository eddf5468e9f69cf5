""" CONTEXT TREE WEIGHTING MODULE
    Binary context-tree weighting with the Krichevsky-Trofimov estimator.

    One tree of the largest depth D is grown, every node keeps the weighted
    probability it would have in trees of every depth d <= D at once. At depth d the
    node is a leaf (Pw = Pe), above it Pw = (Pe + Pw_child0 * Pw_child1) / 2. All
    probabilities are kept as log2 values.

    INPUTS:
        Context bits (coded without cost), target bits, maximum depth.

    OUTPUTS:
        Codeword length of the target, in bits, for each tree depth.
"""
from math import log2
from numpy import asarray, ceil, logaddexp2, zeros, uint8
from hbnpuf.errors import InfeasibleAnalysisError

MAX_DEPTH = 20
MEMORY_BUDGET = 50000000 # Node updates (depth + 1) * symbols allowed per coding run.
ROUNDING = 1e-9

class ContextTree(object):
    """ Sequential CTW model over a single binary stream.

        Histories shorter than the depth are padded with zeros.

        Attributes:
            - max_depth (int): deepest context considered.
            - nodes (dict): (depth, context) -> [zeros, ones, log2 Pe, log2 Pw per depth].
            - history (int): last max_depth bits, the most recent bit least significant.
    """
    def __init__(self, max_depth: int):
        if max_depth < 0 or max_depth > MAX_DEPTH:
            raise ValueError('Tree depth {} outside 0..{}.'.format(max_depth, MAX_DEPTH))
        self.max_depth = max_depth
        self.nodes = {}
        self.history = 0
        self.symbols = 0

    @property
    def log2_pw(self):
        """ log2 of the root's weighted probability for each depth 0..max_depth. """
        root = self.nodes.get((0, 0))
        if root is None:
            return zeros(self.max_depth + 1)
        return root[3].copy()

    def update(self, bit: int):
        """ Code one bit, updating every node on its context path, deepest first.

            Args:
                - bit: 0 or 1.
        """
        depth_max = self.max_depth
        for depth in range(depth_max, -1, -1):
            context = self.history & ((1 << depth) - 1)
            node = self.nodes.get((depth, context))
            if node is None:
                node = [0, 0, 0.0, zeros(depth_max + 1)]
                self.nodes[(depth, context)] = node
            node[2] += log2((node[bit] + 0.5) / (node[0] + node[1] + 1))
            node[bit] += 1
            weighted = node[3]
            weighted[depth] = node[2]
            if depth < depth_max:
                child = self.history & ((1 << (depth + 1)) - 1)
                children = self.nodes[(depth + 1, child)][3][depth + 1:]
                sibling = self.nodes.get((depth + 1, child ^ (1 << depth)))
                if sibling is not None:
                    children = children + sibling[3][depth + 1:]
                weighted[depth + 1:] = logaddexp2(node[2], children) - 1
        if depth_max:
            self.history = ((self.history << 1) | bit) & ((1 << depth_max) - 1)
        self.symbols += 1

def _check_budget(max_depth: int, length: int, budget: int):
    if (max_depth + 1) * length > budget:
        raise InfeasibleAnalysisError(
            'CTW of {} bits at depth {} exceeds the memory budget of {} node updates.'
            .format(length, max_depth, budget))

def ctw_codeword_lengths(context, target, max_depth: int, budget: int = MEMORY_BUDGET):
    """ Codeword length of target after priming on context, for every depth 0..max_depth.

        Priming updates the counts exactly as coding would, its cost is discarded:
        the result is ceil(-log2 P(target | context)).

        Args:
            - context: bits the tree is primed with.
            - target: bits to code, at least one.
            - max_depth: deepest tree considered (<= 20).
            - budget: largest allowed (max_depth + 1) * total length.
    """
    context = asarray(context, dtype=uint8).ravel()
    target = asarray(target, dtype=uint8).ravel()
    if target.size == 0:
        raise ValueError('Target must hold at least one bit.')
    _check_budget(max_depth, context.size + target.size, budget)
    tree = ContextTree(max_depth)
    for bit in context.tolist():
        tree.update(bit)
    primed = tree.log2_pw
    for bit in target.tolist():
        tree.update(bit)
    return ceil(primed - tree.log2_pw - ROUNDING).astype(int)

def ctw_codeword_length(context, target, depth: int, budget: int = MEMORY_BUDGET) -> int:
    """ Codeword length of target, in bits, for a tree of exactly the given depth.

        Args:
            - context: bits the tree is primed with.
            - target: bits to code, at least one.
            - depth: tree depth (<= 20).
            - budget: largest allowed (depth + 1) * total length.
    """
    return int(ctw_codeword_lengths(context, target, depth, budget)[depth])
