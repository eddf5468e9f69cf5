""" HDL MODULE
    Structural Verilog-2001 for the autonomous network and the tapped delay line.

    Network naming scheme, also written into the header comment:
        n<i>     output of node i (the multiplexer)
        x<i>     3-input XOR of node i's sources, in input-slot order
        chal[i]  challenge bit of node i, selected while rst is high

    Delay line naming scheme:
        d0       the reset line entering the chain
        d<k>     output of inverter k
        tap[m]   output of inverter pair m + 1 (inverter 2m + 2), clocks register snap<m>

    parse_network_hdl reads the network text back into a NetworkTopology.
"""
import logging
import re
from hbnpuf.errors import HdlParseError
from hbnpuf.topology import NetworkTopology

LOGGER = logging.getLogger(__name__)

FORMAT_VERSION = 1
NETWORK_MODULE = 'hbn_network'
DELAY_LINE_MODULE = 'hbn_delay_line'

HEADER = re.compile(r'^//\s*(\w+):\s*(\S*)\s*$')
XOR_LINE = re.compile(r'^\s*assign\s+x(\d+)\s*=\s*n(\d+)\s*\^\s*n(\d+)\s*\^\s*n(\d+)\s*;\s*$')
MUX_LINE = re.compile(r'^\s*assign\s+n(\d+)\s*=\s*rst\s*\?\s*chal\[(\d+)\]\s*:\s*x(\d+)\s*;\s*$')

class HdlArtifact(object):
    """ HDL texts of one PUF class plus the metadata they were emitted from.

        Attributes:
            - network (str): network module text.
            - delay_line (str): delay-line module text.
            - metadata (dict): n_nodes, m_stages, topology_seed, format_version, source hash.
    """
    def __init__(self, network: str, delay_line: str, metadata: dict):
        self.network = network
        self.delay_line = delay_line
        self.metadata = metadata

    def save(self, prefix: str) -> tuple:
        """ Write <prefix>_abn.v and <prefix>_tdl.v, returns both paths. """
        paths = (prefix + '_abn.v', prefix + '_tdl.v')
        for path, text in zip(paths, (self.network, self.delay_line)):
            with open(path, 'w') as hdl_file:
                hdl_file.write(text)
        LOGGER.info('Wrote %s and %s.', *paths)
        return paths

def emit_network_hdl(topology: NetworkTopology, source_hash: str = '') -> str:
    """ Network module: one multiplexer and one 3-input XOR per node.

        Args:
            - topology: wiring to emit.
            - source_hash: manifest hash recorded in the header for traceability.
    """
    n = topology.n_nodes
    lines = [
        '// hbnpuf autonomous Boolean network',
        '// format_version: {}'.format(FORMAT_VERSION),
        '// n_nodes: {}'.format(n),
        '// topology_seed: {}'.format(topology.seed),
        '// strict: {}'.format(int(topology.strict)),
        '// source: {}'.format(source_hash or '-'),
        '// naming: n<i> node i output, x<i> XOR of node i sources in slot order,',
        '//         chal[i] challenge bit of node i, held while rst is high',
        'module {} ('.format(NETWORK_MODULE),
        '    input wire rst,',
        '    input wire [{}:0] chal,'.format(n - 1),
        '    output wire [{}:0] state'.format(n - 1),
        ');',
        '',
    ]
    # Every net is declared before any assignment reads it.
    lines.extend('    wire n{0}, x{0};'.format(node) for node in range(n))
    for node, (first, second, third) in enumerate(topology.in_edges):
        lines.extend([
            '',
            '    // node {}'.format(node),
            '    assign x{} = n{} ^ n{} ^ n{};'.format(node, first, second, third),
            '    assign n{0} = rst ? chal[{0}] : x{0};'.format(node),
        ])
    lines.extend([
        '',
        '    assign state = {{{}}};'.format(', '.join('n{}'.format(node)
                                                   for node in reversed(range(n)))),
        'endmodule',
        '',
    ])
    return '\n'.join(lines)

def emit_delayline_hdl(m_stages: int, width: int = 1) -> str:
    """ Delay-line module: 2M inverters, a register after every pair, a stage multiplexer.

        The registers capture the network state when the released reset edge
        reaches their tap.

        Args:
            - m_stages: number of inverter pairs M.
            - width: bits of network state each register captures.
    """
    if m_stages < 1:
        raise ValueError('The delay line needs at least one stage.')
    if width < 1:
        raise ValueError('Register width must be positive.')
    select_bits = max(1, (m_stages - 1).bit_length())
    lines = [
        '// hbnpuf tapped delay line',
        '// format_version: {}'.format(FORMAT_VERSION),
        '// m_stages: {}'.format(m_stages),
        '// width: {}'.format(width),
        '// naming: d0 reset line, d<k> inverter k output, tap[m] output of inverter pair m+1,',
        '//         snap<m> state captured when the reset release reaches tap[m]',
        'module {} ('.format(DELAY_LINE_MODULE),
        '    input wire rst,',
        '    input wire [{}:0] stage_sel,'.format(select_bits - 1),
        '    input wire [{}:0] state,'.format(width - 1),
        '    output reg [{}:0] response'.format(width - 1),
        ');',
        '    wire d0;',
        '    wire [{}:0] tap;'.format(m_stages - 1),
        '    assign d0 = rst;',
    ]
    for stage in range(m_stages):
        first, second = 2 * stage + 1, 2 * stage + 2
        lines.extend([
            '',
            '    // stage {}'.format(stage + 1),
            '    wire d{}, d{};'.format(first, second),
            '    assign d{} = ~d{};'.format(first, first - 1),
            '    assign d{} = ~d{};'.format(second, first),
            '    assign tap[{}] = d{};'.format(stage, second),
            '    reg [{}:0] snap{};'.format(width - 1, stage),
            '    always @(negedge tap[{0}]) snap{0} <= state;'.format(stage),
        ])
    lines.extend(['', '    always @(*) begin', '        case (stage_sel)'])
    for stage in range(m_stages):
        lines.append("            {}'d{}: response = snap{};".format(select_bits, stage, stage))
    lines.extend([
        "            default: response = {{{}{{1'b0}}}};".format(width),
        '        endcase',
        '    end',
        'endmodule',
        '',
    ])
    return '\n'.join(lines)

def parse_network_hdl(text: str) -> NetworkTopology:
    """ Recover the topology from text written by emit_network_hdl.

        Node blocks may appear in any order.

        Args:
            - text: network module source.
    """
    header = {}
    sources = {}
    muxes = set()
    ended = False
    lines = text.splitlines()
    for number, line in enumerate(lines, start=1):
        match = HEADER.match(line)
        if match and not sources:
            header[match.group(1)] = match.group(2)
            continue
        match = XOR_LINE.match(line)
        if match:
            node = int(match.group(1))
            if node in sources:
                raise HdlParseError('node {} is defined twice'.format(node), number)
            sources[node] = tuple(int(match.group(index)) for index in (2, 3, 4))
            continue
        match = MUX_LINE.match(line)
        if match:
            node, bit, xor = (int(group) for group in match.groups())
            if not node == bit == xor:
                raise HdlParseError('multiplexer of node {} is miswired'.format(node), number)
            muxes.add(node)
            continue
        if line.strip().startswith('assign x') or line.strip().startswith('assign n'):
            raise HdlParseError('malformed node assignment: {}'.format(line.strip()), number)
        if line.strip() == 'endmodule':
            ended = True

    for key in ('format_version', 'n_nodes', 'topology_seed', 'strict'):
        if not key in header:
            raise HdlParseError('header field {} missing, not emitted by hbnpuf'.format(key), 1)
    if header['format_version'] != str(FORMAT_VERSION):
        raise HdlParseError('unsupported format version {}'.format(header['format_version']), 1)
    try:
        n = int(header['n_nodes'])
        seed = int(header['topology_seed'])
        strict = bool(int(header['strict']))
    except ValueError:
        raise HdlParseError('malformed header', 1)
    if not ended:
        raise HdlParseError('truncated text, endmodule missing', len(lines))
    if set(sources) != set(range(n)) or muxes != set(range(n)):
        raise HdlParseError('expected {} complete node blocks, found {} XORs and {} multiplexers'
                            .format(n, len(sources), len(muxes)), len(lines))
    try:
        return NetworkTopology(n, [sources[node] for node in range(n)], seed, strict)
    except ValueError as error:
        raise HdlParseError('invalid wiring: {}'.format(error), len(lines))

def export_hdl(topology: NetworkTopology, m_stages: int, source_hash: str = '') -> HdlArtifact:
    """ Both modules of a class, the delay line registers are as wide as the network. """
    metadata = {'n_nodes': topology.n_nodes, 'm_stages': m_stages,
                'topology_seed': topology.seed, 'format_version': FORMAT_VERSION,
                'source': source_hash}
    return HdlArtifact(emit_network_hdl(topology, source_hash),
                       emit_delayline_hdl(m_stages, topology.n_nodes), metadata)
