""" EXPORTER MODULE

    Writes analysis results to disk for later plotting or comparison.

    Every file starts with the manifest hash of the inputs it was derived from, so
    any output can be traced back to (and regenerated from) its dataset. Outputs
    contain no timestamps, re-running an analysis reproduces them byte for byte.
"""
import csv
import json
import logging
import os

LOGGER = logging.getLogger(__name__)

HASH_PREFIX = '# inputs: '

def _prepare(path: str):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)

def _cell(value):
    """ Plain python scalars, numpy scalars are converted so the text is stable. """
    if hasattr(value, 'item'):
        value = value.item()
    if isinstance(value, bool):
        return int(value)
    return value

def write_csv(path: str, header: list, rows: list, source_hash: str = ''):
    """ Write rows as CSV preceded by the source manifest hash comment.

        Args:
            - path: output file.
            - header: column names.
            - rows: iterables of values, one per row.
            - source_hash: hash(es) of the inputs, comma separated when several.
    """
    _prepare(path)
    with open(path, 'w', newline='') as output_file:
        output_file.write(HASH_PREFIX + source_hash + '\n')
        writer = csv.writer(output_file, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(value) for value in row])
    LOGGER.info('Exported %s.', path)

def read_csv(path: str) -> tuple:
    """ Read a file written by write_csv.

        Returns (source hash, header, rows), values are left as strings.
    """
    with open(path, newline='') as input_file:
        first = input_file.readline().rstrip('\n')
        source_hash = first[len(HASH_PREFIX):] if first.startswith(HASH_PREFIX) else ''
        reader = csv.reader(input_file)
        header = next(reader)
        return source_hash, header, [row for row in reader]

def write_json(path: str, data: dict, source_hash: str = ''):
    """ Write a JSON report, the source hash is stored under 'inputs'.

        Args:
            - path: output file.
            - data: JSON serialisable report.
            - source_hash: hash(es) of the inputs.
    """
    _prepare(path)
    report = dict(data)
    report['inputs'] = source_hash
    with open(path, 'w') as output_file:
        json.dump(report, output_file, indent=2, sort_keys=True)
        output_file.write('\n')
    LOGGER.info('Exported %s.', path)
