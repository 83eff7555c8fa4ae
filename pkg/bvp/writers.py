"""
Result files. Every float goes through format_float, so identical inputs
give byte-identical files.
"""
import csv
import json
import logging
from pathlib import Path

from rest_framework.utils.encoders import JSONEncoder

from .serializers import format_float

logger = logging.getLogger(__name__)


def _is_float(v):
    return isinstance(v, float) or getattr(v, 'dtype', None) is not None and v.dtype.kind == 'f'


def _prepare(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_csv(path, header, rows):
    """Header row, comma separated, '\\n' line endings, UTF-8; floats formatted, other cells as str."""
    path = _prepare(path)
    with path.open('w', encoding='utf-8', newline='') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(v) if _is_float(v) else str(v) for v in row])
    logger.info("wrote %s", path)
    return path


def dumps(data):
    return json.dumps(data, cls=JSONEncoder, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(path, data):
    path = _prepare(path)
    path.write_text(dumps(data), encoding='utf-8')
    logger.info("wrote %s", path)
    return path


def write_table(path, header, rows, fmt):
    """A table as CSV, or as a JSON list of objects keyed by the header."""
    if fmt == 'json':
        records = [
            {key: format_float(v) if _is_float(v) else v for key, v in zip(header, row)}
            for row in rows
        ]
        return write_json(Path(path).with_suffix('.json'), records)
    return write_csv(Path(path).with_suffix('.csv'), header, rows)
