# database/table_converter.py
"""
Table Converter for experiment artifacts

Writes result records as CSV tables with unit-carrying headers and the
configured float format, reads them back, and flattens JSON reports into
two-column CSV tables.
"""

import json
import os
from typing import Any, Dict, List

import pandas as pd

from config.config import OUTPUT_CONFIG


class TableConverter:
    """Converts experiment records between pandas tables, CSV and JSON."""

    def __init__(self, output_dir: str = None, float_format: str = None):
        """Initialize converter with the output directory and CSV float format."""
        self.output_dir = output_dir or OUTPUT_CONFIG['directory']
        self.float_format = float_format or OUTPUT_CONFIG['float_format']

    def path(self, filename: str) -> str:
        os.makedirs(self.output_dir, exist_ok=True)
        return os.path.join(self.output_dir, filename)

    def frame_to_csv(self, frame: pd.DataFrame, filename: str) -> str:
        """
        Write a table; every column name must carry a unit in brackets.

        Returns:
            str: path of the written file
        """
        missing = [c for c in frame.columns if not (str(c).endswith(']') and '[' in str(c))]
        if missing:
            raise ValueError(f"columns without units: {missing}")
        target = self.path(filename)
        frame.to_csv(target, index=False, float_format=self.float_format, lineterminator='\n')
        return target

    def records_to_csv(self, records: List[Dict[str, Any]], filename: str, units: Dict[str, str] = None) -> str:
        """Write a list of flat dicts, appending `[unit]` to each column (default unit 1)."""
        units = units or {}
        frame = pd.DataFrame(records)
        frame.columns = [f"{c} [{units.get(c, '1')}]" for c in frame.columns]
        return self.frame_to_csv(frame, filename)

    def csv_to_records(self, filename: str) -> List[Dict[str, Any]]:
        """Read a table back, dropping the units from the column names."""
        frame = pd.read_csv(filename if os.path.isabs(filename) or os.path.exists(filename)
                            else self.path(filename))
        frame.columns = [str(c).split(' [')[0] for c in frame.columns]
        return frame.to_dict(orient='records')

    def write_json(self, data: Dict[str, Any], filename: str) -> str:
        target = self.path(filename)
        with open(target, 'w', encoding='utf-8') as f:
            json.dump(data, f, indent=2, ensure_ascii=False, sort_keys=True, default=_jsonable)
        return target

    def json_to_csv(self, data: Dict[str, Any], filename: str) -> str:
        """Flatten nested keys into dotted names: columns key [1], value [1]."""
        rows = [{'key': k, 'value': v} for k, v in _flatten(data).items()]
        return self.records_to_csv(rows, filename)


def _flatten(data, prefix: str = '') -> Dict[str, Any]:
    flat = {}
    if isinstance(data, dict):
        for key, value in data.items():
            flat.update(_flatten(value, f"{prefix}{key}."))
    elif isinstance(data, (list, tuple)):
        for index, value in enumerate(data):
            flat.update(_flatten(value, f"{prefix}{index}."))
    else:
        flat[prefix[:-1]] = data
    return flat


def _jsonable(value):
    """numpy scalars and arrays for json.dump."""
    if hasattr(value, 'tolist'):
        return value.tolist()
    if hasattr(value, 'item'):
        return value.item()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")
