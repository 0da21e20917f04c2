# experiments/errors.py
"""Configuration errors of the experiment driver (exit code 2, unlike domain errors)."""

from typing import List


class ConfigError(Exception):
    """Invalid experiment config; `fields` lists every failing field as 'path: reason'."""

    def __init__(self, fields: List[str]):
        self.fields = list(fields)
        super().__init__("invalid experiment config:\n" + "\n".join(f"  - {f}" for f in self.fields))
