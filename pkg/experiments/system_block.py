# experiments/system_block.py
"""
System blocks of experiment configs

Explicit block:

    {
      "dimension": 1,
      "domain": [[0, 1]],
      "horizon": 1,
      "control_window": {"lower": [0, 0.1], "upper": [1, 0.9]},
      "constants": {"c": 0.5},
      "d1": [["1"]], "d2": [["1 + x1^2"]],
      "g11": ["0"], "g12": ["0"], "g21": ["1"], "g22": ["0"],
      "a11": "-1", "a12": "c", "a21": "0", "a22": "x1*t",
      "normal_form": true,
      "name": "example"
    }

Preset block: {"preset": name, "horizon": T, "window": [lo, hi], "theta1_profile": "bump" | "exp"}.
"""

from typing import List, Optional

from config.config import status
from solvability import ParabolicSystem, Window
from symbolic import DomainError, parse_expression
from symbolic.parser import parse_matrix, parse_vector
from .config_schema import constant_value

MATRICES = ('d1', 'd2')
VECTORS = ('g11', 'g12', 'g21', 'g22')
SCALARS = ('a11', 'a12', 'a21', 'a22')
KNOWN = {'dimension', 'domain', 'horizon', 'control_window', 'constants', 'normal_form', 'name',
         *MATRICES, *VECTORS, *SCALARS}


def _geometry_errors(block: dict) -> List[str]:
    errors = []
    dimension = block.get('dimension')
    if dimension not in (1, 2):
        errors.append("system.dimension: required, 1 or 2")
        return errors
    domain = block.get('domain')
    try:
        bounds = [[constant_value(v) for v in pair] for pair in domain]
        if len(bounds) != dimension or any(len(b) != 2 or b[0] >= b[1] for b in bounds):
            raise ValueError
    except (TypeError, ValueError, DomainError):
        errors.append(f"system.domain: required, {dimension} pairs [lo, hi] with lo < hi")
    try:
        if constant_value(block.get('horizon')) <= 0:
            raise ValueError
    except (TypeError, ValueError, DomainError):
        errors.append("system.horizon: required, positive number")
    window = block.get('control_window')
    try:
        lower = [constant_value(v) for v in window['lower']]
        upper = [constant_value(v) for v in window['upper']]
        if len(lower) != dimension + 1 or len(upper) != dimension + 1 or any(
                lo >= hi for lo, hi in zip(lower, upper)):
            raise ValueError
    except (TypeError, KeyError, ValueError, DomainError):
        errors.append(f"system.control_window: required, lower/upper lists of {dimension + 1} values "
                      f"(t, x1, ...) with lower < upper")
    return errors


def check_system_block(block: dict) -> List[str]:
    """Every failing field of an explicit system block; expression texts are parsed."""
    errors = [f"system.{key}: unknown field" for key in sorted(set(block) - KNOWN)]
    errors.extend(_geometry_errors(block))
    dimension = block.get('dimension')
    if dimension not in (1, 2):
        return errors
    constants = block.get('constants', {})
    if not isinstance(constants, dict) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in constants.values()):
        errors.append("system.constants: must map names to numbers")
        constants = {}
    for key in MATRICES:
        if key in block:
            rows = block[key]
            if not (isinstance(rows, list) and len(rows) == dimension
                    and all(isinstance(r, list) and len(r) == dimension for r in rows)):
                errors.append(f"system.{key}: must be a {dimension}x{dimension} list of expression texts")
                continue
            for i, row in enumerate(rows):
                for j, text in enumerate(row):
                    _parse_or_record(f"system.{key}[{i}][{j}]", text, dimension, constants, errors)
    for key in VECTORS:
        if key in block:
            entries = block[key]
            if not (isinstance(entries, list) and len(entries) == dimension):
                errors.append(f"system.{key}: must be a list of {dimension} expression texts")
                continue
            for i, text in enumerate(entries):
                _parse_or_record(f"system.{key}[{i}]", text, dimension, constants, errors)
    for key in SCALARS:
        if key in block:
            _parse_or_record(f"system.{key}", block[key], dimension, constants, errors)
    if 'normal_form' in block and not isinstance(block['normal_form'], bool):
        errors.append("system.normal_form: must be true or false")
    if 'name' in block and not isinstance(block['name'], str):
        errors.append("system.name: must be a string")
    return errors


def _parse_or_record(path: str, text, dimension: int, constants: dict, errors: List[str]):
    try:
        parse_expression(str(text), dimension, constants)
    except DomainError as e:
        errors.append(f"{path}: {e}")


def build_system(block: dict) -> ParabolicSystem:
    """ParabolicSystem from a validated explicit block."""
    n = block['dimension']
    constants = block.get('constants', {})
    window = block['control_window']
    system = ParabolicSystem.create(
        dimension=n,
        domain=[[constant_value(v) for v in pair] for pair in block['domain']],
        control_window=Window(tuple(constant_value(v) for v in window['lower']),
                              tuple(constant_value(v) for v in window['upper'])),
        horizon=constant_value(block['horizon']),
        normal_form=block.get('normal_form', False),
        name=block.get('name', ''),
        **{key: parse_matrix(block[key], n, constants) for key in MATRICES if key in block},
        **{key: parse_vector(block[key], n, constants) for key in VECTORS if key in block},
        **{key: parse_expression(str(block[key]), n, constants) for key in SCALARS if key in block},
    )
    status(f"🔍 System '{system.name or 'unnamed'}' in {n}D on {system.domain}, T = {system.horizon}", 1)
    return system


def preset_window(block: dict, default) -> tuple:
    window = block.get('window')
    if window is None:
        return tuple(default)
    return tuple(constant_value(v) for v in window)


def preset_horizon(block: dict, default: float = 1.0) -> float:
    horizon = block.get('horizon')
    return default if horizon is None else constant_value(horizon)


def describe(block: Optional[dict]) -> str:
    if block is None:
        return 'default'
    if 'preset' in block:
        return f"preset {block['preset']}"
    return block.get('name') or f"{block.get('dimension')}D system"

