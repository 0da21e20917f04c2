# experiments/config_schema.py
"""
Experiment config schema (see docs/experiment-config.md)

A config is one JSON object:

    {
      "command": "hum-sweep",
      "seed": 0,
      "output_dir": "runs/hum",
      "system": {"preset": "counterexample-calibrated"} | {explicit coefficient block},
      "numeric": {command-specific fields}
    }

Validation collects every failing field before raising ConfigError.
Numeric fields accept JSON numbers or constant expression texts such as "pi/150".
"""

import copy
import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from config.config import COMMANDS, OUTPUT_CONFIG
from symbolic import DomainError, evaluate, parse_expression
from .errors import ConfigError

PRESETS = ('counterexample', 'counterexample-calibrated', 'blended', 'assembly-reference')

_GRID_FIELDS = {
    'spacing': ('number', None),
    'nodes': ('ints', None),
    'dt': ('number', None),
    'steps': ('int', None),
}

COMMAND_FIELDS: Dict[str, Dict[str, tuple]] = {
    'eliminate': {
        'delta': ('number', None),
        'verify': ('bool', True),
        'window': ('window', None),
    },
    'check-condition': {
        'tolerance': ('number', None),
        'slices_per_axis': ('int', None),
        'points_per_slice': ('int', None),
        'window': ('window', None),
    },
    'normalize': {
        'edge': ('choice', None, ('lower', 'upper')),
        'ode_tol': ('number', None),
        'table_size': ('int', None),
        'epsilon': ('number', None),
    },
    'simulate': dict(_GRID_FIELDS, **{
        'theta': ('number', None),
        'mode': ('choice', 'one-control', ('one-control', 'two-control')),
        'initial': ('initial', None),
        'control': ('exprs', None),
        'window': ('interval', None),
    }),
    'hum-sweep': dict(_GRID_FIELDS, **{
        'theta': ('number', None),
        'mode': ('choice', 'one-control', ('one-control', 'two-control')),
        'epsilons': ('numbers', None),
        'cg_tol': ('number', None),
        'initial': ('initial', None),
        'window': ('interval', None),
    }),
    'counterexample': {
        'blend_tolerance': ('number', None),
        'quad_tol': ('number', None),
        'theta1_profile': ('choice', 'bump', ('bump', 'exp')),
        'residual_spacings': ('numbers', None),
        'sample_count': ('int', None),
        'witness_spacing': ('number', None),
    },
    'fattorini': dict(_GRID_FIELDS, **{
        'mode': ('choice', 'single', ('single', 'coupled')),
        'potential': ('str', 'blended'),
        'window': ('interval', None),
        'eigenpairs': ('int', None),
        'eigenvalue': ('number', None),
        'tolerance': ('number', None),
    }),
    'assembly': {
        'spacings': ('numbers', None),
        'theta': ('number', None),
        'min_order': ('number', None),
        'support': ('window', None),
        'weights': ('numbers', None),
    },
}

SYSTEM_REQUIRED = ('eliminate', 'check-condition', 'normalize', 'simulate', 'hum-sweep')


@dataclass
class ExperimentConfig:
    command: str
    system: Optional[Dict[str, Any]]
    numeric: Dict[str, Any] = field(default_factory=dict)
    output_dir: str = ''
    seed: int = 0
    threads: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            'command': self.command,
            'system': self.system,
            'numeric': self.numeric,
            'output_dir': self.output_dir,
            'seed': self.seed,
            'threads': self.threads,
        }


def constant_value(value) -> float:
    """JSON number or constant expression text ("pi/150") as a float."""
    if isinstance(value, bool):
        raise ValueError("booleans are not numbers")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        expr = parse_expression(value, 0)
        if expr.free_variables:
            raise ValueError(f"'{value}' is not constant")
        return float(evaluate(expr, [0.0]))
    raise ValueError(f"expected a number, got {type(value).__name__}")


def _check_field(name: str, rule: tuple, value, errors: List[str], block: str = "numeric"):
    kind = rule[0]
    path = f"{block}.{name}"
    try:
        if kind == 'number':
            number = constant_value(value)
            if number <= 0:
                raise ValueError("must be positive")
            return number
        if kind == 'int':
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ValueError("must be a positive integer")
            return value
        if kind == 'ints':
            if not isinstance(value, list) or not value or any(
                    isinstance(v, bool) or not isinstance(v, int) or v < 3 for v in value):
                raise ValueError("must be a list of integers >= 3")
            return value
        if kind == 'numbers':
            if not isinstance(value, list) or not value:
                raise ValueError("must be a non-empty list")
            numbers = [constant_value(v) for v in value]
            if any(v <= 0 for v in numbers):
                raise ValueError("entries must be positive")
            return numbers
        if kind == 'bool':
            if not isinstance(value, bool):
                raise ValueError("must be true or false")
            return value
        if kind == 'choice':
            if value not in rule[2]:
                raise ValueError(f"must be one of {', '.join(rule[2])}")
            return value
        if kind == 'str':
            if not isinstance(value, str) or not value:
                raise ValueError("must be a non-empty string")
            return value
        if kind == 'interval':
            if not isinstance(value, list) or len(value) != 2:
                raise ValueError("must be [lo, hi]")
            lo, hi = (constant_value(v) for v in value)
            if not lo < hi:
                raise ValueError("needs lo < hi")
            return [lo, hi]
        if kind == 'window':
            return _check_window(value)
        if kind == 'exprs':
            if not isinstance(value, dict) or not value or not all(isinstance(v, str) for v in value.values()):
                raise ValueError("must map names to expression texts")
            return value
        if kind == 'initial':
            if value == 'witness':
                return value
            if not isinstance(value, dict) or set(value) - {'y1', 'y2'} or not all(
                    isinstance(v, str) for v in value.values()):
                raise ValueError("must be 'witness' or {\"y1\": text, \"y2\": text}")
            return value
    except (ValueError, DomainError) as e:
        errors.append(f"{path}: {e}")
        return None
    errors.append(f"{path}: unsupported field kind '{kind}'")
    return None


def _check_window(value) -> dict:
    if not isinstance(value, dict) or set(value) != {'lower', 'upper'}:
        raise ValueError("must be {\"lower\": [t, x1, ...], \"upper\": [t, x1, ...]}")
    lower = [constant_value(v) for v in value['lower']]
    upper = [constant_value(v) for v in value['upper']]
    if len(lower) != len(upper) or len(lower) < 2 or any(lo >= hi for lo, hi in zip(lower, upper)):
        raise ValueError("lower/upper must have equal length >= 2 and lower < upper")
    return {'lower': lower, 'upper': upper}


def _check_system(block, command: str, errors: List[str]) -> Optional[dict]:
    from .system_block import check_system_block
    if block is None:
        if command in SYSTEM_REQUIRED:
            errors.append("system: required field missing (explicit block or {\"preset\": name})")
        return None
    if not isinstance(block, dict):
        errors.append("system: must be an object")
        return None
    if 'preset' in block:
        if block['preset'] not in PRESETS:
            errors.append(f"system.preset: must be one of {', '.join(PRESETS)}")
        extra = set(block) - {'preset', 'horizon', 'window', 'theta1_profile'}
        if extra:
            errors.append(f"system: preset blocks take only horizon, window and theta1_profile, got {sorted(extra)}")
        if block.get('theta1_profile', 'bump') not in ('bump', 'exp'):
            errors.append("system.theta1_profile: must be one of bump, exp")
        if 'horizon' in block:
            _check_field('horizon', ('number', None), block['horizon'], errors, 'system')
        if 'window' in block:
            _check_field('window', ('interval', None), block['window'], errors, 'system')
        return block
    errors.extend(check_system_block(block))
    return block


def validate_config(raw) -> ExperimentConfig:
    """
    Check a raw config dict and fill numeric defaults.

    Raises:
        ConfigError: listing every failing field
    """
    errors: List[str] = []
    if not isinstance(raw, dict):
        raise ConfigError(["config: must be a JSON object"])
    command = raw.get('command')
    if command is None:
        errors.append(f"command: required field missing (one of {', '.join(COMMANDS)})")
        errors.append("system: required field missing for every command except counterexample")
        raise ConfigError(errors)
    if command not in COMMANDS:
        raise ConfigError([f"command: unknown command '{command}' (one of {', '.join(COMMANDS)})"])

    unknown = set(raw) - {'command', 'system', 'numeric', 'output_dir', 'seed', 'threads'}
    for key in sorted(unknown):
        errors.append(f"{key}: unknown top-level field")
    seed = raw.get('seed', 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        errors.append("seed: must be a nonnegative integer")
    threads = raw.get('threads')
    if threads is not None and (isinstance(threads, bool) or not isinstance(threads, int) or threads < 1):
        errors.append("threads: must be a positive integer")
    output_dir = raw.get('output_dir', OUTPUT_CONFIG['directory'])
    if not isinstance(output_dir, str) or not output_dir:
        errors.append("output_dir: must be a non-empty string")

    system = _check_system(raw.get('system'), command, errors)

    rules = COMMAND_FIELDS[command]
    numeric_raw = raw.get('numeric', {})
    numeric = {}
    if not isinstance(numeric_raw, dict):
        errors.append("numeric: must be an object")
        numeric_raw = {}
    for key in sorted(set(numeric_raw) - set(rules)):
        errors.append(f"numeric.{key}: unknown field for command '{command}'")
    for name, rule in rules.items():
        if name in numeric_raw and numeric_raw[name] is not None:
            numeric[name] = _check_field(name, rule, numeric_raw[name], errors)
        else:
            numeric[name] = rule[1]
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(command=command, system=system, numeric=numeric, output_dir=output_dir,
                            seed=seed, threads=threads)


def apply_overrides(raw: dict, assignments: Sequence[str]) -> dict:
    """
    Apply `key.path=value` assignments to scalar fields of a copy of `raw`.

    Values are read as JSON when possible (numbers, booleans), as text otherwise.

    Raises:
        ConfigError: malformed assignment or a non-scalar target
    """
    raw = copy.deepcopy(raw)
    errors = []
    for assignment in assignments or []:
        if '=' not in assignment:
            errors.append(f"--set {assignment}: expected key.path=value")
            continue
        path, text = assignment.split('=', 1)
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        if isinstance(value, (dict, list)):
            errors.append(f"--set {path}: only scalar values can be overridden")
            continue
        keys = path.split('.')
        target = raw
        for key in keys[:-1]:
            node = target.setdefault(key, {})
            if not isinstance(node, dict):
                errors.append(f"--set {path}: '{key}' is not an object")
                break
            target = node
        else:
            if isinstance(target.get(keys[-1]), (dict, list)):
                errors.append(f"--set {path}: target is not a scalar field")
                continue
            target[keys[-1]] = value
    if errors:
        raise ConfigError(errors)
    return raw


def load_config(path: str, assignments: Sequence[str] = None) -> ExperimentConfig:
    """Read a JSON config file, apply overrides and validate."""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            raw = json.load(f)
    except FileNotFoundError:
        raise ConfigError([f"config: file not found: {path}"])
    except json.JSONDecodeError as e:
        raise ConfigError([f"config: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}"])
    return validate_config(apply_overrides(raw, assignments))
