# experiments/base.py
"""
Base class of the experiment commands

An experiment turns a validated ExperimentConfig into library calls and
artifact files. Shared here:
- system resolution (explicit blocks and the named presets)
- grid construction from the numeric block
- initial states and the seeded random generator
- stage timing through the RunTracker and the result dict stored per run
"""

import contextlib
import math
import time
from typing import Dict, List, Optional, Sequence

import numpy as np

from config.config import SIMULATE_CONFIG, SPECTRAL_CONFIG, status
from database import TableConverter
from normalize import normalize_system
from simulate import DiscreteSystem, Grid, reference_assembly_case, sample_initial
from solvability import ParabolicSystem, Window
from spectral import (
    blended_potential_system, build_blended_potential_nd, build_counterexample_1d, counterexample_system,
    discrete_counterexample, find_witness, witness_initial_state,
)
from symbolic import ZERO, parse_expression
from .config_schema import ExperimentConfig, constant_value
from .errors import ConfigError
from .system_block import build_system, preset_horizon, preset_window

PI = math.pi


def with_window(system: ParabolicSystem, interval: Optional[Sequence[float]]) -> ParabolicSystem:
    """Replace the x1 range of the control window (other axes and time are kept)."""
    if interval is None:
        return system
    window = system.control_window
    lower = (window.lower[0], constant_value(interval[0])) + window.lower[2:]
    upper = (window.upper[0], constant_value(interval[1])) + window.upper[2:]
    return system.replace(control_window=Window(lower, upper))


def blended_boxes(dimension: int) -> Dict[str, List[tuple]]:
    """The default nested boxes of the blended potential, repeated on every axis."""
    keys = {'domain': 'domain', 'omega': 'blended_omega', 'omega1': 'blended_omega1', 'omega2': 'blended_omega2'}
    return {name: [tuple(SPECTRAL_CONFIG[key])] * dimension for name, key in keys.items()}


class Experiment:
    """
    One run of one command.

    Subclasses set `command` and implement execute(), which returns the
    summary line and fills self.metrics / self.artifacts.
    """

    command = ''

    def __init__(self, config: ExperimentConfig, tracker=None, converter: TableConverter = None):
        self.config = config
        self.numeric = config.numeric
        self.tracker = tracker
        self.converter = converter or TableConverter(config.output_dir)
        self.rng = np.random.default_rng(config.seed)
        self.metrics: Dict[str, float] = {}
        self.artifacts: List[str] = []
        self.calibrated = None
        self.witness = None
        self._counterexample = {}
        self._grid = None

    # -- orchestration ---------------------------------------------------------

    def stage(self, name: str):
        if self.tracker is None:
            return contextlib.nullcontext()
        return self.tracker.stage(f"{self.command}:{name}")

    def execute(self) -> str:
        raise NotImplementedError

    def run(self) -> Dict:
        """
        Execute the command and return the run record.

        Domain and numerical errors are caught and reported in the record;
        ConfigError propagates to the driver.
        """
        run_id = self.tracker.new_run_id(self.command) if self.tracker else f"{self.command}_{self.config.seed}"
        start = time.time()
        status(f"🚀 {self.command} → {self.converter.output_dir}")
        record = {
            'run_id': run_id,
            'command': self.command,
            'config': self.config.to_dict(),
            'metrics': self.metrics,
            'artifacts': self.artifacts,
        }
        try:
            summary = self.execute()
            record.update(success=True, summary=summary, error=None)
            print(f"✅ {self.command}: {summary}")
        except ConfigError:
            raise
        except Exception as e:
            record.update(success=False, summary=None, error=str(e), error_type=type(e).__name__)
            print(f"❌ {self.command}: {type(e).__name__}: {e}")
        record['elapsed_time'] = time.time() - start
        return record

    # -- artifacts -------------------------------------------------------------

    def write_frame(self, frame, filename: str) -> str:
        path = self.converter.frame_to_csv(frame, filename)
        self.artifacts.append(path)
        return path

    def write_records(self, records, filename: str, units: Dict[str, str] = None) -> str:
        path = self.converter.records_to_csv(records, filename, units)
        self.artifacts.append(path)
        return path

    def write_json(self, data: Dict, filename: str) -> str:
        path = self.converter.write_json(data, filename)
        self.artifacts.append(path)
        return path

    # -- systems ---------------------------------------------------------------

    @property
    def preset(self) -> Optional[str]:
        block = self.config.system
        return block.get('preset') if block else None

    @property
    def constants(self) -> dict:
        block = self.config.system
        return (block or {}).get('constants', {}) if not self.preset else {}

    def counterexample_data(self, profile: str = None):
        """build_counterexample_1d once per theta1 profile."""
        block = self.config.system or {}
        profile = profile or block.get('theta1_profile', 'bump')
        if profile not in self._counterexample:
            self._counterexample[profile] = build_counterexample_1d(
                blend_tolerance=self.numeric.get('blend_tolerance'), quad_tol=self.numeric.get('quad_tol'),
                theta1_profile=profile)
        return self._counterexample[profile]

    def resolve_system(self) -> ParabolicSystem:
        """ParabolicSystem of the config's system block (explicit or preset)."""
        block = self.config.system
        if block is None:
            raise ConfigError([f"system: command '{self.command}' needs a system block"])
        preset = self.preset
        if preset is None:
            return build_system(block)
        if preset == 'counterexample':
            data = self.counterexample_data()
            return counterexample_system(data, preset_window(block, data.omega), preset_horizon(block))
        if preset == 'counterexample-calibrated':
            data = self.counterexample_data()
            horizon = preset_horizon(block, SPECTRAL_CONFIG['witness_horizon'])
            grid = self.make_grid([SPECTRAL_CONFIG['domain']], horizon, SPECTRAL_CONFIG['witness_spacing'],
                                  SPECTRAL_CONFIG['witness_steps'])
            self.calibrated = discrete_counterexample(data, grid)
            self._grid = grid
            return self.calibrated.system(data, preset_window(block, data.omega))
        if preset == 'blended':
            boxes = blended_boxes(1)
            potential = build_blended_potential_nd(boxes['domain'], boxes['omega'], boxes['omega1'],
                                                   boxes['omega2'])
            system = blended_potential_system(potential, preset_horizon(block))
            return with_window(system, block.get('window'))
        system, _ = reference_assembly_case()
        return with_window(system, block.get('window'))

    def normal_form_system(self) -> ParabolicSystem:
        """resolve_system, normalized first when the block does not declare the normal form."""
        system = self.resolve_system()
        if system.normal_form:
            return system
        status("🔍 System not in normal form; normalizing before the algebraic steps", 1)
        return normalize_system(system).system

    # -- grids and states ------------------------------------------------------

    def make_grid(self, domain, horizon: float, spacing: float = None, steps: int = None) -> Grid:
        """Grid from numeric spacing/nodes/dt/steps, falling back to the given defaults."""
        spacing = self.numeric.get('spacing') or spacing
        nodes = self.numeric.get('nodes')
        if nodes is not None:
            if len(nodes) != len(domain):
                raise ConfigError([f"numeric.nodes: {len(domain)} entries expected, got {len(nodes)}"])
            spacing = None
        elif spacing is None:
            nodes = [SIMULATE_CONFIG['default_nodes'][len(domain)]] * len(domain)
        dt = self.numeric.get('dt')
        steps = self.numeric.get('steps') or (None if dt else steps or SIMULATE_CONFIG['default_steps'])
        return Grid.uniform(domain, horizon, spacing=spacing, nodes=nodes, dt=dt, steps=steps)

    def grid_for(self, system: ParabolicSystem) -> Grid:
        """The calibration grid for the calibrated preset, a grid over the system otherwise."""
        if self._grid is not None:
            return self._grid
        self._grid = self.make_grid(system.domain, system.horizon)
        return self._grid

    def initial_state(self, ds: DiscreteSystem, initial) -> np.ndarray:
        """
        Initial state from the numeric block:
        'witness' → unit witness component, {y1, y2} → sampled expressions,
        None → first Dirichlet mode in both components.
        """
        grid = ds.grid
        if initial == 'witness':
            if self.calibrated is not None:
                w = self.calibrated.witness
                return w / grid.norm(w)
            self.witness = find_witness(ds)
            return witness_initial_state(ds, self.witness)
        if initial is None:
            mode = np.ones(grid.size)
            for x, (lo, hi) in zip(grid.mesh(), grid.domain):
                mode *= np.sin(PI * (x.ravel() - lo) / (hi - lo))
            return np.concatenate([mode, mode])
        n = grid.dimension
        first = parse_expression(initial.get('y1', '0'), n, self.constants)
        second = parse_expression(initial.get('y2', '0'), n, self.constants)
        return sample_initial(grid, first, second)

    def expression(self, text: Optional[str], dimension: int):
        return ZERO if text is None else parse_expression(text, dimension, self.constants)
