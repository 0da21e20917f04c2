# tests/test_experiments.py
import json
import os

import pandas as pd
import pytest

from config.config import COMMANDS
from experiments import EXPERIMENTS, ConfigError, apply_overrides, create_experiment, load_config, validate_config
from experiments.config_schema import constant_value


def line_system(**coefficients):
    block = {
        'dimension': 1,
        'domain': [[0, 1]],
        'horizon': 1,
        'control_window': {'lower': [0, 0.2], 'upper': [1, 0.8]},
        'normal_form': True,
    }
    block.update(coefficients)
    return block


# validation ----------------------------------------------------------------------

def test_every_command_has_an_experiment():
    assert set(EXPERIMENTS) == set(COMMANDS)


def test_missing_command_lists_command_and_system():
    with pytest.raises(ConfigError) as excinfo:
        validate_config({})
    assert [f.split(':')[0] for f in excinfo.value.fields] == ['command', 'system']


def test_unknown_command():
    with pytest.raises(ConfigError) as excinfo:
        validate_config({'command': 'optimize'})
    assert len(excinfo.value.fields) == 1
    assert "unknown command 'optimize'" in excinfo.value.fields[0]


def test_every_failing_field_is_listed():
    raw = {
        'command': 'simulate',
        'seed': -1,
        'threads': 0,
        'colour': 'red',
        'numeric': {'steps': 0, 'theta': 'x1', 'frames': 3},
    }
    with pytest.raises(ConfigError) as excinfo:
        validate_config(raw)
    paths = {f.split(':')[0] for f in excinfo.value.fields}
    assert paths == {'colour', 'seed', 'threads', 'system', 'numeric.frames', 'numeric.steps', 'numeric.theta'}


def test_system_block_expression_errors_name_the_field():
    raw = {'command': 'eliminate', 'system': line_system(a22='x1 +', a12='y')}
    with pytest.raises(ConfigError) as excinfo:
        validate_config(raw)
    paths = sorted(f.split(':')[0] for f in excinfo.value.fields)
    assert paths == ['system.a12', 'system.a22']


def test_presets_are_checked():
    with pytest.raises(ConfigError):
        validate_config({'command': 'simulate', 'system': {'preset': 'pendulum'}})
    config = validate_config({'command': 'hum-sweep', 'system': {'preset': 'counterexample-calibrated'}})
    assert config.system == {'preset': 'counterexample-calibrated'}


def test_numeric_defaults_and_constant_texts():
    config = validate_config({'command': 'counterexample', 'numeric': {'residual_spacings': ['pi/100', 0.01]}})
    assert config.system is None
    assert config.numeric['theta1_profile'] == 'bump'
    assert config.numeric['residual_spacings'] == [pytest.approx(0.031415926535897934), 0.01]
    assert config.seed == 0


def test_constant_value():
    assert constant_value("pi/2") == pytest.approx(1.5707963267948966)
    assert constant_value(3) == 3.0
    with pytest.raises(ValueError):
        constant_value(True)
    with pytest.raises(Exception):
        constant_value("x1 + 1")


# overrides and loading -----------------------------------------------------------

def test_overrides_parse_json_scalars_and_text():
    raw = {'command': 'hum-sweep', 'numeric': {'cg_tol': 1e-10}}
    updated = apply_overrides(raw, ['numeric.cg_tol=1e-12', 'system.preset=counterexample', 'seed=3'])
    assert updated['numeric']['cg_tol'] == 1e-12
    assert updated['system'] == {'preset': 'counterexample'}
    assert updated['seed'] == 3
    assert raw['numeric']['cg_tol'] == 1e-10


def test_overrides_reject_non_scalars():
    raw = {'numeric': {'epsilons': [0.1]}}
    with pytest.raises(ConfigError) as excinfo:
        apply_overrides(raw, ['numeric.epsilons=0.5', 'numeric.nodes=[3]', 'seed'])
    assert len(excinfo.value.fields) == 3


def test_load_config_reports_missing_and_broken_files(tmp_path):
    with pytest.raises(ConfigError) as excinfo:
        load_config(str(tmp_path / 'absent.json'))
    assert 'file not found' in excinfo.value.fields[0]
    broken = tmp_path / 'broken.json'
    broken.write_text('{"command": "simulate",', encoding='utf-8')
    with pytest.raises(ConfigError) as excinfo:
        load_config(str(broken))
    assert 'invalid JSON' in excinfo.value.fields[0]


def test_shipped_configs_validate():
    folder = os.path.join(os.path.dirname(__file__), '..', 'configs')
    names = sorted(n for n in os.listdir(folder) if n.endswith('.json'))
    assert names
    for name in names:
        config = load_config(os.path.join(folder, name))
        assert config.command in COMMANDS


# runs ----------------------------------------------------------------------------

def run(raw, tmp_path):
    raw = dict(raw, output_dir=str(tmp_path))
    return create_experiment(validate_config(raw)).run()


def test_simulate_writes_a_unit_table(tmp_path):
    raw = {
        'command': 'simulate',
        'system': line_system(horizon=0.5, control_window={'lower': [0, 0.2], 'upper': [0.5, 0.8]}, a12='1'),
        'numeric': {'nodes': [31], 'steps': 10, 'initial': {'y1': 'sin(pi*x1)'}, 'control': {'u': 'x1'}},
    }
    record = run(raw, tmp_path)
    assert record['success'], record['error']
    assert record['metrics']['duality_residual'] < 1e-12
    assert record['metrics']['terminal_norm'] < record['metrics']['initial_norm'] * 10
    frame = pd.read_csv(tmp_path / 'trajectory.csv')
    assert list(frame.columns) == ['t [time]', 'x1 [length]', 'y1 [state]', 'y2 [state]', 'u [control]']
    assert len(frame) == 11 * 33
    assert sorted(os.path.basename(p) for p in record['artifacts']) == ['simulation.json', 'trajectory.csv']


def test_simulate_rejects_unknown_control_names(tmp_path):
    raw = {
        'command': 'simulate',
        'system': line_system(),
        'numeric': {'nodes': [31], 'steps': 4, 'control': {'v': '1'}},
    }
    with pytest.raises(ConfigError):
        run(raw, tmp_path)


def test_eliminate_records_the_solver(tmp_path):
    record = run({'command': 'eliminate', 'system': line_system(a22='x1*(1 + t)')}, tmp_path)
    assert record['success'], record['error']
    assert record['metrics']['steps'] == 1
    assert record['metrics']['identity_residual'] < 1e-8
    with open(tmp_path / 'elimination.json', encoding='utf-8') as f:
        report = json.load(f)
    assert set(report) == {'system', 'operators', 'elimination', 'solver'}


def test_domain_errors_fail_the_run_without_raising(tmp_path):
    record = run({'command': 'eliminate', 'system': line_system(a22='2')}, tmp_path)
    assert not record['success']
    assert record['error_type'] == 'NonSolvableError'
    assert record['error']


def test_normalize_writes_the_flow_table(tmp_path):
    system = line_system(g21=['1 + 0.5*x1'], a21='x1', a22='x1', normal_form=False)
    record = run({'command': 'normalize', 'system': system, 'numeric': {'table_size': 32}}, tmp_path)
    assert record['success'], record['error']
    assert record['metrics']['straightened'] == 1.0
    assert record['metrics']['coupling_residual'] < 1e-6
    assert (tmp_path / 'flowmap.csv').exists()
    assert (tmp_path / 'normalized_system.json').exists()


def test_check_condition_writes_slices(tmp_path):
    record = run({'command': 'check-condition', 'system': line_system(a22='x1'),
                  'numeric': {'slices_per_axis': 2, 'points_per_slice': 16}}, tmp_path)
    assert record['success'], record['error']
    frame = pd.read_csv(tmp_path / 'condition_slices.csv')
    assert all(c.endswith(']') for c in frame.columns)
    assert record['metrics']['slices'] == len(frame)


def test_fattorini_on_the_calibrated_blended_potential(tmp_path):
    raw = {'command': 'fattorini', 'numeric': {'potential': 'blended-calibrated', 'nodes': [63], 'steps': 1,
                                               'eigenpairs': 3}}
    record = run(raw, tmp_path)
    assert record['success'], record['error']
    assert record['metrics']['obstructed'] == 1.0
    assert record['metrics']['pairs'] == 3
    assert (tmp_path / 'fattorini_pairs.csv').exists()


def shipped(name):
    path = os.path.join(os.path.dirname(__file__), '..', 'configs', name)
    with open(path, encoding='utf-8') as f:
        return dict(json.load(f), threads=1)


@pytest.mark.slow
def test_hum_sweep_plateaus_on_the_witness(tmp_path):
    record = run(shipped('hum_witness.json'), tmp_path)
    assert record['success'], record['error']
    metrics = record['metrics']
    assert metrics['smallest_epsilon'] == 1e-6
    assert metrics['invariant_drift'] <= 1e-6
    assert metrics['plateau_holds'] == 1.0
    assert metrics['plateau_bound'] >= 0.5 * metrics['witness_component']
    assert metrics['smallest_terminal_norm'] >= 0.5 * metrics['witness_component']


@pytest.mark.slow
def test_hum_sweep_decays_on_the_controllable_window(tmp_path):
    record = run(shipped('hum_contrast.json'), tmp_path)
    assert record['success'], record['error']
    metrics = record['metrics']
    assert metrics['smallest_epsilon'] == 1e-6
    assert 0.35 <= metrics['slope'] <= 0.65
    assert metrics['plateau_above_floor'] == 0.0
    assert 'plateau_holds' not in metrics
