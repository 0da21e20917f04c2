# tests/test_run_experiments.py
import json

import inspect_runs
import run_experiments
from database import DatabaseManager


def write_config(tmp_path, **fields):
    raw = {
        'command': 'eliminate',
        'system': {
            'dimension': 1,
            'domain': [[0, 1]],
            'horizon': 1,
            'control_window': {'lower': [0, 0.2], 'upper': [1, 0.8]},
            'a22': 'x1',
            'normal_form': True,
        },
    }
    raw.update(fields)
    path = tmp_path / 'config.json'
    path.write_text(json.dumps(raw), encoding='utf-8')
    return str(path)


def cli(tmp_path, *args):
    return run_experiments.main(['--database', str(tmp_path / 'runs.db'), *args])


# exit codes ----------------------------------------------------------------------

def test_missing_config_is_a_config_error(tmp_path, capsys):
    assert cli(tmp_path) == 2
    assert 'config: required' in capsys.readouterr().out


def test_invalid_config_lists_fields(tmp_path, capsys):
    path = write_config(tmp_path, command='optimize')
    assert cli(tmp_path, path) == 2
    assert "unknown command 'optimize'" in capsys.readouterr().out


def test_list_on_an_empty_database(tmp_path, capsys):
    assert cli(tmp_path, '--list') == 0
    assert 'No runs found' in capsys.readouterr().out


def test_successful_run_is_recorded(tmp_path):
    path = write_config(tmp_path)
    out = tmp_path / 'out'
    assert cli(tmp_path, path, '--output-dir', str(out), '--seed', '2') == 0
    runs = DatabaseManager(str(tmp_path / 'runs.db')).list_runs()
    assert len(runs) == 1 and runs[0]['success']
    assert (out / 'elimination.json').exists()


def test_domain_error_exits_with_one(tmp_path, capsys):
    path = write_config(tmp_path)
    code = cli(tmp_path, path, '--set', 'system.a22="2"', '--output-dir', str(tmp_path / 'out'))
    assert code == 1
    runs = DatabaseManager(str(tmp_path / 'runs.db')).list_runs()
    assert len(runs) == 1 and not runs[0]['success']


# inspection ----------------------------------------------------------------------

def test_inspect_verifies_and_lists_failures(tmp_path, capsys):
    path = write_config(tmp_path)
    database = str(tmp_path / 'runs.db')
    assert cli(tmp_path, path, '--output-dir', str(tmp_path / 'ok')) == 0
    assert cli(tmp_path, path, '--set', 'system.a22="2"', '--output-dir', str(tmp_path / 'bad')) == 1
    capsys.readouterr()

    assert inspect_runs.main(['--database', database, '--verify']) == 0
    assert '0 problems' in capsys.readouterr().out
    assert inspect_runs.main(['--database', database, '--failures']) == 0
    assert '_eliminate:' in capsys.readouterr().out
    assert inspect_runs.main(['--database', database, '--run', 'missing']) == 1
