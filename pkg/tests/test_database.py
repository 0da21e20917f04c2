# tests/test_database.py
import json

import numpy as np
import pandas as pd
import pytest

from database import DatabaseManager, RunTracker, TableConverter


@pytest.fixture
def db_manager(tmp_path):
    manager = DatabaseManager(str(tmp_path / 'runs.db'))
    conn, _ = manager.initialize_database()
    conn.close()
    return manager


def sample_run(run_id, command='simulate', success=True):
    return {
        'run_id': run_id,
        'command': command,
        'config': {'command': command, 'seed': 0},
        'summary': 'ok' if success else None,
        'success': success,
        'error': None if success else 'boom',
        'elapsed_time': 1.5,
        'metrics': {'residual': 1e-9, 'steps': 20, 'label': 'not a number'},
        'artifacts': ['runs/x/trajectory.csv', 'runs/x/report.json'],
    }


def test_run_round_trip(db_manager):
    tracker = RunTracker(db_manager, session_id='session_test')
    tracker.record(sample_run('session_test_001_simulate'))
    record = db_manager.get_run('session_test_001_simulate')
    assert record['session_id'] == 'session_test'
    assert record['config'] == {'command': 'simulate', 'seed': 0}
    assert record['metrics'] == {'residual': pytest.approx(1e-9), 'steps': 20.0}
    assert [a['kind'] for a in record['artifacts']] == ['csv', 'json']
    assert db_manager.get_run('missing') is None


def test_stage_timings_record_failures(db_manager):
    tracker = RunTracker(db_manager, session_id='session_stages')
    tracker.new_run_id('eliminate')
    with tracker.stage('operators'):
        pass
    with pytest.raises(RuntimeError):
        with tracker.stage('elimination'):
            raise RuntimeError('no box')
    timings = db_manager.get_session_timings('session_stages')
    assert [t['stage'] for t in timings] == ['operators', 'elimination']
    assert timings[0]['success'] and not timings[1]['success']
    assert timings[1]['error'] == 'no box'
    assert timings[1]['run_id'] == 'session_stages_001_eliminate'


def test_clear_by_command_and_all(db_manager):
    db_manager.store_run({**sample_run('a'), 'session_id': 's'})
    db_manager.store_run({**sample_run('b', command='fattorini'), 'session_id': 's'})
    result = db_manager.clear_runs(['fattorini', 'nothing'])
    assert result['cleared_ids'] == ['b']
    assert result['not_found'] == ['nothing']
    assert [r['run_id'] for r in db_manager.list_runs()] == ['a']
    assert db_manager.clear_runs(['all'])['cleared_runs'] == 1
    assert db_manager.list_runs() == []


def test_statistics_per_command(db_manager):
    db_manager.store_run({**sample_run('a'), 'session_id': 's'})
    db_manager.store_run({**sample_run('b', success=False), 'session_id': 's'})
    export_data, filename = db_manager.export_comprehensive_data()
    assert filename.endswith('.json')
    stats = db_manager.get_run_statistics(export_data)
    assert stats['total_runs'] == 2
    assert stats['success_rate'] == 0.5
    assert stats['per_command'] == {'simulate': {'runs': 2, 'successful': 1}}
    assert db_manager.get_run_statistics([]) == {}


# tables --------------------------------------------------------------------------

def test_frame_to_csv_requires_units(tmp_path):
    converter = TableConverter(str(tmp_path))
    with pytest.raises(ValueError):
        converter.frame_to_csv(pd.DataFrame({'x': [1.0]}), 'bad.csv')
    path = converter.frame_to_csv(pd.DataFrame({'x [length]': [0.5], 'y [1]': [2.0]}), 'good.csv')
    assert pd.read_csv(path).columns.tolist() == ['x [length]', 'y [1]']


def test_records_round_trip_without_units(tmp_path):
    converter = TableConverter(str(tmp_path))
    converter.records_to_csv([{'epsilon': 0.1, 'terminal_norm': 0.5}], 'sweep.csv', units={'terminal_norm': 'state'})
    assert pd.read_csv(tmp_path / 'sweep.csv').columns.tolist() == ['epsilon [1]', 'terminal_norm [state]']
    assert converter.csv_to_records('sweep.csv') == [{'epsilon': 0.1, 'terminal_norm': 0.5}]


def test_json_handles_numpy_and_flattens(tmp_path):
    converter = TableConverter(str(tmp_path))
    data = {'verdict': 'holds', 'residuals': np.array([1.0, 2.0]), 'order': np.int64(3)}
    path = converter.write_json(data, 'report.json')
    with open(path, encoding='utf-8') as f:
        assert json.load(f) == {'order': 3, 'residuals': [1.0, 2.0], 'verdict': 'holds'}
    rows = converter.csv_to_records(converter.json_to_csv({'a': {'b': 1}, 'c': [4, 5]}, 'flat.csv'))
    assert [row['key'] for row in rows] == ['a.b', 'c.0', 'c.1']
