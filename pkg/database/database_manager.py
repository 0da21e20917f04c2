# database/database_manager.py
"""
Database Manager for experiment runs

Handles SQLite database operations including:
- Schema initialization
- Run, metric, artifact and stage-timing storage
- Listing, clearing and export
- Concurrent access through WAL mode
"""

import json
import sqlite3
from datetime import datetime

from config.config import DATABASE_NAME, DATABASE_PRAGMAS, OUTPUT_CONFIG


class DatabaseManager:
    """
    Manages all database operations of the experiment driver.
    One row per experiment run, with its metrics, artifacts and stage timings.
    """

    def __init__(self, db_path=None):
        """Initialize the database manager."""
        self.db_path = db_path or DATABASE_NAME

    def get_db_connection(self):
        """
        Get a database connection with proper configuration.

        Returns:
            sqlite3.Connection: Configured database connection
        """
        conn = sqlite3.connect(self.db_path)
        conn.row_factory = sqlite3.Row
        for pragma in DATABASE_PRAGMAS:
            conn.execute(pragma)
        return conn

    def initialize_database(self):
        """Create the tables if they don't exist and return (conn, cursor)."""
        conn = sqlite3.connect(self.db_path)
        conn.execute('PRAGMA journal_mode=WAL;')
        cursor = conn.cursor()

        cursor.execute('''CREATE TABLE IF NOT EXISTS experiment_runs (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            run_id TEXT NOT NULL UNIQUE,
            session_id TEXT NOT NULL,
            command TEXT NOT NULL,
            config TEXT,                 -- JSON of the validated experiment config
            summary TEXT,                -- one-line verdict / residual / slope
            success BOOLEAN,
            error TEXT,
            elapsed_time REAL,
            created_at TEXT
        )''')

        cursor.execute('''CREATE TABLE IF NOT EXISTS run_metrics (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            run_id TEXT NOT NULL,
            name TEXT NOT NULL,
            value REAL,
            created_at TEXT,
            UNIQUE(run_id, name)
        )''')

        cursor.execute('''CREATE TABLE IF NOT EXISTS run_artifacts (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            run_id TEXT NOT NULL,
            path TEXT NOT NULL,
            kind TEXT,                   -- csv or json
            created_at TEXT
        )''')

        cursor.execute('''CREATE TABLE IF NOT EXISTS stage_timings (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            session_id TEXT NOT NULL,
            run_id TEXT,
            stage TEXT NOT NULL,
            elapsed_time REAL NOT NULL,
            success BOOLEAN NOT NULL,
            error_message TEXT,
            created_at TEXT NOT NULL
        )''')

        cursor.execute('CREATE INDEX IF NOT EXISTS idx_runs_command ON experiment_runs(command)')
        cursor.execute('CREATE INDEX IF NOT EXISTS idx_runs_session ON experiment_runs(session_id)')
        cursor.execute('CREATE INDEX IF NOT EXISTS idx_metrics_run ON run_metrics(run_id)')
        cursor.execute('CREATE INDEX IF NOT EXISTS idx_artifacts_run ON run_artifacts(run_id)')
        cursor.execute('CREATE INDEX IF NOT EXISTS idx_timings_session ON stage_timings(session_id)')

        conn.commit()
        return conn, cursor

    def store_run(self, run):
        """
        Store an experiment run together with its metrics and artifacts.

        Args:
            run (dict): run_id, session_id, command, config, summary, success,
                error, elapsed_time, metrics (name -> value), artifacts (list of paths)
        """
        try:
            conn = sqlite3.connect(self.db_path)
            cursor = conn.cursor()
            now = datetime.now().isoformat()
            cursor.execute('''INSERT OR REPLACE INTO experiment_runs
                             (run_id, session_id, command, config, summary, success, error,
                              elapsed_time, created_at)
                             VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)''',
                          (run['run_id'], run['session_id'], run['command'],
                           json.dumps(run.get('config', {}), sort_keys=True), run.get('summary'),
                           run.get('success', False), run.get('error'), run.get('elapsed_time', 0.0), now))
            conn.commit()
            conn.close()
        except Exception as e:
            print(f"    ⚠️ Failed to store run {run.get('run_id')}: {e}")
            return
        self.store_metrics(run['run_id'], run.get('metrics', {}))
        self.store_artifacts(run['run_id'], run.get('artifacts', []))

    def store_metrics(self, run_id, metrics):
        """Store scalar metrics; non-numeric values are skipped."""
        rows = []
        now = datetime.now().isoformat()
        for name, value in (metrics or {}).items():
            try:
                rows.append((run_id, name, float(value), now))
            except (TypeError, ValueError):
                continue
        if not rows:
            return
        try:
            conn = sqlite3.connect(self.db_path)
            conn.executemany('''INSERT OR REPLACE INTO run_metrics (run_id, name, value, created_at)
                                VALUES (?, ?, ?, ?)''', rows)
            conn.commit()
            conn.close()
        except Exception as e:
            print(f"    ⚠️ Failed to store metrics for {run_id}: {e}")

    def store_artifacts(self, run_id, paths):
        """Store artifact paths with their kind taken from the extension."""
        now = datetime.now().isoformat()
        rows = [(run_id, str(path), str(path).rsplit('.', 1)[-1].lower(), now) for path in paths or []]
        if not rows:
            return
        try:
            conn = sqlite3.connect(self.db_path)
            conn.executemany('''INSERT INTO run_artifacts (run_id, path, kind, created_at)
                                VALUES (?, ?, ?, ?)''', rows)
            conn.commit()
            conn.close()
        except Exception as e:
            print(f"    ⚠️ Failed to store artifacts for {run_id}: {e}")

    def store_stage_timing(self, session_id, stage, elapsed_time, success, error_message=None, run_id=None):
        """Store the wall time of one stage of a session."""
        try:
            conn = sqlite3.connect(self.db_path)
            conn.execute('''INSERT INTO stage_timings
                            (session_id, run_id, stage, elapsed_time, success, error_message, created_at)
                            VALUES (?, ?, ?, ?, ?, ?, ?)''',
                         (session_id, run_id, stage, elapsed_time, success, error_message,
                          datetime.now().isoformat()))
            conn.commit()
            conn.close()
        except Exception as e:
            print(f"    ⚠️ Failed to store stage timing: {e}")

    def get_run(self, run_id):
        """
        Retrieve one run with metrics and artifacts.

        Returns:
            dict or None: run record if it exists
        """
        conn = self.get_db_connection()
        try:
            row = conn.execute('SELECT * FROM experiment_runs WHERE run_id = ?', (run_id,)).fetchone()
            if not row:
                return None
            record = dict(row)
            record['config'] = json.loads(record['config']) if record['config'] else {}
            record['metrics'] = {
                m['name']: m['value']
                for m in conn.execute('SELECT name, value FROM run_metrics WHERE run_id = ? ORDER BY name',
                                      (run_id,))
            }
            record['artifacts'] = [
                {'path': a['path'], 'kind': a['kind']}
                for a in conn.execute('SELECT path, kind FROM run_artifacts WHERE run_id = ? ORDER BY id',
                                      (run_id,))
            ]
            return record
        finally:
            conn.close()

    def list_runs(self):
        """
        List all runs.

        Returns:
            list: run_id, command, success, summary, created_at per run
        """
        conn = sqlite3.connect(self.db_path)
        cursor = conn.cursor()
        try:
            cursor.execute('''SELECT run_id, command, success, summary, created_at
                              FROM experiment_runs ORDER BY created_at, id''')
            return [
                {'run_id': r[0], 'command': r[1], 'success': bool(r[2]), 'summary': r[3], 'created_at': r[4]}
                for r in cursor.fetchall()
            ]
        finally:
            conn.close()

    def get_session_timings(self, session_id):
        """Stage timings of a session in insertion order."""
        conn = sqlite3.connect(self.db_path)
        try:
            rows = conn.execute('''SELECT stage, elapsed_time, success, error_message, run_id
                                   FROM stage_timings WHERE session_id = ? ORDER BY id''',
                                (session_id,)).fetchall()
            return [{'stage': r[0], 'elapsed_time': r[1], 'success': bool(r[2]), 'error': r[3], 'run_id': r[4]}
                    for r in rows]
        finally:
            conn.close()

    def clear_runs(self, identifiers=None):
        """
        Clear runs from the database.

        Args:
            identifiers (list or None): run ids or command names; None or ['all'] clears everything

        Returns:
            dict: counts and a message
        """
        conn = sqlite3.connect(self.db_path)
        cursor = conn.cursor()
        try:
            if not identifiers or identifiers == ['all']:
                return self._clear_all_runs(cursor, conn)
            return self._clear_specific_runs(cursor, conn, identifiers)
        finally:
            conn.close()

    def _clear_all_runs(self, cursor, conn):
        cursor.execute('SELECT COUNT(*) FROM experiment_runs')
        count = cursor.fetchone()[0]
        for table in ('run_metrics', 'run_artifacts', 'stage_timings', 'experiment_runs'):
            cursor.execute(f'DELETE FROM {table}')
        conn.commit()
        return {'cleared_runs': count, 'message': f'Successfully cleared all {count} run(s) from database'}

    def _clear_specific_runs(self, cursor, conn, identifiers):
        """Clear runs by run id or by command."""
        cleared, not_found = [], []
        for identifier in identifiers:
            cursor.execute('SELECT run_id FROM experiment_runs WHERE run_id = ? OR command = ?',
                           (identifier, identifier))
            run_ids = [r[0] for r in cursor.fetchall()]
            if not run_ids:
                not_found.append(identifier)
                continue
            for run_id in run_ids:
                cursor.execute('DELETE FROM run_metrics WHERE run_id = ?', (run_id,))
                cursor.execute('DELETE FROM run_artifacts WHERE run_id = ?', (run_id,))
                cursor.execute('DELETE FROM stage_timings WHERE run_id = ?', (run_id,))
                cursor.execute('DELETE FROM experiment_runs WHERE run_id = ?', (run_id,))
                cleared.append(run_id)
        conn.commit()

        result = {
            'cleared_runs': len(cleared),
            'total_requested': len(identifiers),
            'cleared_ids': cleared,
            'message': f'Successfully cleared {len(cleared)} run(s) from database',
        }
        if not_found:
            result['not_found'] = not_found
            result['message'] += f'. {len(not_found)} identifier(s) not found: {not_found}'
        return result

    def export_comprehensive_data(self):
        """
        Export every run with metrics and artifacts.

        Returns:
            tuple: (export_data, filename)
        """
        conn = sqlite3.connect(self.db_path)
        try:
            run_ids = [r[0] for r in conn.execute('SELECT run_id FROM experiment_runs ORDER BY created_at, id')]
        finally:
            conn.close()
        export_data = [self.get_run(run_id) for run_id in run_ids]
        filename = f"{OUTPUT_CONFIG['export_prefix']}_{datetime.now().strftime('%Y%m%d_%H%M%S')}.json"
        return export_data, filename

    def save_export_data(self, export_data, filename):
        """Save export data to JSON file."""
        with open(filename, 'w', encoding='utf-8') as f:
            json.dump(export_data, f, indent=2, ensure_ascii=False)

    def get_run_statistics(self, export_data):
        """Counts per command and the overall success rate."""
        if not export_data:
            return {}
        per_command = {}
        for record in export_data:
            entry = per_command.setdefault(record['command'], {'runs': 0, 'successful': 0})
            entry['runs'] += 1
            entry['successful'] += int(bool(record['success']))
        successful = sum(e['successful'] for e in per_command.values())
        return {
            'total_runs': len(export_data),
            'successful_runs': successful,
            'success_rate': successful / len(export_data),
            'per_command': per_command,
        }
