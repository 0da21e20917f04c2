#!/usr/bin/env python3
"""
Run Inspection Script for the experiment database

Shows stored runs with their metrics and artifacts and checks that the
artifact files still exist and carry unit headers.

Usage:
    python inspect_runs.py                   # Overview per command
    python inspect_runs.py --run RUN_ID      # Metrics, artifacts and config of one run
    python inspect_runs.py --verify          # Check every artifact on disk
    python inspect_runs.py --failures        # Failed runs with their errors
"""

import argparse
import json
import os

import pandas as pd

from config.config import DATABASE_NAME
from database import DatabaseManager


def main(argv=None) -> int:
    """Main inspection interface."""
    parser = argparse.ArgumentParser(description='Inspect experiment runs stored by run_experiments.py')
    parser.add_argument('--run', type=str, help='Show one run by id')
    parser.add_argument('--verify', action='store_true', help='Check that every artifact exists and parses')
    parser.add_argument('--failures', action='store_true', help='List failed runs')
    parser.add_argument('--database', default=DATABASE_NAME, help=f'Run database (default: {DATABASE_NAME})')
    args = parser.parse_args(argv)

    db_manager = DatabaseManager(args.database)
    conn, _ = db_manager.initialize_database()
    conn.close()

    if args.run:
        return show_run(db_manager, args.run)
    if args.verify:
        return verify_artifacts(db_manager)
    if args.failures:
        show_failures(db_manager)
    else:
        show_overview(db_manager)
    return 0


def show_run(db_manager: DatabaseManager, run_id: str) -> int:
    """Print one run in detail."""
    print(f"🔍 Run: {run_id}")
    print("=" * 60)
    record = db_manager.get_run(run_id)
    if record is None:
        print("❌ Run not found")
        return 1
    flag = '✅' if record['success'] else '❌'
    print(f"{flag} {record['command']} ({record['elapsed_time']:.2f}s, {record['created_at'][:19]})")
    if record['summary']:
        print(f"   {record['summary']}")
    if record['error']:
        print(f"   Error: {record['error']}")

    print("\n📊 METRICS:")
    for name, value in record['metrics'].items():
        print(f"   {name:<28} {value:.6g}" if value is not None else f"   {name:<28} n/a")

    print("\n📄 ARTIFACTS:")
    for artifact in record['artifacts']:
        present = '✓' if os.path.exists(artifact['path']) else '✗'
        print(f"   {present} [{artifact['kind']}] {artifact['path']}")

    print("\n⚙️ CONFIG:")
    print(json.dumps(record['config'], indent=2, sort_keys=True))
    return 0


def check_artifact(path: str) -> str:
    """Empty string when the artifact is fine, the problem otherwise."""
    if not os.path.exists(path):
        return 'missing'
    try:
        if path.endswith('.csv'):
            columns = pd.read_csv(path, nrows=1).columns
            bare = [c for c in columns if not (c.endswith(']') and '[' in c)]
            if bare:
                return f"columns without units: {bare}"
        elif path.endswith('.json'):
            with open(path, 'r', encoding='utf-8') as f:
                json.load(f)
    except Exception as e:
        return f"unreadable: {e}"
    return ''


def verify_artifacts(db_manager: DatabaseManager) -> int:
    """Check every stored artifact path."""
    print("🔍 Verifying artifacts")
    print("=" * 60)
    problems = 0
    checked = 0
    for run in db_manager.list_runs():
        record = db_manager.get_run(run['run_id'])
        for artifact in record['artifacts']:
            checked += 1
            problem = check_artifact(artifact['path'])
            if problem:
                problems += 1
                print(f"❌ {run['run_id']}: {artifact['path']} ({problem})")
    print(f"\n📊 {checked} artifacts checked, {problems} problems")
    return 1 if problems else 0


def show_failures(db_manager: DatabaseManager):
    print("❌ Failed runs")
    print("=" * 60)
    failed = [r for r in db_manager.list_runs() if not r['success']]
    if not failed:
        print("✅ No failed runs")
        return
    for run in failed:
        record = db_manager.get_run(run['run_id'])
        print(f"• {run['run_id']}: {record['error']}")


def show_overview(db_manager: DatabaseManager):
    print("📊 Run database overview")
    print("=" * 60)
    export_data, _ = db_manager.export_comprehensive_data()
    stats = db_manager.get_run_statistics(export_data)
    if not stats:
        print("No runs found in database.")
        return
    print(f"Total runs: {stats['total_runs']} ({stats['success_rate']:.0%} successful)")
    for command, entry in sorted(stats['per_command'].items()):
        print(f"  {command:<18} {entry['successful']}/{entry['runs']}")


if __name__ == '__main__':
    raise SystemExit(main())
