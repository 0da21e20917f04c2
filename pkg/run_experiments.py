#!/usr/bin/env python3
"""
Fictitious Control Framework - Experiment Driver

Runs one experiment per invocation from a JSON config and stores the run,
its metrics and its artifact paths in the SQLite run database.

Commands (the "command" field of the config):
  eliminate         commutator elimination and the full solver M   → elimination.json
  check-condition   module-membership test of a~22                 → condition.json, condition_slices.csv
  normalize         flow straightening and gauge removal           → flowmap.csv, normalized_system.json
  simulate          theta-scheme forward solve                     → trajectory.csv, simulation.json
  hum-sweep         penalized HUM over a list of epsilons          → hum_sweep.csv, hum_sweep.json
  counterexample    one-dimensional counterexample and its witness → psi.csv, phi.csv, a.csv, witness.json
  fattorini         Fattorini-Hautus eigen-test                    → fattorini.json, fattorini_pairs.csv
  assembly          fictitious-control assembly refinement         → assembly.json, assembly_refinement.csv

Exit codes:
  0  success
  1  domain or numerical error (message printed verbatim)
  2  invalid config (every failing field listed)

The config schema is documented in docs/experiment-config.md.
"""

import argparse
import json
import sys

from config.config import DATABASE_NAME, OUTPUT_CONFIG, PARALLEL_CONFIG
from database import DatabaseManager, RunTracker
from experiments import ConfigError, create_experiment, load_config

EXIT_OK = 0
EXIT_DOMAIN_ERROR = 1
EXIT_CONFIG_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description='Fictitious-control experiments: solvability, simulation and spectral witnesses.',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python run_experiments.py configs/counterexample.json
  python run_experiments.py configs/hum_witness.json --threads 5
  python run_experiments.py configs/hum_witness.json --set numeric.cg_tol=1e-12 --seed 3
  python run_experiments.py configs/assembly.json --output-dir runs/assembly_cn
  python run_experiments.py configs/check_condition_blended.json --command fattorini

Database management:
  python run_experiments.py --list
  python run_experiments.py --export
  python run_experiments.py --clear all
  python run_experiments.py --clear session_20260101_120000_1a2b3c4d_001_hum-sweep
        """
    )
    parser.add_argument('config', nargs='?', metavar='CONFIG',
                        help='JSON experiment config')
    parser.add_argument('--command', help='Override the command of the config')
    parser.add_argument('--output-dir', help=f"Artifact directory (default: config or {OUTPUT_CONFIG['directory']})")
    parser.add_argument('--seed', type=int, help='Override the random seed')
    parser.add_argument('--threads', type=int,
                        help=f"Workers for sweeps (default: {PARALLEL_CONFIG['max_workers']})")
    parser.add_argument('--set', action='append', default=[], metavar='KEY.PATH=VALUE',
                        help='Override a scalar config field (repeatable)')
    parser.add_argument('--database', default=DATABASE_NAME,
                        help=f'Run database (default: {DATABASE_NAME})')
    parser.add_argument('--list', action='store_true', help='List all runs in the database')
    parser.add_argument('--clear', nargs='*', metavar='RUN',
                        help='Clear runs by id or command, or "all" to clear everything')
    parser.add_argument('--export', action='store_true', help='Export every run to a JSON file')
    return parser


def list_runs(db_manager: DatabaseManager):
    print("🗃️ Runs in database:")
    print("=" * 72)
    runs = db_manager.list_runs()
    if not runs:
        print("No runs found in database.")
        return
    print(f"{'Run':<48} {'OK':<3} {'Created'}")
    print("-" * 72)
    for run in runs:
        flag = '✓' if run['success'] else '✗'
        created = run['created_at'][:16] if run['created_at'] else "N/A"
        print(f"{run['run_id'][:47]:<48} {flag:<3} {created}")
        if run['summary']:
            print(f"    {run['summary'][:100]}")
    print(f"\nTotal: {len(runs)} runs")


def clear_runs(db_manager: DatabaseManager, identifiers) -> int:
    print("🗑️ Database clearing operation")
    print("=" * 60)
    if not identifiers or (len(identifiers) == 1 and identifiers[0].lower() == 'all'):
        runs = db_manager.list_runs()
        if not runs:
            print("Database is already empty.")
            return EXIT_OK
        print(f"⚠️  WARNING: This will clear ALL {len(runs)} runs from the database!")
        confirm = input("\nAre you sure? Type 'yes' to confirm: ")
        if confirm.lower() != 'yes':
            print("Operation cancelled.")
            return EXIT_OK
        identifiers = None
    try:
        result = db_manager.clear_runs(identifiers)
        print(f"✅ {result['message']}")
    except Exception as e:
        print(f"❌ Error clearing database: {e}")
        return EXIT_DOMAIN_ERROR
    return EXIT_OK


def export_runs(db_manager: DatabaseManager):
    export_data, filename = db_manager.export_comprehensive_data()
    db_manager.save_export_data(export_data, filename)
    stats = db_manager.get_run_statistics(export_data)
    print(f"📊 Exported {len(export_data)} runs to {filename}")
    if stats:
        print(f"   Success rate: {stats['success_rate']:.0%}")
        for command, entry in sorted(stats['per_command'].items()):
            print(f"   • {command}: {entry['successful']}/{entry['runs']}")


def cli_assignments(args) -> list:
    """Command-line overrides as --set assignments, applied before validation."""
    assignments = []
    if args.command:
        assignments.append(f"command={json.dumps(args.command)}")
    if args.output_dir:
        assignments.append(f"output_dir={json.dumps(args.output_dir)}")
    if args.seed is not None:
        assignments.append(f"seed={args.seed}")
    if args.threads is not None:
        assignments.append(f"threads={args.threads}")
    return list(args.set) + assignments


def main(argv=None) -> int:
    """
    Parse the command line, run one experiment and record it.

    Returns:
        int: exit code (0 ok, 1 domain error, 2 config error)
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    db_manager = DatabaseManager(args.database)
    conn, _ = db_manager.initialize_database()
    conn.close()

    if args.list:
        list_runs(db_manager)
        return EXIT_OK
    if args.clear is not None:
        return clear_runs(db_manager, args.clear)
    if args.export:
        export_runs(db_manager)
        return EXIT_OK
    if not args.config:
        parser.print_usage()
        print("❌ config: required (path to a JSON experiment config)")
        return EXIT_CONFIG_ERROR

    try:
        config = load_config(args.config, cli_assignments(args))
    except ConfigError as e:
        print(f"❌ {e}")
        return EXIT_CONFIG_ERROR

    print(f"🚀 Fictitious Control Framework: {config.command}")
    print("=" * 60)
    tracker = RunTracker(db_manager)
    experiment = create_experiment(config, tracker)
    try:
        record = experiment.run()
    except ConfigError as e:
        print(f"❌ {e}")
        return EXIT_CONFIG_ERROR
    tracker.record(record)
    tracker.print_session_summary()
    return EXIT_OK if record['success'] else EXIT_DOMAIN_ERROR


if __name__ == '__main__':
    sys.exit(main())
