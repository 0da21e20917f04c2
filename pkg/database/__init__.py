# database/__init__.py
"""
Database package for experiment runs

Provides:
- SQLite schema management for runs, metrics, artifacts and stage timings
- Session tracking with stage timing
- CSV/JSON table conversion for artifacts and exports
"""

from .database_manager import DatabaseManager
from .run_tracker import RunTracker
from .table_converter import TableConverter

__all__ = ['DatabaseManager', 'RunTracker', 'TableConverter']
