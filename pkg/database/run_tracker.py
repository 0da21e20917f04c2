# database/run_tracker.py
"""
Run Tracker for experiment sessions

Groups the runs of one driver invocation under a session id, times each
stage and prints the session summary from the stored timings.
"""

import time
import uuid
from contextlib import contextmanager
from datetime import datetime
from typing import Dict, List, Optional

from database.database_manager import DatabaseManager


class RunTracker:
    """
    Session bookkeeping for run_experiments.py.
    Stage timings are written to the database as soon as a stage ends.
    """

    def __init__(self, db_manager: DatabaseManager = None, session_id: str = None):
        """
        Initialize the tracker.

        Args:
            db_manager: Database manager for storing timings and runs
            session_id: Optional session ID (generated if not provided)
        """
        self.db_manager = db_manager or DatabaseManager()
        self.session_id = session_id or self._generate_session_id()
        self.current_run: Optional[str] = None
        self.started = time.time()
        self.runs: List[Dict] = []
        print(f"    🔍 Run tracker initialized (session: {self.session_id})")

    def _generate_session_id(self) -> str:
        """Generate a unique session ID."""
        return f"session_{datetime.now().strftime('%Y%m%d_%H%M%S')}_{uuid.uuid4().hex[:8]}"

    def new_run_id(self, command: str) -> str:
        self.current_run = f"{self.session_id}_{len(self.runs) + 1:03d}_{command}"
        return self.current_run

    @contextmanager
    def stage(self, name: str):
        """Time the enclosed block; failures are recorded and re-raised."""
        start = time.time()
        try:
            yield
        except Exception as e:
            self.db_manager.store_stage_timing(self.session_id, name, time.time() - start, False,
                                               str(e), self.current_run)
            raise
        self.db_manager.store_stage_timing(self.session_id, name, time.time() - start, True,
                                           None, self.current_run)

    def record(self, run: Dict):
        """Store a finished run and remember it for the summary."""
        run.setdefault('session_id', self.session_id)
        self.db_manager.store_run(run)
        self.runs.append(run)

    def print_session_summary(self):
        """Print run outcomes and stage timings of the session."""
        elapsed = time.time() - self.started
        successful = sum(1 for r in self.runs if r.get('success'))
        print(f"\n📊 Session Summary (ID: {self.session_id})")
        print(f"   Runs: {len(self.runs)} ({successful} successful)")
        for run in self.runs:
            flag = '✅' if run.get('success') else '❌'
            print(f"   {flag} {run['command']}: {run.get('summary') or run.get('error')}")
        try:
            timings = self.db_manager.get_session_timings(self.session_id)
        except Exception as e:
            print(f"   ⚠️ Could not read stage timings: {e}")
            timings = []
        if timings:
            print("   Stage Timings:")
            for timing in timings:
                flag = '' if timing['success'] else ' (failed)'
                print(f"     • {timing['stage']}: {timing['elapsed_time']:.2f}s{flag}")
        print(f"   Total Time: {elapsed:.2f}s")
