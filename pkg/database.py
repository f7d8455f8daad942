# database.py

import json
import sqlite3

from config import Config


class Database:
    def __init__(self, db_path=Config.DB_PATH):
        if not db_path:
            raise ValueError("run ledger needs a database path (set DURKIT_DB_PATH)")
        self.conn = sqlite3.connect(db_path, check_same_thread=False)
        self.cursor = self.conn.cursor()
        self.setup()

    # ---------------- Setup ----------------
    def setup(self):
        """Create runs and logs tables"""
        self.cursor.execute("""
            CREATE TABLE IF NOT EXISTS runs (
                run_id INTEGER PRIMARY KEY AUTOINCREMENT,
                subcommand TEXT,
                seed INTEGER,
                version TEXT,
                manifest TEXT,
                wall_time REAL,
                started_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
            )
        """)
        self.conn.commit()

        self.cursor.execute("""
            CREATE TABLE IF NOT EXISTS logs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                event_type TEXT,
                run_id INTEGER,
                details TEXT,
                timestamp TIMESTAMP DEFAULT CURRENT_TIMESTAMP
            )
        """)
        self.conn.commit()

    # ---------------- Runs ----------------
    def add_run(self, manifest):
        self.cursor.execute("""
            INSERT INTO runs (subcommand, seed, version, manifest, wall_time)
            VALUES (?, ?, ?, ?, ?)
        """, (
            manifest.get("subcommand"),
            manifest.get("seed"),
            manifest.get("toolkit_version"),
            json.dumps(manifest, sort_keys=True),
            manifest.get("wall_time_s"),
        ))
        self.conn.commit()
        return self.cursor.lastrowid

    def get_total_runs(self, subcommand=None):
        if subcommand is None:
            self.cursor.execute("SELECT COUNT(*) FROM runs")
        else:
            self.cursor.execute("SELECT COUNT(*) FROM runs WHERE subcommand = ?", (subcommand,))
        return self.cursor.fetchone()[0]

    # ---------------- Logs ----------------
    def log_event(self, event_type, run_id=None, details=None):
        self.cursor.execute("""
            INSERT INTO logs (event_type, run_id, details)
            VALUES (?, ?, ?)
        """, (event_type, run_id, details))
        self.conn.commit()

    def close(self):
        self.conn.close()
