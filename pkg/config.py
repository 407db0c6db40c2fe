"""
config.py
Environment-driven settings (a local .env file is honoured).
"""

import os
from dotenv import load_dotenv

load_dotenv()

EXHAUSTIVE_GUARD = int(os.environ.get("AA_EXHAUSTIVE_GUARD", "30"))
HELD_KARP_GUARD = int(os.environ.get("AA_HELD_KARP_GUARD", "24"))
WORKERS = max(1, int(os.environ.get("AA_WORKERS", "1")))
LOG_LEVEL = os.environ.get("AA_LOG_LEVEL", "WARNING").upper()
METRICS_FILE = os.environ.get("AA_METRICS_FILE") or None
