"""
storage.py
Instance and kernel file persistence: atomic writes, gzip by extension, '-' for stdio.
"""

import os, gzip, sys


def ensure_dir(path: str):
    if path:
        os.makedirs(path, exist_ok=True)


def is_gz(path: str) -> bool:
    return path.endswith(".gz")


def read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    if is_gz(path):
        with gzip.open(path, "rt") as f:
            return f.read()
    with open(path) as f:
        return f.read()


def write_text_atomic(path: str, text: str):
    if path == "-":
        sys.stdout.write(text)
        return
    ensure_dir(os.path.dirname(path))
    tmp = path + ".tmp"
    if is_gz(path):
        with gzip.open(tmp, "wt") as f:
            f.write(text)
    else:
        with open(tmp, "w") as f:
            f.write(text)
    os.replace(tmp, path)
