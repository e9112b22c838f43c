import logging
import subprocess
import sys


def run_cmd(cmd):
    logging.info(f"Running command: {' '.join(cmd)}")
    return subprocess.call(cmd)


def opener_command():
    if sys.platform == "darwin":
        return "open"
    if sys.platform.startswith("win"):
        return "explorer"
    return "xdg-open"


def open_file(file_path):
    return run_cmd([opener_command(), str(file_path)])
