import os

from dotenv import dotenv_values
from dotenv import load_dotenv

load_dotenv()

TWRC_OUTPUT_DIR = os.getenv("TWRC_OUTPUT_DIR", "output")
TWRC_WORKERS = int(os.getenv("TWRC_WORKERS", "1"))
TWRC_SEED = int(os.getenv("TWRC_SEED", "2010"))
TWRC_TRIALS = int(os.getenv("TWRC_TRIALS", "100000"))

DEFAULTS = {
    "seed": TWRC_SEED,
    "trials": TWRC_TRIALS,
    "fidelity": "semi",
    "relays": "2",
    "snr_db": "0:30:5",
    "scheme": "d-rs-nc",
    "out": None,
    "svg": None,
    "workers": TWRC_WORKERS,
    "min_errors": 0,
}

CONFIG_KEYS = set(DEFAULTS)


def load_config_file(file_path):
    """Read a flat key=value file; keys may use dashes or underscores."""
    values = {}
    for key, value in dotenv_values(file_path).items():
        normalised = key.strip().lower().replace("-", "_")
        if normalised not in CONFIG_KEYS:
            raise ValueError(f"Unknown config key '{key}' in {file_path}")
        values[normalised] = value
    return values


def resolve_settings(flag_values, config_values=None):
    """Flags override the config file, which overrides the defaults."""
    config_values = config_values or {}
    settings = {}
    for key, default in DEFAULTS.items():
        flag_value = flag_values.get(key)
        if flag_value is not None:
            settings[key] = flag_value
        elif config_values.get(key) not in (None, ""):
            settings[key] = config_values[key]
        else:
            settings[key] = default
    settings["seed"] = int(settings["seed"])
    settings["trials"] = int(settings["trials"])
    settings["workers"] = int(settings["workers"])
    settings["min_errors"] = int(settings["min_errors"])
    return settings
