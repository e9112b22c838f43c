"""
Experiment presets, CSV emission and dB-gap interpolation.
"""
import logging
import math
from dataclasses import dataclass
from dataclasses import replace

import numpy as np
import pandas as pd

from common import parse_snr_grid
from common.analytic import gain_d_over_s
from common.analytic import table1_gain
from common.selection import StrategyKind

SCHEMA_VERSION = 1
FLOAT_FORMAT = "%.12g"

SWEEP_COLUMNS = [
    "schema_version",
    "scheme",
    "n_relays",
    "snr_db",
    "gamma_rd",
    "trials",
    "fidelity",
    "ber_sim",
    "stderr",
    "ber_exact",
    "ber_asymptotic",
    "eval_method",
    "seed",
]

GAIN_COLUMNS = [
    "schema_version",
    "n_relays",
    "gain_s_rs_nc",
    "gain_d_rs_nc",
    "gain_rs_no_nc",
    "gain_d_over_s",
]

SCHEME_LABELS = {
    StrategyKind.MIN_MAX_SINGLE: "S-RS-NC",
    StrategyKind.OPTIMAL_SINGLE: "Optimal single RS-NC",
    StrategyKind.DOUBLE_MAX: "D-RS-NC",
    StrategyKind.OPTIMAL_DUAL: "Optimal dual RS-NC",
    StrategyKind.OPTIMAL_SUBSET: "Optimal RS-NC",
    StrategyKind.ALL_RELAYS_NC: "NC-No-RS",
    StrategyKind.DOUBLE_MAX_NO_NC: "RS-No-NC",
}

ALL_SCHEMES = (
    StrategyKind.MIN_MAX_SINGLE,
    StrategyKind.DOUBLE_MAX,
    StrategyKind.ALL_RELAYS_NC,
    StrategyKind.DOUBLE_MAX_NO_NC,
    StrategyKind.OPTIMAL_DUAL,
)

COMPARISON_SCHEMES = (
    StrategyKind.MIN_MAX_SINGLE,
    StrategyKind.DOUBLE_MAX,
    StrategyKind.DOUBLE_MAX_NO_NC,
    StrategyKind.ALL_RELAYS_NC,
)

FINE_GRID = "0:30:2.5"
COARSE_GRID = "0:30:5"
GAIN_MAX_RELAYS = 16


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    title: str
    schemes: tuple = ()
    relays: tuple = ()
    snr_db: str = COARSE_GRID
    simulate: bool = True
    gains: bool = False

    def with_overrides(self, relays=None, snr_db=None):
        overrides = {}
        if relays:
            overrides["relays"] = tuple(relays)
        if snr_db:
            overrides["snr_db"] = snr_db
        return replace(self, **overrides)

    @property
    def snr_grid(self):
        return tuple(parse_snr_grid(self.snr_db))


def _comparison(name, n_relays):
    return ExperimentPreset(
        name=name,
        title=f"BER performance comparison for {n_relays} relays",
        schemes=COMPARISON_SCHEMES,
        relays=(n_relays,),
    )


PRESETS = {
    "fig2": ExperimentPreset(
        name="fig2",
        title="Min-Max versus optimal single relay selection",
        schemes=(StrategyKind.MIN_MAX_SINGLE, StrategyKind.OPTIMAL_SINGLE),
        relays=(4,),
        snr_db=FINE_GRID,
    ),
    "fig4": ExperimentPreset(
        name="fig4",
        title="Double-Max versus optimal dual relay selection",
        schemes=(StrategyKind.DOUBLE_MAX, StrategyKind.OPTIMAL_DUAL),
        relays=(4,),
        snr_db=FINE_GRID,
    ),
    "fig5": ExperimentPreset(
        name="fig5",
        title="BER reduction relative to NC-No-RS",
        relays=tuple(range(1, GAIN_MAX_RELAYS + 1)),
        simulate=False,
        gains=True,
    ),
    "fig6": ExperimentPreset(
        name="fig6",
        title="Selecting various numbers of relays for 5 relays",
        schemes=(
            StrategyKind.MIN_MAX_SINGLE,
            StrategyKind.DOUBLE_MAX,
            StrategyKind.OPTIMAL_SUBSET,
        ),
        relays=(5,),
        snr_db=FINE_GRID,
    ),
    "fig7": _comparison("fig7", 2),
    "fig8": _comparison("fig8", 4),
    "fig9": _comparison("fig9", 8),
    "fig10": _comparison("fig10", 16),
    "table1": ExperimentPreset(
        name="table1",
        title="Gain relative to NC-No-RS",
        relays=tuple(range(1, GAIN_MAX_RELAYS + 1)),
        simulate=False,
        gains=True,
    ),
}


def get_preset(name):
    try:
        return PRESETS[name.lower()]
    except KeyError:
        raise ValueError(
            f"Unknown preset '{name}', expected one of: {', '.join(PRESETS)}"
        )


def parse_schemes(value):
    if value.strip().lower() == "all":
        return ALL_SCHEMES
    return tuple(StrategyKind.from_name(name.strip()) for name in value.split(","))


def parse_relays(value):
    if isinstance(value, int):
        relays = [value]
    else:
        relays = [int(v) for v in str(value).split(",") if v.strip()]
    if not relays or min(relays) < 1:
        raise ValueError(f"Invalid relay counts '{value}'")
    return tuple(relays)


def _value(member):
    return None if member is None else member.value


def sweep_frame(rows):
    records = [
        {
            "schema_version": SCHEMA_VERSION,
            "scheme": row.scheme.value,
            "n_relays": row.n_relays,
            "snr_db": row.snr_db,
            "gamma_rd": row.gamma_rd,
            "trials": row.trials,
            "fidelity": _value(row.fidelity),
            "ber_sim": row.ber_sim,
            "stderr": row.stderr,
            "ber_exact": row.ber_exact,
            "ber_asymptotic": row.ber_asymptotic,
            "eval_method": row.eval_method,
            "seed": row.seed,
        }
        for row in rows
    ]
    frame = pd.DataFrame.from_records(records, columns=SWEEP_COLUMNS)
    # seeds may exceed int64
    frame["seed"] = frame["seed"].astype(object)
    return frame


def write_csv(frame, file_path):
    frame.to_csv(file_path, index=False, float_format=FLOAT_FORMAT, na_rep="")
    logging.info(f"Wrote {len(frame)} rows to {file_path}")
    return file_path


def write_sweep_csv(rows, file_path):
    return write_csv(sweep_frame(rows), file_path)


def read_csv(file_path):
    return pd.read_csv(file_path, keep_default_na=True)


def table1_rows(n_max=GAIN_MAX_RELAYS):
    return [
        {
            "schema_version": SCHEMA_VERSION,
            "n_relays": n,
            "gain_s_rs_nc": table1_gain(StrategyKind.MIN_MAX_SINGLE, n),
            "gain_d_rs_nc": table1_gain(StrategyKind.DOUBLE_MAX, n),
            "gain_rs_no_nc": table1_gain(StrategyKind.DOUBLE_MAX_NO_NC, n),
            "gain_d_over_s": gain_d_over_s(n),
        }
        for n in range(1, n_max + 1)
    ]


def gain_frame(n_max=GAIN_MAX_RELAYS):
    return pd.DataFrame.from_records(table1_rows(n_max), columns=GAIN_COLUMNS)


def snr_at_ber(snr_db, ber, target):
    """
    SNR in dB where a decreasing BER curve first crosses ``target``, by linear
    interpolation of log10(BER) against dB. None when the curve never crosses.
    """
    snr_db = np.asarray(snr_db, dtype=float)
    ber = np.asarray(ber, dtype=float)
    usable = np.isfinite(ber) & (ber > 0)
    snr_db, ber = snr_db[usable], ber[usable]
    log_target = math.log10(target)
    log_ber = np.log10(ber)
    for i in range(len(ber) - 1):
        upper, lower = log_ber[i], log_ber[i + 1]
        if upper >= log_target >= lower and upper != lower:
            fraction = (upper - log_target) / (upper - lower)
            return float(snr_db[i] + fraction * (snr_db[i + 1] - snr_db[i]))
    return None


def curve(frame, scheme, n_relays, column):
    points = frame[(frame["scheme"] == scheme.value) & (frame["n_relays"] == n_relays)]
    points = points.sort_values("snr_db")
    return points["snr_db"].to_numpy(), points[column].to_numpy(dtype=float)


def db_gap(frame, scheme, reference, n_relays, target, column="ber_exact"):
    """How many dB ``scheme`` needs beyond ``reference`` to reach ``target``."""
    snr_scheme = snr_at_ber(*curve(frame, scheme, n_relays, column), target)
    snr_reference = snr_at_ber(*curve(frame, reference, n_relays, column), target)
    if snr_scheme is None or snr_reference is None:
        return None
    return snr_scheme - snr_reference
