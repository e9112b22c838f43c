import math
import re

SNR_GRID_RGX = r"^\s*(-?[\d.]+)\s*:\s*(-?[\d.]+)\s*:\s*([\d.]+)\s*$"


def db_to_linear(snr_db):
    return 10.0 ** (snr_db / 10.0)


def linear_to_db(value):
    return 10.0 * math.log10(value)


def parse_snr_grid(grid):
    """Parse an inclusive ``start:stop:step`` dB grid (or a single value)."""
    matches = re.findall(SNR_GRID_RGX, grid)
    if not matches:
        try:
            return [float(grid)]
        except ValueError:
            raise ValueError(f"Invalid SNR grid '{grid}', expected start:stop:step")

    start, stop, step = (float(v) for v in matches[0])
    if step <= 0:
        raise ValueError(f"SNR grid step must be positive, got {step}")
    if stop < start:
        raise ValueError(f"SNR grid stop {stop} is below start {start}")

    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    # 0:30:2.5 must give 12.5, not 12.500000000000002
    return [round(start + i * step, 10) for i in range(count)]
