from pathlib import Path

from common.environment import TWRC_OUTPUT_DIR


def mkdir(dir_name):
    Path(dir_name).mkdir(parents=True, exist_ok=True)
    return dir_name


def output_dir():
    return mkdir(TWRC_OUTPUT_DIR)


def default_output_path(file_name):
    return Path(output_dir()).joinpath(file_name)


def ensure_parent(file_path):
    file_path = Path(file_path)
    mkdir(file_path.parent)
    return file_path


def svg_path_for(csv_path):
    return Path(csv_path).with_suffix(".svg")
