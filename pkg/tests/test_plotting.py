from common.experiments import gain_frame
from common.experiments import read_csv
from common.experiments import write_sweep_csv
from common.montecarlo import SweepSpec
from common.montecarlo import sweep
from common.plotting import render_ber_svg
from common.plotting import render_gain_svg
from common.selection import StrategyKind


def sweep_csv(tmp_path):
    spec = SweepSpec(
        schemes=(StrategyKind.DOUBLE_MAX, StrategyKind.OPTIMAL_DUAL),
        relays=(2,),
        snr_db=(0.0, 10.0, 20.0),
        trials=500,
    )
    return write_sweep_csv(sweep(spec), tmp_path / "sweep.csv")


def test_ber_svg_is_reproducible(tmp_path):
    frame = read_csv(sweep_csv(tmp_path))
    first = render_ber_svg(frame, tmp_path / "first.svg", "BER sweep")
    second = render_ber_svg(frame, tmp_path / "second.svg", "BER sweep")
    content = first.read_bytes()
    assert content.startswith(b"<?xml")
    assert content == second.read_bytes()


def test_gain_svg(tmp_path):
    path = render_gain_svg(gain_frame(8), tmp_path / "gains.svg", "Gain relative to NC-No-RS")
    assert path.exists()
    assert b"<svg" in path.read_bytes()
