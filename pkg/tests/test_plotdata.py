import numpy as np
import pandas as pd
import pytest

from kpp.errors import EmissionError
from kpp.plotdata import PlotKind, emit_plotdata


def _profile_csv(path, lam):
    y = np.linspace(-10.0, 700.0, 711)
    pd.DataFrame({"y": y, "f": 0.5 * (1.0 - np.tanh(lam * y))}).to_csv(path, index=False)
    return path


def test_profiles_bundle(tmp_path):
    results = {"0.3": _profile_csv(tmp_path / "a.csv", 0.3), "0.5": _profile_csv(tmp_path / "b.csv", 0.5)}
    written = emit_plotdata(results, PlotKind.PROFILES, tmp_path / "plots")
    assert [p.name for p in written] == ["0.3.csv", "0.5.csv", "plot.gp"]
    script = written[-1].read_text()
    assert "'0.3.csv'" in script and "'0.5.csv'" in script
    assert "logscale" not in script
    frame = pd.read_csv(written[0])
    assert list(frame.columns) == ["y", "f"]
    assert len(frame) == 711


def test_tail_bundle_cuts_windows(tmp_path):
    results = {"m2": _profile_csv(tmp_path / "p.csv", 0.5)}
    written = emit_plotdata(results, "tail", tmp_path, windows=((0.0, 300.0), (0.0, 600.0)))
    names = [p.name for p in written]
    assert names == ["m2_0_300.csv", "m2_0_600.csv", "plot.gp"]
    short = pd.read_csv(written[0])
    assert short["y"].min() > 0.0 and short["y"].max() < 300.0
    assert pd.read_csv(written[1])["y"].max() < 600.0
    assert written[0].parent.name == "tail"


def test_kscan_uses_log_axis(tmp_path):
    source = tmp_path / "kscan.csv"
    pd.DataFrame({"k": [0.0, 1.0], "residual": [0.0, 1e-3]}).to_csv(source, index=False)
    written = emit_plotdata({"k": source}, PlotKind.KSCAN, tmp_path)
    assert "set logscale y" in written[-1].read_text()


def test_empty_results_write_nothing(tmp_path):
    assert emit_plotdata({}, PlotKind.FRONT, tmp_path) == []
    assert not (tmp_path / "front").exists()


def test_missing_file_raises(tmp_path):
    with pytest.raises(EmissionError):
        emit_plotdata({"x": tmp_path / "absent.csv"}, PlotKind.PROFILES, tmp_path)


def test_wrong_columns_raise(tmp_path):
    source = tmp_path / "history.csv"
    pd.DataFrame({"t": [0.0], "xf": [0.0]}).to_csv(source, index=False)
    with pytest.raises(EmissionError):
        emit_plotdata({"h": source}, PlotKind.PROFILES, tmp_path)


def test_labels_are_made_file_safe(tmp_path):
    written = emit_plotdata({"m=2 lam/0.5": _profile_csv(tmp_path / "p.csv", 0.5)}, PlotKind.PROFILES, tmp_path)
    assert written[0].name == "m_2_lam_0.5.csv"
