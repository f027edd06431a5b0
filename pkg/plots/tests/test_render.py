"""Tests for the figure rendering tool."""

import csv
import json

import pytest

from coilplots.render import (
    RenderError,
    build_cdf_figure,
    build_outlier_figure,
    load_records,
    load_summary,
    main,
    render,
)


def scenario(label, threshold=None):
    sc = {
        "label": label,
        "p_d": 0.9,
        "p_alpha": 0.99,
        "e_d_mean_m": 0.01 + (threshold or 0) * 1e-3,
        "e_alpha_mean_deg": 0.1 + (threshold or 0) * 1e-2,
        "cdf_e_d_m": [[0.001, 0.25], [0.002, 0.5], [0.005, 0.75], [0.01, 1.0]],
        "cdf_e_alpha_deg": [[0.1, 0.25], [0.2, 0.5], [0.5, 0.75], [1.0, 1.0]],
        "coverage_fraction": [0.5, 0.75, 1.0, 0.25],
        "beacon_centers_m": [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
    }
    if threshold is not None:
        sc["snr_threshold_db"] = threshold
    return sc


def write_summary(path, scenarios):
    path.write_text(json.dumps({
        "tool": "coilpose", "version": "0.1.0", "recipe": None,
        "scenarios": scenarios,
    }))
    return path


def write_records(path, rows):
    columns = ["pose_index", "trial", "x_true", "y_true", "z_true",
               "nx_true", "ny_true", "nz_true", "x_est", "y_est", "z_est",
               "nx_est", "ny_est", "nz_est", "e_d_m", "e_alpha_deg",
               "n_used", "converged", "cost"]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for i, (x, y, z, e_d, e_a) in enumerate(rows):
            writer.writerow([i, 0, x, y, z, 0, 0, 1, x, y, z, 0, 0, 1,
                             e_d, e_a, 27, "true", 1e-12])
    return path


class TestLoaders:
    def test_load_summary_ok(self, tmp_path):
        p = write_summary(tmp_path / "s.json", [scenario("a")])
        assert load_summary(p)["scenarios"][0]["label"] == "a"

    def test_missing_scenarios_rejected(self, tmp_path):
        p = tmp_path / "s.json"
        p.write_text(json.dumps({"tool": "coilpose"}))
        with pytest.raises(RenderError, match="scenarios"):
            load_summary(p)

    def test_missing_scenario_key_named(self, tmp_path):
        bad = scenario("a")
        del bad["cdf_e_d_m"]
        p = write_summary(tmp_path / "s.json", [bad])
        with pytest.raises(RenderError, match="cdf_e_d_m"):
            load_summary(p)

    def test_missing_record_column_named(self, tmp_path):
        p = tmp_path / "r.csv"
        with p.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["pose_index", "x_true", "y_true", "z_true", "e_d_m"])
            writer.writerow([0, 0, 0, 0, 0.001])
        with pytest.raises(RenderError, match="e_alpha_deg"):
            load_records(p)


class TestFigures:
    def test_cdf_overlay_two_summaries_two_curves_each(self, tmp_path):
        a = write_summary(tmp_path / "a.json", [scenario("mono")])
        b = write_summary(tmp_path / "b.json", [scenario("tri")])
        fig = build_cdf_figure([("a", load_summary(a)), ("b", load_summary(b))])
        ax_d, ax_a = fig.axes
        assert len(ax_d.lines) == 2
        assert len(ax_a.lines) == 2

    def test_outliers_none_flagged_no_red(self, tmp_path):
        p = write_records(tmp_path / "r.csv",
                          [(0.1, 0.2, 0.3, 0.001, 0.1), (0.2, 0.2, 0.3, 0.002, 0.2)])
        fig = build_outlier_figure(load_records(p))
        labels = [c.get_label() for c in fig.axes[0].collections]
        assert "outliers" not in labels

    def test_outliers_flagged_drawn(self, tmp_path):
        p = write_records(tmp_path / "r.csv",
                          [(0.1, 0.2, 0.3, 0.001, 0.1), (0.2, 0.2, 0.3, 0.05, 0.2)])
        fig = build_outlier_figure(load_records(p))
        labels = [c.get_label() for c in fig.axes[0].collections]
        assert "outliers" in labels


class TestRenderCli:
    def test_cdf_render_and_determinism(self, tmp_path):
        a = write_summary(tmp_path / "a.json", [scenario("mono"), scenario("tri")])
        out1, out2 = tmp_path / "fig1.png", tmp_path / "fig2.png"
        assert main(["--kind", "cdf", "--in", str(a), "--out", str(out1)]) == 0
        assert main(["--kind", "cdf", "--in", str(a), "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_sweep_seven_points(self, tmp_path):
        scs = [scenario(f"th{t}", threshold=float(t))
               for t in (0, 5, 10, 15, 20, 25, 30)]
        p = write_summary(tmp_path / "sweep.json", scs)
        out = tmp_path / "sweep.png"
        assert main(["--kind", "sweep", "--in", str(p), "--out", str(out)]) == 0
        assert out.exists()

    def test_sweep_requires_thresholds(self, tmp_path):
        p = write_summary(tmp_path / "s.json", [scenario("a")])
        assert main(["--kind", "sweep", "--in", str(p),
                     "--out", str(tmp_path / "x.png")]) == 1

    def test_coverage_render(self, tmp_path):
        p = write_summary(tmp_path / "s.json", [scenario("a")])
        out = tmp_path / "cov.png"
        assert main(["--kind", "coverage", "--in", str(p), "--out", str(out)]) == 0
        assert out.exists()

    def test_outliers_render_with_beacons(self, tmp_path):
        r = write_records(tmp_path / "r.csv", [(0.1, 0.2, 0.3, 0.05, 2.0)])
        s = write_summary(tmp_path / "s.json", [scenario("a")])
        out = tmp_path / "outliers.png"
        assert main(["--kind", "outliers", "--in", str(r), "--out", str(out),
                     "--beacons-from", str(s)]) == 0
        assert out.exists()

    def test_kind_aliases(self, tmp_path):
        p = write_summary(tmp_path / "s.json", [scenario("a")])
        out = tmp_path / "alias.png"
        assert main(["--kind", "cdf_overlay", "--in", str(p), "--out", str(out)]) == 0

    def test_unknown_input_fails_cleanly(self, tmp_path):
        assert main(["--kind", "cdf", "--in", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path / "x.png")]) == 1

    def test_render_function_rejects_unknown_kind(self, tmp_path):
        with pytest.raises(RenderError):
            render("hexbin", [str(tmp_path / "s.json")], str(tmp_path / "x.png"))
