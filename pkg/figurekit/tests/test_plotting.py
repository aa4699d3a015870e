import numpy as np
import pytest

from figurekit import PlotSpec, aggregate_series, load_rows, render

HEADER = ("grid_rx,grid_tx,T,m,snr_db,algorithm,trial,eta,nmse,"
          "support_size,final_residual,wall_time_ms,seed")


def write_csv(path, rows):
    path.write_text(HEADER + "\n" + "\n".join(rows) + ("\n" if rows else ""))
    return str(path)


def sweep_rows(grids=((32, 32),), ms=(12,), Ts=(20, 40), algs=("COMP", "PPCOMP"),
               trials=3, eta_fn=None):
    rows = []
    rng = np.random.default_rng(0)
    for gx, gy in grids:
        for m in ms:
            for T in Ts:
                for alg in algs:
                    for trial in range(trials):
                        eta = eta_fn(alg, m, (gx, gy), T, trial) if eta_fn else rng.uniform(0.2, 0.8)
                        rows.append(
                            f"{gx},{gy},{T},{m},1.0e+01,{alg},{trial},{eta:.12e},"
                            f"5.0e-01,4,1.0e-03,1.0,123"
                        )
    return rows


class TestLoadRows:
    def test_missing_columns_reported(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError, match="missing required columns"):
            load_rows(str(p), "m")

    def test_empty_body_rejected(self, tmp_path):
        p = write_csv(tmp_path / "empty.csv", [])
        with pytest.raises(ValueError, match="no data rows"):
            load_rows(p, "m")


class TestAggregateSeries:
    def test_series_by_m_counts(self, tmp_path):
        p = write_csv(tmp_path / "raw.csv", sweep_rows(ms=(4, 8, 12)))
        series = aggregate_series(load_rows(p, "m"), "m")
        assert len(series) == 6  # 2 algorithms x 3 measurement counts
        assert "COMP, m=4" in series
        assert "PPCOMP, m=12" in series

    def test_series_by_grid_labels(self, tmp_path):
        p = write_csv(tmp_path / "raw.csv", sweep_rows(grids=((32, 32), (64, 64))))
        series = aggregate_series(load_rows(p, "grid"), "grid")
        assert set(series) == {
            "COMP, grid=32x32", "COMP, grid=64x64",
            "PPCOMP, grid=32x32", "PPCOMP, grid=64x64",
        }

    def test_series_by_algorithm(self, tmp_path):
        p = write_csv(tmp_path / "raw.csv", sweep_rows())
        series = aggregate_series(load_rows(p, "algorithm"), "algorithm")
        assert set(series) == {"COMP", "PPCOMP"}

    def test_mean_and_std_values(self, tmp_path):
        etas = {0: 0.2, 1: 0.4, 2: 0.6}
        p = write_csv(tmp_path / "raw.csv", sweep_rows(
            Ts=(40,), algs=("COMP",), eta_fn=lambda a, m, g, T, tr: etas[tr]))
        series = aggregate_series(load_rows(p, "m"), "m")
        data = series["COMP, m=12"]
        assert data["T"] == [40]
        assert data["eta_mean"][0] == pytest.approx(0.4)
        assert data["eta_std"][0] == pytest.approx(np.std([0.2, 0.4, 0.6]))

    def test_row_order_does_not_matter(self, tmp_path):
        rows = sweep_rows(ms=(4, 12))
        p1 = write_csv(tmp_path / "a.csv", rows)
        p2 = write_csv(tmp_path / "b.csv", rows[::-1])
        s1 = aggregate_series(load_rows(p1, "m"), "m")
        s2 = aggregate_series(load_rows(p2, "m"), "m")
        assert s1 == s2

    def test_single_trial_std_zero(self, tmp_path):
        p = write_csv(tmp_path / "raw.csv", sweep_rows(trials=1))
        series = aggregate_series(load_rows(p, "m"), "m")
        for data in series.values():
            assert all(s == 0.0 for s in data["eta_std"])


class TestRender:
    def test_writes_image_and_returns_series(self, tmp_path):
        p = write_csv(tmp_path / "raw.csv", sweep_rows(ms=(4, 8, 12)))
        out = tmp_path / "fig.png"
        series = render(PlotSpec(csv_path=p, series="m", out_path=str(out)))
        assert out.exists() and out.stat().st_size > 0
        assert len(series) == 6

    def test_band_flag(self, tmp_path):
        p = write_csv(tmp_path / "raw.csv", sweep_rows())
        out = tmp_path / "fig.png"
        series = render(PlotSpec(csv_path=p, series="m", out_path=str(out), band=True))
        assert out.exists()
        assert all("eta_std" in d for d in series.values())

    def test_single_coordinate_single_flat_line(self, tmp_path):
        p = write_csv(tmp_path / "raw.csv", sweep_rows(
            Ts=(40, 80), algs=("COMP",), eta_fn=lambda *a: 0.5))
        series = render(PlotSpec(csv_path=p, series="m", out_path=str(tmp_path / "f.png")))
        assert len(series) == 1
        assert series["COMP, m=12"]["eta_mean"] == [0.5, 0.5]

    def test_empty_body_writes_nothing(self, tmp_path):
        p = write_csv(tmp_path / "empty.csv", [])
        out = tmp_path / "fig.png"
        with pytest.raises(ValueError):
            render(PlotSpec(csv_path=p, series="m", out_path=str(out)))
        assert not out.exists()

    def test_invalid_series_key(self, tmp_path):
        with pytest.raises(ValueError):
            PlotSpec(csv_path="x.csv", series="snr", out_path="y.png")


class TestCli:
    def test_plot_command(self, tmp_path, capsys):
        from figurekit.cli import main

        p = write_csv(tmp_path / "raw.csv", sweep_rows())
        out = tmp_path / "fig.png"
        rc = main(["plot", "--csv", p, "--series", "m", "--out", str(out), "--band"])
        assert rc == 0
        assert out.exists()

    def test_plot_bad_csv_nonzero_exit(self, tmp_path, capsys):
        from figurekit.cli import main

        p = tmp_path / "bad.csv"
        p.write_text("x,y\n")
        rc = main(["plot", "--csv", str(p), "--series", "m", "--out",
                   str(tmp_path / "f.png")])
        assert rc == 1
