"""End-to-end tests of the distal-lab command line."""

import asyncio
from pathlib import Path

import pytest

from distal_lab.commands.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, async_main, build_parser
from distal_lab.commands.experiments import run_experiment
from distal_lab.models.config import load_experiment_config
from distal_lab.reports import Report, ReportError, read_csv, write_csv

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

SMALL_LEMMAS = """\
kind = "lemmas"
seed = 5

[lemmas]
trials = 200
randomp_gamma = [0.5]
randomp_N = [100]
randomp_variance = false
del_instances = 20
del_cells = 6
simple_p = [0.5]
simple_L = [0]
simple_n = [1000]
"""


def run(argv):
    return asyncio.run(async_main(argv))


@pytest.fixture(autouse=True)
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    for key in ("DISTAL_LAB_THREADS", "DISTAL_LAB_LOG_LEVEL", "DISTAL_LAB_OUTPUT_DIR"):
        monkeypatch.delenv(key, raising=False)
    return tmp_path


class TestLemmasCommand:
    """distal-lab lemmas."""

    def test_small_grid_passes(self, workdir):
        """A small lemma grid exits 0 and writes a lemmas CSV."""
        config = workdir / "lemmas.toml"
        config.write_text(SMALL_LEMMAS)
        out = workdir / "out" / "lemmas.csv"
        assert run(["lemmas", "--config", str(config), "--out", str(out)]) == EXIT_OK
        report = read_csv(out)
        assert report.kind == "lemmas"
        assert len(report.rows) == 3

    def test_output_is_deterministic(self, workdir):
        """Same seed, same bytes, whatever the thread count."""
        config = workdir / "lemmas.toml"
        config.write_text(SMALL_LEMMAS)
        first, second = workdir / "a.csv", workdir / "b.csv"
        assert run(["lemmas", "--config", str(config), "--out", str(first), "--threads", "1"]) == 0
        assert run(["lemmas", "--config", str(config), "--out", str(second), "--threads", "3"]) == 0
        assert first.read_bytes() == second.read_bytes()

    def test_flags_override_the_file(self, workdir):
        """--trials replaces the value from the file."""
        config = workdir / "lemmas.toml"
        config.write_text(SMALL_LEMMAS)
        first, second = workdir / "a.csv", workdir / "b.csv"
        run(["lemmas", "--config", str(config), "--out", str(first)])
        run(["lemmas", "--config", str(config), "--out", str(second), "--trials", "100"])
        assert "trials=200" in first.read_text()
        assert "trials=100" in second.read_text()


class TestErgodicityCommand:
    """distal-lab ergodicity."""

    def product_args(self, out, expect):
        # fmt: off
        return [
            "ergodicity",
            "--system", "rotation:golden",
            "--group", "torus:1",
            "--cocycle", "const:0",
            "--n", "2000",
            "--starts", "2",
            "--base-modes", "1",
            "--fiber-limit", "2",
            "--threshold", "0.4",
            "--expect", expect,
            "--out", str(out),
        ]
        # fmt: on

    def test_expected_non_ergodic(self, workdir):
        """The product system is flagged, as expected."""
        out = workdir / "product.csv"
        assert run(self.product_args(out, "non-ergodic")) == EXIT_OK
        report = read_csv(out)
        assert any(row[5] == "true" for row in report.rows)

    def test_expectation_mismatch_exits_1(self, workdir):
        """Expecting ergodicity of the product system fails the run."""
        assert run(self.product_args(workdir / "product.csv", "ergodic")) == EXIT_FAILED

    def test_rotation_alone(self, workdir):
        """group = none scores the base rotation."""
        out = workdir / "rotation.csv"
        argv = ["ergodicity", "--group", "none", "--n", "1000", "--base-modes", "1", "--out", str(out)]
        assert run(argv + ["--expect", "ergodic"]) == EXIT_OK
        assert read_csv(out).rows[0][0] == "rotation:golden"


class TestUsageErrors:
    """Configuration problems exit 2."""

    def test_unknown_key(self, workdir):
        """Unknown keys in the experiment file are usage errors."""
        config = workdir / "bad.toml"
        config.write_text('kind = "lemmas"\n\n[lemmas]\ntrails = 10\n')
        assert run(["lemmas", "--config", str(config)]) == EXIT_USAGE

    def test_kind_mismatch(self, workdir):
        """A lemmas file cannot drive the tower command."""
        config = workdir / "lemmas.toml"
        config.write_text(SMALL_LEMMAS)
        assert run(["tower", "--config", str(config)]) == EXIT_USAGE

    def test_bad_system_descriptor(self, workdir):
        """Unparseable descriptors are usage errors."""
        assert run(["tower", "--system", "shift:2", "--group", "none"]) == EXIT_USAGE

    def test_bad_settings(self, monkeypatch):
        """An invalid DISTAL_LAB_THREADS is reported before anything runs."""
        monkeypatch.setenv("DISTAL_LAB_THREADS", "zero")
        assert run(["lemmas"]) == EXIT_USAGE

    def test_subcommand_required(self):
        """argparse rejects a bare invocation."""
        with pytest.raises(SystemExit):
            build_parser().parse_args([])


class TestTowerCommand:
    """distal-lab tower."""

    def test_odometer_tower_with_dump(self, workdir):
        """The tower report lists every level and the dump file is written."""
        out = workdir / "tower.csv"
        # fmt: off
        argv = [
            "tower",
            "--system", "odometer:8",
            "--group", "none",
            "--height", "4",
            "--eps", "1e-6",
            "--interval", "0.25",
            "--dump",
            "--out", str(out),
        ]
        # fmt: on
        assert run(argv) == EXIT_OK
        report = read_csv(out)
        assert {row[1] for row in report.rows} == {"0", "1", "2", "3"}
        dump = (workdir / "tower.levels.txt").read_text().splitlines()
        assert len(dump) == len(report.rows)

    def test_unreachable_coverage_exits_1(self, workdir):
        """A tower that cannot be built fails the run."""
        argv = ["tower", "--system", "odometer:3", "--group", "none", "--height", "16"]
        assert run(argv + ["--eps", "1e-6", "--out", str(workdir / "t.csv")]) == EXIT_FAILED


class TestPlotdata:
    """distal-lab plotdata."""

    def test_ergodicity_plot(self, workdir):
        """Max score per n, one line each, under a header."""
        report = Report("ergodicity")
        report.add(("rotation:golden", "u1", 0, 100, 0.01, False))
        report.add(("rotation:golden", "u1", 1, 100, 0.02, False))
        report.add(("rotation:golden", "u1", 0, 1000, 0.001, False))
        path = write_csv(report, workdir / "erg.csv")
        assert run(["plotdata", str(path)]) == EXIT_OK
        lines = (workdir / "erg.dat").read_text().splitlines()
        assert lines == ["n score", "100 0.02", "1000 0.001"]

    def test_perturb_plot_skips_summary_rows(self, workdir):
        """Summary rows without a k0 are left out."""
        report = Report("perturb")
        report.add((0, "0.25", 0.1, 0.0025, True))
        report.add((0, "-", 0.1, 0.0025, True))
        path = write_csv(report, workdir / "perturb.csv")
        out = workdir / "perturb.dat"
        assert run(["plotdata", str(path), "--out", str(out)]) == EXIT_OK
        assert out.read_text().splitlines() == ["k0 fraction", "0.25 0.1"]

    def test_empty_report_gives_header_only(self, workdir):
        """A report with no rows produces just the header."""
        path = write_csv(Report("ergodicity"), workdir / "empty.csv")
        assert run(["plotdata", str(path)]) == EXIT_OK
        assert (workdir / "empty.dat").read_text() == "n score\n"

    def test_lemma_reports_have_no_plot(self, workdir):
        """Only ergodicity and perturb reports plot."""
        path = write_csv(Report("lemmas"), workdir / "lemmas.csv")
        assert run(["plotdata", str(path)]) == EXIT_USAGE

    def test_unknown_header(self, workdir):
        """Files with another header are rejected."""
        path = workdir / "other.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ReportError):
            read_csv(path)


class TestShippedConfigs:
    """The experiment files under configs/."""

    @pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.toml")), ids=lambda p: p.stem)
    def test_configs_load(self, path):
        """Every shipped config validates."""
        config = load_experiment_config(path)
        assert getattr(config, config.kind) is not None
        assert Path(config.output).suffix == ".csv"

    @pytest.mark.slow
    def test_lemma_acceptance_grid(self, workdir):
        """The full lemma grid passes."""
        out = workdir / "lemmas.csv"
        assert run(["lemmas", "--config", str(CONFIG_DIR / "lemmas.toml"), "--out", str(out)]) == 0

    @pytest.mark.slow
    def test_simple_perturbation_acceptance(self, workdir):
        """All 32 seeds of the circle sweep land in U within delta."""
        config = load_experiment_config(CONFIG_DIR / "perturb_simple.toml")
        report = asyncio.run(run_experiment(config, threads=4))
        assert report.passed
        summary = [row for row in report.rows if row[1] == "-"]
        assert len(summary) == 32
        assert all(row[4] for row in summary)
        assert all(row[2] > row[3] for row in summary)

    @pytest.mark.slow
    def test_relative_perturbation_acceptance(self, workdir):
        """Some seed reaches c_a on at least 1 - b of the sampled components."""
        config = load_experiment_config(CONFIG_DIR / "perturb_relative.toml")
        report = asyncio.run(run_experiment(config, threads=4))
        assert report.passed
        shares = {}
        for seed, k0, fraction, c_a, _ in report.rows:
            if k0 != "-":
                shares.setdefault(seed, []).append(fraction >= c_a)
        assert len(shares) == 32
        assert max(sum(hits) / len(hits) for hits in shares.values()) >= 1.0 - 0.2


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
