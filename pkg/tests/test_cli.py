import pytest

from dafilt.cli import main

CONFIG = """
[filter]
n_taps = 4
coeff_bits = 8
scheme = "tc"
lut_k = 2
mu_exp = 4

[experiment]
iterations = 60
ensemble = 1
seed = 3
snr_db = 25.0
"""


@pytest.fixture
def config_path(tmp_path):
    p = tmp_path / "exp.toml"
    p.write_text(CONFIG)
    return p


class TestRun:
    def test_writes_curve_csv(self, config_path, tmp_path, capsys):
        out = tmp_path / "curve.csv"
        assert main(["run", "--config", str(config_path), "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "iter,mse,mse_db,coef_err,coef_err_db"
        assert len(lines) == 61
        assert "steady-state mse" in capsys.readouterr().out

    def test_seed_override_changes_output(self, config_path, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["run", "--config", str(config_path), "--out", str(a)])
        main(["run", "--config", str(config_path), "--seed", "99", "--out", str(b)])
        assert a.read_bytes() != b.read_bytes()

    def test_missing_config_is_usage_error(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "nope.toml")]) == 1

    def test_invalid_config_rejected(self, tmp_path, capsys):
        p = tmp_path / "bad.toml"
        p.write_text("[filter]\nn_taps = 4\ncoeff_bits = 8\nmu_exp = 4\n"
                     "[experiment]\niterations = 0\n")
        assert main(["run", "--config", str(p)]) == 1
        assert "error" in capsys.readouterr().err


class TestVerify:
    def test_small_sweep_exit_zero(self, capsys):
        assert main(["verify", "--sweep", "small", "--seed", "11"]) == 0
        out = capsys.readouterr().out
        assert "verify: OK" in out and "FAIL" not in out


class TestTrace:
    def test_cycle_trace_schema(self, config_path, tmp_path):
        out = tmp_path / "trace.csv"
        assert main([
            "trace", "--config", str(config_path), "--iters", "3", "--out", str(out)
        ]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "iter,cycle,addr_bits,lut_value,sign,acc"
        assert len(lines) == 1 + 3 * 8  # B = 8 clocks per iteration
        first = lines[1].split(",")
        assert first[0] == "0" and first[1] == "7"  # LSB clock first
        assert len(first[2]) == 4  # padded address row of N bits

    def test_lut_dump(self, config_path, tmp_path):
        out = tmp_path / "trace.csv"
        lut = tmp_path / "lut.csv"
        main([
            "trace", "--config", str(config_path), "--iters", "1",
            "--out", str(out), "--lut-out", str(lut),
        ])
        lines = lut.read_text().splitlines()
        assert lines[0] == "unit,address,entry_mantissa,entry_real"
        assert len(lines) == 1 + 2 * 4  # 2 units of 2**2 entries


class TestCost:
    def test_table_output(self, capsys):
        assert main([
            "cost", "--scheme", "obc", "--n", "16", "--b", "12", "--k", "4"
        ]) == 0
        out = capsys.readouterr().out
        assert "words_per_unit" in out and "8" in out

    def test_csv_output(self, capsys):
        main([
            "cost", "--scheme", "tc", "--n", "16", "--b", "12", "--k", "4", "--csv"
        ])
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("scheme,variant,n_taps")
        assert lines[1].split(",")[7] == "64"  # total_lut_words

    def test_even_odd_split(self, capsys):
        assert main([
            "cost", "--scheme", "obc", "--n", "8", "--b", "12", "--k", "4",
            "--even-odd-split",
        ]) == 0
        out = capsys.readouterr().out
        assert "approximate" in out and "True" in out

    def test_even_odd_requires_obc(self, capsys):
        assert main([
            "cost", "--scheme", "tc", "--n", "8", "--b", "12", "--k", "4",
            "--even-odd-split",
        ]) == 1

    def test_usage_error_exit_code(self):
        with pytest.raises(SystemExit) as exc:
            main(["cost", "--scheme", "tc"])
        assert exc.value.code == 1

    def test_unknown_command_usage(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 1
