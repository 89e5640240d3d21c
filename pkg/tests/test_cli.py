import csv
import json
import math

import pytest

from thermoform.cli import eval_fraction, main
from thermoform.experiments import ConfigError, ExperimentConfig, load_config, run, validate_config
from thermoform.fixtures import CATALOG, HYPOTHESIS_KEYS, get_fixture, list_fixtures


class TestConfig:
    def test_minimal(self):
        cfg = validate_config({"task": "entropy", "fixture": "golden"})
        assert isinstance(cfg, ExperimentConfig)
        assert cfg.depth == 3

    @pytest.mark.parametrize("raw, path", [
        ({"task": "nope", "fixture": "golden"}, "config.task"),
        ({"task": "entropy"}, "config.fixture"),
        ({"task": "entropy", "fixture": "bogus"}, "config.fixture"),
        ({"task": "entropy", "fixture": "golden", "n_max": "x"}, "config.n_max"),
        ({"task": "entropy", "fixture": "golden", "eps_ladder": [0.1, 0.2]}, "config.eps_ladder"),
        ({"task": "entropy", "fixture": "golden", "surprise": 1}, "config.surprise"),
    ])
    def test_errors_name_field(self, raw, path):
        with pytest.raises(ConfigError, match=path.replace(".", r"\.")):
            validate_config(raw)

    def test_fingerprint_ignores_output_location(self):
        a = validate_config({"task": "entropy", "fixture": "golden", "out": "/tmp/a"})
        b = validate_config({"task": "entropy", "fixture": "golden", "out": "/tmp/b", "workers": 3})
        c = validate_config({"task": "entropy", "fixture": "golden", "n_max": 7})
        fx = get_fixture("golden")
        assert a.fingerprint(fx) == b.fingerprint(fx)
        assert a.fingerprint(fx) != c.fingerprint(fx)

    def test_load_config(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"task": "lambda", "fixture": "full2", "n_max": 5}))
        cfg = load_config(p)
        assert cfg.n_max == 5

    def test_inline_system(self):
        rep = run(validate_config({"task": "lambda", "n_max": 8,
                                   "system": {"variant": "Subshift", "transitions": [[1, 1], [1, 0]]}}))
        assert abs(rep.results["lambda"]["headline"] - math.log((1 + 5 ** 0.5) / 2)) < 0.05


class TestCatalog:
    def test_full_catalog(self):
        names = [e["name"] for e in list_fixtures()]
        assert names == list(CATALOG)
        for e in list_fixtures():
            assert set(e["hypotheses"]) == set(HYPOTHESIS_KEYS)
            assert e["schedule"]["eps_ladder"]

    def test_square_flags(self):
        (sq,) = [e for e in list_fixtures("square") if e["name"] == "square"]
        assert sq["hypotheses"]["local_homeo_on_X_alpha"] is False
        assert sq["hypotheses"]["X_alpha_compatible"] is False

    def test_unknown(self):
        with pytest.raises(KeyError):
            get_fixture("nope")


class TestMain:
    def test_fractions(self):
        assert eval_fraction("2^-5") == eval_fraction("1/32") == 1 / 32

    def test_list_fixtures(self, capsys):
        assert main(["list-fixtures", "golden"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert "golden" in [e["name"] for e in out]
        assert all("golden" in json.dumps(e).lower() for e in out)

    def test_lambda_writes_reports(self, tmp_path, capsys):
        assert main(["lambda", "--fixture", "full2", "--nmax", "6", "--out", str(tmp_path)]) == 0
        js = json.loads((tmp_path / "full2_lambda.json").read_text())
        assert js["results"]["lambda"]["headline"] == pytest.approx(math.log(2))
        assert len(js["fingerprint"]) == 64
        rows = list(csv.DictReader(open(tmp_path / "full2_lambda_trace.csv")))
        assert [int(r["n"]) for r in rows] == list(range(1, 7))
        assert {"n", "value", "bound_flags", "method"} <= set(rows[0])

    def test_output_env(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("THERMOFORM_OUT", str(tmp_path))
        assert main(["omega", "--fixture", "golden", "--nmax", "8"]) == 0
        assert (tmp_path / "golden_omega.json").exists()

    def test_config_file_with_override(self, tmp_path, capsys):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"task": "lambda", "fixture": "golden", "n_max": 4}))
        assert main(["run", "--config", str(p), "--nmax", "6", "--out", str(tmp_path)]) == 0
        js = json.loads((tmp_path / "golden_lambda.json").read_text())
        assert js["config"]["n_max"] == 6

    def test_bad_fixture_exit_code(self, tmp_path, capsys):
        assert main(["entropy", "--fixture", "bogus", "--out", str(tmp_path)]) == 2
        assert "config.fixture" in capsys.readouterr().err

    def test_bad_psi_index(self, tmp_path, capsys):
        assert main(["lambda", "--fixture", "golden", "--psi", "99", "--out", str(tmp_path)]) == 2

    def test_strict_vp(self, tmp_path, capsys):
        assert main(["vp", "--fixture", "golden", "--strict", "--out", str(tmp_path)]) == 0
        assert "PASS" in capsys.readouterr().out

    def test_compat_and_essential(self, tmp_path, capsys):
        assert main(["compat", "--fixture", "xsquared", "--out", str(tmp_path)]) == 0
        assert "INCOMPATIBLE" in capsys.readouterr().out
        assert main(["essential", "--fixture", "e11", "--out", str(tmp_path)]) == 0
        pts = json.loads((tmp_path / "e11_essential.json").read_text())["results"]["essential"]["points"]
        assert pts == [0.0, 1.0]

    def test_tau_table(self, tmp_path, capsys):
        assert main(["tau", "--fixture", "full2", "--depth", "2", "--out", str(tmp_path)]) == 0
        rows = list(csv.DictReader(open(tmp_path / "full2_tau_tau.csv")))
        methods = {r["method"] for r in rows}
        assert {"closed_form", "radon", "partition"} <= methods

    def test_reports_are_deterministic(self, tmp_path, capsys):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["entropy", "--fixture", "golden", "--out", str(a)])
        main(["entropy", "--fixture", "golden", "--out", str(b)])
        assert (a / "golden_entropy.json").read_text() == (b / "golden_entropy.json").read_text()
