import json

import pytest

from bgw_bench.parallel import ENV_MAX_WORKERS
from bgw_bench.tools.run import EXIT_FAILED, EXIT_OK, EXIT_USAGE, main


@pytest.fixture(autouse=True)
def no_worker_limit(monkeypatch):
    monkeypatch.delenv(ENV_MAX_WORKERS, raising=False)


@pytest.fixture
def write_config(tmp_path):
    def write(**sections):
        config = {
            "field": {"family": "log_bump", "delta": "1/16"},
            "grid": {"n": 1, "L": "1/2", "h": "1/128"},
            "norms": {"eta": "1/2", "alpha": "1/2", "s": "1/2", "p": 2},
            "mode": "bmo",
            "output": {"dir": str(tmp_path / "output")},
            **sections,
        }
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config))
        return str(path)

    return write


@pytest.mark.parametrize(
    "k, expected",
    [(0, "a = [1, -1], a_comb = 1"), (1, "a = [1, -3/2, 1/2], a_comb = 1/2")],
)
def test_coeffs(capsys, k, expected):
    assert main(["coeffs", str(k)]) == EXIT_OK
    assert capsys.readouterr().out.strip() == expected


def test_identities(capsys):
    assert main(["-q", "identities", "--trials", "20", "--seed", "3"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("20/20 pass")


def test_identities_with_corrupted_coefficients():
    argv = ["-q", "identities", "--trials", "20", "--corrupt-coefficients"]
    assert main(argv) == EXIT_FAILED


@pytest.mark.parametrize("kind", ["bmo", "holder", "sobolev", "weighted_sup"])
def test_seminorm(capsys, tmp_path, write_config, kind):
    path = write_config()
    assert main(["-q", "seminorm", path, "--kind", kind]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["kind"] == kind
    assert report["value"] > 0
    assert (tmp_path / "output" / "report.json").exists()
    assert (tmp_path / "output" / "sweep.csv").exists()


@pytest.mark.parametrize("mode", ["bmo", "sobolev"])
def test_bgw(capsys, tmp_path, write_config, mode):
    assert main(["-q", "bgw", write_config(mode=mode)]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith(f"bgw_{mode}:")
    assert "chain holds" in out
    saved = json.loads((tmp_path / "output" / "report.json").read_text())
    assert saved["config"]["mode"] == mode
    assert saved["report"]["theorem"] == f"bgw_{mode}"


def test_sharpness(capsys, tmp_path, write_config):
    path = write_config(
        grid={"n": 1, "L": "1/2", "h": "1/256"},
        sweep={"log2_deltas": [-3, -4, -5, -6]},
    )
    assert main(["-q", "sharpness", path]) in (EXIT_OK, EXIT_FAILED)
    assert "checks pass" in capsys.readouterr().out
    assert (tmp_path / "output" / "sweep.csv").read_text().startswith("delta,")


@pytest.mark.parametrize(
    "argv",
    [
        ["bgw", "missing.json"],
        ["plot"],
        ["coeffs"],
        ["identities", "--trials", "0"],
        ["coeffs", "-1"],
    ],
)
def test_usage_errors(argv):
    assert main(argv) == EXIT_USAGE


@pytest.mark.parametrize(
    "sections",
    [
        {"mode": "sobolev", "norms": {"eta": 0.5, "alpha": 0.5, "s": 1, "p": 2}},
        {"grid": {"n": 1, "L": 1, "h": 0.3}},
        {"field": {"family": "gaussian", "sigma": 1}},
    ],
)
def test_config_errors(capsys, write_config, sections):
    assert main(["-q", "bgw", write_config(**sections)]) == EXIT_USAGE
    assert capsys.readouterr().err.startswith("error:")


@pytest.mark.parametrize("kind", ["bmo", "holder", "sobolev"])
def test_seminorm_of_constant_field(capsys, write_config, kind):
    path = write_config(field={"family": "polynomial", "coeffs": [3]})
    assert main(["-q", "seminorm", path, "--kind", kind]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["value"] == 0.0
