import json

import pytest

from looplax.cli import main, parse_checks


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


SOLVE_CFG = {
    "n": 2,
    "frame": {"kind": "diagonal", "scalars": [["0", "-1"]]},
    "g": {"random": {"eps": 0.1}},
    "seed": 11,
    "l": [0, 0],
    "flows": {"1,1": 0.1, "-1,1": 0.05},
}


@pytest.fixture
def cfg_file(tmp_path):
    def write(cfg, name="cfg.json"):
        p = tmp_path / name
        p.write_text(json.dumps(cfg))
        return str(p)

    return write


class TestDeriveAkns:
    def test_text_contains_pdes(self, capsys):
        code, out, _ = run(capsys, "derive-akns", "--format", "text")
        assert code == 0
        assert "i*q_t = q^2*r + (-1/2)*q_xx" in out
        assert "i*r_t = -q*r^2 + (1/2)*r_xx" in out
        assert "u12 = (1/2i)*q_x" in out

    def test_json_shape(self, capsys):
        code, out, _ = run(capsys, "derive-akns", "--format", "json")
        obj = json.loads(out)
        assert code == 0
        assert set(obj["report"]) >= {"q", "r", "u12", "u21", "pde_q", "pde_r"}


class TestSolve:
    def test_trivial_solution_json(self, capsys, cfg_file):
        cfg = dict(SOLVE_CFG, g="identity")
        code, out, _ = run(capsys, "solve", "--config", cfg_file(cfg))
        obj = json.loads(out)
        assert code == 0
        u1 = obj["u_series"][0]
        assert list(u1["coeffs"]) == ["0"]
        assert u1["coeffs"]["0"][0][0] == [0.0, -1.0]

    def test_determinism(self, capsys, cfg_file):
        path = cfg_file(SOLVE_CFG)
        _, out1, _ = run(capsys, "solve", "--config", path)
        _, out2, _ = run(capsys, "solve", "--config", path)
        assert out1 == out2

    def test_provenance_roundtrip_with_verify(self, capsys, cfg_file):
        path = cfg_file(SOLVE_CFG)
        code1, out1, _ = run(capsys, "solve", "--config", path)
        code2, out2, _ = run(capsys, "verify", "--config", path, "--checks", "lax:1,1")
        h1 = json.loads(out1)["provenance"]["config_hash"]
        h2 = json.loads(out2)["provenance"]["config_hash"]
        assert code1 == code2 == 0
        assert h1 == h2

    def test_text_mode(self, capsys, cfg_file):
        code, out, _ = run(capsys, "solve", "--config", cfg_file(SOLVE_CFG), "--format", "text")
        assert code == 0 and "U_1:" in out and "z^0:" in out


class TestVerify:
    def test_residual_report(self, capsys, cfg_file):
        code, out, _ = run(
            capsys,
            "verify",
            "--config",
            cfg_file(SOLVE_CFG),
            "--checks",
            "lax:1,1",
            "lax:2,1",
            "zc:-1,1:1,1",
        )
        obj = json.loads(out)
        assert code == 0
        assert set(obj["residuals"]) == {"lax:1,1", "lax:2,1", "zc:-1,1:1,1"}
        assert all(v <= 1e-6 for v in obj["residuals"].values())

    def test_missing_checks_is_validation_error(self, capsys, cfg_file):
        code, _, err = run(capsys, "verify", "--config", cfg_file(SOLVE_CFG))
        assert code == 2 and "checks" in err


class TestZcCheck:
    def test_symbolic_zero(self, capsys, cfg_file):
        cfg = {
            "mode": "symbolic",
            "kind": "combined",
            "n": 2,
            "depth": 4,
            "seed": 3,
            "pairs": [[-1, 1, 1, 1], [0, 1, 2, 1]],
        }
        code, out, _ = run(capsys, "zc-check", "--config", cfg_file(cfg))
        obj = json.loads(out)
        assert code == 0
        assert all(obj["zero"].values())

    def test_numeric_mode(self, capsys, cfg_file):
        cfg = dict(SOLVE_CFG, mode="numeric", pairs=[[-1, 1, 1, 1]])
        code, out, _ = run(capsys, "zc-check", "--config", cfg_file(cfg))
        obj = json.loads(out)
        assert code == 0
        assert obj["residuals"]["zc:-1,1:1,1"] <= 1e-6


class TestReduce:
    def test_standard_reduction(self, capsys, cfg_file):
        cfg = dict(SOLVE_CFG, flows={"1,1": 0.1})
        code, out, _ = run(
            capsys, "reduce", "--config", cfg_file(cfg), "--target", "standard"
        )
        obj = json.loads(out)
        assert code == 0
        assert obj["kind"] == "standard" and obj["w_series"] is None

    def test_flow_violation_exit_code(self, capsys, cfg_file):
        code, _, err = run(
            capsys, "reduce", "--config", cfg_file(SOLVE_CFG), "--target", "standard"
        )
        assert code == 2 and "negative flows" in err


class TestExitCodes:
    def test_big_cell_exit_3(self, capsys, cfg_file):
        cfg = {
            "n": 2,
            "g": {
                "1": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]],
                "-1": [[[0, 0], [0, 0]], [[0, 0], [1, 0]]],
            },
            "l": [0, 0],
            "flows": {},
        }
        code, _, err = run(capsys, "solve", "--config", cfg_file(cfg))
        assert code == 3 and "singular" in err

    def test_missing_config_exit_2(self, capsys):
        code, _, err = run(capsys, "solve", "--config", "/nonexistent/cfg.json")
        assert code == 2

    def test_bad_flag_exit_2(self, capsys):
        assert main(["solve", "--format", "yaml"]) == 2

    def test_random_without_seed(self, capsys, cfg_file):
        cfg = dict(SOLVE_CFG)
        cfg.pop("seed")
        code, _, err = run(capsys, "solve", "--config", cfg_file(cfg))
        assert code == 2 and "seed" in err


class TestParseChecks:
    def test_grammar(self):
        assert parse_checks(["lax:2,1"]) == [("lax", 2, 1)]
        assert parse_checks(["zc:-1,1:1,2"]) == [("zc", -1, 1, 1, 2)]
        with pytest.raises(ValueError):
            parse_checks(["boom:1"])
