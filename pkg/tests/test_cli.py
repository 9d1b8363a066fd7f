import json

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from kpzlab import cli


@pytest.fixture
def store(tmp_path, monkeypatch):
    path = tmp_path / "store.jsonl"
    monkeypatch.setenv("KPZLAB_STORE", str(path))
    return path


def records(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


def test_simulate_qtasep_persists_ensemble(store, capsys):
    code = cli.main(["simulate", "qtasep", "q=0.5", "t=1", "n=8", "replicas=500", "seed=42"])
    assert code == 0
    rec = records(store)[-1]
    assert rec["config"]["replicas"] == 500 and rec["result"]["replicas"] == 500
    assert "x_8" in rec["result"]["observables"]
    assert set(rec) >= {"config", "result", "verdict", "wall_time", "version", "timestamp"}


def test_rerun_is_idempotent(store):
    argv = ["simulate", "tasep", "t=5", "replicas=50", "seed=3"]
    cli.main(argv)
    cli.main(argv)
    a, b = records(store)
    assert a["result"] == b["result"] and a["config"] == b["config"]


def test_unknown_key_is_config_error(store, capsys):
    assert cli.main(["moment", "qtasep", "bogus=1"]) == 2
    assert "unknown key" in capsys.readouterr().err
    assert not store.exists()


def test_unknown_command_and_target(store):
    assert cli.main(["explode"]) == 2
    assert cli.main(["moment", "tasep"]) == 2
    assert cli.main(["fredholm", "kpz", "zeta=oops"]) == 2


def test_precedence_file_then_positional_then_flag(store, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# a comment\nt = 0.25\nq = 0.3\nn = 2,1\n")
    assert cli.main(["moment", "qtasep", "--config", str(cfg), "q=0.4", "--q", "0.6"]) == 0
    rec = records(store)[-1]
    assert rec["config"]["t"] == 0.25 and rec["config"]["q"] == 0.6
    assert rec["config"]["n"] == [2, 1]


def test_module_error_recorded_verbatim(store):
    # positive real zeta sits on the branch cut of the kernel
    assert cli.main(["fredholm", "qtasep", "zeta=0.3"]) == 1
    rec = records(store)[-1]
    assert rec["verdict"] == "ERROR" and rec["error"]["type"] == "BranchCutError"
    assert "branch cut" in rec["error"]["message"]


def test_verify_pass_and_fail_exit_codes(store):
    assert cli.main(["verify", "algebra"]) == 0
    assert records(store)[-1]["verdict"] == "PASS"
    # 30 replicas carry sampling noise well above the 0.05 KS threshold
    assert cli.main(["asymptotics", "ks", "model=tasep", "L=100", "replicas=30"]) == 1
    assert records(store)[-1]["verdict"] == "FAIL"


def test_regression_fast_subset(store):
    assert cli.main(["verify", "regression", "suite=fast", "only=13,8"]) == 0
    rec = records(store)[-1]
    assert [c["criterion"] for c in rec["result"]["criteria"]] == [13, 8]
    assert rec["result"]["sentinel"]["ok"]


def test_regression_tampered_sentinel_fails(store):
    assert cli.main(["verify", "regression", "only=13", "sentinel_tol=0"]) == 1
    assert records(store)[-1]["verdict"] == "FAIL"


def test_table_outputs(store, tmp_path):
    out = tmp_path / "fgue.csv"
    assert cli.main(["table", "fgue", "smin=-3", "smax=0", "step=0.5", f"output={out}"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "s,F,density" and len(lines) == 8
    out2 = tmp_path / "lyap.csv"
    assert cli.main(["table", "lyapunov", "nus=1,2", "--output", str(out2)]) == 0
    assert out2.read_text().splitlines()[0].startswith("nu,gamma_tilde_1")


def test_store_is_append_only(store):
    cli.main(["asymptotics", "lyapunov", "p=2"])
    first = store.read_text()
    cli.main(["asymptotics", "constants"])
    assert store.read_text().startswith(first) and len(records(store)) == 2


def test_help_is_config_error():
    assert cli.main([]) == 2


def test_csv_format(store, capsys):
    assert cli.main(["asymptotics", "constants", "nu=2", "format=csv"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "key,value" and any(line.startswith("result.scale,") for line in out)


@given(st.integers(0, 2 ** 64 - 1), st.floats(0.1, 0.9), st.floats(0.1, 2.0),
       st.integers(1, 6), st.integers(1, 40))
@settings(max_examples=20, deadline=None,
          suppress_health_check=[HealthCheck.function_scoped_fixture])
def test_replay_equality(store, seed, q, t, n, replicas):
    argv = ["simulate", "qtasep", f"q={q}", f"t={t}", f"n={n}", f"replicas={replicas}",
            f"seed={seed}"]
    assert cli.main(argv) == 0
    first = records(store)[-1]
    # re-run from the stored echo alone
    echo = [f"{k}={','.join(map(str, v)) if isinstance(v, list) else v}"
            for k, v in first["config"].items()]
    assert cli.main(["simulate", "qtasep", *echo]) == 0
    assert records(store)[-1]["result"] == first["result"]
