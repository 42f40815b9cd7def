import json
import subprocess
import sys

import numpy as np
import pytest

from geodp.cli import main
from geodp.errors import ConfigurationError, InputError
from geodp.harness import SCHEMA, candidate_set, dumps_bundle, evaluate_error, make_mechanism, run_corpus
from geodp.workload import gen_workload, save_histogram, save_workload, Histogram

GAUSS = {"mech": "gaussian", "eps": 1.0, "delta": 1e-6}


def test_gaussian_estimate_within_three_standard_errors():
    A = gen_workload("random_counting", 6, 10, 1).A
    est = evaluate_error(GAUSS, A, 1.0, trials=2000, seed=3)
    assert abs(est.estimate - est.analytic) <= 3 * est.standard_error
    assert est.candidates == ("zero",)


def test_standard_error_scales_with_trials():
    A = gen_workload("random_sign", 5, 8, 0).A
    a = evaluate_error(GAUSS, A, 1.0, trials=2000, seed=1)
    b = evaluate_error(GAUSS, A, 1.0, trials=4000, seed=2)
    assert a.standard_error / b.standard_error == pytest.approx(np.sqrt(2), rel=0.15)


def test_lse_estimate_nondecreasing_in_n():
    A = gen_workload("random_counting", 16, 24, 2).A
    cfg = {"mech": "lse", "eps": 1.0, "delta": 1e-6}
    lo = evaluate_error(cfg, A, 1.0, trials=200, seed=4)
    hi = evaluate_error(cfg, A, 16.0, trials=200, seed=4)
    assert lo.estimate <= hi.estimate


def test_estimate_is_max_over_candidates():
    A = gen_workload("random_counting", 6, 8, 0).A
    est = evaluate_error({"mech": "simple-lse", "eps": 1.0, "delta": 1e-6}, A, 2.0, trials=100, seed=0)
    assert est.estimate == max(est.per_candidate)
    assert len(est.candidates) == 1 + 2 * 8 + 32


def test_candidate_set():
    X, names = candidate_set(4, 3.0, 0)
    assert np.all(X[0] == 0)
    assert np.allclose(np.abs(X[1:9]).sum(axis=1), 3.0)
    assert np.all(np.abs(X[9:]).sum(axis=1) == 3) and np.all(X[9:] >= 0)
    assert len(names) == len(X)
    assert np.array_equal(candidate_set(4, 3.0, 0)[0], X)


def test_trials_minimum_and_unknown_mechanism():
    with pytest.raises(InputError):
        evaluate_error(GAUSS, np.eye(2), 1.0, trials=50)
    with pytest.raises(ConfigurationError):
        make_mechanism({"mech": "laplace"}, np.eye(2), 1.0)


def _corpus(mechs=("gaussian", "lse"), workloads=None):
    workloads = workloads if workloads is not None else [
        {"kind": "identity", "d": 3, "N": 3},
        {"kind": "random_counting", "d": 4, "N": 6, "seed": 1},
        {"kind": "intervals", "d": 6, "N": 3},
    ]
    return {"seed": 7, "trials": 100, "workloads": workloads, "mechanisms": list(mechs),
            "grid": [{"eps": 1.0, "delta": 1e-6, "n": 2.0}]}


def test_empty_corpus():
    bundle, code = run_corpus({"workloads": []})
    assert code == 0 and bundle["estimates"] == [] and bundle["schema"] == SCHEMA
    assert bundle["calibration"]["R_cal"] > 0 and bundle["version"].startswith("geodp-")


def test_three_by_two_corpus():
    bundle, code = run_corpus(_corpus())
    assert code == 0
    assert len(bundle["estimates"]) == 6
    assert len(bundle["lowerbounds"]) == 3 and len(bundle["ratios"]) == 3


def test_corpus_deterministic_and_schedule_independent():
    cfg = _corpus(mechs=("gaussian", "lse", "median"))
    cfg["trials"] = 600
    a = dumps_bundle(run_corpus(cfg)[0])
    b = dumps_bundle(run_corpus(cfg)[0])
    c = dumps_bundle(run_corpus(cfg, workers=4)[0])
    assert a == b == c


def test_failed_assertion_exit_code():
    cfg = _corpus(mechs=("gaussian",))
    cfg["assertions"] = [{"type": "error_below", "mechanism": "gaussian", "value": 1e-6},
                         {"type": "certificate"}]
    bundle, code = run_corpus(cfg)
    assert code == 2 and not bundle["ok"]
    assert [a["passed"] for a in bundle["assertions"]] == [False, True]


def test_config_errors():
    with pytest.raises(ConfigurationError):
        run_corpus({"workloads": [], "bogus": 1})
    with pytest.raises(ConfigurationError):
        run_corpus({"workloads": [{"kind": "identity"}]})
    with pytest.raises(ConfigurationError):
        run_corpus({**_corpus(), "assertions": [{"type": "nope"}]})


def test_corpus_from_file_with_workload_path(tmp_path):
    save_workload(gen_workload("identity", 2, 2), tmp_path / "w.csv")
    cfg = _corpus(mechs=("gaussian",), workloads=[{"path": "w.csv"}])
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    bundle, code = run_corpus(tmp_path / "c.json")
    assert code == 0 and len(bundle["estimates"]) == 1
    with pytest.raises(InputError):
        run_corpus(tmp_path / "missing.json")


def test_cli_round_trip(tmp_path, capsys):
    w = tmp_path / "w.json"
    assert main(["gen", "--kind", "random_counting", "--d", "4", "--N", "6", "--seed", "1", "-o", str(w)]) == 0
    h = tmp_path / "h.json"
    save_histogram(Histogram([1, 0, 0, 1, 0, 0], 2), h)
    assert main(["run", "--mech", "lse", "-w", str(w), "--hist", str(h), "--seed", "3"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["meta"]["mechanism"] == "lse" and len(out["y_tilde"]) == 4
    assert main(["decompose", "-w", str(w)]) == 0
    assert json.loads(capsys.readouterr().out)["k"] >= 1
    assert main(["lowerbound", "-w", str(w), "--mode", "bruteforce", "--ratio"]) == 0
    assert "spec_lb" in json.loads(capsys.readouterr().out)
    assert main(["evaluate", "-w", str(w), "--mech", "gaussian", "--trials", "100"]) == 0
    assert json.loads(capsys.readouterr().out)["trials"] == 100
    assert main(["herdisc", "-w", str(w), "--mode", "approx", "--with-exact"]) == 0
    assert json.loads(capsys.readouterr().out)["measured_factor"] > 0
    assert main(["disc", "-w", str(w)]) == 0


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["decompose", "-w", str(tmp_path / "nope.csv")]) == 4
    big = tmp_path / "big.csv"
    save_workload(gen_workload("random_sign", 12, 40, 0), big)
    assert main(["lowerbound", "-w", str(big), "--mode", "bruteforce", "--limit", "100"]) == 3
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({**_corpus(mechs=("gaussian",)),
                               "assertions": [{"type": "error_below", "mechanism": "gaussian", "value": 0}]}))
    assert main(["corpus", str(cfg), "-o", str(tmp_path / "b.json")]) == 2
    assert json.loads((tmp_path / "b.json").read_text())["ok"] is False


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "geodp", "gen", "--kind", "identity", "--d", "2", "--N", "3"],
                         capture_output=True, text=True)
    assert res.returncode == 4 and "error" in res.stderr
