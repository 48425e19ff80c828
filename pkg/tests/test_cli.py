"""Command line surface: outputs, exit codes, and byte-level determinism."""

import json
import math

import numpy as np
import pytest

from paulishadow import cli, exact
from paulishadow.channels import (
    PauliChannel,
    ProductChannel,
    amplitude_damping_ptm,
    exact_transfer_matrix,
    reference_product_channel,
    save_channel,
)
from paulishadow.clifford import CliffordCircuit, Gate
from paulishadow.observables import Observable
from paulishadow.paulis import PauliString, enumerate_low_weight
from paulishadow.shadows import plan_sample_size


def P(label):
    return PauliString.from_label(label)


@pytest.fixture
def damping_channel_path(tmp_path):
    path = tmp_path / "damping.json"
    save_channel(ProductChannel([amplitude_damping_ptm(0.2), np.eye(4)]), path)
    return str(path)


@pytest.fixture
def x_observable_path(tmp_path):
    path = tmp_path / "obs.txt"
    Observable(1, {P("X"): 1.0}).save(path)
    return str(path)


# -- plan ----------------------------------------------------------------------


def test_plan_prints_inputs_and_count(capsys):
    rc = cli.main(
        [
            "plan", "--epsilon", "0.1", "--delta", "0.1", "--n", "2",
            "--k", "2", "--degree", "4", "--min-eigenvalue", "0.384",
        ]
    )
    assert rc == 0
    out = capsys.readouterr().out
    lines = dict(line.split(": ") for line in out.strip().splitlines())
    assert lines["epsilon"] == "0.1" and lines["delta"] == "0.1"
    assert lines["n"] == "2" and lines["k"] == "2" and lines["degree"] == "4"
    assert int(lines["records"]) == plan_sample_size(0.1, 0.1, 2, 2, 4, 0.384)


def test_plan_rejects_bad_inputs(capsys):
    rc = cli.main(
        [
            "plan", "--epsilon", "0", "--delta", "0.1", "--n", "2",
            "--k", "2", "--degree", "4", "--min-eigenvalue", "0.384",
        ]
    )
    assert rc == 1


# -- learn ---------------------------------------------------------------------


def learn_args(out_path, shadows="20000"):
    return [
        "learn", "--channel", "reference", "--k", "2",
        "--shadows", shadows, "--seed", "7", "--out", str(out_path),
    ]


def test_learn_csv_contents(tmp_path):
    out = tmp_path / "learn.csv"
    assert cli.main(learn_args(out)) == 0
    lines = out.read_text().splitlines()
    comments = [l for l in lines if l.startswith("#")]
    assert comments[0].startswith("# paulishadow learn")
    header_index = lines.index("pauli,estimate,exact,abs_error")
    rows = lines[header_index + 1:]
    assert len(rows) == 16  # all weight <= 2 strings on 2 qubits
    ch = reference_product_channel()
    by_label = {}
    for row in rows:
        label, est, truth, err = row.split(",")
        by_label[label] = (float(est), float(truth), float(err))
    assert set(by_label) == {str(p) for p in enumerate_low_weight(2, 2)}
    for p in enumerate_low_weight(2, 2):
        est, truth, err = by_label[str(p)]
        assert truth == pytest.approx(ch.eigenvalue(p), abs=1e-10)
        assert err == pytest.approx(abs(est - truth), abs=1e-10)
        # weight-2 entries fluctuate with scale 27/sqrt(N) ~ 0.19 at this size
        assert abs(est - truth) < 0.25
    assert by_label["II"][0] == 1.0


def test_learn_is_byte_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    cli.main(learn_args(a))
    cli.main(learn_args(b))
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.csv"
    cli.main(learn_args(c, shadows="25000"))
    assert a.read_bytes() != c.read_bytes()


def test_learn_stdout_mode(capsys):
    rc = cli.main(
        ["learn", "--channel", "reference", "--k", "1", "--shadows", "5000", "--seed", "1"]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "pauli,estimate,exact,abs_error" in out
    assert len([l for l in out.splitlines() if l and not l.startswith("#")]) == 1 + 7


def test_learn_missing_channel_file_exits_one(tmp_path, capsys):
    rc = cli.main(learn_args(tmp_path / "x.csv")[:2] + ["/nope/nothing.json"] + learn_args(tmp_path / "x.csv")[3:])
    assert rc == 1


# -- recover -------------------------------------------------------------------


def recover_args(extra=()):
    return [
        "recover", "--channel", "reference", "--observable", "heisenberg",
        "--n", "2", "--shadows", "30000", "--seed", "5", "--state-seed", "9",
    ] + list(extra)


def test_recover_exact_eigenvalues_hits_ideal(tmp_path, capsys):
    out = tmp_path / "report.json"
    rc = cli.main(recover_args(["--exact-eigenvalues", "--out", str(out)]))
    assert rc == 0
    printed = capsys.readouterr().out
    assert printed.startswith("recovered: ")
    report = json.loads(out.read_text())
    assert report["absolute_error"] < 1e-10
    assert report["provenance"] == "diagonal"
    assert set(report["terms"])  # non-empty correction terms


def test_recover_baseline_shows_noisy_gap(capsys):
    rc = cli.main(recover_args(["--baseline"]))
    assert rc == 0
    out = capsys.readouterr().out
    assert out.startswith("baseline: ")
    baseline_err = float(out.splitlines()[2].split(": ")[1])
    cli.main(recover_args(["--exact-eigenvalues"]))
    recovered_err = float(capsys.readouterr().out.splitlines()[2].split(": ")[1])
    assert recovered_err < baseline_err  # correction beats doing nothing
    assert baseline_err > 1e-3


def test_recover_sampled_close_to_ideal(capsys):
    rc = cli.main(recover_args())
    assert rc == 0
    err = float(capsys.readouterr().out.splitlines()[2].split(": ")[1])
    assert err < 0.2


def test_recover_floor_exit_two(tmp_path, x_observable_path, capsys):
    # lambda_X = 0 for this channel, so the X direction is unrecoverable
    dead = tmp_path / "dead.json"
    save_channel(PauliChannel.from_qubit_probs([(0.5, 0.0, 0.0, 0.5)]), dead)
    rc = cli.main(
        [
            "recover", "--channel", str(dead), "--observable", x_observable_path,
            "--exact-eigenvalues",
        ]
    )
    assert rc == 2
    assert "unrecoverable" in capsys.readouterr().err


def test_recover_config_error_exit_one(capsys):
    rc = cli.main(
        ["recover", "--channel", "reference", "--observable", "heisenberg", "--n", "3"]
    )
    assert rc == 1  # 3-qubit observable against the 2-qubit channel
    assert capsys.readouterr().err != ""


def test_recover_general_damping_channel(damping_channel_path, capsys):
    rc = cli.main(
        [
            "recover-general", "--channel", damping_channel_path,
            "--observable", "heisenberg", "--n", "2",
            "--exact-eigenvalues", "--state-seed", "3",
        ]
    )
    assert rc == 0
    out = capsys.readouterr().out
    err = float(out.splitlines()[2].split(": ")[1])
    assert err < 1e-10


def test_recover_general_sampled(damping_channel_path, capsys):
    rc = cli.main(
        [
            "recover-general", "--channel", damping_channel_path,
            "--observable", "heisenberg", "--n", "2",
            "--shadows", "200000", "--seed", "2", "--state-seed", "3",
        ]
    )
    assert rc == 0
    err = float(capsys.readouterr().out.splitlines()[2].split(": ")[1])
    assert err < 0.25


# -- mitigate ------------------------------------------------------------------


@pytest.fixture
def circuit_path(tmp_path):
    circuit = CliffordCircuit(
        2,
        (Gate("H", (0,)), Gate("CNOT", (0, 1)), Gate("S", (1,))),
        noise={
            "H": PauliChannel.from_qubit_probs([(0.9, 0.04, 0.03, 0.03)]),
            "CNOT": PauliChannel.from_qubit_probs(
                [(0.92, 0.03, 0.03, 0.02), (0.94, 0.02, 0.02, 0.02)]
            ),
            "S": PauliChannel.from_qubit_probs([(0.95, 0.02, 0.02, 0.01)]),
        },
    )
    path = tmp_path / "circuit.json"
    circuit.save(path)
    return str(path)


def test_mitigate_exact_estimates(circuit_path, capsys):
    rc = cli.main(
        [
            "mitigate", "--circuit", circuit_path, "--observable", "heisenberg",
            "--n", "2", "--exact-eigenvalues", "--state-seed", "4",
        ]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert out.startswith("recovered: ")
    err = float(out.splitlines()[2].split(": ")[1])
    assert err < 1e-10


def test_mitigate_sampled_and_baseline(circuit_path, capsys):
    rc = cli.main(
        [
            "mitigate", "--circuit", circuit_path, "--observable", "heisenberg",
            "--n", "2", "--shadows", "40000", "--seed", "6", "--state-seed", "4",
        ]
    )
    assert rc == 0
    sampled_err = float(capsys.readouterr().out.splitlines()[2].split(": ")[1])
    assert sampled_err < 0.2
    rc = cli.main(
        [
            "mitigate", "--circuit", circuit_path, "--observable", "heisenberg",
            "--n", "2", "--baseline", "--state-seed", "4",
        ]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert out.startswith("baseline: ")
    baseline_err = float(out.splitlines()[2].split(": ")[1])
    assert sampled_err < baseline_err


def test_mitigate_bad_circuit_file_exit_one(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    rc = cli.main(
        ["mitigate", "--circuit", str(bad), "--observable", "heisenberg", "--n", "2"]
    )
    assert rc == 1


# -- fig2 ----------------------------------------------------------------------


def fig2_args(out_path, extra=()):
    return [
        "fig2", "--sweep", "2000,4000", "--states", "20", "--repeats", "3",
        "--seed", "11", "--out", str(out_path),
    ] + list(extra)


def parse_fig2(path):
    lines = path.read_text().splitlines()
    header = lines.index("N,trial,mae_raw,mae_recovered,r,std_r")
    per_trial, summary = {}, {}
    for row in lines[header + 1:]:
        count, trial, mae_raw, mae_rec, r, std_r = row.split(",")
        if trial == "summary":
            summary[int(count)] = (float(mae_raw), float(mae_rec), float(r), float(std_r))
        else:
            per_trial.setdefault(int(count), []).append(
                (int(trial), float(mae_raw), float(mae_rec), float(r), std_r)
            )
    return lines, per_trial, summary


def test_fig2_csv_structure(tmp_path):
    out = tmp_path / "fig2.csv"
    assert cli.main(fig2_args(out)) == 0
    lines, per_trial, summary = parse_fig2(out)
    assert any(l.startswith("# sweep: 2000,4000") for l in lines)
    assert set(per_trial) == {2000, 4000} and set(summary) == {2000, 4000}
    for count, trials in per_trial.items():
        assert [t[0] for t in trials] == [0, 1, 2]
        assert all(t[4] == "" for t in trials)  # std only on the summary row
        mean_r = sum(t[3] for t in trials) / 3
        assert summary[count][2] == pytest.approx(mean_r, rel=1e-9)
        assert summary[count][3] >= 0.0
        for _, mae_raw, mae_rec, r, _ in trials:
            assert r == pytest.approx(mae_rec / mae_raw, rel=1e-9)
            assert mae_raw > 0 and mae_rec > 0


def test_fig2_byte_determinism(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    cli.main(fig2_args(a))
    cli.main(fig2_args(b))
    assert a.read_bytes() == b.read_bytes()


def test_fig2_exact_eigenvalue_injection_is_lossless(tmp_path):
    # with oracle eigenvalues the recovery pipeline must be exact
    out = tmp_path / "exact.csv"
    assert cli.main(fig2_args(out, ["--exact-eigenvalues"])) == 0
    _, per_trial, summary = parse_fig2(out)
    for trials in per_trial.values():
        for _, _, _, r, _ in trials:
            assert r <= 1e-9
    for _, _, r, _ in summary.values():
        assert r <= 1e-9


def test_fig2_estimated_expectations_smoke(tmp_path):
    out = tmp_path / "est.csv"
    rc = cli.main(
        [
            "fig2", "--sweep", "3000", "--states", "10", "--repeats", "2",
            "--seed", "3", "--estimated-expectations",
            "--expectation-shadows", "3000", "--out", str(out),
        ]
    )
    assert rc == 0
    _, per_trial, summary = parse_fig2(out)
    assert set(summary) == {3000}
    assert summary[3000][2] > 0


def test_fig2_rejects_non_increasing_sweep(tmp_path, capsys):
    rc = cli.main(fig2_args(tmp_path / "x.csv", ["--sweep", "4000,2000"]))
    assert rc == 1


def test_fig2_requires_pauli_channel(damping_channel_path, tmp_path):
    rc = cli.main(
        fig2_args(tmp_path / "x.csv", ["--channel", damping_channel_path])
    )
    assert rc == 1


# -- shared plumbing -----------------------------------------------------------


def test_derive_seed_is_stable_and_sensitive():
    assert cli._derive_seed(1, 2, 3) == cli._derive_seed(1, 2, 3)
    assert cli._derive_seed(1, 2, 3) != cli._derive_seed(1, 3, 2)


def test_observable_required_where_no_default(capsys):
    with pytest.raises(SystemExit) as err:
        cli.main(["recover", "--channel", "reference"])
    assert err.value.code == 2  # argparse usage error


def test_custom_heisenberg_couplings(capsys):
    rc = cli.main(
        recover_args(["--exact-eigenvalues", "--jx", "0.3", "--jy", "0.2",
                      "--jz", "0.1", "--hz", "0.5"])
    )
    assert rc == 0
    err = float(capsys.readouterr().out.splitlines()[2].split(": ")[1])
    assert err < 1e-10
