import json

import numpy as np
import pytest

from thmc.basis import markov_basis
from thmc.cli import main
from thmc.core import Move, PathTable
from thmc.io import parse_paths, read_moves


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_basis_export_two_four(capsys, tmp_path):
    out = tmp_path / "m.txt"
    code, _, _ = run(capsys, "basis", "-S", "2", "-T", "4", "--out", str(out))
    assert code == 0
    moves = set(read_moves(out, 2, 4))
    for a, b in [((1, 1, 2, 1), (1, 2, 1, 1)), ((2, 1, 2, 2), (2, 2, 1, 2))]:
        z = Move({a: 1, b: -1}, 2, 4)
        assert z in moves or -z in moves


def test_basis_export_three_three(capsys):
    code, out, _ = run(capsys, "basis", "-S", "3", "-T", "3")
    assert code == 0
    assert int(out.split()[0]) == len(markov_basis(3, 3).enumerate_moves())


def test_basis_unsupported(capsys):
    code, _, err = run(capsys, "basis", "-S", "3", "-T", "5")
    assert code == 3 and "4ti2" in err


def test_basis_cap(capsys):
    code, _, err = run(capsys, "basis", "-S", "2", "-T", "5", "--max-instantiations", "10")
    assert code == 4


def test_matrix(capsys):
    code, out, _ = run(capsys, "matrix", "-S", "2", "-T", "3")
    assert code == 0 and out.splitlines()[0] == "6 8"


@pytest.mark.parametrize("S, T", [(2, 4), (3, 3)])
def test_verify_connected(capsys, S, T):
    code, out, _ = run(capsys, "verify", "-S", str(S), "-T", str(T), "--max-n", "3")
    assert code == 0
    assert " 0 disconnected" in out


def test_verify_negative_control(capsys):
    code, out, _ = run(capsys, "verify", "-S", "2", "-T", "4", "--max-n", "1",
                       "--exclude", "degree-one")
    assert code == 1
    assert "DISCONNECTED" in out


def test_verify_with_move_file(capsys, tmp_path):
    f = tmp_path / "moves.txt"
    run(capsys, "basis", "-S", "2", "-T", "3", "--out", str(f))
    code, out, _ = run(capsys, "verify", "-S", "2", "-T", "3", "--max-n", "3", "--moves", str(f))
    assert code == 0 and "move file" in out


def test_fixture_report(capsys, tmp_path):
    out = tmp_path / "r.txt"
    code, _, _ = run(capsys, "test", "--fixture", "marijuana", "--seed", "0", "--burnin", "1000",
                     "--samples", "4000", "--out", str(out))
    assert code == 0
    fields = dict(line.split(": ", 1) for line in out.read_text().splitlines())
    assert abs(float(fields["chi2_observed"]) - 11.533) < 0.01
    assert fields["df"] == "4"
    hist = (tmp_path / "r.txt.hist.csv").read_text().splitlines()
    assert hist[0] == "bin_left,bin_right,count" and len(hist) == 51
    assert sum(int(r.split(",")[2]) for r in hist[1:]) == 4000


def test_seed_required(capsys):
    with pytest.raises(SystemExit) as err:
        main(["test", "--fixture", "marijuana"])
    assert err.value.code == 2


def test_parse_error_exit(capsys, tmp_path):
    empty = tmp_path / "e.csv"
    empty.write_text("")
    code, _, err = run(capsys, "test", str(empty), "--seed", "1")
    assert code == 2
    bad = tmp_path / "b.csv"
    bad.write_text("1 1 2\n1 2\n")
    code, _, err = run(capsys, "test", str(bad), "--seed", "1")
    assert code == 2 and ":2:" in err


def test_unsupported_data_shape(capsys, tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("1 2 3 1 2\n3 3 1 1 2\n")
    code, _, err = run(capsys, "test", str(f), "--seed", "1")
    assert code == 3


def _params(tmp_path):
    p = tmp_path / "p.json"
    p.write_text(json.dumps({"kind": "homogeneous", "initial": [0.5, 0.5],
                             "transition": [[0.7, 0.3], [0.4, 0.6]]}))
    return p


def test_simulate_deterministic_and_parses(capsys, tmp_path):
    p = _params(tmp_path)
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert main(["simulate", str(p), "-N", "50", "-T", "4", "--seed", "3", "--out", str(a)]) == 0
    assert main(["simulate", str(p), "-N", "50", "-T", "4", "--seed", "3", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    t = parse_paths(a)
    assert (t.S, t.T, t.N) == (2, 4, 50)
    main(["simulate", str(p), "-N", "50", "-T", "4", "--seed", "3", "--counts", "--out", str(b)])
    assert parse_paths(b, aggregated=True) == t


def test_simulate_bad_params(capsys, tmp_path):
    p = tmp_path / "p.json"
    p.write_text('{"kind": "homogeneous", "initial": [0.5, 0.5]}')
    assert main(["simulate", str(p), "-N", "5", "-T", "3", "--seed", "1"]) == 2


def test_fiber_command(capsys, tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("1 1 2 1\n")
    code, out, _ = run(capsys, "fiber", str(f))
    assert code == 0 and len(out.splitlines()) == 2


def test_homogeneous_data_not_rejected(capsys, tmp_path):
    """Calibration: data from a homogeneous chain should not be rejected systematically."""
    p = _params(tmp_path)
    pvals = []
    for seed in range(20):
        d = tmp_path / f"s{seed}.csv"
        main(["simulate", str(p), "-N", "200", "-T", "4", "--seed", str(seed), "--out", str(d)])
        r = tmp_path / f"r{seed}.txt"
        assert main(["test", str(d), "--seed", str(seed), "--burnin", "2000", "--samples", "10000",
                     "--out", str(r)]) == 0
        fields = dict(line.split(": ", 1) for line in r.read_text().splitlines())
        pvals.append(float(fields["p_exact"]))
    pvals = np.array(pvals)
    assert (pvals < 0.05).sum() <= 4
    assert 0.25 < pvals.mean() < 0.75
