import numpy as np
import pytest

from hadamard_msr.cli import main
from hadamard_msr.metering import CSV_HEADER


@pytest.fixture
def blob(tmp_path):
    data = bytes(np.random.default_rng(3).integers(0, 256, size=500, dtype=np.uint8))
    path = tmp_path / "blob.bin"
    path.write_bytes(data)
    return path, data


def encode_cluster(tmp_path, blob, extra=()):
    path, _ = blob
    root = tmp_path / "cluster"
    rc = main(["encode", str(path), str(root), "--k", "2", "--demo", *extra])
    assert rc == 0
    return root


class TestEncodeDecode:
    def test_round_trip(self, tmp_path, blob, capsys):
        path, data = blob
        root = encode_cluster(tmp_path, blob)
        assert "encoded 500 bytes" in capsys.readouterr().out
        out = tmp_path / "out.bin"
        assert main(["decode", str(root), "--out", str(out)]) == 0
        assert out.read_bytes() == data

    def test_decode_to_stdout(self, tmp_path, blob, capsysbinary):
        path, data = blob
        root = encode_cluster(tmp_path, blob)
        capsysbinary.readouterr()
        assert main(["decode", str(root)]) == 0
        assert capsysbinary.readouterr().out == data

    def test_missing_input_is_usage_error(self, tmp_path, capsys):
        rc = main(["encode", str(tmp_path / "nope"), str(tmp_path / "c"), "--k", "2"])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_double_encode_refused(self, tmp_path, blob, capsys):
        encode_cluster(tmp_path, blob)
        path, _ = blob
        rc = main(["encode", str(path), str(tmp_path / "cluster"), "--k", "2"])
        assert rc == 1

    def test_demo_q_conflict(self, tmp_path, blob, capsys):
        path, _ = blob
        rc = main(
            ["encode", str(path), str(tmp_path / "c"), "--k", "2", "--demo", "--q", "11"]
        )
        assert rc == 1

    def test_decode_missing_cluster(self, tmp_path, capsys):
        assert main(["decode", str(tmp_path / "ghost")]) == 1


class TestKillRepair:
    def test_kill_repair_cycle(self, tmp_path, blob, capsys):
        root = encode_cluster(tmp_path, blob)
        assert main(["kill", str(root), "3"]) == 0
        assert "killed node 3" in capsys.readouterr().out
        assert main(["repair", str(root), "3", "--report"]) == 0
        out = capsys.readouterr().out
        assert "repaired node 3 with the new strategy" in out
        assert "download: adds=" in out
        assert "total: adds=" in out

    def test_original_strategy_flag(self, tmp_path, blob, capsys):
        root = encode_cluster(tmp_path, blob)
        assert main(["kill", str(root), "1"]) == 0
        assert main(["repair", str(root), "1", "--strategy", "original"]) == 0
        assert "original strategy" in capsys.readouterr().out

    def test_repair_alive_node(self, tmp_path, blob, capsys):
        root = encode_cluster(tmp_path, blob)
        assert main(["repair", str(root), "1"]) == 1

    def test_third_kill_exit_code(self, tmp_path, blob, capsys):
        root = encode_cluster(tmp_path, blob)
        main(["kill", str(root), "1"])
        main(["kill", str(root), "2"])
        rc = main(["kill", str(root), "4"])
        assert rc == 3
        assert "unrecoverable" in capsys.readouterr().err

    def test_forced_third_kill(self, tmp_path, blob, capsys):
        root = encode_cluster(tmp_path, blob)
        main(["kill", str(root), "1"])
        main(["kill", str(root), "2"])
        assert main(["kill", str(root), "4", "--force"]) == 0

    def test_repair_after_double_kill_points_to_decode(self, tmp_path, blob, capsys):
        root = encode_cluster(tmp_path, blob)
        main(["kill", str(root), "1"])
        main(["kill", str(root), "2"])
        rc = main(["repair", str(root), "1"])
        assert rc == 2
        assert "decode" in capsys.readouterr().err


class TestBench:
    def test_text_row(self, capsys):
        assert main(["bench", "--k", "2"]) == 0
        out = capsys.readouterr().out
        assert "node=1 strategy=new add=28" in out
        assert "strategy=original" in out

    def test_k3_uniform_adds(self, capsys):
        assert main(["bench", "--k", "3", "--strategy", "new"]) == 0
        out = capsys.readouterr().out
        rows = [l for l in out.splitlines() if l.startswith("node=")]
        assert len(rows) == 5
        assert all("add=80" in row for row in rows)

    def test_csv_header(self, capsys):
        assert main(["bench", "--k", "2", "--csv"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 9

    def test_csv_multiple_k_rejected(self, capsys):
        assert main(["bench", "--k", "2", "--k", "3", "--csv"]) == 1

    def test_default_runs_both_profiles(self, capsys):
        assert main(["bench"]) == 0
        out = capsys.readouterr().out
        assert "k=2 q=7" in out
        assert "k=3 q=11" in out


class TestVerify:
    def test_params_pass(self, capsys):
        assert main(["verify", "--params", "2,7"]) == 0
        out = capsys.readouterr().out
        assert "verification passed" in out

    def test_searched_params_pass(self, capsys):
        assert main(["verify", "--params", "4,11"]) == 0

    def test_bad_params_format(self, capsys):
        assert main(["verify", "--params", "seven"]) == 1

    def test_modulus_too_small(self, capsys):
        assert main(["verify", "--params", "3,7"]) == 1

    def test_cluster_mode(self, tmp_path, blob, capsys):
        root = encode_cluster(tmp_path, blob)
        assert main(["verify", str(root)]) == 0

    def test_tampered_cluster_fails(self, tmp_path, blob, capsys):
        root = encode_cluster(tmp_path, blob)
        mpath = root / "manifest.txt"
        mpath.write_text(mpath.read_text().replace("a: 1,1", "a: 0,1"))
        rc = main(["verify", str(root)])
        assert rc == 2
        assert "verification FAILED" in capsys.readouterr().out

    def test_needs_an_argument(self, capsys):
        assert main(["verify"]) == 1


class TestUsage:
    def test_unknown_command(self, capsys):
        assert main(["scrub"]) == 1

    def test_no_command_prints_usage(self, capsys):
        assert main([]) == 1
        assert "usage" in capsys.readouterr().err.lower()

    def test_missing_required_argument(self, capsys):
        assert main(["kill"]) == 1

    def test_non_integer_node(self, tmp_path, blob, capsys):
        root = encode_cluster(tmp_path, blob)
        assert main(["kill", str(root), "two"]) == 1
