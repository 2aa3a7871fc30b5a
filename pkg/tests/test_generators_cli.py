import csv
import json

import numpy as np
import pytest

from mcseg import io
from mcseg.cli import main
from mcseg.engine import VERIFIED, solve
from mcseg.generators import (
    SplitMix64,
    gen_synth_inclusion,
    gen_synth_potts,
    karate_edge_list,
    load_modularity,
    modularity,
    parse_edge_list,
)
from mcseg.model import Junction, ModelError, Potts, enumerate_partitions, eval_energy
from mcseg.reference import brute_force_min


def test_splitmix_reference_outputs():
    r = SplitMix64(0)
    assert [r.next_u64() for _ in range(3)] == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]
    r = SplitMix64(1234567)
    assert [r.next_u64() for _ in range(3)] == [6457827717110365317, 3203168211198807973, 9817491932198370423]


def test_uniform_range():
    r = SplitMix64(5)
    vals = [r.uniform(-1.0, 1.0) for _ in range(1000)]
    assert min(vals) >= -1.0 and max(vals) < 1.0


def test_synth_potts_shape_and_determinism():
    fg = gen_synth_potts(32, 32, 10, 3)
    assert fg.num_variables == 1024
    assert sum(isinstance(f.kind, Potts) for f in fg.factors) == 1984
    assert io.dumps_model(fg) == io.dumps_model(gen_synth_potts(32, 32, 10, 3))
    assert io.dumps_model(fg) != io.dumps_model(gen_synth_potts(32, 32, 10, 4))
    single = gen_synth_potts(1, 1, 4, 0)
    assert single.num_variables == 1 and len(single.factors) == 1


def test_synth_inclusion_counts():
    fg = gen_synth_inclusion(2, 2, 3, 1.0, 0.1, 0)
    assert sum(isinstance(f.kind, Junction) for f in fg.factors) == 1
    fg = gen_synth_inclusion(5, 4, 3, 1.0, 0.1, 0)
    assert sum(isinstance(f.kind, Junction) for f in fg.factors) == 12
    fg0 = gen_synth_inclusion(5, 4, 3, 0.0, 0.1, 0)
    assert not any(isinstance(f.kind, Junction) for f in fg0.factors)


def test_inclusion_junction_penalty():
    lam = 0.7
    fg = gen_synth_inclusion(2, 2, 3, lam, 0.1, 0)
    fg0 = gen_synth_inclusion(2, 2, 3, 0.0, 0.1, 0)
    assert eval_energy(fg, (0, 1, 2, 2)) == pytest.approx(eval_energy(fg0, (0, 1, 2, 2)) + lam)
    assert eval_energy(fg, (0, 0, 1, 1)) == pytest.approx(eval_energy(fg0, (0, 0, 1, 1)))


def test_edge_list_parsing():
    n, edges = parse_edge_list("# comment\n10 20\n20 30  # trailing\n\n30 10\n")
    assert n == 3 and edges == [(0, 1), (1, 2), (0, 2)]
    for text, line in [("1 1\n", 1), ("0 1\n1 0\n", 2), ("0 1\nx y\n", 2), ("0 1 2\n", 1)]:
        with pytest.raises(ModelError, match=f"line {line}"):
            parse_edge_list(text)


def test_karate_data():
    n, edges = parse_edge_list(karate_edge_list())
    assert n == 34 and len(edges) == 78


def test_single_edge_modularity():
    fg = load_modularity("0 1\n")
    # one shore: Q = 1 - (2*2)/(4) = 0; two shores: Q = 0 - (1+1)/4 = -0.5
    assert eval_energy(fg, (0, 0)) == pytest.approx(0.0, abs=1e-12)
    assert eval_energy(fg, (0, 1)) == pytest.approx(0.5, abs=1e-12)


def test_energy_is_negative_modularity():
    text = "0 1\n1 2\n2 0\n2 3\n3 4\n4 5\n5 3\n"
    fg = load_modularity(text)
    n, edges = parse_edge_list(text)
    for p in enumerate_partitions(n):
        assert eval_energy(fg, p.rgs) == pytest.approx(-modularity(n, edges, p.rgs), abs=1e-12)


def test_triangle_graph_modularity_optimum():
    text = "0 1\n1 2\n0 2\n"
    n, edges = parse_edge_list(text)
    q_star = max(modularity(n, edges, p.rgs) for p in enumerate_partitions(3))
    r = solve(load_modularity(text), "MC-CFB-I-CIF")
    assert r.status == VERIFIED
    assert r.value == pytest.approx(-q_star, abs=1e-9)
    assert r.value == pytest.approx(brute_force_min(load_modularity(text))[1], abs=1e-9)


def test_model_round_trip_is_byte_identical(tmp_path):
    fg = gen_synth_inclusion(3, 3, 3, 0.5, 0.2, 1)
    text = io.dumps_model(fg)
    p = tmp_path / "m.json"
    p.write_text(text)
    io.save_model(io.load_model(str(p)), str(tmp_path / "n.json"))
    assert (tmp_path / "n.json").read_text() == text


def test_model_format_rejections():
    base = {"mode": "unsupervised", "labels": 3, "factors": [{"vars": [0, 1], "kind": "potts", "equal": 0, "unequal": 1}]}
    io.model_from_dict(base)
    for bad in (
        {**base, "extra": 1},
        {**base, "factors": [{"vars": [0, 1], "kind": "potts", "equal": 0}]},
        {**base, "factors": [{"vars": [0, 1], "kind": "potts", "equal": 0, "unequal": 1, "beta": 2}]},
        {**base, "factors": [{"vars": [0, 1], "kind": "bogus"}]},
        {**base, "mode": "semi"},
    ):
        with pytest.raises(ModelError):
            io.model_from_dict(bad)


def _write(tmp_path, name, fg):
    p = tmp_path / name
    p.write_text(io.dumps_model(fg))
    return str(p)


TRIANGLE = {"mode": "unsupervised", "labels": 3, "factors": [
    {"vars": [0, 1], "kind": "potts", "equal": 0, "unequal": -1},
    {"vars": [1, 2], "kind": "potts", "equal": 0, "unequal": -1},
    {"vars": [0, 2], "kind": "potts", "equal": 0, "unequal": 2},
]}


def test_cli_solve_triangle(tmp_path, capsys):
    m = tmp_path / "tri.json"
    m.write_text(json.dumps(TRIANGLE))
    out = tmp_path / "res.json"
    assert main(["solve", str(m), "--schedule", "MC-C", "--out", str(out)]) == 0
    rec = json.loads(out.read_text())
    assert rec["value"] == -2.0 and rec["bound"] == -2.0 and rec["status"] == "verified-optimal"
    assert set(rec) >= {"value", "bound", "status", "runtime_ms", "labeling", "stages", "constant_offset"}
    assert rec["stages"][0]["token"] == "C"
    assert main(["eval", str(m), ",".join(map(str, rec["labeling"]))]) == 0
    assert float(capsys.readouterr().out) == -2.0


def test_cli_exit_codes(tmp_path):
    m = tmp_path / "tri.json"
    m.write_text(json.dumps(TRIANGLE))
    assert main(["solve", str(m), "--schedule", "MC-X"]) == 2
    assert main(["solve", str(m), "--schedule", "MC-T"]) == 2
    assert main(["solve", str(tmp_path / "missing.json"), "--schedule", "MC-C"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{\"mode\": 1}")
    assert main(["solve", str(bad), "--schedule", "MC-C"]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["solve", str(m)])
    assert exc.value.code == 2


def test_cli_gen(tmp_path):
    out = tmp_path / "g.json"
    assert main(["gen", "synth-potts", "--width", "3", "--height", "2", "--labels", "3", "--seed", "4", "--out", str(out)]) == 0
    assert io.dumps_model(gen_synth_potts(3, 2, 3, 4)) == out.read_text()
    out = tmp_path / "k.json"
    assert main(["gen", "modularity", "--out", str(out)]) == 0
    assert io.load_model(str(out)).num_variables == 34


def test_cli_bench(tmp_path):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    rng = np.random.default_rng(0)
    for k in range(3):
        fg = gen_synth_potts(3, 3, 3, int(rng.integers(1000)))
        _write(corpus, f"g{k}.json", fg)
    (corpus / "broken.json").write_text("{")
    out = tmp_path / "runs.csv"
    assert main(["bench", str(corpus), "--schedules", "MC-T-C,MC-T-CFB,MC-T-CF-I-TI", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 12
    assert sum(1 for r in rows if r["error"]) == 3
    good = [r for r in rows if not r["error"]]
    by = {}
    for r in good:
        by.setdefault(r["instance"], {})[r["schedule"]] = r
    for inst, rs in by.items():
        assert float(rs["MC-T-C"]["bound"]) == pytest.approx(float(rs["MC-T-CFB"]["bound"]), abs=1e-6)
        assert rs["MC-T-CF-I-TI"]["status"] == "verified-optimal"
    summary = list(csv.DictReader((tmp_path / "runs.summary.csv").open()))
    assert [s["schedule"] for s in summary] == ["MC-T-C", "MC-T-CFB", "MC-T-CF-I-TI"]
    assert (tmp_path / "runs_runtime.png").exists() and (tmp_path / "runs_gap.png").exists()


def test_cli_bench_empty_corpus(tmp_path):
    corpus = tmp_path / "empty"
    corpus.mkdir()
    out = tmp_path / "runs.csv"
    assert main(["bench", str(corpus), "--schedules", "MC-C", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 1 and lines[0].startswith("instance,schedule,runtime_ms")


def test_cli_export_lp(tmp_path):
    m = tmp_path / "tri.json"
    m.write_text(json.dumps(TRIANGLE))
    lp = tmp_path / "final.lp"
    assert main(["solve", str(m), "--schedule", "MC-C", "--export-lp", str(lp)]) == 0
    assert "Subject To" in lp.read_text()

