import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from symentropy.cli import main
from symentropy.dynamics import growth_rate_fit_polylog
from symentropy.errors import ConfigurationError, EstimatorError
from symentropy.harness import (
    ExperimentConfig,
    _segment_crossings,
    compare_entropies,
    crofton_sweep,
    growth_rate_fit,
    pair_generator,
    parse_config,
    sup_inf_sweep,
)

H_CAT = math.log((3 + math.sqrt(5)) / 2)
CAT = """
map = torus          # the cat map
matrix = 2 1 1 1
tree = A2
parity = even
word = A+ B-
"""
REMARK_77 = """
map = annulus_twist
support = 0.5 0.9
pair = graph cos: 0 0.05 | cos: 0 0 0.02; sin: 0.03
"""
FAST = ("h_cat_model", "h_bar", "h_top_volume")


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestGrowthRateFit:
    def test_geometric(self):
        assert growth_rate_fit(enumerate(2**n for n in range(20))).value == pytest.approx(math.log(2))

    def test_all_zero(self):
        assert growth_rate_fit(enumerate([0] * 10)).value == 0

    def test_fibonacci_norms(self):
        m = np.array([[2, 1], [1, 1]], dtype=object)
        v, counts = np.array([1, 0], dtype=object), []
        for _ in range(31):
            counts.append(math.isqrt(int(v.dot(v))))
            v = m.dot(v)
        assert abs(growth_rate_fit(enumerate(counts)).value - H_CAT) < 1e-3

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            growth_rate_fit([(0, 1), (1, 2), (2, 4)])

    @given(st.lists(st.integers(1, 10**6), min_size=4, max_size=20), st.integers(1, 10**4))
    def test_scale_invariant(self, counts, c):
        a = growth_rate_fit(enumerate(counts)).value
        b = growth_rate_fit(enumerate(x * c for x in counts)).value
        assert b == pytest.approx(a, abs=1e-9)


class TestConfig:
    def test_parse(self):
        raw = parse_config("map: torus\npair = geodesic 1 0 0 1\n"
                           "pair = geodesic 1 0 1 1\n# nothing\ntol = 0.1\n")
        assert raw == {"map": "torus", "pair": ["geodesic 1 0 0 1", "geodesic 1 0 1 1"], "tol": "0.1"}

    def test_first_separator_wins(self):
        raw = parse_config("pair = graph cos: 0 1 | cos: 0 0 1; sin: 0.5\n")
        assert raw["pair"] == ["graph cos: 0 1 | cos: 0 0 1; sin: 0.5"]

    @pytest.mark.parametrize("text", ["tol = 1\ntol = 2\n", "colour = red\n", "just words\n"])
    def test_rejected(self, text):
        with pytest.raises(ConfigurationError):
            parse_config(text)

    @pytest.mark.parametrize("extra", ["tol = 0", "tol = -1", "eps_grid = 1/4 1/2", "eps_grid = 1 1",
                                       "capacity_eps = 1/8 1/16 1/32\ncapacity_grid = 512 1024",
                                       "n_bar = 0"])
    def test_invalid_values(self, extra):
        with pytest.raises(ConfigurationError):
            ExperimentConfig.from_text("map = torus\n" + extra + "\n")

    def test_defaults(self):
        cfg = ExperimentConfig.from_text(CAT)
        assert cfg.kind == "torus" and cfg.pairs == ("geodesic 1 0 0 1",)
        assert [(s.eps, s.k) for s in cfg.capacity_schedule()][:2] == [(1 / 32, 5), (1 / 32, 6)]
        assert cfg.tol == 0.05
        hs = ExperimentConfig.from_text("map = horseshoe\ncapacity_grid = 2673\npad = 1/9\n")
        assert {s.grid for s in hs.capacity_schedule()} == {2673}

    def test_fraction_parameters(self):
        hs = ExperimentConfig.from_text("map = horseshoe\ncontraction = 1/4\nstretch = 5/2\n").build_system()
        assert (hs.contraction, hs.stretch) == (0.25, 2.5)

    def test_capacity_needs_k(self):
        with pytest.raises(ConfigurationError):
            ExperimentConfig.from_text("map = annulus_twist\ncapacity_eps = 1/8 1/16\n")


class TestPairs:
    def test_crossings(self):
        a, b = np.array([0.0, 0.5]), np.array([1.0, 0.5])
        zig = np.array([[0.1, 0], [0.2, 1], [0.3, 0], [np.nan, np.nan], [0.6, 0], [0.7, 1]])
        assert _segment_crossings(zig, a, b) == 3
        # a vertex exactly on L1 counts once
        assert _segment_crossings(np.array([[0.1, 0], [0.2, 0.5], [0.3, 1]]), a, b) == 1
        # crossings of the line outside the segment do not count
        assert _segment_crossings(np.array([[1.5, 0], [1.5, 1]]), a, b) == 0

    @pytest.mark.parametrize("cfg,entry", [
        ("map = horseshoe", "geodesic 1 0 0 1"),
        ("map = torus", "graph cos: 0 1 | cos: 0 0 1"),
        ("map = annulus_twist", "graph cos: 0 1"),
        ("map = torus", "bigon 1 2"),
        ("map = torus", "geodesic 1 0 0"),
    ])
    def test_bad_entries(self, cfg, entry):
        system = ExperimentConfig.from_text(cfg).build_system()
        with pytest.raises(ConfigurationError):
            pair_generator(system, entry)

    def test_horseshoe_segments_double(self):
        system = ExperimentConfig.from_text("map = horseshoe").build_system()
        gen = pair_generator(system, "segments 0 0.5 1 0.5 | 0.5 0 0.5 1")
        assert [gen(n).n_infinite for n in range(8)] == [2**n for n in range(8)]


class TestCompare:
    def test_cat_chain(self):
        rep = compare_entropies(ExperimentConfig.from_text(CAT), FAST)
        vals = [e.value for e in rep.estimates().values()]
        assert len(vals) == 3 and max(vals) - min(vals) < 0.05
        assert rep.all_pass and len(rep.verdicts) == 3
        assert {(v.lhs, v.rhs) for v in rep.verdicts} == {
            ("h_cat_model", "h_bar"), ("h_bar", "h_top_volume"), ("h_cat_model", "h_top_volume")}
        assert rep.to_dict()["h_bar_model"].startswith("analogue model")

    def test_horseshoe_no_model(self):
        rep = compare_entropies(ExperimentConfig.from_text("map = horseshoe"))
        assert rep.h_cat_model is None
        assert {v.lhs for v in rep.verdicts} == {"h_bar"}
        assert rep.h_bar.value == pytest.approx(math.log(2), abs=1e-9)
        assert rep.h_top_capacity.value == pytest.approx(math.log(2), rel=0.1)
        assert rep.all_pass

    def test_remark_77(self):
        rep = compare_entropies(ExperimentConfig.from_text(REMARK_77))
        assert rep.h_bar.value == 0.0
        assert [v.to_dict()["verdict"] for v in rep.verdicts] == ["PASS"]
        assert rep.h_bar_model.startswith("graph-pair")

    def test_violation_reported_not_reordered(self):
        # the identity has zero entropy, the twist word does not
        cfg = ExperimentConfig.from_text("map = identity\ntree = A2\nword = A+ B-\n")
        rep = compare_entropies(cfg, FAST)
        bad = [v for v in rep.verdicts if not v.passed]
        assert bad and all(v.lhs == "h_cat_model" for v in bad)
        assert not rep.all_pass
        assert all(v.to_dict()["verdict"] == "FAIL" and v.slack < 0 for v in bad)

    def test_needs_two_families(self):
        with pytest.raises(ConfigurationError):
            compare_entropies(ExperimentConfig.from_text("map = annulus_twist\n"))

    def test_partial_report_on_failure(self):
        cfg = ExperimentConfig.from_text(CAT + "pair = geodesic 1 1 0 1\n")
        with pytest.raises(EstimatorError) as err:
            compare_entropies(cfg, FAST)
        rep = err.value.report
        assert rep.h_cat_model is not None and "h_bar" in rep.errors
        assert not rep.all_pass

    def test_deterministic(self):
        cfg = ExperimentConfig.from_text(CAT)
        a, b = compare_entropies(cfg, FAST), compare_entropies(cfg, FAST)
        assert a.to_json() == b.to_json() and a.artifacts == b.artifacts

    def test_verdicts_recomputable_from_csv(self):
        cfg = ExperimentConfig.from_text(CAT)
        rep = compare_entropies(cfg, FAST)
        hom = [int(r["count"]) for r in read_csv(rep.artifacts["hom_growth.csv"])]
        rows = read_csv(rep.artifacts["barcode.csv"])
        smallest = str(cfg.eps_grid[-1])
        bar = [int(r["b_epsilon"]) for r in rows if r["epsilon"] == smallest]
        vol = [(int(r["n_or_k"]), float(r["count_or_length"])) for r in read_csv(rep.artifacts["volume.csv"])]
        values = {
            "h_cat_model": growth_rate_fit(enumerate(hom)).value,
            "h_bar": max(0.0, growth_rate_fit(enumerate(bar)).value),
            "h_top_volume": growth_rate_fit_polylog(vol).value,
        }
        for row in read_csv(rep.artifacts["verdicts.csv"]):
            lhs, rhs, tol = values[row["lhs"]], values[row["rhs"]], float(row["tol"])
            assert float(row["lhs_value"]) == lhs and float(row["rhs_value"]) == rhs
            assert row["verdict"] == ("PASS" if lhs <= rhs + tol else "FAIL")


class TestSweep:
    def test_geodesic_family(self):
        pairs = ["1 0 0 1", "1 0 1 1", "2 1 1 3", "1 2 3 1", "0 1 1 -1"]
        cfg = ExperimentConfig.from_text(CAT + "".join(f"pair = geodesic {p}\n" for p in pairs))
        table = sup_inf_sweep(cfg)
        assert len(table.h_bar) == 5
        assert abs(table.running_max[-1] - table.h_top["h_top_volume"]) < 0.05 * table.h_top["h_top_volume"]
        assert table.h_cat == pytest.approx(H_CAT, abs=1e-6)
        assert table.running_max == sorted(table.running_max)
        assert table.running_min == sorted(table.running_min, reverse=True)

    def test_family_with_avoiding_pair(self):
        text = REMARK_77 + "pair = graph cos: 0 0.1 | cos: 0.2 0 0.01\npair = segments 0 0 1 0 | 0.3 -0.9 0.3 0.9\n"
        table = sup_inf_sweep(ExperimentConfig.from_text(text))
        assert table.running_min[-1] == 0.0
        assert "not asserted" in table.to_dict()["note"]

    def test_single_pair_rejected(self):
        with pytest.raises(ConfigurationError):
            sup_inf_sweep(ExperimentConfig.from_text(CAT))


def test_crofton_sweep():
    cfg = ExperimentConfig.from_text("map = annulus_twist\namplitude = 0.5\nsupport = -0.3 0.7\n"
                                     "crofton_samples = 500\ncrofton_iterates = 4\n")
    res = crofton_sweep(cfg)
    assert len(res["ratios"]) == 4 and res["verdict"].passed


class TestCli:
    def write(self, tmp_path, name, text):
        p = tmp_path / name
        p.write_text(text)
        return str(p)

    def test_persist(self, tmp_path):
        f = self.write(tmp_path, "c.fcx", "fcx v1 3\na 0 0/1\nb 0 1/2\nc 1 2/1\nd c a\nd c b\n")
        assert main(["persist", f, "--out-dir", str(tmp_path / "o")]) == 0
        rep = json.loads((tmp_path / "o" / "persist.json").read_text())
        assert rep["finite_bars"] == ["3/2"] and rep["n_infinite"] == 1
        assert sorted((tmp_path / "o" / "barcode.csv").read_text().splitlines()) == ["3/2", "inf", "length"]

    def test_catent(self, tmp_path):
        f = self.write(tmp_path, "w.cfg", "tree: A2\nparity: even\nword: A+ B-\n")
        assert main(["catent", f, "--out-dir", str(tmp_path)]) == 0
        rep = json.loads((tmp_path / "catent.json").read_text())
        assert rep["log_rad"] == 0 and rep["h_cat_model"] == pytest.approx(H_CAT, abs=1e-6)
        assert set(rep) >= {"word", "rad", "log_rad", "h_cat_model", "h_compact_model", "base2_values"}

    def test_compare_pass_and_tol_flag(self, tmp_path):
        f = self.write(tmp_path, "r.cfg", REMARK_77)
        assert main(["compare", f, "--out-dir", str(tmp_path), "--tol", "0.01"]) == 0
        text = (tmp_path / "report.json").read_text()
        rep = json.loads(text)
        assert rep["tol"] == 0.01 and rep["all_pass"]
        assert text == json.dumps(rep, sort_keys=True, indent=2) + "\n"
        assert (tmp_path / "verdicts.csv").exists() and (tmp_path / "volume.csv").exists()

    def test_compare_fail_exit(self, tmp_path):
        f = self.write(tmp_path, "i.cfg", "map = identity\ntree = A2\nword = A+ B-\n")
        assert main(["compare", f, "--out-dir", str(tmp_path)]) == 1

    def test_bad_config_exit(self, tmp_path, capsys):
        f = self.write(tmp_path, "b.cfg", "map = torus\ncolour = red\n")
        assert main(["bar", f, "--out-dir", str(tmp_path)]) == 2
        assert "unknown key" in capsys.readouterr().err

    def test_bar_topent_sweep(self, tmp_path):
        f = self.write(tmp_path, "t.cfg", REMARK_77 + "pair = graph cos: 0 0.1 | cos: 0.2 0 0.01\n"
                       "pair = graph cos: 0 0 0.03 | cos: 0.1 0.02\n")
        for cmd in ("bar", "topent", "sweep"):
            assert main([cmd, f, "--out-dir", str(tmp_path / cmd)]) == 0
        assert (tmp_path / "bar" / "barcode.csv").read_text().startswith("n,epsilon,b_epsilon\n")
        assert (tmp_path / "topent" / "volume.csv").read_text().startswith("n_or_k,count_or_length\n")
        assert json.loads((tmp_path / "sweep" / "sweep.json").read_text())["inf_h_bar"] == 0.0

    def test_crofton_seed(self, tmp_path):
        f = self.write(tmp_path, "c.cfg", "map = annulus_twist\namplitude = 0.5\nsupport = -0.3 0.7\n"
                       "crofton_samples = 300\ncrofton_iterates = 3\n")
        outs = []
        for seed, d in ((1, "a"), (1, "b"), (2, "c")):
            assert main(["crofton", f, "--seed", str(seed), "--out-dir", str(tmp_path / d)]) == 0
            outs.append((tmp_path / d / "crofton.json").read_text())
        assert outs[0] == outs[1] != outs[2]
        rep = json.loads(outs[0])["reports"][0]
        assert set(rep) == {"d", "r", "n_samples", "integral", "stderr", "volume", "ratio"}
