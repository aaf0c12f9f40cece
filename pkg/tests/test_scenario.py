import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from acperf.errors import AcperfError, MatrixFormatError
from acperf.scenario import (DiscreteScenario, PerformanceMatrix, ScenarioMeta, exact_moments,
                             load_matrix, load_meta, load_scenario, random_scenario,
                             sample_matrix, save_matrix, save_meta, save_scenario)

RAW = ScenarioMeta("raw", "raw-utility", 0.0, 10.0)
PAR = ScenarioMeta.par10("par", 5.0)


def write_csv(path, rows):
    lines = ["config,instance,run,value,status"] + [",".join(map(str, r)) for r in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


class TestMeta:
    def test_par10_ranges(self):
        assert PAR.u_hi == 50.0 and PAR.u_lo == 0.0 and PAR.C == 50.0

    @pytest.mark.parametrize("kw", [
        dict(metric="raw-utility", u_lo=1.0, u_hi=1.0),
        dict(metric="par10", u_lo=0.0, u_hi=40.0, cutoff=5.0),
        dict(metric="par10", u_lo=-1.0, u_hi=50.0, cutoff=5.0),
        dict(metric="par10", u_lo=0.0, u_hi=50.0),
        dict(metric="other", u_lo=0.0, u_hi=1.0),
        dict(metric="raw-utility", u_lo=0.0, u_hi=1.0, radius=-1.0),
    ])
    def test_invalid(self, kw):
        with pytest.raises(AcperfError):
            ScenarioMeta(name="x", **kw)

    def test_json_round_trip(self, tmp_path):
        meta = ScenarioMeta("lkh", "par10", 0.0, 100.0, 23, 10.0, 2.0, 3.0)
        save_meta(meta, tmp_path / "m.json")
        assert load_meta(tmp_path / "m.json") == meta

    def test_par10_u_hi_defaults_from_cutoff(self):
        assert ScenarioMeta.from_dict({"name": "q", "metric": "par10", "cutoff": 2}).u_hi == 20.0


class TestLoadMatrix:
    def test_identity_ingestion(self, tmp_path):
        p = write_csv(tmp_path / "m.csv", [("a", "z1", 0, 1, "ok"), ("a", "z2", 0, 2, "ok"),
                                           ("b", "z1", 0, 3, "ok"), ("b", "z2", 0, 4, "ok")])
        m = load_matrix(p, RAW)
        assert m.shape == (2, 2, 1)
        np.testing.assert_array_equal(m.values[:, :, 0], [[1, 2], [3, 4]])

    def test_timeout_scored_par10(self, tmp_path):
        p = write_csv(tmp_path / "m.csv", [("a", "z", 0, 5, "timeout"), ("a", "z", 1, 1.5, "ok")])
        assert load_matrix(p, PAR).values[0, 0].tolist() == [50.0, 1.5]

    def test_rows_in_any_order(self, tmp_path):
        p = write_csv(tmp_path / "m.csv", [("a", "z", 1, 2, "ok"), ("b", "z", 0, 3, "ok"),
                                           ("a", "z", 0, 1, "ok"), ("b", "z", 1, 4, "ok")])
        m = load_matrix(p, RAW)
        assert m.configs == ("a", "b")
        np.testing.assert_array_equal(m.values[:, 0], [[1, 2], [3, 4]])

    def test_short_cell_named(self, tmp_path):
        rows = [("a", "z1", r, 1, "ok") for r in range(5)] + [("a", "z2", r, 1, "ok") for r in range(4)]
        with pytest.raises(MatrixFormatError, match=r"\(a, z2\) holds 4 runs, expected 5"):
            load_matrix(write_csv(tmp_path / "m.csv", rows), RAW)

    def test_explicit_run_count(self, tmp_path):
        rows = [("a", "z1", r, 1, "ok") for r in range(4)]
        with pytest.raises(MatrixFormatError, match="expected 5"):
            load_matrix(write_csv(tmp_path / "m.csv", rows), RAW, runs=5)

    def test_missing_cell(self, tmp_path):
        rows = [("a", "z1", 0, 1, "ok"), ("b", "z2", 0, 1, "ok")]
        with pytest.raises(MatrixFormatError, match="missing cell"):
            load_matrix(write_csv(tmp_path / "m.csv", rows), RAW)

    @pytest.mark.parametrize("row, meta, msg", [
        (("a", "z", 0, -1, "ok"), PAR, "line 2: negative runtime"),
        (("a", "z", 0, 6, "ok"), PAR, "line 2: runtime 6.0 exceeds cutoff"),
        (("a", "z", 0, 11, "ok"), RAW, r"line 2: value 11.0 outside"),
        (("a", "z", 0, "x", "ok"), RAW, "line 2: value 'x' is not a number"),
        (("a", "z", 0, 1, "crash"), RAW, "line 2: status"),
        (("a", "z", 0, 1, "timeout"), RAW, "line 2: timeout status requires"),
        (("a", "z", 0, "nan", "ok"), RAW, "not finite"),
    ])
    def test_bad_rows_name_the_line(self, tmp_path, row, meta, msg):
        with pytest.raises(MatrixFormatError, match=msg):
            load_matrix(write_csv(tmp_path / "m.csv", [row]), meta)

    def test_duplicate_run(self, tmp_path):
        with pytest.raises(MatrixFormatError, match="line 3: duplicate run"):
            load_matrix(write_csv(tmp_path / "m.csv", [("a", "z", 0, 1, "ok"), ("a", "z", 0, 2, "ok")]), RAW)

    def test_missing_column(self, tmp_path):
        (tmp_path / "m.csv").write_text("config,instance,value\na,z,1\n")
        with pytest.raises(MatrixFormatError, match="header lacks"):
            load_matrix(tmp_path / "m.csv", RAW)

    def test_round_trip(self, tmp_path):
        g = np.random.default_rng(3)
        vals = g.uniform(0, 5, (3, 4, 5))
        vals[g.random(vals.shape) < 0.2] = 50.0
        m = PerformanceMatrix(("x", "y", "w"), ("i1", "i2", "i3", "i4"), vals, PAR)
        save_matrix(m, tmp_path / "m.csv")
        again = load_matrix(tmp_path / "m.csv", PAR)
        assert again.equals(m)
        save_matrix(again, tmp_path / "m2.csv")
        assert (tmp_path / "m.csv").read_bytes() == (tmp_path / "m2.csv").read_bytes()

    def test_matrix_rejects_out_of_range_values(self):
        with pytest.raises(AcperfError, match="outside"):
            PerformanceMatrix(("a",), ("z",), [[[11.0]]], RAW)

    def test_matrix_is_read_only(self):
        m = PerformanceMatrix(("a",), ("z",), [[[1.0]]])
        with pytest.raises(ValueError):
            m.values[0, 0, 0] = 2.0


class TestExactMoments:
    def test_worked_example(self, example):
        m = exact_moments(example, "theta")
        assert (m.mean, m.within_var, m.across_var) == (2.5, 1.0, 2.25)

    def test_constant(self, constant_scenario):
        m = exact_moments(constant_scenario, "a")
        assert (m.mean, m.within_var, m.across_var) == (4.0, 0.0, 0.0)

    def test_single_instance(self):
        s = DiscreteScenario((1.0,), {"t": [[(0.0, 0.5), (1.0, 0.5)]]})
        m = exact_moments(s, "t")
        assert (m.mean, m.within_var, m.across_var) == (0.5, 0.25, 0.0)

    def test_unknown_config(self, example):
        with pytest.raises(AcperfError):
            exact_moments(example, "nope")


@st.composite
def small_scenarios(draw):
    Z = draw(st.integers(1, 4))
    seed = draw(st.integers(0, 2**32 - 1))
    g = np.random.default_rng(seed)
    probs = g.dirichlet(np.ones(Z))
    probs[-1] = 1 - probs[:-1].sum()
    rows = []
    for _ in range(Z):
        k = int(g.integers(1, 5))
        p = g.dirichlet(np.ones(k))
        p[-1] = 1 - p[:-1].sum()
        rows.append([(float(u), float(q)) for u, q in zip(g.uniform(-3, 3, k), p)])
    return DiscreteScenario(tuple(np.clip(probs, 0, 1)), {"c": rows})


@settings(max_examples=200, deadline=None)
@given(small_scenarios())
def test_law_of_total_variance(s):
    joint = [(u, pz * pu) for pz, dist in zip(s.instance_probs, s.outcomes["c"]) for u, pu in dist]
    mean = math.fsum(u * p for u, p in joint)
    total = math.fsum(p * (u - mean) ** 2 for u, p in joint)
    m = exact_moments(s, "c")
    assert m.mean == pytest.approx(mean, abs=1e-12)
    assert m.within_var + m.across_var == pytest.approx(total, rel=1e-10, abs=1e-12)


class TestDiscreteScenario:
    def test_probabilities_must_sum_to_one(self):
        with pytest.raises(AcperfError, match="sum"):
            DiscreteScenario((0.5, 0.4), {"c": [[(0, 1)], [(0, 1)]]})

    def test_utilities_within_declared_bounds(self):
        with pytest.raises(AcperfError, match="outside"):
            DiscreteScenario((1.0,), {"c": [[(5.0, 1.0)]]}, u_lo=0, u_hi=1)

    def test_json_round_trip(self, tmp_path, example):
        save_scenario(example, tmp_path / "s.json")
        again = load_scenario(tmp_path / "s.json")
        assert again == example
        assert json.loads((tmp_path / "s.json").read_text())["outcomes"]["theta"]["z2"] == [[3.0, 0.5], [5.0, 0.5]]

    def test_json_missing_instance(self):
        with pytest.raises(MatrixFormatError, match="lacks instances"):
            DiscreteScenario.from_dict({"instance_probs": [0.5, 0.5], "outcomes": {"c": {"0": [[1, 1]]}}})

    def test_random_scenario_respects_bounds(self):
        s = random_scenario(5, 7, 3, seed=2, u_lo=1.0, u_hi=4.0)
        utils = [u for rows in s.outcomes.values() for d in rows for u, _ in d]
        assert 1.0 <= min(utils) and max(utils) <= 4.0 and len(s.configs) == 5


class TestSampleMatrix:
    def test_deterministic_scenario(self, constant_scenario):
        m = sample_matrix(constant_scenario, 2, 6, 3, seed=1)
        for p, inst in enumerate(m.instances):
            z = int(inst.split("#")[0])
            assert np.all(m.values[0, p] == 4.0)
            assert np.all(m.values[1, p] == (1.0, 7.0)[z])

    def test_same_seed_bitwise_identical(self):
        s = random_scenario(4, 5, seed=0)
        a, b = sample_matrix(s, 4, 10, 5, 9), sample_matrix(s, 4, 10, 5, 9)
        assert a.instances == b.instances and a.values.tobytes() == b.values.tobytes()
        assert sample_matrix(s, 4, 10, 5, 10).values.tobytes() != a.values.tobytes()

    def test_cell_means_match_enumeration(self, example):
        R = 100_000
        m = sample_matrix(example, 1, 2, R, seed=4)
        for p, inst in enumerate(m.instances):
            dist = example.outcomes["theta"][example.instances.index(inst.split("#")[0])]
            u_z = sum(u * q for u, q in dist)
            sd = math.sqrt(sum(q * (u - u_z) ** 2 for u, q in dist))
            assert abs(m.values[0, p].mean() - u_z) < 4 * sd / math.sqrt(R)

    def test_instance_frequencies(self):
        s = DiscreteScenario((0.2, 0.8), {"c": [[(0.0, 1.0)], [(1.0, 1.0)]]})
        P = 50_000
        m = sample_matrix(s, 1, P, 1, seed=0)
        share = m.values.mean()
        assert abs(share - 0.8) < 4 * math.sqrt(0.16 / P)

    def test_zero_dimension(self, example):
        with pytest.raises(AcperfError):
            sample_matrix(example, 1, 0, 5, 0)

    def test_too_many_configs(self, example):
        with pytest.raises(AcperfError):
            sample_matrix(example, 2, 3, 5, 0)
