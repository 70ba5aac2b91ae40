"""Model types, classification, and the model file format."""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import multi_term_model, simple_model
from mgperiodic.model import (
    Model,
    ModelError,
    Term,
    classify,
    dump_model,
    load_model,
    section4_model_path,
)
from mgperiodic.periodic import PeriodicFn


class TestClassify:
    def test_section4(self, section4):
        cls = section4.classification
        assert cls.M1 == {1}
        assert cls.M2 == frozenset()
        assert cls.M3 == {2, 3}
        assert cls.M4 == frozenset()
        assert cls.M5 == {4}
        assert cls.case == "superlinear"

    def test_single_m_equal_one(self):
        cls = classify(simple_model(m=1.0, n=1.0))
        assert cls.M2 == {1} and cls.case == "sublinear"

    def test_single_m_equals_n_plus_one(self):
        cls = classify(simple_model(m=2.0, n=1.0))
        assert cls.M4 == {1} and cls.case == "asymptotically_linear"

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.floats(0.05, 6.0), st.floats(0.1, 5.0)),
                    min_size=1, max_size=6))
    def test_partition_property(self, exponents):
        model = multi_term_model([(1.0, m, n, 1.0) for m, n in exponents])
        cls = model.classification
        sets = [cls.M1, cls.M2, cls.M3, cls.M4, cls.M5]
        for k in range(1, len(exponents) + 1):
            assert sum(k in s for s in sets) == 1

    def test_case_labels(self):
        assert classify(multi_term_model(
            [(1.0, 0.5, 1.0, 1.0), (1.0, 3.0, 1.0, 1.0)])).case == "superlinear"
        assert classify(multi_term_model(
            [(1.0, 0.5, 1.0, 1.0), (1.0, 1.5, 1.0, 1.0)])).case == "sublinear"
        assert classify(multi_term_model(
            [(1.0, 0.5, 1.0, 1.0), (1.0, 2.0, 1.0, 1.0)])).case \
            == "asymptotically_linear"


class TestValidation:
    def test_negative_lambda(self):
        with pytest.raises(ModelError):
            simple_model(lam=-1.0)

    def test_zero_lambda_allowed_in_memory(self):
        assert simple_model(lam=0.0).terms[0].lam == 0.0

    def test_nonpositive_m(self):
        with pytest.raises(ModelError):
            simple_model(m=0.0)

    def test_r_must_be_positive(self):
        with pytest.raises(ModelError):
            simple_model(r_mean=0.1, r_harmonics=[(1, 0.2, 0.0)])

    def test_negative_delay(self):
        T = 1.0
        r = PeriodicFn.constant(T, 1.0)
        with pytest.raises(ModelError):
            Term(lam=1.0, m=1.0, n=1.0, r=r,
                 tau=PeriodicFn.constant(T, -0.1), mu=PeriodicFn.constant(T, 0.0))

    def test_period_mismatch(self):
        r = PeriodicFn.constant(1.0, 1.0)
        zero = PeriodicFn.constant(1.0, 0.0)
        b = PeriodicFn.constant(2.0, 1.0)
        with pytest.raises(ModelError):
            Model(terms=(Term(lam=1.0, m=1.0, n=1.0, r=r, tau=zero, mu=zero),),
                  b=b)

    def test_needs_a_term(self):
        with pytest.raises(ModelError):
            Model(terms=(), b=PeriodicFn.constant(1.0, 1.0))

    def test_derived_constant(self, section4):
        assert section4.C == pytest.approx(0.005 * 1.1, rel=1e-12)
        assert section4.C > 0


class TestModelFiles:
    def test_section4_file(self, section4):
        assert section4.T == 0.005
        assert [t.m for t in section4.terms] == [0.95, 4.73, 1.0001, 1.12]
        assert [t.n for t in section4.terms] == [2.0, 3.74, 10.2, 0.11]
        assert section4.r_means == (0.04, 1.3, 0.9, 0.06)
        assert section4.b_mean == 1.1

    def test_round_trip(self, tmp_path, section4):
        path = tmp_path / "copy.model"
        dump_model(section4, path)
        again = load_model(path)
        assert again.T == section4.T
        assert [t.m for t in again.terms] == [t.m for t in section4.terms]
        assert again.b.harmonics == section4.b.harmonics

    def test_sampled_round_trip(self, tmp_path):
        doc = {"period": 1.0,
               "b": {"samples": [1.0, 1.2, 1.1, 0.9, 0.8, 0.9, 1.0, 1.1]},
               "terms": [{"lambda": 1.0, "m": 1.0, "n": 1.0,
                          "r": {"mean": 1.0}, "tau": {"mean": 0.0},
                          "mu": {"mean": 0.0}}]}
        path = tmp_path / "sampled.model"
        path.write_text(json.dumps(doc))
        model = load_model(path)
        assert model.b.samples is not None
        assert model.b.evaluate(0.125) == pytest.approx(1.2, abs=1e-12)

    def _write_variant(self, tmp_path, mutate):
        doc = json.loads(section4_model_path().read_text())
        mutate(doc)
        path = tmp_path / "bad.model"
        path.write_text(json.dumps(doc))
        return path

    def test_missing_period(self, tmp_path):
        path = self._write_variant(tmp_path, lambda d: d.pop("period"))
        with pytest.raises(ModelError, match="period"):
            load_model(path)

    def test_zero_lambda_rejected(self, tmp_path):
        def mutate(d):
            d["terms"][0]["lambda"] = 0.0
        path = self._write_variant(tmp_path, mutate)
        with pytest.raises(ModelError, match="lambda"):
            load_model(path)

    def test_missing_term_field(self, tmp_path):
        def mutate(d):
            d["terms"][1].pop("mu")
        path = self._write_variant(tmp_path, mutate)
        with pytest.raises(ModelError, match="mu"):
            load_model(path)

    def test_not_json(self, tmp_path):
        path = tmp_path / "junk.model"
        path.write_text("not a model")
        with pytest.raises(ModelError):
            load_model(path)


class TestRepoCopy:
    def test_repo_model_matches_packaged(self):
        import pathlib
        repo_copy = pathlib.Path(__file__).parent.parent / "models" / "section4.model"
        if not repo_copy.exists():
            import pytest as _pytest
            _pytest.skip("repo-level model copy not present (installed package)")
        assert repo_copy.read_bytes() == section4_model_path().read_bytes()
