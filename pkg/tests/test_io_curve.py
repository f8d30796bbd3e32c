import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from specmix.analysis import analyze_map
from specmix.core import MapKind, TransitionMap
from specmix.errors import InvariantError
from specmix.generators import metropolis_chain, random_channel, random_kraus, sigma_depolarizing, slow_chain
from specmix.harness.curve import (
    BoundCurve,
    curve_from_csv,
    curve_to_csv,
    default_grid,
    sweep,
    violations,
    worst_ratio,
)
from specmix.harness.svg import curve_to_svg
from specmix.io import (
    cert_from_dict,
    cert_to_dict,
    decode_matrix,
    dumps,
    encode_matrix,
    map_from_dict,
    map_to_dict,
)


class TestMapJson:
    def test_classical_roundtrip(self):
        t = slow_chain([0.3, 0.6])
        back = map_from_dict(json.loads(dumps(map_to_dict(t))))
        assert back.kind is MapKind.CLASSICAL
        assert_allclose(back.entries, t.entries, rtol=0, atol=0)
        assert back.power_bounds == t.power_bounds

    def test_quantum_roundtrip_is_exact(self):
        t = random_channel(2, 3, seed=1)
        back = map_from_dict(json.loads(dumps(map_to_dict(t))))
        assert back.kind is MapKind.QUANTUM and back.base_dim == 2
        assert np.array_equal(back.entries, t.entries)

    def test_kraus_form(self):
        K = random_kraus(2, 2, seed=3)
        doc = {"base_dim": 2, "kraus": [encode_matrix(k, real_shorthand=False) for k in K]}
        t = map_from_dict(doc)
        assert_allclose(t.entries, random_channel(2, 2, seed=3).entries, atol=1e-14)

    def test_kind_inference(self):
        assert map_from_dict({"entries": [[0.5, 0.1], [0.5, 0.9]]}).kind is MapKind.CLASSICAL
        assert map_from_dict({"entries": [[0.5, 0.1], [0.2, 0.3]]}).kind is MapKind.GENERIC

    def test_corrupted_stochastic_file(self):
        with pytest.raises(InvariantError) as exc:
            map_from_dict({"kind": "classical", "entries": [[0.5, 0.1], [0.4, 0.9]]})
        assert exc.value.invariant == "classical_column_sums"

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            map_from_dict({"dim": 3, "entries": [[1.0, 0.0], [0.0, 1.0]]})

    def test_complex_matrix_codec(self, rng):
        A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        assert np.array_equal(decode_matrix(json.loads(json.dumps(encode_matrix(A)))), A)

    def test_dumps_is_deterministic_and_sorted(self):
        a = dumps({"b": np.float64(1.5), "a": np.bool_(True), "c": np.arange(3)})
        assert a == dumps({"a": True, "b": 1.5, "c": [0, 1, 2]})
        assert list(json.loads(a)) == ["a", "b", "c"]

    def test_certificate_roundtrip(self):
        tmap, cert = metropolis_chain([0.2, 0.8], np.full((2, 2), 0.5))
        back = cert_from_dict(json.loads(dumps(cert_to_dict(cert))), tmap.entries)
        assert_allclose(back.pi, cert.pi)
        assert back.accepted
        tmap, cert = sigma_depolarizing(np.diag([0.7, 0.3]), 0.5, gibbs=(1.0, 0.4))
        back = cert_from_dict(json.loads(dumps(cert_to_dict(cert))), tmap.entries)
        assert back.gibbs == (1.0, 0.4)
        assert back.residual <= 1e-12


finite = st.floats(min_value=0, max_value=1e300, allow_nan=False, allow_infinity=False)


@st.composite
def curves(draw):
    ncols = draw(st.integers(0, 5))
    columns = tuple(f"b{i}" for i in range(ncols))
    ns = sorted(draw(st.sets(st.integers(1, 10 ** 6), min_size=1, max_size=20)))
    rows = tuple((n, draw(finite), tuple(draw(st.one_of(st.none(), finite)) for _ in columns)) for n in ns)
    return BoundCurve(draw(st.sampled_from(["x", "inst-1"])), "op_inf", columns, rows)


class TestCurve:
    @given(curves())
    def test_csv_roundtrip_exact(self, curve):
        assert curve_from_csv(curve_to_csv(curve)) == curve

    def test_rows_must_be_unique(self):
        with pytest.raises(ValueError):
            BoundCurve("x", "op_inf", (), ((2, 0.0, ()), (1, 0.0, ())))

    def test_default_grid(self):
        g = default_grid(0.5)
        assert g == list(range(1, 41))
        g = default_grid(0.99)
        assert g[:64] == list(range(1, 65)) and g[-1] == 256 and len(g) < 100

    def test_stationary_instance_is_zero(self):
        tmap, _ = sigma_depolarizing(np.diag([0.6, 0.4]), 1.0)
        curve = sweep(analyze_map(tmap), "op_inf", range(1, 10))
        assert all(a <= 1e-12 for a in curve.actual)

    def test_slow_chain_plateau(self):
        curve = sweep(analyze_map(slow_chain([0.5] * 5)), "one_to_one_classical", range(1, 9))
        assert_allclose(curve.actual[:4], 2.0, atol=1e-10)
        assert curve.actual[4] < 2

    def test_metropolis_db_classical_dominates(self):
        tmap, cert = metropolis_chain([0.25, 0.75], np.full((2, 2), 0.5))
        curve = sweep(analyze_map(tmap), "one_to_one_classical", range(1, 65), cert=cert)
        tight = curve.column("db_classical")
        assert all(v is not None for v in tight)
        assert all(a <= v * (1 + 1e-9) for a, v in zip(curve.actual, tight))
        assert violations(curve) == []
        assert 0 < worst_ratio(curve) <= 1 + 1e-9

    def test_empty_cells_for_inapplicable_bounds(self):
        curve = sweep(analyze_map(slow_chain([0.9, 0.2])), "op_inf", [1, 2])
        text = curve_to_csv(curve)
        header, first = text.splitlines()[1:3]
        cells = dict(zip(header.split(","), first.split(",")))
        assert cells["wiener_main"] == ""
        assert cells["db_classical"] == ""

    def test_state_columns(self):
        tmap, cert = metropolis_chain([0.3, 0.7], np.full((2, 2), 0.5))
        state = np.array([1.0, 0.0])
        curve = sweep(analyze_map(tmap), "one_to_one_classical", range(1, 20), cert=cert, state=state)
        assert "actual_state" in curve.columns and "l2_overlap" in curve.columns
        assert violations(curve) == []

    def test_violation_detection(self):
        curve = BoundCurve("x", "op_inf", ("schur",), ((1, 1.0, (0.5,)), (2, 0.1, (None,))))
        (v,) = violations(curve)
        assert v.bound == "schur" and v.n == 1 and v.ratio == 2.0
        assert math.isinf(worst_ratio(BoundCurve("x", "op_inf", ("schur",), ((1, 1.0, (0.0,)),))))


def test_svg_is_well_formed():
    curve = sweep(analyze_map(slow_chain([0.5, 0.5])), "op_inf", range(1, 30))
    root = ET.fromstring(curve_to_svg(curve))
    assert root.tag.endswith("svg")
    assert len(root.findall("{http://www.w3.org/2000/svg}polyline")) >= 2
