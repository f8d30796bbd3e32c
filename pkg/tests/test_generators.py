from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from specmix.analysis import analyze_map
from specmix.core import MapKind, NormKind, asymptotic_part, op_norm
from specmix.errors import InvariantError
from specmix.generators import (
    FAMILIES,
    generate,
    gibbs_state,
    jordan_form,
    jordan_synthetic,
    metropolis_chain,
    model_operator,
    pinching_mix,
    random_channel,
    random_hamiltonian,
    random_kraus,
    random_stochastic,
    random_zeros,
    sigma_depolarizing,
    slow_chain,
    with_unitary_part,
)
from specmix.io import dumps, load_map, map_to_dict

FIXTURES = Path(__file__).parent / "fixtures"


def remainder_powers(T, n_max):
    A = T - asymptotic_part(T).entries
    P = np.eye(T.shape[0])
    for _ in range(n_max):
        P = P @ A
        yield P


class TestSlowChain:
    def test_plateau_d6(self):
        t = slow_chain([0.5] * 5)
        vals = [op_norm(P, NormKind.ONE_CLASSICAL) for P in remainder_powers(t.entries, 6)]
        assert_allclose(vals[:4], 2.0, atol=1e-10)
        assert vals[4] < 2 and vals[5] < vals[4]

    def test_is_stochastic_and_triangular(self):
        T = slow_chain([0.3, 0.5, 0.7]).entries
        assert_allclose(T.sum(axis=0), 1)
        assert_allclose(np.sort(np.diag(T)), [0.3, 0.5, 0.7, 1.0])

    def test_rejects_bad_lambda(self):
        with pytest.raises(ValueError):
            slow_chain([1.0])


class TestMetropolis:
    def test_uniform_target_returns_proposal(self):
        P = np.full((3, 3), 1 / 3)
        tmap, cert = metropolis_chain([1 / 3] * 3, P)
        assert_allclose(tmap.entries, P)
        assert cert.residual <= 1e-14

    def test_hand_example(self):
        tmap, cert = metropolis_chain([0.25, 0.75], np.full((2, 2), 0.5))
        assert_allclose(tmap.entries, [[0.5, 1 / 6], [0.5, 5 / 6]], atol=1e-15)
        assert cert.accepted and cert.residual <= 1e-15

    def test_asymmetric_proposal_rejected(self):
        with pytest.raises((InvariantError, ValueError)):
            metropolis_chain([0.5, 0.5], np.array([[0.9, 0.5], [0.1, 0.5]]))


class TestQuantumFamilies:
    def test_depolarizing_extremes(self):
        sigma = gibbs_state(random_hamiltonian(2, 3), 1.0)
        tmap, _ = sigma_depolarizing(sigma, 0.0)
        assert_allclose(tmap.entries, np.eye(4), atol=1e-14)
        a = analyze_map(tmap)
        assert a.mu == 0.0
        tmap, _ = sigma_depolarizing(sigma, 1.0)
        A = tmap.entries - asymptotic_part(tmap.entries).entries
        assert np.linalg.norm(A) <= 1e-12

    def test_pinching_mix_reduces_to_depolarizing(self):
        sigma = np.diag([0.5, 0.3, 0.2])
        a, _ = pinching_mix(sigma, [{"kind": "depolarizing", "p": 0.4, "weight": 1.0}])
        b, _ = sigma_depolarizing(sigma, 0.4)
        assert_allclose(a.entries, b.entries, atol=1e-14)

    def test_pinching_mix_certificate(self):
        sigma = np.diag([0.5, 0.3, 0.2])
        tmap, cert = pinching_mix(sigma, [{"kind": "pinching", "weight": 0.3},
                                          {"kind": "depolarizing", "p": 0.5, "weight": 0.7}])
        assert tmap.kind is MapKind.QUANTUM
        assert cert.residual <= 1e-10

    def test_gibbs_state(self):
        H = random_hamiltonian(3, 1)
        assert np.linalg.norm(H, 2) == pytest.approx(1.0)
        sigma = gibbs_state(H, 0.0)
        assert_allclose(sigma, np.eye(3) / 3, atol=1e-14)

    def test_unitary_channel(self):
        tmap = random_channel(2, 1, seed=5)
        w = np.linalg.eigvals(tmap.entries)
        assert_allclose(np.abs(w), 1, atol=1e-12)
        A = tmap.entries - asymptotic_part(tmap.entries).entries
        assert np.linalg.norm(A) <= 1e-10

    def test_kraus_completeness(self):
        K = random_kraus(2, 4, seed=7)
        S = sum(k.conj().T @ k for k in K)
        assert np.max(np.abs(S - np.eye(2))) <= 1e-12


class TestModelOperator:
    @given(st.integers(0, 10 ** 6), st.integers(2, 6))
    def test_postconditions(self, seed, k):
        zeros = random_zeros(k, seed)
        M = model_operator(zeros).entries
        w = np.linalg.eigvals(M)
        for z in zeros:
            assert np.min(np.abs(w - z)) <= 1e-8
        assert np.linalg.norm(M, 2) <= 1 + 1e-10
        P = np.eye(k, dtype=complex)
        for _ in range(k - 1):
            P = P @ M
            assert abs(np.linalg.norm(P, 2) - 1) <= 1e-8

    def test_zero_gaps(self):
        zeros = random_zeros(6, seed=9, min_gap=0.05)
        gaps = [abs(a - b) for i, a in enumerate(zeros) for b in zeros[i + 1:]]
        assert min(gaps) >= 0.05

    def test_rejects_repeated_zeros(self):
        with pytest.raises(ValueError):
            model_operator([0.3, 0.3])

    def test_unitary_direct_sum(self):
        M = model_operator([0.2, -0.4])
        U = np.array([[0, 1], [1, 0]])
        t = with_unitary_part(M, U)
        assert t.dim == 4
        a = analyze_map(t)
        assert_allclose(sorted(abs(v) for v in a.eigenvalues)[-2:], [1, 1])
        assert a.mu == pytest.approx(0.4)


class TestRandomFamilies:
    def test_trivial_dimension(self):
        assert_allclose(random_stochastic(1, seed=0).entries, [[1.0]])

    def test_golden(self):
        ref = load_map(FIXTURES / "random_stochastic_d4_seed42.json")
        assert_allclose(random_stochastic(4, 42).entries, ref.entries, rtol=0, atol=0)

    @given(st.integers(0, 10 ** 6), st.integers(1, 8))
    def test_stochastic(self, seed, d):
        T = random_stochastic(d, seed).entries
        assert T.min() >= 0
        assert_allclose(T.sum(axis=0), 1, atol=1e-12)

    @given(st.integers(0, 10 ** 6), st.integers(2, 3), st.integers(1, 4))
    def test_channel_is_trace_preserving(self, seed, d, k):
        tmap = random_channel(d, k, seed)
        one = np.eye(d).reshape(-1, order="F")
        assert_allclose(tmap.entries.conj().T @ one, one, atol=1e-12)


class TestJordanSynthetic:
    def test_unit_kappa_is_exact(self):
        assert_allclose(jordan_synthetic([(0.5, 2)], 1.0, seed=0).entries, jordan_form([(0.5, 2)]))

    def test_condition_number(self):
        M = jordan_synthetic([(0.4, 2), (0.9, 1)], 10.0, seed=3)
        assert M.dim == 3
        assert np.allclose(np.sort(np.linalg.eigvals(M.entries).real), [0.4, 0.4, 0.9], atol=1e-6)


class TestGenerate:
    @pytest.mark.parametrize("family", FAMILIES)
    def test_every_family_is_deterministic(self, family):
        a = dumps(map_to_dict(generate(family, {}, seed=17).tmap))
        b = dumps(map_to_dict(generate(family, {}, seed=17).tmap))
        assert a == b

    def test_seeds_differ(self):
        a = generate("random_stochastic", {"d": 3}, seed=1).tmap.entries
        b = generate("random_stochastic", {"d": 3}, seed=2).tmap.entries
        assert not np.allclose(a, b)

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            generate("nope")

    @pytest.mark.parametrize("family", ["metropolis", "sigma_depolarizing", "pinching_mix"])
    def test_certificates_accepted(self, family):
        inst = generate(family, {}, seed=4)
        assert inst.cert is not None and inst.cert.residual <= 1e-10
