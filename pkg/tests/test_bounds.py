import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from specmix import bounds as bd
from specmix.analysis import analyze_map
from specmix.bounds import BOUND_NAMES, BoundContext, DetailedBalanceCert, bound_records
from specmix.errors import BoundNotApplicable
from specmix.generators import metropolis_chain, random_metropolis, sigma_depolarizing
from specmix.spectral import BlaschkeData, blaschke_inv_sup

E2 = math.e ** 2


class TestClosedForms:
    def test_schur(self):
        assert bd.schur_bound(0.5, 2, 1, 4) == pytest.approx(2.5, rel=1e-12)
        assert bd.schur_bound(0.0, 3, 1, 3) == 0.0
        assert bd.schur_bound(0.0, 3, 1, 7) == 0.0
        want = 2 * 0.9 ** 7 * 10 ** 3 * 4.9 ** 3
        assert want == pytest.approx(1.1251e5, rel=1e-3)
        assert bd.schur_bound(0.9, 4, 2, 10) == pytest.approx(want, rel=1e-12)

    def test_jordan_empirical(self):
        assert bd.jordan_empirical_bound(1.0, 0.5, 1, 10) == pytest.approx(0.5 ** 10)
        assert bd.jordan_empirical_bound(3.0, 0.0, 2, 4) == 0.0

    def test_wiener_main(self):
        sup = 0.725 / (0.55 * 0.05)
        want = 0.5 ** 11 * 4 * E2 * math.sqrt(2) * 3 / (10 * 0.45 ** 1.5) * sup
        assert want == pytest.approx(0.5347, rel=1e-3)
        assert bd.wiener_main_bound(0.5, 2, 1, 10, sup) == pytest.approx(want, rel=1e-12)
        assert bd.wiener_main_bound(0.0, 2, 1, 10, 1.0) == 0.0

    def test_wiener_main_single_root(self):
        # written out: mu^(n+1) 4 e^2 C sqrt(1) (1+1) / (n (1-(1+1/n)mu)^(3/2)) * sup
        want = 0.5 ** 11 * 4 * E2 * 2 / (10 * 0.45 ** 1.5) / 0.55
        assert bd.wiener_main_bound(0.5, 1, 1, 10, 1 / 0.55) == pytest.approx(want, rel=1e-12)

    def test_wiener_factorized(self):
        B = BlaschkeData.from_roots([0, 0.5])
        want = 0.5 ** 10 * 4 * E2 * math.sqrt(2) * 3 / 0.45 ** 1.5 / 0.55
        assert want == pytest.approx(0.7375, rel=1e-3)
        assert bd.wiener_factorized_bound(B, 0.5, 1, 10) == pytest.approx(want, rel=1e-12)

    def test_wiener_factorized_empty_product(self):
        B = BlaschkeData.from_roots([0.5])
        want = 0.5 ** 10 * 4 * E2 * 2 / (1 - 1.1 * 0.5) ** 1.5
        assert bd.wiener_factorized_bound(B, 0.5, 1, 10) == pytest.approx(want, rel=1e-12)

    def test_contractive(self):
        sup = 0.725 / (0.55 * 0.05)
        want = 0.5 ** 11 * (2 * 2 * math.e) / (10 * (1 - 0.3025)) * sup
        assert want == pytest.approx(0.0200671, rel=1e-5)
        assert bd.contractive_bound(0.5, 2, 10, sup) == pytest.approx(want, rel=1e-12)
        assert bd.contractive_bound(0.0, 2, 10, 1.0) == 0.0

    @pytest.mark.parametrize("fn", [
        lambda: bd.wiener_main_bound(0.9, 2, 1, 9, 1.0),
        lambda: bd.wiener_factorized_bound(BlaschkeData.from_roots([0.9]), 0.9, 1, 9),
        lambda: bd.contractive_bound(0.9, 1, 9, 1.0),
    ])
    def test_small_n_not_applicable(self, fn):
        with pytest.raises(BoundNotApplicable):
            fn()

    def test_mu_out_of_range(self):
        with pytest.raises(ValueError):
            bd.schur_bound(1.0, 2, 1, 3)

    @given(st.integers(0, 10 ** 6), st.integers(1, 5), st.integers(1, 200))
    def test_main_never_exceeds_factorized(self, seed, k, n):
        rng = np.random.default_rng(seed)
        roots = 0.9 * np.sqrt(rng.uniform(size=k)) * np.exp(2j * np.pi * rng.uniform(size=k))
        B = BlaschkeData.from_roots(roots)
        mu = float(np.max(np.abs(roots)))
        if not n > mu / (1 - mu) or (1 + 1 / n) * mu >= 1:
            return
        sup = blaschke_inv_sup(B, mu * (1 + 1 / n))
        main = bd.wiener_main_bound(mu, B.degree, 1.0, n, sup)
        assert main <= bd.wiener_factorized_bound(B, mu, 1.0, n) * (1 + 1e-9)

    @given(st.floats(0.05, 0.9), st.integers(1, 6))
    def test_tails_nonincreasing(self, mu, D):
        n0 = max(D, math.ceil(2 * mu / (1 - mu)) + 1)
        ns = range(n0 + 40, n0 + 400, 7)
        vals = [bd.schur_bound(mu, D, 1, n) for n in ns]
        # eventually decreasing: compare across the tail once the polynomial factor is beaten
        tail = [v for n, v in zip(ns, vals) if n > 3 * D / (1 - mu) ** 2]
        assert all(b <= a * (1 + 1e-12) for a, b in zip(tail, tail[1:]))
        B = BlaschkeData.from_roots([mu])
        fact = [bd.wiener_factorized_bound(B, mu, 1, n) for n in ns]
        late = [v for n, v in zip(ns, fact) if n > 4 / (1 - mu) ** 2]
        assert all(b <= a * (1 + 1e-12) for a, b in zip(late, late[1:]))


class TestDetailedBalance:
    def test_identity_balance(self):
        cert = DetailedBalanceCert.general(np.eye(2), np.eye(2))
        assert bd.db_general_bound(cert, 0.5, 3) == pytest.approx(0.125)

    def test_classical_diagonal(self):
        tmap, cert = metropolis_chain([0.25, 0.75], np.full((2, 2), 0.5))
        general = DetailedBalanceCert.general(tmap.entries, np.diag([0.25, 0.75]))
        assert bd.db_general_bound(general, 0.5, 10) == pytest.approx(0.5 ** 10 * math.sqrt(3), rel=1e-12)
        assert 0.5 ** 10 * math.sqrt(3) == pytest.approx(1.691e-3, rel=1e-3)

    def test_maximally_mixed_sigma(self):
        tmap, cert = sigma_depolarizing(np.eye(2) / 2, 0.3)
        assert bd.db_general_bound(cert, 0.7, 5) == pytest.approx(0.7 ** 5, rel=1e-12)

    def test_classical_bound(self):
        tight, simple = bd.db_classical_bound([0.25] * 4, 0.5, 3)
        assert (tight, simple) == pytest.approx((2 * 0.125, 4 * 0.125))
        tight, simple = bd.db_classical_bound([0.25, 0.75], 0.5, 10)
        assert tight == pytest.approx(2.392e-3, rel=1e-3)
        assert simple == pytest.approx(3.906e-3, rel=1e-3)

    def test_quantum_bound(self):
        tight, _ = bd.db_quantum_bound([1 / 3] * 3, 0.5, 4, 3)
        assert tight == pytest.approx(0.5 ** 4 * math.sqrt(3))
        w = np.array([math.exp(-1), 1.0]) / (1 + math.exp(-1))
        _, simple = bd.db_quantum_bound(w, 0.9, 50, 2)
        assert simple == pytest.approx(0.9 ** 50 / w[0], rel=1e-12)
        assert simple == pytest.approx(1.9165e-2, rel=1e-3)
        vals = [bd.db_quantum_bound([lo, 1 - lo], 0.9, 5, 2)[1] for lo in (0.3, 0.1, 1e-3, 1e-6)]
        assert vals == sorted(vals)

    def test_gibbs_bound(self):
        assert bd.db_gibbs_bound(1.0, 0.0, 3, 0.5, 2) == pytest.approx(0.25 * 3)
        want = 0.9 ** 50 * 2 * E2
        assert want == pytest.approx(7.616e-2, rel=1e-3)
        assert bd.db_gibbs_bound(1.0, 1.0, 2, 0.9, 50) == pytest.approx(want, rel=1e-12)

    def test_certificate_residual(self):
        tmap, cert = random_metropolis(5, 1.0, seed=2)
        assert cert.accepted
        assert cert.residual <= 1e-10

    def test_rejected_certificate(self):
        T = np.array([[0.1, 0.6], [0.9, 0.4]])
        cert = DetailedBalanceCert.general(T, np.diag([0.9, 0.1]))
        assert not cert.accepted
        with pytest.raises(BoundNotApplicable):
            bd.db_general_bound(cert, 0.5, 3)

    @given(st.integers(0, 10 ** 6), st.integers(2, 6))
    def test_general_matches_classical_component(self, seed, d):
        tmap, cert = random_metropolis(d, 1.5, seed)
        pi = cert.pi
        general = DetailedBalanceCert.general(tmap.entries, np.diag(pi))
        want = 0.6 ** 7 * math.sqrt(pi.max() / pi.min())
        assert abs(bd.db_general_bound(general, 0.6, 7) - want) <= 1e-12

    def test_l2_fixed_point_and_decay(self):
        tmap, cert = metropolis_chain([0.2, 0.3, 0.5], np.full((3, 3), 1 / 3))
        data = bd.l2_eigendata(tmap.entries, cert)
        assert bd.l2_bound(data, cert.pi, 5) <= 1e-10
        Z = np.array([1.0, -1.0, 0.0])
        vals = [bd.l2_bound(data, Z, n) for n in range(1, 30)]
        if np.all(data.lambdas >= 0):
            assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 1e-3 * vals[0]

    def test_l2_quantum_fixed_point(self):
        sigma = np.diag([0.7, 0.3])
        tmap, cert = sigma_depolarizing(sigma, 0.4)
        data = bd.l2_eigendata(tmap.entries, cert)
        assert bd.l2_bound(data, sigma, 3) <= 1e-10


class TestEfficiencyThreshold:
    def test_example(self):
        got = bd.efficiency_threshold(4, 1, 1, 1, 1, 0, 2, math.exp(-1))
        assert got == pytest.approx(4 * (4 * math.log(2) + 1), rel=1e-12)
        assert got == pytest.approx(15.09, rel=1e-3)

    def test_degenerate(self):
        got = bd.efficiency_threshold(3, 2, 1, 0.5, 1, 0, 1, 0.01)
        assert got == pytest.approx(9 / 0.5 * math.log(100), rel=1e-12)


class TestBoundRecords:
    def _ctx(self, norm="op_inf", cert=None):
        B = BlaschkeData.from_roots([0.0, 0.5])
        return BoundContext(norm=norm, D=2, mu=0.5, d_mu=1, kappa=1.0, blaschke=B, C=1.0,
                            contractive=True, cert=cert, base_dim=None)

    def test_every_name_reported(self):
        recs = bound_records(self._ctx(), 4)
        assert [r.name for r in recs] == list(BOUND_NAMES)
        assert all((r.value is None) == (not r.applicable) for r in recs)

    def test_small_n_inapplicable(self):
        recs = {r.name: r for r in bound_records(self._ctx(), 1)}
        assert not recs["wiener_main"].applicable
        assert recs["wiener_main"].reason
        assert recs["schur"].applicable

    def test_db_bounds_need_certificate(self):
        recs = {r.name: r for r in bound_records(self._ctx(), 10)}
        assert not any(recs[n].applicable for n in BOUND_NAMES if n.startswith("db_"))

    def test_digest_is_stable(self):
        assert self._ctx().digest() == self._ctx().digest()
        assert self._ctx().digest() != self._ctx("one_to_one_classical").digest()

    def test_quantum_context_with_sigma(self):
        tmap, cert = sigma_depolarizing(np.diag([0.6, 0.4]), 0.5)
        ctx = analyze_map(tmap).bound_context("one_to_one_hermitian", cert)
        recs = {r.name: r for r in bound_records(ctx, 5)}
        assert recs["db_quantum"].applicable
        assert not recs["db_classical"].applicable
        assert recs["db_quantum"].value == pytest.approx(0.5 ** 5 * math.sqrt(2 * 0.6 / 0.4), rel=1e-9)
