"""Max-quotient principle: sufficiency, necessity and edge cases."""

import numpy as np
import pytest

from varcap import (
    SymmetricForm,
    classify,
    find_witness,
    quotient,
    verify_principle,
)
from varcap.errors import (
    AsymmetricMatrixError,
    DimensionMismatchError,
    NonFiniteInputError,
)


def random_spd(rng, n):
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    d = rng.uniform(0.1, 10.0, n)
    return (q * d) @ q.T


def random_indefinite(rng, n):
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    d = rng.uniform(0.1, 10.0, n)
    d[rng.integers(0, n)] *= -1.0
    return (q * d) @ q.T


class TestSymmetricForm:
    def test_rejects_asymmetric(self):
        with pytest.raises(AsymmetricMatrixError):
            SymmetricForm.from_matrix([[1.0, 2.0], [0.0, 1.0]])

    def test_symmetrizes_roundoff(self):
        m = np.array([[1.0, 2.0 + 1e-12], [2.0, 1.0]])
        form = SymmetricForm.from_matrix(m)
        assert np.array_equal(form.matrix, form.matrix.T)
        assert form.norm == pytest.approx(3.0, rel=1e-9)

    def test_rejects_bad_shapes(self):
        with pytest.raises(DimensionMismatchError):
            SymmetricForm.from_matrix(np.ones((2, 3)))
        with pytest.raises(NonFiniteInputError):
            SymmetricForm.from_matrix([[np.inf]])


class TestQuotient:
    def test_matches_direct_formula(self):
        rng = np.random.default_rng(3)
        form = SymmetricForm.from_matrix(random_spd(rng, 5))
        u = rng.standard_normal(5)
        v = rng.standard_normal(5)
        av = form.matrix @ v
        expected = (u @ av) ** 2 / (v @ av)
        q = quotient(form, u, v)
        assert not q.degenerate
        assert q.value == pytest.approx(expected, rel=1e-14)

    def test_zero_denominator_convention(self):
        form = SymmetricForm.from_matrix(np.diag([1.0, -1.0]))
        # (Av, v) = 0 on the diagonal directions of the light cone.
        q = quotient(form, [1.0, 0.0], [1.0, 1.0])
        assert q.degenerate and q.value == 0.0

    def test_scale_invariance_in_v(self):
        rng = np.random.default_rng(4)
        form = SymmetricForm.from_matrix(random_spd(rng, 6))
        u = rng.standard_normal(6)
        v = rng.standard_normal(6)
        q1 = quotient(form, u, v).value
        q2 = quotient(form, u, 7.5 * v).value
        assert q1 == pytest.approx(q2, rel=1e-12)


class TestClassify:
    def test_signatures(self):
        assert classify(SymmetricForm.from_matrix(np.eye(3))) == "nonneg"
        assert classify(SymmetricForm.from_matrix(-2.0 * np.eye(3))) == "nonpos"
        assert classify(SymmetricForm.from_matrix(np.diag([1.0, -1.0]))) == "indefinite"
        assert classify(SymmetricForm.from_matrix(np.zeros((2, 2)))) == "zero"
        # Positive semidefinite with an exact kernel is still nonneg.
        assert classify(SymmetricForm.from_matrix(np.diag([1.0, 0.0]))) == "nonneg"


class TestSufficiency:
    def test_bounded_and_attained_spd(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            n = int(rng.integers(2, 12))
            form = SymmetricForm.from_matrix(random_spd(rng, n))
            u = rng.standard_normal(n)
            qfu = float(u @ form.matrix @ u)
            report = verify_principle(form, u, random_trials=500, seed=1)
            assert report.classification == "nonneg"
            assert report.attained_at_u
            assert report.best_quotient <= qfu * (1 + 1e-8) + 1e-12
            assert report.witness is None

    def test_semidefinite_kernel_direction(self):
        form = SymmetricForm.from_matrix(np.diag([1.0, 0.0]))
        u = np.array([1.0, 1.0])
        report = verify_principle(form, u, seed=2)
        assert report.classification == "nonneg"
        assert report.best_quotient <= (u @ form.matrix @ u) * (1 + 1e-8) + 1e-12


class TestNecessity:
    def test_witness_exceeds_any_bound(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            n = int(rng.integers(2, 12))
            form = SymmetricForm.from_matrix(random_indefinite(rng, n))
            u = rng.standard_normal(n)
            qfu = float(u @ form.matrix @ u)
            witness = find_witness(form, u)
            assert witness is not None
            assert witness.a > 0 > witness.c
            assert witness.lambda1 < 0 < witness.lambda2
            # Roots of the denominator polynomial a l^2 + 2 b l + c.
            for lam in (witness.lambda1, witness.lambda2):
                val = witness.a * lam**2 + 2 * witness.b * lam + witness.c
                assert abs(val) < 1e-9 * max(abs(witness.a), abs(witness.c))
            assert witness.quotient >= qfu + 1.0

    def test_two_by_two_analytic_family(self):
        # For diag(1, -1) and u = (1, 1): v = lam*z + w with z = e1, w = e2
        # gives quotient (lam - s)^2 / (lam^2 - 1) for s = z-sign convention;
        # just outside the pole lam = -(1 + delta) it equals (2 + delta)/delta.
        form = SymmetricForm.from_matrix(np.diag([1.0, -1.0]))
        u = np.array([1.0, 1.0])
        for delta in (0.1, 0.01, 1e-4):
            lam = -(1.0 + delta)
            v = np.array([lam, 1.0])
            q = quotient(form, u, v)
            assert not q.degenerate
            assert q.value == pytest.approx((2.0 + delta) / delta, rel=1e-9)

    def test_orthogonal_numerator_returns_none(self):
        # With u in the kernel-orthogonal complement trick: pick u with
        # A u orthogonal to both extreme eigenvectors.
        form = SymmetricForm.from_matrix(np.diag([1.0, 0.5, -1.0]))
        u = np.array([0.0, 1.0, 0.0])  # Au = 0.5 e2, orthogonal to e1 and e3
        assert find_witness(form, u) is None

    def test_not_indefinite_returns_none(self):
        form = SymmetricForm.from_matrix(np.eye(2))
        assert find_witness(form, [1.0, 0.0]) is None

    def test_fallback_still_beats_bound(self):
        # Numerator orthogonal to the witness family: the report falls back
        # to random probes, which still reveal unboundedness comfortably.
        form = SymmetricForm.from_matrix(np.diag([1.0, 0.5, -1.0]))
        u = np.array([0.0, 1.0, 0.0])
        report = verify_principle(form, u, seed=5)
        assert report.classification == "indefinite"
        assert report.best_quotient > float(u @ form.matrix @ u)


class TestDeterminism:
    def test_same_seed_same_report(self):
        rng = np.random.default_rng(31)
        form = SymmetricForm.from_matrix(random_indefinite(rng, 8))
        u = rng.standard_normal(8)
        r1 = verify_principle(form, u, seed=42)
        r2 = verify_principle(form, u, seed=42)
        assert r1.best_quotient == r2.best_quotient
        assert r1.quadratic_form_at_u == r2.quadratic_form_at_u
