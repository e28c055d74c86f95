import sys
import os
import numpy as np
import pytest

# Add parent directory to path to import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from balg import PolyLinearMap, identity, kraus_map, random_cp_poly_map, random_element, random_hermitian, scalar_map
from fock import (Flavor, FockOperators, FockState, WordSpace, bbalpha_model_cumulants, boolean_model_moments,
                  boolean_moment_sum, boolean_transport_cumulants, counterexample_distribution, flip_conjugation,
                  gram_positivity, model_distribution, model_moments, quadratic_witness)
from series import max_difference, random_series
from transforms import (BooleanPair, CumulantKind, Distribution, Semicircular, boolean_pair_series,
                        convolution_power, make_distribution, rb_hat_alpha, rm_hat)
from utils import ArgumentError, BoundsError


@pytest.fixture
def rng():
    return np.random.default_rng(5)


def _scalar_word_map(values):
    """d = 1 word map with layer k equal to values[k]."""
    return PolyLinearMap([np.full((1,) * (k + 3), value, dtype=complex) for k, value in enumerate(values)])


@pytest.fixture
def pair(rng):
    lam = random_hermitian(2, rng, 0.5)
    beta = random_cp_poly_map(2, 2, rng)
    return lam, beta


class TestFockState:
    """Tests for Fock vectors."""

    def test_vacuum_and_element(self):
        """Level 0 components."""
        assert np.allclose(FockState.vacuum(2).vacuum_part(), identity(2))
        state = FockState.element(2 * identity(2))
        assert np.allclose((state + state).vacuum_part(), 4 * identity(2))
        assert np.allclose((0.5 * state).vacuum_part(), identity(2))

    def test_word_layout(self, rng):
        """A degree k word is one component of composition (k,)."""
        coeffs = [random_element(2, rng) for _ in range(3)]
        state = FockState.word(coeffs)
        assert list(state.components) == [(2,)]
        assert state.components[(2,)].shape == (2,) * 6
        with pytest.raises(ArgumentError):
            FockState.word(coeffs[:1])

    def test_left_multiply_and_prune(self, rng):
        """b acts on the first coefficient; prune drops deep components."""
        b = random_element(2, rng)
        state = FockState.vacuum(2) + FockState.word([identity(2), identity(2)])
        moved = state.left_multiply(b)
        assert np.allclose(moved.vacuum_part(), b)
        assert list(state.prune(0).components) == [()]


class TestScalarModels:
    """Tests on d = 1 models with known moments."""

    def test_free_model_is_semicircular(self):
        """Free cumulants (0, 1, 0, 0) give the Catalan moments."""
        ops = FockOperators(np.zeros((1, 1)), _scalar_word_map([1.0, 0.0, 0.0, 0.0, 0.0]), Flavor.FREE,
                            max_len=6)
        moments = model_distribution(ops, 6).moments.scalars()
        assert np.allclose(moments, [0, 1, 0, 2, 0, 5])

    def test_boolean_model_is_bernoulli(self):
        """Boolean cumulants (0, 1, 0, 0) give the symmetric Bernoulli moments."""
        ops = FockOperators(np.zeros((1, 1)), _scalar_word_map([1.0, 0.0, 0.0]), Flavor.BOOLEAN, max_len=4)
        assert np.allclose(model_distribution(ops, 4).moments.scalars(), [0, 1, 0, 1])

    def test_potential(self):
        """lambda shifts the first moment."""
        ops = FockOperators(np.array([[3.0]]), _scalar_word_map([1.0]), Flavor.FREE, max_len=2)
        assert np.allclose(model_distribution(ops, 2).moments.scalars(), [3, 10])

    def test_potential_depth(self):
        """Boolean lambda acts on the vacuum only: m_3 = c^3 + 2c, free gives c^3 + 3c."""
        lam = np.array([[2.0]])
        boolean = FockOperators(lam, _scalar_word_map([1.0, 0.0]), Flavor.BOOLEAN, max_len=3)
        free = FockOperators(lam, _scalar_word_map([1.0, 0.0]), Flavor.FREE, max_len=3)
        assert np.allclose(model_distribution(boolean, 3).moments.scalars(), [2, 5, 12])
        assert np.allclose(model_distribution(free, 3).moments.scalars(), [2, 5, 14])


class TestModels:
    """Tests for the Boolean, free and interpolated models over M_2."""

    def test_boolean_model(self, rng, pair):
        """Fock moments = interval sum = BM(lambda, beta)."""
        lam, beta = pair
        ops = FockOperators(lam, beta, Flavor.BOOLEAN, max_len=4)
        moments = boolean_model_moments(lam, beta, 4)
        for n in range(1, 5):
            args = [random_element(2, rng) for _ in range(n - 1)]
            direct = boolean_moment_sum(lam, beta, n, args)
            assert np.allclose(model_moments(ops, n, args), direct)
            assert np.allclose(moments.term(n)(*args), direct)

    def test_free_model(self, rng, pair):
        """Free Fock moments = RM(lambda, beta)."""
        lam, beta = pair
        ops = FockOperators(lam, beta, Flavor.FREE, max_len=4)
        moments = rm_hat(boolean_pair_series(lam, beta, 4))
        for n in range(1, 5):
            args = [random_element(2, rng) for _ in range(n - 1)]
            assert np.allclose(model_moments(ops, n, args), moments.term(n)(*args))

    def test_interpolated_model(self, rng, pair):
        """B-cumulants of the interpolated model = RB_alpha(lambda, beta)."""
        lam, beta = pair
        alpha = kraus_map([random_element(2, rng)])
        model = bbalpha_model_cumulants(lam, beta, alpha, 3)
        expected = rb_hat_alpha(alpha, boolean_pair_series(lam, beta, 3))
        assert max_difference(model, expected) < 1e-9

    def test_interpolated_endpoints(self, pair):
        """alpha = 0 is the Boolean model and alpha = 1 the free one."""
        lam, beta = pair
        zero = FockOperators(lam, beta, Flavor.BBALPHA, scalar_map(2, 0), max_len=3)
        boolean = FockOperators(lam, beta, Flavor.BOOLEAN, max_len=3)
        one = FockOperators(lam, beta, Flavor.BBALPHA, scalar_map(2, 1), max_len=3)
        free = FockOperators(lam, beta, Flavor.FREE, max_len=3)
        assert max_difference(model_distribution(zero, 3).moments, model_distribution(boolean, 3).moments) < 1e-10
        assert max_difference(model_distribution(one, 3).moments, model_distribution(free, 3).moments) < 1e-10

    def test_guards(self, pair):
        """alpha is required for the interpolated flavor; orders are capped."""
        lam, beta = pair
        with pytest.raises(ArgumentError):
            FockOperators(lam, beta, Flavor.BBALPHA)
        ops = FockOperators(lam, beta, Flavor.FREE, max_len=2)
        with pytest.raises(BoundsError):
            model_moments(ops, 3, [identity(2), identity(2)])
        with pytest.raises(ArgumentError):
            model_moments(ops, 2, [])


class TestGram:
    """Tests for Gram certificates."""

    def test_semicircle_passes(self, rng):
        """A semicircle with CP variance is positive."""
        mu = make_distribution(Semicircular(kraus_map([random_element(2, rng)])), 6)
        report = gram_positivity(mu)
        assert report.passed
        assert report.L == 2
        assert report.size == 21
        assert report.hermitian_defect < 1e-10

    def test_boolean_pair_passes(self, pair):
        """mu_(lambda, beta) with CP beta is positive."""
        lam, beta = pair
        mu = make_distribution(BooleanPair(lam, beta), 4)
        assert gram_positivity(mu, L=1).passed

    def test_counterexample_fails(self):
        """The flip functional is not positive; E_11 is a witness."""
        mu = counterexample_distribution(1.0, 6)
        assert gram_positivity(mu).min_eigenvalue < 0
        assert not gram_positivity(mu).passed
        witness = quadratic_witness(mu, np.diag([1.0, 0.0]))
        assert np.allclose(witness, np.diag([-1.0, 2.0]))

    def test_flip_is_cp(self):
        """The flip conjugation is CP, so the failure is not about alpha."""
        assert flip_conjugation().is_cp()

    def test_counterexample_guard(self):
        """t must be positive."""
        with pytest.raises(ArgumentError):
            counterexample_distribution(0.0)

    def test_truncation_guard(self, rng):
        """Words of length L need moments up to 2L + 2."""
        mu = Distribution(random_series(2, 3, rng))
        with pytest.raises(BoundsError):
            gram_positivity(mu, L=1)

    def test_model_pairing_is_positive(self, pair):
        """The pairing of a CP word map is positive and its negation is not."""
        lam, beta = pair
        ops = FockOperators(lam, beta, Flavor.FREE, max_len=4)
        assert WordSpace.for_operators(ops, 1).report().passed
        negated = PolyLinearMap([-layer for layer in beta.layers])
        bad = FockOperators(lam, negated, Flavor.FREE, max_len=4)
        assert not WordSpace.for_operators(bad, 1).report().passed

    def test_report_dict(self, rng):
        """Report keys."""
        mu = make_distribution(Semicircular(scalar_map(1, 1.0)), 4)
        payload = gram_positivity(mu, L=1).to_dict()
        assert payload["pass"] is True
        assert set(payload) == {"min_eigenvalue", "pass", "L", "tol", "hermitian_defect", "size"}


class TestTransport:
    """Tests for the Boolean transport model."""

    def test_matches_boolean_power(self, rng):
        """B_T = (1 + e) B_mu (1 + e)*."""
        mu = Distribution(random_series(2, 4, rng, scale=0.5))
        e = random_element(2, rng, 0.5)
        expected = convolution_power(mu, kraus_map([identity(2) + e]), CumulantKind.BOOLEAN).b_series
        assert max_difference(boolean_transport_cumulants(mu, e), expected) < 1e-10

    def test_zero_shift(self, rng):
        """e = 0 leaves the Boolean cumulants unchanged."""
        mu = Distribution(random_series(2, 3, rng, scale=0.5))
        assert max_difference(boolean_transport_cumulants(mu, np.zeros((2, 2))), mu.b_series) < 1e-10

    def test_order_guard(self, rng):
        """Cannot ask beyond the truncation."""
        mu = Distribution(random_series(2, 3, rng))
        with pytest.raises(BoundsError):
            boolean_transport_cumulants(mu, np.zeros((2, 2)), trunc=4)
