"""
Seeded verification suites behind `ovfree verify`.

Every suite draws its random instances sequentially from one
numpy.random.default_rng(seed), so a report depends only on (seed, d, trunc,
trials); the checks themselves run on joblib threads capped by OVFREE_THREADS.
"""
from dataclasses import dataclass
from typing import Any, Callable, Dict, List

import numpy as np
from joblib import Parallel, delayed

import config
from balg import (identity, identity_map, kraus_map, random_cp_poly_map, random_element,
                  random_hermitian, random_kraus_map, scalar_map)
from fock import (Flavor, FockOperators, bbalpha_model_cumulants, boolean_model_moments, boolean_moment_sum,
                  boolean_transport_cumulants, gram_positivity, model_moments)
from ncpart import Coloring, Family, catalan
from series import BSeries, compose_map, max_difference, random_series
from transforms import (BooleanPair, CumulantKind, Distribution, Semicircular, bb_alpha, bb_alpha_by_powers,
                        boolean_pair, boolean_pair_series, bm_hat, convolution_power, convolve, make_distribution,
                        partition_sum, phi, rb_hat_alpha, restrict_to_words, rm_hat, rm_hat_inv)
from utils import ArgumentError, get_logger

logger = get_logger("suites")

ORACLE_ORDER = 6    # Literal partition sums and Fock models stop here
MODEL_ORDER = 4     # Tabulated interpolated models stop here


@dataclass
class Suite:
    identity: str
    anchor: str
    tolerance: float
    make: Callable[[np.random.Generator, int, int], Any]
    check: Callable[[Any], float]
    min_trunc: int = 1


@dataclass
class SuiteResult:
    name: str
    identity: str
    anchor: str
    seed: int
    dim: int
    trunc: int
    errors: List[float]
    tolerance: float

    @property
    def max_error(self) -> float:
        return max(self.errors) if self.errors else 0.0

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance

    def to_dict(self):
        return {"suite": self.name, "identity": self.identity, "anchor": self.anchor, "seed": self.seed,
                "dim": self.dim, "trunc": self.trunc, "trials": len(self.errors), "errors": self.errors,
                "max_error": self.max_error, "tolerance": self.tolerance, "pass": self.passed}


def _cp(d, rng):
    return random_kraus_map(d, rng, rank=2, scale=0.5)


def _random_distribution(d, trunc, rng):
    return Distribution(random_series(d, trunc, rng, scale=0.5))


def _functional_error(series: BSeries, n: int, other) -> float:
    return float(np.max(np.abs(series.tensor(n) - other.tensor)))


# Suite bodies
def _make_series_pair(rng, d, trunc):
    return random_series(d, trunc, rng, scale=0.5), _cp(d, rng), _cp(d, rng)


def _check_nested_sums(inputs):
    F, alpha, _ = inputs
    top = min(F.trunc, ORACLE_ORDER)
    free = rm_hat(F)
    boolean = bm_hat(F)
    mixed = rb_hat_alpha(alpha, F)
    inner = compose_map(alpha, F)
    errors = []
    for n in range(1, top + 1):
        errors.append(_functional_error(free, n, partition_sum([F], n, Family.NC)))
        errors.append(_functional_error(boolean, n, partition_sum([F], n, Family.INT)))
        errors.append(_functional_error(mixed, n, partition_sum([F, inner], n, Family.LL_TOP, Coloring.outer)))
    return max(errors)


def _check_bm_rb_rm(inputs):
    F, _, _ = inputs
    return max_difference(bm_hat(rb_hat_alpha(identity_map(F.dim), F)), rm_hat(F))


def _check_rb_semigroup(inputs):
    F, alpha, beta = inputs
    return max_difference(rb_hat_alpha(alpha, rb_hat_alpha(beta, F)), rb_hat_alpha(alpha + beta, F))


def _check_rb_inverse(inputs):
    F, alpha, _ = inputs
    return max_difference(rb_hat_alpha(-alpha, rb_hat_alpha(alpha, F)), F)


def _check_rb_minus_id(inputs):
    F, _, _ = inputs
    return max_difference(rb_hat_alpha(-identity_map(F.dim), F), rm_hat_inv(bm_hat(F)))


def _make_distribution_pair(rng, d, trunc):
    return _random_distribution(d, trunc, rng), _cp(d, rng), _cp(d, rng)


def _check_bb_semigroup(inputs):
    mu, alpha, beta = inputs
    d = mu.dim
    composed = bb_alpha(alpha, bb_alpha(beta, mu))
    errors = [
        max_difference(composed.moments, bb_alpha(alpha + beta, mu).moments),
        max_difference(bb_alpha(scalar_map(d, 0), mu).moments, mu.moments),
        max_difference(bb_alpha(identity_map(d), mu).r_series, mu.b_series),
    ]
    return max(errors)


def _check_bb_powers(inputs):
    mu, alpha, _ = inputs
    one_plus = identity_map(mu.dim) + alpha
    left = convolution_power(bb_alpha(alpha, mu), one_plus, CumulantKind.BOOLEAN)
    right = convolution_power(mu, one_plus, CumulantKind.FREE)
    return max_difference(left.moments, right.moments)


def _make_phi(rng, d, trunc):
    return _random_distribution(d, trunc - 2, rng), _cp(d, rng)


def _check_phi_brownian(inputs):
    nu, alpha = inputs
    gamma = make_distribution(Semicircular(alpha), nu.trunc)
    left = phi(restrict_to_words(convolve(nu, gamma, CumulantKind.FREE)))
    right = bb_alpha(alpha, phi(restrict_to_words(nu)))
    return max_difference(left.moments, right.moments)


def _make_pair_model(rng, d, trunc):
    top = min(trunc, ORACLE_ORDER)
    lam = random_hermitian(d, rng, 0.5)
    beta = random_cp_poly_map(d, max(top - 2, 0), rng)
    args = [[random_element(d, rng) for _ in range(n - 1)] for n in range(1, top + 1)]
    return lam, beta, args, _cp(d, rng)


def _check_boolean_oracle(inputs):
    lam, beta, args, _ = inputs
    ops = FockOperators(lam, beta, Flavor.BOOLEAN, max_len=len(args))
    moments = boolean_model_moments(lam, beta, len(args))
    errors = []
    for n, word in enumerate(args, start=1):
        direct = boolean_moment_sum(lam, beta, n, word)
        errors.append(float(np.max(np.abs(direct - model_moments(ops, n, word)))))
        errors.append(float(np.max(np.abs(direct - moments.term(n)(*word)))))
    return max(errors)


def _check_free_oracle(inputs):
    lam, beta, args, _ = inputs
    ops = FockOperators(lam, beta, Flavor.FREE, max_len=len(args))
    moments = rm_hat(boolean_pair_series(lam, beta, len(args)))
    return max(float(np.max(np.abs(model_moments(ops, n, word) - moments.term(n)(*word))))
               for n, word in enumerate(args, start=1))


def _check_bbalpha_model(inputs):
    lam, beta, args, alpha = inputs
    top = min(len(args), MODEL_ORDER)
    model = bbalpha_model_cumulants(lam, beta, alpha, top)
    expected = rb_hat_alpha(alpha, boolean_pair_series(lam, beta, top))
    return max_difference(model, expected)


def _make_positivity(rng, d, trunc):
    top = 2 * config.FockConfig.GRAM_L + 2
    lam = random_hermitian(d, rng, 0.5)
    beta = random_cp_poly_map(d, top - 2, rng)
    return make_distribution(BooleanPair(lam, beta), top), _cp(d, rng)


def _check_positivity(inputs):
    mu, alpha = inputs
    candidates = [
        convolution_power(mu, alpha, CumulantKind.BOOLEAN),
        bb_alpha(alpha, mu),
        convolution_power(mu, identity_map(mu.dim) + alpha, CumulantKind.FREE),
    ]
    return max(max(0.0, -gram_positivity(candidate).min_eigenvalue) for candidate in candidates)


def _make_transport(rng, d, trunc):
    return _random_distribution(d, trunc, rng), random_element(d, rng, 0.5)


def _check_transport(inputs):
    mu, e = inputs
    one_e = identity(mu.dim) + e
    expected = convolution_power(mu, kraus_map([one_e]), CumulantKind.BOOLEAN).b_series
    return max_difference(boolean_transport_cumulants(mu, e), expected)


def _make_scalar(rng, d, trunc):
    return float(rng.uniform(0.2, 2.0)), _random_distribution(1, trunc, rng)


def _check_scalar(inputs):
    t, mu = inputs
    trunc = mu.trunc
    gamma_t = make_distribution(Semicircular(scalar_map(1, t)), trunc)
    expected = [t ** (n // 2) * catalan(n // 2) if n % 2 == 0 else 0.0 for n in range(1, trunc + 1)]
    errors = [float(np.max(np.abs(np.array(gamma_t.moments.scalars()) - expected)))]
    gamma_1 = make_distribution(Semicircular(identity_map(1)), trunc)
    power = convolution_power(gamma_1, scalar_map(1, t), CumulantKind.FREE)
    errors.append(max_difference(power.moments, gamma_t.moments))
    t_map = scalar_map(1, t)
    errors.append(max_difference(bb_alpha_by_powers(t_map, mu).moments, bb_alpha(t_map, mu).moments))
    return max(errors)


def _make_roundtrip(rng, d, trunc):
    return _random_distribution(d, trunc, rng)


def _check_roundtrip(mu):
    lam, beta = boolean_pair(mu)
    rebuilt = make_distribution(BooleanPair(lam, beta), mu.trunc)
    return max_difference(rebuilt.moments, mu.moments)


SUITES: Dict[str, Suite] = {
    "nested-sums": Suite("RM(F), BM(F), RB_a(F) equal their partition sums", "Def 5.5", 1e-10,
                         _make_series_pair, _check_nested_sums),
    "bm-rb-rm": Suite("BM(RB_id(F)) = RM(F)", "Prop 5.4", 1e-10, _make_series_pair, _check_bm_rb_rm),
    "rb-semigroup": Suite("RB_a(RB_b(F)) = RB_(a+b)(F)", "Prop 5.9", 1e-10, _make_series_pair, _check_rb_semigroup),
    "rb-inverse": Suite("RB_(-a)(RB_a(F)) = F", "Cor 5.10", 1e-10, _make_series_pair, _check_rb_inverse),
    "rb-minus-id": Suite("RB_(-id)(F) = RM^-1(BM(F))", "Eq 5.71", 1e-10, _make_series_pair, _check_rb_minus_id),
    "bb-semigroup": Suite("B_a(B_b(mu)) = B_(a+b)(mu), B_0 = id, R_(B_id(mu)) = B_mu", "Thm 6.4", 1e-10,
                          _make_distribution_pair, _check_bb_semigroup),
    "bb-powers": Suite("B_a(mu)^(uplus (1+a)) = mu^(boxplus (1+a))", "Prop 6.6", 1e-10,
                       _make_distribution_pair, _check_bb_powers),
    "phi-brownian": Suite("Phi[nu boxplus gamma_a] = B_a(Phi[nu])", "Thm 7.11", 1e-10,
                          _make_phi, _check_phi_brownian, 3),
    "boolean-oracle": Suite("interval sum = Boolean Fock moments = BM(lambda, beta)", "Construction 7.1", 1e-9,
                            _make_pair_model, _check_boolean_oracle),
    "free-oracle": Suite("free Fock moments = RM(lambda, beta)", "Remark 7.7", 1e-9,
                         _make_pair_model, _check_free_oracle),
    "bbalpha-model": Suite("B-cumulants of the interpolated Fock model = RB_a(lambda, beta)", "Thm 7.8", 1e-9,
                           _make_pair_model, _check_bbalpha_model),
    "positivity": Suite("Gram min eigenvalue >= 0 for mu^(uplus a), B_a(mu), mu^(boxplus (1+a))", "Thm 7.5",
                        1e-9, _make_positivity, _check_positivity, 6),
    "transport": Suite("B_T = (1+e) B_mu (1+e*) for T = (1+Q)Y(1+Q*)", "Sec 9 transport", 1e-10,
                       _make_transport, _check_transport),
    "scalar-regression": Suite("gamma^(boxplus t) = gamma_t with moments t^k C_k, B_t by powers", "Eq 1.6", 1e-12,
                               _make_scalar, _check_scalar),
    "pair-roundtrip": Suite("mu -> (lambda, beta) -> mu", "Lemma 7.4", 1e-10, _make_roundtrip, _check_roundtrip, 2),
}

# "Prop 5.9" -> "prop-5.9"
ANCHORS: Dict[str, str] = {suite.anchor.lower().replace(" ", "-"): name for name, suite in SUITES.items()}


def resolve_suite(name: str) -> str:
    """Registry name for a suite given by name or by anchor."""
    if name in SUITES:
        return name
    if name in ANCHORS:
        return ANCHORS[name]
    raise ArgumentError(f"unknown suite {name!r}; choose from {', '.join(sorted(SUITES) + sorted(ANCHORS))}")


def run_suite(name: str, seed: int, dim: int, trunc: int, trials: int = None) -> SuiteResult:
    """Draw the trial inputs in order, then check them on the worker pool."""
    name = resolve_suite(name)
    suite = SUITES[name]
    if trunc < suite.min_trunc:
        raise ArgumentError(f"suite {name} needs trunc >= {suite.min_trunc}")
    trials = config.CLIConfig.DEFAULT_TRIALS if trials is None else trials
    rng = np.random.default_rng(seed)
    inputs = [suite.make(rng, dim, trunc) for _ in range(trials)]
    checks = Parallel(n_jobs=config.thread_count(), prefer="threads")(delayed(suite.check)(item) for item in inputs)
    errors = [float(error) for error in checks]
    for trial, error in enumerate(errors):
        logger.debug("%s trial %d: error %.3e", name, trial, error)
    return SuiteResult(name, suite.identity, suite.anchor, seed, dim, trunc, errors, suite.tolerance)
