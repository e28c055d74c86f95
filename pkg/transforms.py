"""
Moment/cumulant transforms, distributions and convolution powers.

rm_hat sums nested functionals over NC(n), bm_hat over Int(n) and
rb_hat_alpha over the partitions with a unique outer block. The production
paths group each sum by the block that contains 1 (the outer block for
rb_hat_alpha): the elements strictly inside a gap of that block form an
arbitrary partition of the gap, so each gap is filled with an already computed
lower order of the summed series. partition_sum computes the literal sums and
serves as the reference.
"""
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from itertools import combinations
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from balg import (LinearMap, MultilinearFunctional, PolyLinearMap, apply_map, as_element, basis, chain, contract,
                  identity_map, invert_map, norm)
from config import AlgebraConfig
from ncpart import Coloring, Family, NCPartition, enumerate_partitions, mobius_nc, one
from series import BSeries, compose_map, linear_combine, nested_functional, truncate
from utils import ArgumentError, BoundsError, decode_matrix, get_logger

logger = get_logger("transforms")

TermSource = Callable[[int], np.ndarray]


class CumulantKind(Enum):
    FREE = "free"
    BOOLEAN = "boolean"


class _GapArguments:
    """Tensors b_l * H^[g](...) * b_r for the gaps of a block, cached per call."""

    def __init__(self, units: np.ndarray, fill: List[np.ndarray]):
        self.units = units
        self.fill = fill
        self.cache: Dict[int, np.ndarray] = {}

    def __call__(self, size: int) -> np.ndarray:
        if size == 0:
            return self.units
        if size not in self.cache:
            self.cache[size] = chain(self.units, self.fill[size - 1], self.units)
        return self.cache[size]


def _blocks_through(n: int, closing: bool):
    """Increasing tuples containing 1 (and n when closing) inside 1..n."""
    if closing:
        if n == 1:
            yield (1,)
            return
        inner = range(2, n)
        for size in range(len(inner) + 1):
            for chosen in combinations(inner, size):
                yield (1,) + chosen + (n,)
        return
    inner = range(2, n + 1)
    for size in range(len(inner) + 1):
        for chosen in combinations(inner, size):
            yield (1,) + chosen


def _grouped_sum(term: TermSource, n: int, gaps: _GapArguments, closing: bool,
                 skip_full: bool = False) -> np.ndarray:
    """Sum over the block V through 1 of term^[|V|] with filled gaps and tail."""
    units = gaps.units
    d = units.shape[-1]
    total = np.zeros((d * d,) * (n - 1) + (d, d), dtype=complex)
    for block in _blocks_through(n, closing):
        if skip_full and len(block) == n:
            continue
        value = contract(term(len(block)), [gaps(right - left - 1) for left, right in zip(block, block[1:])])
        last = block[-1]
        if last < n:
            value = chain(value, units, gaps.fill[n - last - 1])
        total += value
    return total


def rm_hat(F: BSeries) -> BSeries:
    """Moments from free cumulants: G^[n] = sum over NC(n) of F^[pi]."""
    moments: List[np.ndarray] = []
    gaps = _GapArguments(basis(F.dim), moments)
    for n in range(1, F.trunc + 1):
        moments.append(_grouped_sum(F.tensor, n, gaps, closing=False))
        logger.debug("rm_hat: order %d done", n)
    return BSeries.from_tensors(moments)


def rm_hat_inv(G: BSeries) -> BSeries:
    """Free cumulants by triangular recursion F^[n] = G^[n] - sum over pi != 1_n."""
    fill = [term.tensor for term in G.terms]
    gaps = _GapArguments(basis(G.dim), fill)
    cumulants: List[np.ndarray] = []
    for n in range(1, G.trunc + 1):
        lower = _grouped_sum(lambda k: cumulants[k - 1], n, gaps, closing=False, skip_full=True)
        cumulants.append(G.tensor(n) - lower)
    return BSeries.from_tensors(cumulants)


def bm_hat(F: BSeries) -> BSeries:
    """Moments from Boolean cumulants: G^[n] = sum over Int(n) of F^[pi]."""
    units = basis(F.dim)
    moments: List[np.ndarray] = []
    for n in range(1, F.trunc + 1):
        total = F.tensor(n).copy()
        for k in range(1, n):
            total += chain(F.tensor(k), units, moments[n - k - 1])
        moments.append(total)
    return BSeries.from_tensors(moments)


def bm_hat_inv(G: BSeries) -> BSeries:
    """Boolean cumulants by triangular recursion."""
    units = basis(G.dim)
    cumulants: List[np.ndarray] = []
    for n in range(1, G.trunc + 1):
        total = G.tensor(n).copy()
        for k in range(1, n):
            total -= chain(cumulants[k - 1], units, G.tensor(n - k))
        cumulants.append(total)
    return BSeries.from_tensors(cumulants)


def rb_hat_alpha(alpha: LinearMap, F: BSeries) -> BSeries:
    """Sum over pi << 1_n of (F, alpha o F)^[pi] with the outer block colored by F."""
    if alpha.dim != F.dim:
        raise ArgumentError(f"map on M_{alpha.dim} with a series on M_{F.dim}")
    inner = rm_hat(compose_map(alpha, F))
    gaps = _GapArguments(basis(F.dim), [term.tensor for term in inner.terms])
    return BSeries.from_tensors([_grouped_sum(F.tensor, n, gaps, closing=True)
                                 for n in range(1, F.trunc + 1)])


# Literal partition sums and inversion formulas
def partition_sum(series_list: Sequence[BSeries], n: int, family: Family,
                  coloring_rule: Optional[Callable[[NCPartition], Coloring]] = None) -> MultilinearFunctional:
    """sum over pi in the family of the (colored) nested functional."""
    total = None
    for pi in enumerate_partitions(n, family):
        coloring = coloring_rule(pi) if coloring_rule else None
        term = nested_functional(series_list, pi, coloring)
        total = term if total is None else total + term
    return total


def mobius_inverse_rm(G: BSeries) -> BSeries:
    """F^[n] = sum over NC(n) of Moeb(pi, 1_n) G^[pi]."""
    terms = []
    for n in range(1, G.trunc + 1):
        top = one(n)
        total = MultilinearFunctional.zero(G.dim, n)
        for pi in enumerate_partitions(n, Family.NC):
            total = total + mobius_nc(pi, top) * nested_functional([G], pi)
        terms.append(total)
    return BSeries(terms)


def signed_inverse_bm(G: BSeries) -> BSeries:
    """F^[n] = sum over Int(n) of (-1)^(|pi|-1) G^[pi]."""
    terms = []
    for n in range(1, G.trunc + 1):
        total = MultilinearFunctional.zero(G.dim, n)
        for pi in enumerate_partitions(n, Family.INT):
            total = total + (-1) ** (len(pi) - 1) * nested_functional([G], pi)
        terms.append(total)
    return BSeries(terms)


class Distribution:
    """A truncated moment series with lazily cached cumulants."""

    def __init__(self, moments: BSeries, spec: Optional["DistributionSpec"] = None):
        self.moments = moments
        self.spec = spec

    @property
    def dim(self) -> int:
        return self.moments.dim

    @property
    def trunc(self) -> int:
        return self.moments.trunc

    @cached_property
    def r_series(self) -> BSeries:
        return rm_hat_inv(self.moments)

    @cached_property
    def b_series(self) -> BSeries:
        return bm_hat_inv(self.moments)

    @classmethod
    def from_cumulants(cls, series: BSeries, kind: CumulantKind,
                       spec: Optional["DistributionSpec"] = None) -> "Distribution":
        if kind is CumulantKind.FREE:
            mu = cls(rm_hat(series), spec)
            mu.__dict__["r_series"] = series
        else:
            mu = cls(bm_hat(series), spec)
            mu.__dict__["b_series"] = series
        return mu

    def moment(self, n: int, args: Sequence) -> np.ndarray:
        """mu[X b_1 X ... b_(n-1) X]."""
        return self.moments.term(n)(*args)

    def __repr__(self):
        kind = type(self.spec).__name__ if self.spec is not None else "raw"
        return f"Distribution({kind}, dim={self.dim}, trunc={self.trunc})"


def cumulants(mu: Distribution, kind: CumulantKind) -> BSeries:
    return mu.r_series if CumulantKind(kind) is CumulantKind.FREE else mu.b_series


def convolve(mu: Distribution, nu: Distribution, kind: CumulantKind) -> Distribution:
    """Free or Boolean convolution: cumulants of the requested kind add."""
    kind = CumulantKind(kind)
    total = linear_combine(1, cumulants(mu, kind), 1, cumulants(nu, kind))
    return Distribution.from_cumulants(total, kind)


def convolution_power(mu: Distribution, alpha: LinearMap, kind: CumulantKind) -> Distribution:
    """mu^(boxplus alpha) or mu^(uplus alpha): cumulants post-composed with alpha."""
    kind = CumulantKind(kind)
    return Distribution.from_cumulants(compose_map(alpha, cumulants(mu, kind)), kind)


def bb_alpha(alpha: LinearMap, mu: Distribution) -> Distribution:
    """B_alpha(mu): free cumulants rb_hat_alpha(alpha, R_mu)."""
    return Distribution.from_cumulants(rb_hat_alpha(alpha, mu.r_series), CumulantKind.FREE)


def bb_alpha_by_powers(alpha: LinearMap, mu: Distribution) -> Distribution:
    """(mu^(boxplus (1+alpha)))^(uplus (1+alpha)^-1), defined when 1 + alpha is invertible."""
    one_plus = identity_map(alpha.dim) + alpha
    inverse = invert_map(one_plus)
    free_power = convolution_power(mu, one_plus, CumulantKind.FREE)
    return convolution_power(free_power, inverse, CumulantKind.BOOLEAN)


def word_layers_from_series(series: BSeries, first: int) -> List[np.ndarray]:
    """Tensors of series terms first, first + 1, ... used as word layers 0, 1, ..."""
    return [series.tensor(n) for n in range(first, series.trunc + 1)]


def phi(beta: PolyLinearMap, trunc: Optional[int] = None) -> Distribution:
    """Distribution with B^[1] = 0 and B^[n](b_1..b_(n-1)) = beta[b_1 X ... X b_(n-1)]."""
    trunc = beta.max_degree + 2 if trunc is None else trunc
    if trunc > AlgebraConfig.MAX_ORDER:
        raise BoundsError(f"Phi of a degree {beta.max_degree} word map needs order {trunc}, "
                          f"above the limit {AlgebraConfig.MAX_ORDER}; restrict distributions of order "
                          f"at most {AlgebraConfig.MAX_ORDER - 2}")
    if beta.max_degree < trunc - 2:
        raise BoundsError(f"word map of degree {beta.max_degree} cannot fill {trunc} Boolean cumulants")
    d = beta.dim
    tensors = [np.zeros((d, d), dtype=complex)] + [beta.layer(n - 2) for n in range(2, trunc + 1)]
    return Distribution.from_cumulants(BSeries.from_tensors(tensors), CumulantKind.BOOLEAN)


def restrict_to_words(mu: Distribution) -> PolyLinearMap:
    """The bimodule word map b_0 X b_1 ... X b_k -> b_0 M^[k](b_1..b_(k-1)) b_k."""
    units = basis(mu.dim)
    layers = [units] + [chain(units, mu.moments.tensor(k), units) for k in range(1, mu.trunc + 1)]
    return PolyLinearMap(layers)


def boolean_pair_series(lam, beta: PolyLinearMap, trunc: int) -> BSeries:
    """The Boolean cumulant series (lambda, beta layers 0, 1, ...)."""
    if beta.max_degree < trunc - 2:
        raise BoundsError(f"word map of degree {beta.max_degree} cannot fill {trunc} Boolean cumulants")
    tensors = [as_element(lam, beta.dim)] + [beta.layer(n - 2) for n in range(2, trunc + 1)]
    return BSeries.from_tensors(tensors)


def boolean_pair(mu: Distribution) -> Tuple[np.ndarray, PolyLinearMap]:
    """Representation data: lambda = M^[1] and beta layer k = B^[k+2]."""
    if mu.trunc < 2:
        raise BoundsError("representation data needs moments up to order 2")
    return mu.moments.tensor(1).copy(), PolyLinearMap(word_layers_from_series(mu.b_series, 2))


def moment_growth(mu: Distribution) -> float:
    """Estimate M with ||M^[n](b_1, ...)|| <= M^n ||b_1|| ... over the stored terms."""
    d = mu.dim
    growth = 0.0
    for n in range(1, mu.trunc + 1):
        entries = mu.moments.tensor(n).reshape(-1, d, d)
        bound = sum(norm(matrix) for matrix in entries)
        growth = max(growth, bound ** (1.0 / n))
    return growth


# Distribution specifications
class DistributionSpec:
    """Base class for named distribution constructors."""

    kind = ""

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def build(self, trunc: int) -> Distribution:
        raise NotImplementedError

    @staticmethod
    def from_json(value, dim: int, trunc: int = 1) -> "DistributionSpec":
        """Parse the {"type": ...} encoding; nested distributions are built to order trunc."""
        kind = value.get("type")
        if kind == "point_mass":
            return PointMass(decode_matrix(value["lambda"], dim))
        if kind == "semicircular":
            center = decode_matrix(value["center"], dim) if "center" in value else None
            return Semicircular(LinearMap.from_json(value["eta"], dim), center)
        if kind in ("cp_free", "cp_boolean"):
            nu_trunc = int(value["nu"].get("trunc", trunc))
            nu = make_distribution(DistributionSpec.from_json(value["nu"], dim, nu_trunc), nu_trunc)
            alpha = LinearMap.from_json(value["alpha"], dim)
            cls = CompoundPoissonFree if kind == "cp_free" else CompoundPoissonBoolean
            return cls(nu, alpha)
        if kind == "boolean_pair":
            return BooleanPair(decode_matrix(value["lambda"], dim), PolyLinearMap.from_json(value["beta"], dim))
        if kind in _RAW_KINDS:
            return _RAW_KINDS[kind](BSeries.from_json(value["series"]))
        raise ArgumentError(f"unknown distribution type {kind!r}")


@dataclass
class PointMass(DistributionSpec):
    lam: np.ndarray
    kind = "point_mass"

    @property
    def dim(self):
        return self.lam.shape[0]

    def build(self, trunc):
        lam = as_element(self.lam)
        units = basis(self.dim)
        tensors = [lam]
        for _ in range(2, trunc + 1):
            tensors.append(chain(tensors[-1], units, lam))
        return Distribution(BSeries.from_tensors(tensors), self)


@dataclass
class Semicircular(DistributionSpec):
    eta: LinearMap
    center: Optional[np.ndarray] = None
    kind = "semicircular"

    @property
    def dim(self):
        return self.eta.dim

    def build(self, trunc):
        d = self.dim
        first = np.zeros((d, d), dtype=complex) if self.center is None else as_element(self.center, d)
        tensors = [first]
        if trunc >= 2:
            tensors.append(apply_map(self.eta, basis(d)))
        tensors += [np.zeros((d * d,) * (n - 1) + (d, d), dtype=complex) for n in range(3, trunc + 1)]
        return Distribution.from_cumulants(BSeries.from_tensors(tensors), CumulantKind.FREE, self)


@dataclass
class CompoundPoissonFree(DistributionSpec):
    """Free cumulants R^[n] = alpha[M_nu^[n]]."""

    nu: Distribution
    alpha: LinearMap
    kind = "cp_free"
    cumulant_kind = CumulantKind.FREE

    @property
    def dim(self):
        return self.nu.dim

    def build(self, trunc):
        if self.nu.trunc < trunc:
            raise BoundsError(f"nu is truncated at {self.nu.trunc}, {trunc} needed")
        series = compose_map(self.alpha, truncate(self.nu.moments, trunc))
        return Distribution.from_cumulants(series, self.cumulant_kind, self)


@dataclass
class CompoundPoissonBoolean(CompoundPoissonFree):
    """Boolean cumulants B^[n] = alpha[M_nu^[n]]."""

    kind = "cp_boolean"
    cumulant_kind = CumulantKind.BOOLEAN


@dataclass
class BooleanPair(DistributionSpec):
    """mu_(lambda, beta): B^[1] = lambda, B^[n] = beta on words of degree n - 2."""

    lam: np.ndarray
    beta: PolyLinearMap
    kind = "boolean_pair"

    @property
    def dim(self):
        return self.beta.dim

    def build(self, trunc):
        return Distribution.from_cumulants(boolean_pair_series(self.lam, self.beta, trunc),
                                           CumulantKind.BOOLEAN, self)


@dataclass
class RawMoments(DistributionSpec):
    series: BSeries
    kind = "raw_moments"

    @property
    def dim(self):
        return self.series.dim

    def build(self, trunc):
        return Distribution(truncate(self.series, trunc), self)


@dataclass
class RawFreeCumulants(RawMoments):
    kind = "raw_free_cumulants"

    def build(self, trunc):
        return Distribution.from_cumulants(truncate(self.series, trunc), CumulantKind.FREE, self)


@dataclass
class RawBooleanCumulants(RawMoments):
    kind = "raw_boolean_cumulants"

    def build(self, trunc):
        return Distribution.from_cumulants(truncate(self.series, trunc), CumulantKind.BOOLEAN, self)


_RAW_KINDS = {
    "raw_moments": RawMoments,
    "raw_free_cumulants": RawFreeCumulants,
    "raw_boolean_cumulants": RawBooleanCumulants,
}


def make_distribution(spec: DistributionSpec, trunc: int) -> Distribution:
    """Build the truncated distribution described by spec."""
    if trunc < 1:
        raise BoundsError(f"truncation must be positive, got {trunc}")
    mu = spec.build(trunc)
    logger.debug("built %r", mu)
    return mu
