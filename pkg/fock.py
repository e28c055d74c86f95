"""
Operator models: Boolean, free and interpolated Fock constructions over
B<X>, Gram matrix positivity certificates and the Boolean transport model.

Fock vectors are finite sums of simple tensors xi_1 (x) ... (x) xi_m of words
xi_j = b_0 X b_1 ... X b_(n_j). Over B the last coefficient of one factor and
the first coefficient of the next one merge, so a component with factor
composition (n_1, ..., n_m) is a coefficient tensor over 1 + sum n_j matrix
slots, stored with shape (d,)*2S. The key () holds the level 0 copy of B.
"""
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from balg import (LinearMap, PolyLinearMap, adjoint, apply_map, as_element, basis, chain, conjugation_map,
                  evaluate_tensor, identity, is_completely_positive, tabulate)
from config import AlgebraConfig, FockConfig
from series import BSeries
from transforms import Distribution, RawMoments, bm_hat, bm_hat_inv, boolean_pair_series
from utils import ArgumentError, BoundsError, get_logger

logger = get_logger("fock")

Composition = Tuple[int, ...]


class Flavor(Enum):
    BOOLEAN = "boolean"
    FREE = "free"
    BBALPHA = "bbalpha"


class FockState:
    """A vector of the (truncated) Fock module, one coefficient tensor per composition."""

    def __init__(self, dim: int, components: Optional[Dict[Composition, np.ndarray]] = None):
        self.dim = dim
        self.components: Dict[Composition, np.ndarray] = dict(components or {})

    @classmethod
    def vacuum(cls, d: int) -> "FockState":
        return cls(d, {(): identity(d)})

    @classmethod
    def element(cls, b) -> "FockState":
        b = as_element(b)
        return cls(b.shape[0], {(): b})

    @classmethod
    def word(cls, coeffs: Sequence) -> "FockState":
        """The level 1 word c_0 X c_1 ... X c_k."""
        if len(coeffs) < 2:
            raise ArgumentError("a word needs at least one X")
        mats = [as_element(c) for c in coeffs]
        tensor = mats[0]
        for m in mats[1:]:
            tensor = np.multiply.outer(tensor, m)
        return cls(mats[0].shape[0], {(len(mats) - 1,): tensor})

    def add(self, key: Composition, tensor: np.ndarray):
        if key in self.components:
            self.components[key] = self.components[key] + tensor
        else:
            self.components[key] = tensor

    def __add__(self, other: "FockState") -> "FockState":
        result = FockState(self.dim, self.components)
        for key, tensor in other.components.items():
            result.add(key, tensor)
        return result

    def __mul__(self, scalar) -> "FockState":
        return FockState(self.dim, {key: complex(scalar) * t for key, t in self.components.items()})

    __rmul__ = __mul__

    def vacuum_part(self) -> np.ndarray:
        return self.components.get((), np.zeros((self.dim, self.dim), dtype=complex))

    def left_multiply(self, b) -> "FockState":
        """b acting on the first coefficient of every component."""
        b = as_element(b, self.dim)
        return FockState(self.dim, {key: np.tensordot(b, t, axes=([1], [0])) for key, t in self.components.items()})

    def prune(self, max_depth: int) -> "FockState":
        return FockState(self.dim, {key: t for key, t in self.components.items() if len(key) <= max_depth})

    def __repr__(self):
        return f"FockState(dim={self.dim}, components={sorted(self.components)})"


def _dagger(tensor: np.ndarray) -> np.ndarray:
    """Coefficient tensor of the adjoint word: slots reversed, each conjugate transposed."""
    count = tensor.ndim // 2
    axes = []
    for s in reversed(range(count)):
        axes += [2 * s + 1, 2 * s]
    return np.conj(np.transpose(tensor, axes))


def _apply_window(tensor: np.ndarray, start: int, size: int, layer: np.ndarray) -> np.ndarray:
    """Contract slots start..start+size-1 with a word-map layer; the value takes their place."""
    d = tensor.shape[-1]
    pre = d ** (2 * start)
    flat = tensor.reshape(pre, (d * d) ** size, -1)
    values = np.einsum("xky,kuv->xuvy", flat, layer.reshape((d * d) ** size, d, d))
    post = tensor.shape[2 * (start + size):]
    return values.reshape((d,) * (2 * start) + (d, d) + post)


def _merge_neighbours(tensor: np.ndarray, position: int) -> np.ndarray:
    """Multiply slots position-1, position and position+1 into one slot."""
    d = tensor.shape[-1]
    post = tensor.shape[2 * (position + 2):]
    flat = tensor.reshape((d ** (2 * (position - 1)), d, d, d, d, d, d, -1))
    merged = np.einsum("xabbccey->xaey", flat)
    return merged.reshape((d,) * (2 * (position - 1)) + (d, d) + post)


class FockOperators:
    """a*, a, p and the potential on the Fock module of a pair (lambda, beta).

    Args:
        lam: The symmetric element lambda.
        beta: The completely positive word map.
        flavor: BOOLEAN keeps levels 0 and 1, FREE the full Fock module and
            BBALPHA the modified module whose deep pairings use alpha o beta.
        alpha: Required for BBALPHA.
        max_len: Components with more than max_len letters X are dropped.
    """

    def __init__(self, lam, beta: PolyLinearMap, flavor: Flavor = Flavor.BOOLEAN,
                 alpha: Optional[LinearMap] = None, max_len: Optional[int] = None):
        self.dim = beta.dim
        self.lam = as_element(lam, self.dim)
        self.beta = beta
        self.flavor = Flavor(flavor)
        if self.flavor is Flavor.BBALPHA:
            if alpha is None:
                raise ArgumentError("the interpolated model needs alpha")
            if alpha.dim != self.dim:
                raise ArgumentError(f"map on M_{alpha.dim} for a model over M_{self.dim}")
            self.deep_beta = beta.post_compose(alpha)
            self.deep_lam = alpha(self.lam)
        else:
            self.deep_beta = beta
            self.deep_lam = self.lam
        self.alpha = alpha
        self.max_len = AlgebraConfig.MAX_ORDER if max_len is None else max_len
        self.max_depth = 1 if self.flavor is Flavor.BOOLEAN else self.max_len

    def _beta_at(self, depth: int) -> PolyLinearMap:
        return self.beta if depth <= 1 else self.deep_beta

    def create(self, state: FockState) -> FockState:
        result = FockState(self.dim)
        eye = identity(self.dim)
        for key, tensor in state.components.items():
            if len(key) + 1 > self.max_depth or sum(key) + 1 > self.max_len:
                continue
            result.add((1,) + key, np.multiply.outer(eye, tensor))
        return result

    def preserve(self, state: FockState) -> FockState:
        result = FockState(self.dim)
        eye = identity(self.dim)
        for key, tensor in state.components.items():
            if not key or sum(key) + 1 > self.max_len:
                continue
            result.add((key[0] + 1,) + key[1:], np.multiply.outer(eye, tensor))
        return result

    def annihilate(self, state: FockState) -> FockState:
        d = self.dim
        result = FockState(d)
        for key, tensor in state.components.items():
            if not key:
                continue
            n = key[0]
            layer = self._beta_at(len(key)).layer(n - 1).reshape((d * d) ** n, d, d)
            flat = tensor.reshape(((d * d) ** n, d, d) + tensor.shape[2 * (n + 1):])
            result.add(key[1:], np.einsum("kpm,kmq...->pq...", layer, flat))
        return result

    def potential(self, state: FockState) -> FockState:
        result = FockState(self.dim)
        for key, tensor in state.components.items():
            # Boolean: lambda only on the vacuum level
            if key and self.flavor is Flavor.BOOLEAN:
                continue
            lam = self.lam if not key else self.deep_lam
            result.add(key, np.tensordot(lam, tensor, axes=([1], [0])))
        return result

    def apply_x(self, state: FockState) -> FockState:
        """X = a* + a + p + L."""
        return self.create(state) + self.annihilate(state) + self.preserve(state) + self.potential(state)

    def left_multiply(self, state: FockState, b) -> FockState:
        return state.left_multiply(b)

    def _pair_components(self, key_x: Composition, x: np.ndarray, key_y: Composition, y: np.ndarray) -> np.ndarray:
        if not key_x:
            return adjoint(y) @ x
        d = self.dim
        tensor = np.tensordot(_dagger(y), x, axes=([y.ndim - 1], [0]))
        position = y.ndim // 2 - 1
        depth = len(key_x)
        for j, (n, k) in enumerate(zip(key_x, key_y)):
            word_map = self.beta if j == depth - 1 else self.deep_beta
            start = position - (k - 1)
            tensor = _apply_window(tensor, start, n + k - 1, word_map.layer(n + k - 2))
            tensor = _merge_neighbours(tensor, start)
            position = start - 1
        return tensor.reshape(d, d)

    def pairing(self, x: FockState, y: FockState) -> np.ndarray:
        """B-valued <x, y>, linear in x, with <xb, y> = <x, y>b and <x, yb> = b*<x, y>."""
        total = np.zeros((self.dim, self.dim), dtype=complex)
        for key_x, tensor_x in x.components.items():
            for key_y, tensor_y in y.components.items():
                if len(key_x) == len(key_y):
                    total = total + self._pair_components(key_x, tensor_x, key_y, tensor_y)
        return total


def model_moments(ops: FockOperators, n: int, args: Sequence) -> np.ndarray:
    """<(X b_1 X ... b_(n-1) X) 1, 1> computed by acting on the vacuum."""
    if len(args) != n - 1:
        raise ArgumentError(f"moment of order {n} takes {n - 1} arguments, got {len(args)}")
    if n > ops.max_len:
        raise BoundsError(f"order {n} exceeds the model truncation {ops.max_len}")
    state = ops.apply_x(FockState.vacuum(ops.dim)).prune(n - 1)
    remaining = n - 1
    for b in reversed(args):
        remaining -= 1
        state = ops.apply_x(state.left_multiply(b)).prune(remaining)
    return state.vacuum_part()


def model_distribution(ops: FockOperators, trunc: int) -> Distribution:
    """Tabulated vacuum moments of X up to order trunc."""
    terms = [tabulate(lambda args, n=n: model_moments(ops, n, args), n, ops.dim) for n in range(1, trunc + 1)]
    return Distribution(BSeries(terms))


def boolean_moment_sum(lam, beta: PolyLinearMap, n: int, args: Sequence) -> np.ndarray:
    """Sum over interval compositions of beta-blocks joined by the arguments, beta[empty] = lambda."""
    if len(args) != n - 1:
        raise ArgumentError(f"moment of order {n} takes {n - 1} arguments, got {len(args)}")
    if beta.max_degree < n - 2:
        raise BoundsError(f"word map of degree {beta.max_degree} cannot give order {n}")
    d = beta.dim
    lam = as_element(lam, d)
    values = [as_element(b, d) for b in args]

    def block(start, stop):
        inner = values[start:stop]
        return lam if not inner else evaluate_tensor(beta.layer(len(inner) - 1), inner)

    prefix = [identity(d)]
    for cut in range(1, n + 1):
        total = np.zeros((d, d), dtype=complex)
        for previous in range(cut):
            joint = prefix[previous] if previous == 0 else prefix[previous] @ values[previous - 1]
            total += joint @ block(previous, cut - 1)
        prefix.append(total)
    return prefix[n]


def bbalpha_model_cumulants(lam, beta: PolyLinearMap, alpha: LinearMap, trunc: int) -> BSeries:
    """Boolean cumulants of the interpolated Fock model."""
    if not is_completely_positive(alpha):
        logger.warning("alpha is not completely positive; the model pairing may be indefinite")
    ops = FockOperators(lam, beta, Flavor.BBALPHA, alpha, max_len=trunc)
    return bm_hat_inv(model_distribution(ops, trunc).moments)


@dataclass
class GramReport:
    min_eigenvalue: float
    passed: bool
    L: int
    tol: float
    hermitian_defect: float
    size: int

    def to_dict(self):
        return {"min_eigenvalue": self.min_eigenvalue, "pass": self.passed, "L": self.L, "tol": self.tol,
                "hermitian_defect": self.hermitian_defect, "size": self.size}


@dataclass
class WordSpace:
    """Words b_0 X b_1 ... b_(k-1) X (k <= L) over matrix units, with their block Gram matrix."""

    dim: int
    max_len: int
    words: List[Tuple[int, ...]] = field(default_factory=list)
    gram: Optional[np.ndarray] = None

    @staticmethod
    def _basis_words(d: int, max_len: int) -> List[Tuple[int, ...]]:
        words = []
        for k in range(max_len + 1):
            words.extend(product(range(d * d), repeat=k))
        return words

    @classmethod
    def for_distribution(cls, mu: Distribution, max_len: int) -> "WordSpace":
        """Blocks mu[w_i* w_j]."""
        if mu.trunc < 2 * max_len + 2:
            raise BoundsError(f"words of length {max_len} need moments to order {2 * max_len + 2}, have {mu.trunc}")
        d = mu.dim
        units = basis(d)
        words = cls._basis_words(d, max_len)

        def entry(left, right):
            if not left and not right:
                return identity(d)
            if not left:
                return units[right[0]] @ mu.moment(len(right), [units[k] for k in right[1:]])
            if not right:
                return mu.moment(len(left), [adjoint(units[k]) for k in reversed(left[1:])]) @ adjoint(units[left[0]])
            args = ([adjoint(units[k]) for k in reversed(left[1:])] + [adjoint(units[left[0]]) @ units[right[0]]]
                    + [units[k] for k in right[1:]])
            return mu.moment(len(left) + len(right), args)

        return cls(d, max_len, words, cls._assemble(d, words, entry))

    @classmethod
    def for_operators(cls, ops: FockOperators, max_len: int) -> "WordSpace":
        """Blocks <w_j, w_i> of the vacuum and the level 1 words under the model pairing."""
        d = ops.dim
        units = basis(d)
        words = cls._basis_words(d, max_len)
        eye = identity(d)

        def vector(word):
            if not word:
                return FockState.vacuum(d)
            return FockState.word([units[k] for k in word] + [eye])

        vectors = {word: vector(word) for word in words}
        return cls(d, max_len, words, cls._assemble(d, words, lambda i, j: ops.pairing(vectors[j], vectors[i])))

    @staticmethod
    def _assemble(d, words, entry) -> np.ndarray:
        size = len(words)
        gram = np.zeros((size * d, size * d), dtype=complex)
        for i, left in enumerate(words):
            for j, right in enumerate(words):
                gram[i * d:(i + 1) * d, j * d:(j + 1) * d] = entry(left, right)
        return gram

    def hermitian_defect(self) -> float:
        return float(np.max(np.abs(self.gram - adjoint(self.gram)), initial=0.0))

    def min_eigenvalue(self) -> float:
        return float(linalg.eigvalsh((self.gram + adjoint(self.gram)) / 2)[0])

    def report(self, tol: Optional[float] = None) -> GramReport:
        tol = FockConfig.GRAM_TOL if tol is None else tol
        defect = self.hermitian_defect()
        if defect > tol:
            logger.warning("Gram matrix is not Hermitian (defect %.3e)", defect)
        smallest = self.min_eigenvalue()
        return GramReport(smallest, smallest >= -tol, self.max_len, tol, defect, len(self.words))


def gram_positivity(mu: Distribution, L: Optional[int] = None, tol: Optional[float] = None) -> GramReport:
    """Necessary positivity certificate: the block Gram matrix of mu over short words is PSD."""
    L = FockConfig.GRAM_L if L is None else L
    return WordSpace.for_distribution(mu, L).report(tol)


def quadratic_witness(mu: Distribution, b) -> np.ndarray:
    """mu[(1 - bX)*(1 - bX)] = 1 - b mu[X] - mu[X] b* + mu[X b*b X]."""
    b = as_element(b, mu.dim)
    first = mu.moment(1, [])
    return identity(mu.dim) - b @ first - first @ adjoint(b) + mu.moment(2, [adjoint(b) @ b])


def flip_conjugation() -> LinearMap:
    return conjugation_map(np.array([[0, 1], [1, 0]], dtype=complex))


def counterexample_distribution(t: float = 1.0, trunc: int = 6) -> Distribution:
    """The functional with moments (1/t) alpha[b_1 ... b_(n-1)] over M_2, alpha the flip conjugation."""
    if t <= 0:
        raise ArgumentError(f"t must be positive, got {t}")
    alpha = flip_conjugation()
    units = basis(2)
    tensors = [identity(2)]
    if trunc >= 2:
        tensors.append(units)
    while len(tensors) < trunc:
        tensors.append(chain(tensors[-1], units))
    series = BSeries.from_tensors([apply_map(alpha, tensor) / t for tensor in tensors])
    return Distribution(series, RawMoments(series))


def boolean_transport_cumulants(mu: Distribution, e, trunc: Optional[int] = None) -> BSeries:
    """Boolean cumulants of T = (1 + Q)Y(1 + Q*) with M_Y = B_mu, E(Q) = e and Var_Q = id.

    Boolean independence factors every mixed moment over the interval
    compositions; the centered pieces R_i = (1 + Q*)b_i(1 + Q) - b_i
    contribute E(R_i) = Var_Q(b_i) + (1 + e*)b_i(1 + e) - b_i.
    """
    d = mu.dim
    trunc = mu.trunc if trunc is None else trunc
    if trunc > mu.trunc:
        raise BoundsError(f"distribution truncated at {mu.trunc}, {trunc} requested")
    e = as_element(e, d)
    one_e = identity(d) + e
    units = basis(d)
    variance = units
    centered = variance + np.einsum("pq,kqr,rs->kps", adjoint(one_e), units, one_e) - units
    y_moments = mu.b_series
    inner: List[np.ndarray] = []
    for n in range(1, trunc + 1):
        total = y_moments.tensor(n).copy()
        for k in range(1, n):
            total += chain(y_moments.tensor(k), centered, inner[n - k - 1])
        inner.append(total)
    moments = BSeries.from_tensors([one_e @ tensor @ adjoint(one_e) for tensor in inner])
    return bm_hat_inv(moments)


def boolean_model_moments(lam, beta: PolyLinearMap, trunc: int) -> BSeries:
    """Moments of mu_(lambda, beta) by summing the Boolean cumulants (lambda, beta)."""
    return bm_hat(boolean_pair_series(lam, beta, trunc))
