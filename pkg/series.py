"""
B-series and nested evaluation.

A B-series is a truncated sequence (F^[1], ..., F^[N]) of multilinear
functionals, F^[n]: B^(n-1) -> B. Nested functionals F^[pi] substitute the
terms of one, two or three series into each other following the nesting of
the blocks of a non-crossing partition; the argument b_i sits between
positions i and i + 1.
"""
from typing import List, Optional, Sequence

import numpy as np

from balg import (MultilinearFunctional, LinearMap, as_element, basis, chain, check_dim, contract,
                  evaluate_tensor, random_multilinear)
from config import AlgebraConfig
from ncpart import Coloring, NCPartition, nesting_forest
from utils import ArgumentError, BoundsError, get_logger

logger = get_logger("series")


class BSeries:
    """A truncated B-series; term n has order n."""

    def __init__(self, terms: Sequence[MultilinearFunctional]):
        terms = list(terms)
        if not 1 <= len(terms) <= AlgebraConfig.MAX_ORDER:
            raise BoundsError(f"truncation {len(terms)} outside 1..{AlgebraConfig.MAX_ORDER}")
        for n, term in enumerate(terms, start=1):
            if term.order != n:
                raise ArgumentError(f"term {n} has order {term.order}")
            if term.dim != terms[0].dim:
                raise ArgumentError("all terms must act on the same algebra")
        self.terms = terms
        self.dim = terms[0].dim
        self.trunc = len(terms)

    def term(self, n: int) -> MultilinearFunctional:
        if not 1 <= n <= self.trunc:
            raise BoundsError(f"order {n} requested from a series truncated at {self.trunc}")
        return self.terms[n - 1]

    def tensor(self, n: int) -> np.ndarray:
        return self.term(n).tensor

    def __add__(self, other: "BSeries") -> "BSeries":
        return linear_combine(1, self, 1, other)

    def __sub__(self, other: "BSeries") -> "BSeries":
        return linear_combine(1, self, -1, other)

    def __neg__(self) -> "BSeries":
        return BSeries([-1 * term for term in self.terms])

    def __mul__(self, scalar) -> "BSeries":
        return BSeries([scalar * term for term in self.terms])

    __rmul__ = __mul__

    def __repr__(self):
        return f"BSeries(dim={self.dim}, trunc={self.trunc})"

    @classmethod
    def zero(cls, d: int, trunc: int) -> "BSeries":
        check_dim(d)
        return cls([MultilinearFunctional.zero(d, n) for n in range(1, trunc + 1)])

    @classmethod
    def from_tensors(cls, tensors: Sequence[np.ndarray]) -> "BSeries":
        return cls([MultilinearFunctional(tensor, order=n) for n, tensor in enumerate(tensors, start=1)])

    @classmethod
    def from_scalars(cls, coeffs: Sequence[complex]) -> "BSeries":
        """d = 1 series with F^[n](z_1, ..., z_(n-1)) = c_n z_1 ... z_(n-1)."""
        return cls.from_tensors([np.full((1,) * (n + 1), coeff, dtype=complex)
                                 for n, coeff in enumerate(coeffs, start=1)])

    def scalars(self) -> List[complex]:
        """Inverse of from_scalars (d = 1 only)."""
        if self.dim != 1:
            raise ArgumentError("scalar coefficients exist only for d = 1")
        return [complex(term.tensor.reshape(-1)[0]) for term in self.terms]

    def to_json(self):
        return {"dim": self.dim, "trunc": self.trunc, "terms": [term.to_json() for term in self.terms]}

    @classmethod
    def from_json(cls, value) -> "BSeries":
        dim, trunc = int(value["dim"]), int(value["trunc"])
        terms = value["terms"]
        if len(terms) != trunc:
            raise ArgumentError(f"trunc {trunc} but {len(terms)} terms")
        return cls([MultilinearFunctional.from_json(term, dim, n) for n, term in enumerate(terms, start=1)])


def truncate(F: BSeries, trunc: int) -> BSeries:
    if trunc > F.trunc:
        raise BoundsError(f"cannot extend a series truncated at {F.trunc} to {trunc}")
    return BSeries(F.terms[:trunc])


def _same_shape(F1: BSeries, F2: BSeries):
    if F1.dim != F2.dim or F1.trunc != F2.trunc:
        raise ArgumentError(f"series shapes differ: (d={F1.dim}, N={F1.trunc}) vs (d={F2.dim}, N={F2.trunc})")


def compose_map(alpha: LinearMap, F: BSeries) -> BSeries:
    """alpha o F, termwise on the output slot."""
    return BSeries([term.post_compose(alpha) for term in F.terms])


def linear_combine(c1, F1: BSeries, c2, F2: BSeries) -> BSeries:
    _same_shape(F1, F2)
    return BSeries([MultilinearFunctional(complex(c1) * a.tensor + complex(c2) * b.tensor)
                    for a, b in zip(F1.terms, F2.terms)])


def conjugate(F: BSeries, left, right) -> BSeries:
    """Termwise left * F^[n](...) * right."""
    left = as_element(left, F.dim)
    right = as_element(right, F.dim)
    return BSeries([MultilinearFunctional(left @ term.tensor @ right) for term in F.terms])


def eval_at(F: BSeries, b) -> np.ndarray:
    """F^[1] + sum_n F^[n](b, ..., b) over the stored terms."""
    b = as_element(b, F.dim)
    total = F.tensor(1).copy()
    for n in range(2, F.trunc + 1):
        total = total + evaluate_tensor(F.tensor(n), [b] * (n - 1))
    return total


def max_difference(F: BSeries, G: BSeries) -> float:
    """Largest absolute coefficient difference over all terms."""
    _same_shape(F, G)
    return max(float(np.max(np.abs(a.tensor - b.tensor))) for a, b in zip(F.terms, G.terms))


def random_series(d: int, trunc: int, rng: np.random.Generator, scale: float = 1.0) -> BSeries:
    return BSeries([random_multilinear(d, n, rng, scale) for n in range(1, trunc + 1)])


def _resolve_coloring(series_list: Sequence[BSeries], pi: NCPartition,
                      coloring: Optional[Coloring]) -> Coloring:
    if not 1 <= len(series_list) <= 3:
        raise ArgumentError(f"1 to 3 series expected, got {len(series_list)}")
    if any(series.dim != series_list[0].dim for series in series_list):
        raise ArgumentError("series act on different algebras")
    if coloring is None:
        coloring = Coloring.trivial(pi)
    if coloring.partition != pi:
        raise ArgumentError(f"coloring is for {coloring.partition}, not {pi}")
    if coloring.palette != len(series_list):
        raise ArgumentError(f"palette of {coloring.palette} colors for {len(series_list)} series")
    for index, block in enumerate(pi.blocks):
        series = series_list[coloring.color_of(index) - 1]
        if len(block) > series.trunc:
            raise BoundsError(f"block of size {len(block)} needs a term beyond truncation {series.trunc}")
    return coloring


def nested_eval(series_list: Sequence[BSeries], pi: NCPartition, coloring: Optional[Coloring],
                args: Sequence) -> np.ndarray:
    """Evaluate the (colored) nested functional on explicit arguments."""
    coloring = _resolve_coloring(series_list, pi, coloring)
    if len(args) != pi.n - 1:
        raise ArgumentError(f"partition of {pi.n} needs {pi.n - 1} arguments, got {len(args)}")
    d = series_list[0].dim
    values = [as_element(b, d) for b in args]
    forest = nesting_forest(pi)

    def arg(position):
        return values[position - 1]

    def block_value(index):
        block = pi.blocks[index]
        term = series_list[coloring.color_of(index) - 1].tensor(len(block))
        gaps = []
        for left, right in zip(block, block[1:]):
            inner = forest.children_in_gap(index, left)
            gaps.append(arg(left) @ segment(inner) @ arg(right - 1) if inner else arg(left))
        return evaluate_tensor(term, gaps)

    def segment(indices):
        value = block_value(indices[0])
        for previous, current in zip(indices, indices[1:]):
            value = value @ arg(pi.blocks[previous][-1]) @ block_value(current)
        return value

    return segment(list(forest.roots))


def nested_functional(series_list: Sequence[BSeries], pi: NCPartition,
                      coloring: Optional[Coloring] = None) -> MultilinearFunctional:
    """Tabulated nested functional, built by contracting term tensors along the nesting forest."""
    coloring = _resolve_coloring(series_list, pi, coloring)
    units = basis(series_list[0].dim)
    logger.debug("tabulating nested functional over %s", pi)
    forest = nesting_forest(pi)

    def block_tensor(index):
        block = pi.blocks[index]
        term = series_list[coloring.color_of(index) - 1].tensor(len(block))
        gaps = []
        for left in block[:-1]:
            inner = forest.children_in_gap(index, left)
            gaps.append(chain(units, segment_tensor(inner), units) if inner else units)
        return contract(term, gaps)

    def segment_tensor(indices):
        pieces = [block_tensor(indices[0])]
        for current in indices[1:]:
            pieces.extend([units, block_tensor(current)])
        return chain(*pieces)

    return MultilinearFunctional(segment_tensor(list(forest.roots)), order=pi.n)
