"""
The base algebra B = M_d(C) and its linear and multilinear calculus.

Every tensor refers to the elementary-matrix basis E_ij flattened row-major
(index i*d + j). A multilinear map with s input slots is stored as an array of
shape (d*d,)*s + (d, d): the leading axes index basis elements, the last two
hold the output matrix.
"""
import itertools
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy import linalg

from config import AlgebraConfig
from utils import (ArgumentError, BoundsError, DomainError, check_finite, decode_complex,
                   decode_matrix, encode_matrix, get_logger)

logger = get_logger("balg")

Evaluator = Callable[[List[np.ndarray]], np.ndarray]


def check_dim(d: int) -> int:
    if not 1 <= d <= AlgebraConfig.MAX_DIM:
        raise BoundsError(f"dimension {d} outside 1..{AlgebraConfig.MAX_DIM}")
    return d


def as_element(b, dim: Optional[int] = None) -> np.ndarray:
    """Validate and copy an algebra element as a complex d x d array."""
    array = np.array(b, dtype=complex)
    if array.ndim == 0:
        array = array.reshape(1, 1)
    if array.ndim != 2 or array.shape[0] != array.shape[1] or array.shape[0] == 0:
        raise ArgumentError(f"algebra elements are square matrices, got shape {array.shape}")
    if dim is not None and array.shape[0] != dim:
        raise ArgumentError(f"expected dimension {dim}, got {array.shape[0]}")
    return check_finite(array, "algebra element")


def identity(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex)


def basis(d: int) -> np.ndarray:
    """Elementary matrices stacked as an array of shape (d*d, d, d)."""
    return np.eye(d * d, dtype=complex).reshape(d * d, d, d)


def unit(d: int, k: int) -> np.ndarray:
    """The elementary matrix with flat index k."""
    return basis(d)[k]


def adjoint(b: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(b, -1, -2))


def imaginary_part(b: np.ndarray) -> np.ndarray:
    """(b - b*) / 2i."""
    return (b - adjoint(b)) / 2j


def norm(b: np.ndarray) -> float:
    """Operator norm."""
    return float(np.linalg.norm(b, 2)) if b.size else 0.0


class LinearMap:
    """A C-linear map B -> B with vec(m(b)) = coeffs @ vec(b)."""

    def __init__(self, coeffs):
        coeffs = np.array(coeffs, dtype=complex)
        size = coeffs.shape[0] if coeffs.ndim == 2 else -1
        dim = int(round(np.sqrt(size))) if size > 0 else 0
        if coeffs.ndim != 2 or coeffs.shape[1] != size or dim * dim != size:
            raise ArgumentError(f"linear map coefficients must be d^2 x d^2, got {coeffs.shape}")
        self.dim = check_dim(dim)
        self.coeffs = check_finite(coeffs, "linear map")

    def __call__(self, b):
        return apply_map(self, b)

    def __add__(self, other: "LinearMap") -> "LinearMap":
        _same_map_dim(self, other)
        return LinearMap(self.coeffs + other.coeffs)

    def __sub__(self, other: "LinearMap") -> "LinearMap":
        _same_map_dim(self, other)
        return LinearMap(self.coeffs - other.coeffs)

    def __neg__(self) -> "LinearMap":
        return LinearMap(-self.coeffs)

    def __mul__(self, scalar) -> "LinearMap":
        return LinearMap(complex(scalar) * self.coeffs)

    __rmul__ = __mul__

    def __matmul__(self, other: "LinearMap") -> "LinearMap":
        return compose_maps(self, other)

    def __repr__(self):
        return f"LinearMap(dim={self.dim})"

    def choi(self) -> np.ndarray:
        return choi_matrix(self)

    def is_cp(self, tol: Optional[float] = None) -> bool:
        return is_completely_positive(self, tol)

    def to_json(self):
        return {"matrix": encode_matrix(self.coeffs)}

    @classmethod
    def from_json(cls, value, dim: int) -> "LinearMap":
        """Read {"matrix": ...}, {"kraus": [...]}, {"scalar": t} or {"identity": true}."""
        if not isinstance(value, dict):
            raise ArgumentError(f"linear map must be an object, got {value!r}")
        if "matrix" in value:
            coeffs = decode_matrix(value["matrix"], dim * dim)
            return cls(coeffs)
        if "kraus" in value:
            return kraus_map([decode_matrix(op, dim) for op in value["kraus"]])
        if "scalar" in value:
            return scalar_map(dim, decode_complex(value["scalar"]))
        if value.get("identity"):
            return identity_map(dim)
        raise ArgumentError("linear map needs one of matrix, kraus, scalar, identity")


def _same_map_dim(m1: LinearMap, m2: LinearMap):
    if m1.dim != m2.dim:
        raise ArgumentError(f"maps on M_{m1.dim} and M_{m2.dim} cannot be combined")


def identity_map(d: int) -> LinearMap:
    return LinearMap(np.eye(d * d))


def zero_map(d: int) -> LinearMap:
    return LinearMap(np.zeros((d * d, d * d)))


def scalar_map(d: int, t) -> LinearMap:
    """b -> t b."""
    return LinearMap(complex(t) * np.eye(d * d))


def kraus_map(ops: Sequence[np.ndarray]) -> LinearMap:
    """b -> sum_k K_k b K_k*, compiled to coefficient form."""
    if not ops:
        raise ArgumentError("at least one Kraus operator is required")
    ops = [as_element(op, np.shape(ops[0])[0]) for op in ops]
    return LinearMap(sum(np.kron(op, np.conj(op)) for op in ops))


def conjugation_map(u) -> LinearMap:
    """b -> u b u*."""
    return kraus_map([u])


def transpose_map(d: int) -> LinearMap:
    coeffs = np.zeros((d * d, d * d), dtype=complex)
    for i, j in itertools.product(range(d), repeat=2):
        coeffs[j * d + i, i * d + j] = 1.0
    return LinearMap(coeffs)


def map_from_function(f: Callable[[np.ndarray], np.ndarray], d: int) -> LinearMap:
    """Tabulate a linear function on the elementary basis."""
    columns = [np.asarray(f(e), dtype=complex).reshape(d * d) for e in basis(d)]
    return LinearMap(np.stack(columns, axis=1))


def compose_maps(m1: LinearMap, m2: LinearMap) -> LinearMap:
    """m1 o m2."""
    _same_map_dim(m1, m2)
    return LinearMap(m1.coeffs @ m2.coeffs)


def invert_map(m: LinearMap) -> LinearMap:
    try:
        inverse = np.linalg.inv(m.coeffs)
    except np.linalg.LinAlgError:
        raise DomainError("linear map is not invertible")
    if np.linalg.cond(m.coeffs) > 1e12:
        raise DomainError("linear map is numerically singular")
    return LinearMap(inverse)


def apply_map(m: LinearMap, b) -> np.ndarray:
    """m(b); b may carry leading batch axes."""
    b = np.asarray(b, dtype=complex)
    d = m.dim
    if b.shape[-2:] != (d, d):
        raise ArgumentError(f"map on M_{d} applied to shape {b.shape}")
    flat = b.reshape(b.shape[:-2] + (d * d,))
    return np.einsum("pk,...k->...p", m.coeffs, flat).reshape(b.shape)


def choi_matrix(m: LinearMap) -> np.ndarray:
    """sum_ij E_ij (x) m(E_ij)."""
    d = m.dim
    images = m.coeffs.reshape(d, d, d, d)  # [p, q, i, j] = m(E_ij)[p, q]
    return images.transpose(2, 0, 3, 1).reshape(d * d, d * d)


def is_completely_positive(m: LinearMap, tol: Optional[float] = None) -> bool:
    """Choi criterion: the Choi matrix is Hermitian with eigenvalues >= -tol."""
    tol = AlgebraConfig.CP_TOL if tol is None else tol
    choi = choi_matrix(m)
    hermitian = (choi + adjoint(choi)) / 2
    if np.max(np.abs(choi - hermitian), initial=0.0) > max(tol, AlgebraConfig.ABS_FLOOR):
        return False
    return float(linalg.eigvalsh(hermitian)[0]) >= -tol


# Tensor primitives for multilinear maps
def slots(tensor: np.ndarray) -> int:
    return tensor.ndim - 2


def chain(*tensors: np.ndarray) -> np.ndarray:
    """Matrix product of multilinear tensors; the input slots are concatenated."""
    result = tensors[0]
    for tensor in tensors[1:]:
        k = slots(result)
        product = np.tensordot(result, tensor, axes=([result.ndim - 1], [tensor.ndim - 2]))
        result = np.moveaxis(product, k, -2)
    return result


def contract(term: np.ndarray, args: Sequence[np.ndarray]) -> np.ndarray:
    """Substitute multilinear tensors into the slots of term.

    args[j] fills slot j; the result carries the slots of args[0], args[1], ...
    in order.
    """
    if len(args) != slots(term):
        raise ArgumentError(f"{len(args)} arguments for {slots(term)} slots")
    result = term
    for arg in args:
        d = arg.shape[-1]
        flat = arg.reshape(arg.shape[:-2] + (d * d,))
        result = np.tensordot(result, flat, axes=([0], [flat.ndim - 1]))
    return np.moveaxis(result, (0, 1), (-2, -1))


def apply_to_tensor(m: LinearMap, tensor: np.ndarray) -> np.ndarray:
    """m applied to every output matrix of a tensor."""
    return apply_map(m, tensor)


def evaluate_tensor(tensor: np.ndarray, args: Sequence[np.ndarray]) -> np.ndarray:
    """Contract each slot with the coordinates of the matching argument."""
    result = tensor
    for b in args:
        result = np.tensordot(b.reshape(-1), result, axes=([0], [0]))
    return result


class MultilinearFunctional:
    """A C-multilinear map B^(n-1) -> B stored as a dense tensor."""

    def __init__(self, tensor, order: Optional[int] = None):
        tensor = np.array(tensor, dtype=complex)
        if tensor.ndim < 2 or tensor.shape[-1] != tensor.shape[-2]:
            raise ArgumentError(f"tensor shape {tensor.shape} does not end in a square matrix")
        d = tensor.shape[-1]
        if any(axis != d * d for axis in tensor.shape[:-2]):
            raise ArgumentError(f"tensor shape {tensor.shape} is not (d^2,...,d^2,d,d)")
        self.dim = check_dim(d)
        self.order = tensor.ndim - 1
        if order is not None and order != self.order:
            raise ArgumentError(f"order {order} does not match tensor shape {tensor.shape}")
        if self.order > AlgebraConfig.MAX_ORDER + 1:
            raise BoundsError(f"order {self.order} exceeds {AlgebraConfig.MAX_ORDER + 1}")
        self.tensor = check_finite(tensor, "multilinear tensor")

    def __call__(self, *args):
        return eval_multilinear(self, list(args))

    def __add__(self, other: "MultilinearFunctional") -> "MultilinearFunctional":
        self._match(other)
        return MultilinearFunctional(self.tensor + other.tensor)

    def __sub__(self, other: "MultilinearFunctional") -> "MultilinearFunctional":
        self._match(other)
        return MultilinearFunctional(self.tensor - other.tensor)

    def __mul__(self, scalar) -> "MultilinearFunctional":
        return MultilinearFunctional(complex(scalar) * self.tensor)

    __rmul__ = __mul__

    def _match(self, other):
        if self.tensor.shape != other.tensor.shape:
            raise ArgumentError(f"shape mismatch {self.tensor.shape} vs {other.tensor.shape}")

    def __repr__(self):
        return f"MultilinearFunctional(dim={self.dim}, order={self.order})"

    @classmethod
    def zero(cls, d: int, order: int) -> "MultilinearFunctional":
        return cls(np.zeros((d * d,) * (order - 1) + (d, d), dtype=complex))

    @classmethod
    def constant(cls, value) -> "MultilinearFunctional":
        """Order 1 term holding a single algebra element."""
        return cls(as_element(value))

    def post_compose(self, m: LinearMap) -> "MultilinearFunctional":
        if m.dim != self.dim:
            raise ArgumentError(f"map on M_{m.dim} composed with a functional on M_{self.dim}")
        return MultilinearFunctional(apply_to_tensor(m, self.tensor))

    def to_json(self):
        d = self.dim
        flat = self.tensor.reshape(-1, d, d)
        return [encode_matrix(matrix) for matrix in flat]

    @classmethod
    def from_json(cls, value, dim: int, order: int) -> "MultilinearFunctional":
        count = (dim * dim) ** (order - 1)
        if not isinstance(value, list) or len(value) != count:
            raise ArgumentError(f"order {order} term needs {count} matrices")
        matrices = np.stack([decode_matrix(matrix, dim) for matrix in value])
        return cls(matrices.reshape((dim * dim,) * (order - 1) + (dim, dim)))


def eval_multilinear(f: MultilinearFunctional, args: Sequence) -> np.ndarray:
    """Expand the arguments on the basis and contract with the tensor."""
    if len(args) != f.order - 1:
        raise ArgumentError(f"order {f.order} functional takes {f.order - 1} arguments, got {len(args)}")
    return evaluate_tensor(f.tensor, [as_element(b, f.dim) for b in args])


def tabulate(evaluator: Evaluator, order: int, dim: int) -> MultilinearFunctional:
    """Materialize a multilinear evaluator from its values on basis tuples."""
    if order > AlgebraConfig.MAX_ORDER + 1:
        raise BoundsError(f"order {order} exceeds {AlgebraConfig.MAX_ORDER + 1}")
    size = dim * dim
    units = basis(dim)
    tensor = np.zeros((size,) * (order - 1) + (dim, dim), dtype=complex)
    for index in itertools.product(range(size), repeat=order - 1):
        tensor[index] = evaluator([units[k] for k in index])
    return MultilinearFunctional(tensor)


class PolyLinearMap:
    """A C-linear map on words b_0 X b_1 ... X b_k, one multilinear layer per degree k.

    Layer k has k + 1 slots; it is stored like a multilinear functional of
    order k + 2.
    """

    def __init__(self, layers: Sequence[np.ndarray]):
        if not layers:
            raise ArgumentError("a word map needs at least layer 0")
        self.layers = [MultilinearFunctional(layer, order=k + 2).tensor for k, layer in enumerate(layers)]
        self.dim = self.layers[0].shape[-1]
        if any(layer.shape[-1] != self.dim for layer in self.layers):
            raise ArgumentError("all layers must act on the same algebra")
        self.max_degree = len(self.layers) - 1

    def layer(self, k: int) -> np.ndarray:
        if not 0 <= k <= self.max_degree:
            raise BoundsError(f"degree {k} outside 0..{self.max_degree}")
        return self.layers[k]

    def __call__(self, *word):
        return eval_poly_linear(self, list(word), len(word) - 1)

    def __repr__(self):
        return f"PolyLinearMap(dim={self.dim}, max_degree={self.max_degree})"

    def post_compose(self, m: LinearMap) -> "PolyLinearMap":
        """alpha o beta, layer by layer."""
        return PolyLinearMap([apply_to_tensor(m, layer) for layer in self.layers])

    def restricted_map(self) -> LinearMap:
        """beta restricted to B (layer 0) as a LinearMap."""
        d = self.dim
        return LinearMap(self.layers[0].reshape(d * d, d * d).T)

    def truncate(self, max_degree: int) -> "PolyLinearMap":
        if max_degree > self.max_degree:
            raise BoundsError(f"degree {max_degree} exceeds {self.max_degree}")
        return PolyLinearMap(self.layers[:max_degree + 1])

    def to_json(self):
        d = self.dim
        return {"layers": [[encode_matrix(matrix) for matrix in layer.reshape(-1, d, d)]
                           for layer in self.layers]}

    @classmethod
    def from_json(cls, value, dim: int) -> "PolyLinearMap":
        layers = []
        for k, layer in enumerate(value["layers"]):
            layers.append(MultilinearFunctional.from_json(layer, dim, k + 2).tensor)
        return cls(layers)


def eval_poly_linear(p: PolyLinearMap, word: Sequence, degree: int) -> np.ndarray:
    """Value of layer `degree` on the coefficient tuple of a word."""
    if len(word) != degree + 1:
        raise ArgumentError(f"degree {degree} word has {degree + 1} coefficients, got {len(word)}")
    return evaluate_tensor(p.layer(degree), [as_element(b, p.dim) for b in word])


# Seeded random inputs
def random_element(d: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    return scale * (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2 * d)


def random_hermitian(d: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    a = random_element(d, rng, scale)
    return (a + adjoint(a)) / 2


def random_kraus_map(d: int, rng: np.random.Generator, rank: int = 2, scale: float = 1.0) -> LinearMap:
    """Completely positive map with `rank` random Kraus operators."""
    ops = [random_element(d, rng, np.sqrt(scale / rank)) for _ in range(rank)]
    return kraus_map(ops)


def random_multilinear(d: int, order: int, rng: np.random.Generator, scale: float = 1.0) -> MultilinearFunctional:
    shape = (d * d,) * (order - 1) + (d, d)
    tensor = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return MultilinearFunctional(scale * tensor / np.sqrt(2 * d))


def random_cp_poly_map(d: int, max_degree: int, rng: np.random.Generator, ancilla: int = 2,
                       scale: float = 0.5, bimodule: bool = False) -> PolyLinearMap:
    """Word map b_0 X ... X b_k -> V* pi(b_0) T pi(b_1) ... T pi(b_k) V.

    pi(b) = b (x) 1 on C^d (x) C^ancilla and T is Hermitian, so the map is a
    compression of a *-representation (completely positive, *-preserving).
    With bimodule=True, V = 1 (x) xi for a unit vector xi and the map is a
    B-bimodule map with identity restriction to B.
    """
    m = d * ancilla
    t = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    t = (t + adjoint(t)) / 2
    t *= scale / max(norm(t), 1e-300)
    if bimodule:
        xi = rng.standard_normal(ancilla) + 1j * rng.standard_normal(ancilla)
        xi = (xi / np.linalg.norm(xi)).reshape(ancilla, 1)
        v = np.kron(np.eye(d), xi)
    else:
        v = (rng.standard_normal((m, d)) + 1j * rng.standard_normal((m, d))) * np.sqrt(scale / (2 * m))
    reps = np.stack([np.kron(e, np.eye(ancilla)) for e in basis(d)])
    left = np.einsum("pm,imn->ipn", adjoint(v), reps)
    middles = np.einsum("mn,ink->imk", t, reps)
    layers = []
    partial = left
    for k in range(max_degree + 1):
        if k > 0:
            partial = np.moveaxis(np.tensordot(partial, middles, axes=([-1], [1])), -2, -3)
        layers.append(partial @ v)
    return PolyLinearMap(layers)
