"""
Non-crossing partitions of {1, ..., n}.

Enumeration of NC(n) and its subfamilies, the refinement order, the coarse
order <<, Moebius values of the NC lattice, special blocks and the nesting
forest that drives nested evaluation in series.py.
"""
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, List, Sequence, Tuple

from scipy.special import comb

from config import PartitionConfig
from utils import ArgumentError, BoundsError, DomainError, get_logger

Block = Tuple[int, ...]

logger = get_logger("ncpart")


class Family(Enum):
    NC = "NC"
    INT = "INT"
    NC2 = "NC2"
    LL_TOP = "LL_TOP"


def catalan(n: int) -> int:
    """Catalan number C_n."""
    return int(comb(2 * n, n, exact=True)) // (n + 1)


class NCPartition:
    """A non-crossing partition stored in canonical form.

    Blocks are sorted ascending and listed by their minimum element, so two
    equal partitions always compare and hash equal.
    """

    def __init__(self, n: int, blocks: Iterable[Iterable[int]], check: bool = True):
        self.n = int(n)
        self.blocks: Tuple[Block, ...] = tuple(sorted(tuple(sorted(block)) for block in blocks))
        if check:
            self._validate()
        labels = [0] * self.n
        for index, block in enumerate(self.blocks):
            for element in block:
                labels[element - 1] = index
        self.labels: Tuple[int, ...] = tuple(labels)
        mask = 0
        for block in self.blocks:
            for a_pos, a in enumerate(block):
                for b in block[a_pos + 1:]:
                    mask |= 1 << ((a - 1) * self.n + (b - 1))
        self.mask = mask

    def _validate(self):
        if self.n < 1:
            raise ArgumentError(f"ground set size must be positive, got {self.n}")
        seen = []
        for block in self.blocks:
            if not block:
                raise ArgumentError("empty block")
            seen.extend(block)
        if sorted(seen) != list(range(1, self.n + 1)):
            raise ArgumentError(f"blocks {self.blocks} do not partition 1..{self.n}")
        owner = {element: index for index, block in enumerate(self.blocks) for element in block}
        for block in self.blocks:
            for left, right in zip(block, block[1:]):
                for inner in range(left + 1, right):
                    inner_block = self.blocks[owner[inner]]
                    if inner_block[0] < left or inner_block[-1] > right:
                        raise ArgumentError(f"blocks {block} and {inner_block} cross")

    @classmethod
    def parse(cls, text: str) -> "NCPartition":
        """Read the slash/comma encoding, e.g. "1,4,5/2,3"."""
        try:
            blocks = [[int(token) for token in part.split(",")] for part in text.strip().split("/")]
        except ValueError:
            raise ArgumentError(f"cannot parse partition {text!r}")
        elements = [element for block in blocks for element in block]
        if not elements or min(elements) < 1:
            raise ArgumentError(f"cannot parse partition {text!r}")
        if len(set(elements)) != len(elements):
            raise ArgumentError(f"repeated element in {text!r}")
        return cls(max(elements), blocks)

    def __str__(self):
        return "/".join(",".join(str(element) for element in block) for block in self.blocks)

    def __repr__(self):
        return f"NCPartition({self})"

    def __eq__(self, other):
        return isinstance(other, NCPartition) and self.n == other.n and self.blocks == other.blocks

    def __hash__(self):
        return hash((self.n, self.blocks))

    def __len__(self):
        return len(self.blocks)

    def __lt__(self, other):
        return (self.n, self.blocks) < (other.n, other.blocks)

    def block_of(self, element: int) -> int:
        """Index of the block containing element."""
        return self.labels[element - 1]

    @property
    def is_interval(self) -> bool:
        return all(block[-1] - block[0] + 1 == len(block) for block in self.blocks)

    def block_sizes(self) -> List[int]:
        return [len(block) for block in self.blocks]


def zero(n: int) -> NCPartition:
    """The finest partition 0_n."""
    return NCPartition(n, [(i,) for i in range(1, n + 1)], check=False)


def one(n: int) -> NCPartition:
    """The single-block partition 1_n."""
    return NCPartition(n, [tuple(range(1, n + 1))], check=False)


@lru_cache(maxsize=None)
def _nc_shapes(m: int) -> Tuple[Tuple[Block, ...], ...]:
    """All non-crossing partitions of 0..m-1, built by choosing the block of 0."""
    if m == 0:
        return ((),)
    shapes = []
    rest = list(range(1, m))
    for subset in range(1 << (m - 1)):
        block = [0] + [element for bit, element in enumerate(rest) if subset >> bit & 1]
        segments = [list(range(a + 1, b)) for a, b in zip(block, block[1:])]
        segments.append(list(range(block[-1] + 1, m)))
        fillings: List[List[Block]] = [[tuple(block)]]
        for segment in segments:
            if not segment:
                continue
            extended = []
            for shape in _nc_shapes(len(segment)):
                relabelled = [tuple(segment[i] for i in inner) for inner in shape]
                for partial in fillings:
                    extended.append(partial + relabelled)
            fillings = extended
        shapes.extend(tuple(sorted(filling)) for filling in fillings)
    return tuple(shapes)


@lru_cache(maxsize=None)
def _enumerate_cached(n: int, family: Family) -> Tuple[NCPartition, ...]:
    if family is Family.INT:
        partitions = []
        for cuts in range(1 << (n - 1)):
            blocks, start = [], 1
            for position in range(1, n):
                if cuts >> (position - 1) & 1:
                    blocks.append(tuple(range(start, position + 1)))
                    start = position + 1
            blocks.append(tuple(range(start, n + 1)))
            partitions.append(NCPartition(n, blocks, check=False))
        return tuple(sorted(partitions))

    every = tuple(sorted(
        NCPartition(n, [tuple(element + 1 for element in block) for block in shape], check=False)
        for shape in _nc_shapes(n)
    ))
    if family is Family.NC:
        return every
    if family is Family.NC2:
        return tuple(pi for pi in every if all(len(block) == 2 for block in pi.blocks))
    top = one(n)
    return tuple(pi for pi in every if ll(pi, top))


def enumerate_partitions(n: int, family: Family = Family.NC) -> List[NCPartition]:
    """All partitions of the family, in lexicographic order of the canonical encoding."""
    if not 1 <= n <= PartitionConfig.N_ENUM_MAX:
        raise BoundsError(f"n={n} outside 1..{PartitionConfig.N_ENUM_MAX}")
    return list(_enumerate_cached(n, Family(family)))


def _same_n(pi: NCPartition, rho: NCPartition):
    if pi.n != rho.n:
        raise ArgumentError(f"partitions of different sets: {pi.n} vs {rho.n}")


def leq(pi: NCPartition, rho: NCPartition) -> bool:
    """Reverse refinement: every block of rho is a union of blocks of pi."""
    _same_n(pi, rho)
    return pi.mask & ~rho.mask == 0


def ll(pi: NCPartition, rho: NCPartition) -> bool:
    """pi << rho: pi <= rho and each block of rho has min and max in one block of pi."""
    if not leq(pi, rho):
        return False
    return all(pi.block_of(block[0]) == pi.block_of(block[-1]) for block in rho.blocks)


def outer_blocks(pi: NCPartition) -> List[int]:
    """Indices of blocks not nested inside any other block."""
    result = []
    for index, block in enumerate(pi.blocks):
        if not any(other[0] < block[0] and block[-1] < other[-1] for other in pi.blocks):
            result.append(index)
    return result


def interval_hull(pi: NCPartition) -> NCPartition:
    """The interval partition formed by the hulls of the outer blocks."""
    hulls = [tuple(range(pi.blocks[i][0], pi.blocks[i][-1] + 1)) for i in outer_blocks(pi)]
    return NCPartition(pi.n, hulls, check=False)


def outer_block(pi: NCPartition) -> Block:
    """V_o(pi), the block holding both 1 and n."""
    if pi.block_of(1) != pi.block_of(pi.n):
        raise DomainError(f"no unique outer block in {pi}")
    return pi.blocks[pi.block_of(1)]


@lru_cache(maxsize=4096)
def mobius_nc(pi: NCPartition, rho: NCPartition) -> int:
    """Moebius function of (NC(n), <=) on the interval [pi, rho]."""
    if not leq(pi, rho):
        raise DomainError(f"{pi} is not below {rho}")
    interval = [sigma for sigma in enumerate_partitions(pi.n, Family.NC)
                if leq(pi, sigma) and leq(sigma, rho)]
    # finer partitions first, so every strict lower bound is already known
    interval.sort(key=len, reverse=True)
    logger.debug("moebius interval [%s, %s] has %d elements", pi, rho, len(interval))
    values: Dict[NCPartition, int] = {}
    for sigma in interval:
        if sigma == pi:
            values[sigma] = 1
            continue
        values[sigma] = -sum(value for tau, value in values.items()
                             if tau.mask & ~sigma.mask == 0)
    return values[rho]


def special_blocks(pi: NCPartition, rho: NCPartition) -> FrozenSet[int]:
    """Indices of the rho-special blocks of pi."""
    if not ll(pi, rho):
        raise DomainError(f"{pi} << {rho} does not hold")
    ends = {(block[0], block[-1]) for block in rho.blocks}
    return frozenset(index for index, block in enumerate(pi.blocks) if (block[0], block[-1]) in ends)


def ll_interval_bijection(pi: NCPartition) -> Dict[NCPartition, FrozenSet[int]]:
    """Map each rho with pi << rho << 1_n to its set of rho-special blocks."""
    top = one(pi.n)
    if not ll(pi, top):
        raise DomainError(f"no unique outer block in {pi}")
    domain = [rho for rho in enumerate_partitions(pi.n, Family.NC) if ll(pi, rho) and ll(rho, top)]
    return {rho: special_blocks(pi, rho) for rho in domain}


@dataclass(frozen=True)
class Coloring:
    """Assignment of a color in 1..palette to every block of a partition."""

    partition: NCPartition
    colors: Tuple[int, ...]
    palette: int = 1

    def __post_init__(self):
        if len(self.colors) != len(self.partition.blocks):
            raise ArgumentError(f"{len(self.colors)} colors for {len(self.partition.blocks)} blocks")
        if not 1 <= self.palette <= 3:
            raise ArgumentError(f"palette size {self.palette} not in 1..3")
        for color in self.colors:
            if not 1 <= color <= self.palette:
                raise ArgumentError(f"color {color} outside palette 1..{self.palette}")

    @classmethod
    def trivial(cls, pi: NCPartition) -> "Coloring":
        return cls(pi, (1,) * len(pi.blocks), 1)

    @classmethod
    def outer(cls, pi: NCPartition) -> "Coloring":
        """Outer block colored 1, all other blocks 2."""
        outer_index = pi.blocks.index(outer_block(pi))
        return cls(pi, tuple(1 if i == outer_index else 2 for i in range(len(pi.blocks))), 2)

    @classmethod
    def from_blocks(cls, pi: NCPartition, mapping: Dict[Block, int], palette: int) -> "Coloring":
        return cls(pi, tuple(mapping[block] for block in pi.blocks), palette)

    def color_of(self, index: int) -> int:
        return self.colors[index]


@dataclass(frozen=True)
class NestingForest:
    """Direct nesting of blocks.

    children maps a block index to (gap, child) pairs, where gap is the
    element of the parent after which the child sits.
    """

    partition: NCPartition
    roots: Tuple[int, ...]
    children: Dict[int, Tuple[Tuple[int, int], ...]] = field(default_factory=dict)

    def flatten(self) -> List[int]:
        """Block indices in left-to-right order of their minima."""
        order: List[int] = []

        def visit(index):
            order.append(index)
            for _, child in self.children.get(index, ()):
                visit(child)

        for root in self.roots:
            visit(root)
        return sorted(order, key=lambda index: self.partition.blocks[index][0])

    def children_in_gap(self, index: int, gap: int) -> List[int]:
        return [child for position, child in self.children.get(index, ()) if position == gap]


def nesting_forest(pi: NCPartition) -> NestingForest:
    """Build the forest of direct nestings."""
    blocks = pi.blocks
    roots: List[int] = []
    children: Dict[int, List[Tuple[int, int]]] = {}
    for index, block in enumerate(blocks):
        enclosing = [other for other, candidate in enumerate(blocks)
                     if candidate[0] < block[0] and block[-1] < candidate[-1]]
        if not enclosing:
            roots.append(index)
            continue
        parent = max(enclosing, key=lambda other: blocks[other][0])
        gap = max(element for element in blocks[parent] if element < block[0])
        children.setdefault(parent, []).append((gap, index))
    frozen = {parent: tuple(sorted(items, key=lambda item: blocks[item[1]][0]))
              for parent, items in children.items()}
    return NestingForest(pi, tuple(sorted(roots, key=lambda index: blocks[index][0])), frozen)


def compose_blocks(rho: NCPartition, parts: Sequence[NCPartition]) -> NCPartition:
    """Relabel parts[j] onto block j of rho and take the union."""
    if len(parts) != len(rho.blocks):
        raise ArgumentError("one partition per block of rho is required")
    blocks = []
    for block, part in zip(rho.blocks, parts):
        if part.n != len(block):
            raise ArgumentError(f"partition of {part.n} elements for a block of size {len(block)}")
        blocks.extend(tuple(block[i - 1] for i in inner) for inner in part.blocks)
    return NCPartition(rho.n, blocks)
