import sys
import os
import pytest
from hypothesis import given, settings, strategies as st

# Add parent directory to path to import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from ncpart import (Coloring, Family, NCPartition, catalan, compose_blocks, enumerate_partitions, interval_hull,
                    leq, ll, ll_interval_bijection, mobius_nc, nesting_forest, one, outer_block, outer_blocks,
                    special_blocks, zero)
from utils import ArgumentError, BoundsError, DomainError


class TestEnumeration:
    """Tests for family enumeration counts."""

    @pytest.mark.parametrize("n", range(1, 8))
    def test_nc_count_is_catalan(self, n):
        """|NC(n)| = C_n."""
        assert len(enumerate_partitions(n, Family.NC)) == catalan(n)

    @pytest.mark.parametrize("n", range(1, 8))
    def test_interval_count(self, n):
        """|Int(n)| = 2^(n-1)."""
        partitions = enumerate_partitions(n, Family.INT)
        assert len(partitions) == 2 ** (n - 1)
        assert all(pi.is_interval for pi in partitions)

    @pytest.mark.parametrize("n", range(1, 9))
    def test_pairings(self, n):
        """Non-crossing pairings exist only for even n and are counted by C_(n/2)."""
        expected = catalan(n // 2) if n % 2 == 0 else 0
        assert len(enumerate_partitions(n, Family.NC2)) == expected

    @pytest.mark.parametrize("n", range(1, 8))
    def test_ll_top_count(self, n):
        """Partitions with 1 and n in one block are counted by C_(n-1)."""
        partitions = enumerate_partitions(n, Family.LL_TOP)
        assert len(partitions) == catalan(n - 1)
        assert all(pi.block_of(1) == pi.block_of(n) for pi in partitions)

    def test_no_duplicates_and_sorted(self):
        """Enumeration is canonical and repeatable."""
        partitions = enumerate_partitions(6)
        assert len(set(partitions)) == len(partitions)
        assert partitions == sorted(partitions)
        assert partitions == enumerate_partitions(6)

    def test_out_of_range(self):
        """Orders outside the guard are rejected."""
        with pytest.raises(BoundsError):
            enumerate_partitions(0)
        with pytest.raises(BoundsError):
            enumerate_partitions(11)


class TestNCPartition:
    """Tests for construction and encoding."""

    def test_parse_and_str(self):
        """The slash/comma encoding survives a parse."""
        pi = NCPartition.parse("1,4,5/2,3")
        assert pi.n == 5
        assert pi.blocks == ((1, 4, 5), (2, 3))
        assert str(pi) == "1,4,5/2,3"

    def test_canonical_form(self):
        """Block order in the input does not matter."""
        assert NCPartition.parse("2,3/5,1,4") == NCPartition.parse("1,4,5/2,3")

    def test_crossing_rejected(self):
        """1,3/2,4 crosses."""
        with pytest.raises(ArgumentError):
            NCPartition.parse("1,3/2,4")

    def test_not_a_partition(self):
        """Missing or repeated elements are rejected."""
        with pytest.raises(ArgumentError):
            NCPartition(4, [(1, 2), (4,)])
        with pytest.raises(ArgumentError):
            NCPartition.parse("1,2/2,3")
        with pytest.raises(ArgumentError):
            NCPartition.parse("a,b")

    def test_zero_and_one(self):
        """Finest and coarsest partitions."""
        assert len(zero(4)) == 4
        assert len(one(4)) == 1
        assert leq(zero(4), one(4))
        assert not leq(one(4), zero(4))


class TestOrders:
    """Tests for <= and <<."""

    def test_refinement(self):
        """1/2/3 <= 1,3/2 <= 1,2,3."""
        fine = NCPartition.parse("1/2/3")
        mid = NCPartition.parse("1,3/2")
        assert leq(fine, mid)
        assert leq(mid, one(3))
        assert not leq(mid, NCPartition.parse("1,2/3"))

    def test_ll(self):
        """<< needs each coarse block's ends in one fine block."""
        pi = NCPartition.parse("1,4/2/3")
        assert ll(pi, one(4))
        assert not ll(zero(4), one(4))
        assert ll(zero(4), zero(4))

    def test_ll_top_is_ll_one(self):
        """LL_TOP(n) is exactly {pi : pi << 1_n}."""
        top = one(5)
        expected = [pi for pi in enumerate_partitions(5) if ll(pi, top)]
        assert enumerate_partitions(5, Family.LL_TOP) == expected

    def test_different_ground_sets(self):
        """Comparing partitions of different sizes is an argument error."""
        with pytest.raises(ArgumentError):
            leq(zero(3), zero(4))


class TestMobius:
    """Tests for the Moebius function of NC(n)."""

    @pytest.mark.parametrize("n", range(1, 7))
    def test_zero_to_one(self, n):
        """mu(0_n, 1_n) = (-1)^(n-1) C_(n-1)."""
        assert mobius_nc(zero(n), one(n)) == (-1) ** (n - 1) * catalan(n - 1)

    def test_diagonal(self):
        """mu(pi, pi) = 1."""
        pi = NCPartition.parse("1,4/2,3")
        assert mobius_nc(pi, pi) == 1

    def test_inversion(self):
        """Sum over pi <= sigma <= rho of mu(pi, sigma) vanishes for pi < rho."""
        pi, rho = zero(4), one(4)
        total = sum(mobius_nc(pi, sigma) for sigma in enumerate_partitions(4) if leq(sigma, rho))
        assert total == 0

    def test_not_below(self):
        """The interval must be non-empty."""
        with pytest.raises(DomainError):
            mobius_nc(one(3), zero(3))


class TestBlockStructure:
    """Tests for outer blocks, special blocks and the nesting forest."""

    def test_outer_blocks_and_hull(self):
        """1,3/2/4,5 has outer blocks 1,3 and 4,5 and hull 1,2,3/4,5."""
        pi = NCPartition.parse("1,3/2/4,5")
        assert [pi.blocks[i] for i in outer_blocks(pi)] == [(1, 3), (4, 5)]
        assert interval_hull(pi) == NCPartition.parse("1,2,3/4,5")

    def test_outer_block(self):
        """The block holding 1 and n."""
        assert outer_block(NCPartition.parse("1,4/2,3")) == (1, 4)
        with pytest.raises(DomainError):
            outer_block(NCPartition.parse("1,2/3,4"))

    def test_special_blocks(self):
        """Blocks of pi whose ends match a block of rho."""
        pi = NCPartition.parse("1,6/2,5/3,4")
        rho = NCPartition.parse("1,6/2,3,4,5")
        assert ll(pi, rho)
        specials = special_blocks(pi, rho)
        assert {pi.blocks[i] for i in specials} == {(1, 6), (2, 5)}

    def test_ll_interval_bijection(self):
        """Distinct rho give distinct special-block sets, all containing the outer block."""
        pi = NCPartition.parse("1,6/2,3/4,5")
        mapping = ll_interval_bijection(pi)
        assert len(set(mapping.values())) == len(mapping)
        outer = pi.blocks.index(outer_block(pi))
        assert all(outer in specials for specials in mapping.values())
        assert mapping[one(6)] == frozenset({outer})

    def test_nesting_forest(self):
        """Children are recorded in the gap they sit in."""
        pi = NCPartition.parse("1,3,6/2/4,5")
        forest = nesting_forest(pi)
        root = pi.blocks.index((1, 3, 6))
        assert forest.roots == (root,)
        assert [pi.blocks[c] for c in forest.children_in_gap(root, 1)] == [(2,)]
        assert [pi.blocks[c] for c in forest.children_in_gap(root, 3)] == [(4, 5)]
        assert [pi.blocks[i][0] for i in forest.flatten()] == [1, 2, 4]

    def test_colorings(self):
        """Outer coloring uses colour 1 once."""
        pi = NCPartition.parse("1,4/2/3")
        coloring = Coloring.outer(pi)
        assert coloring.palette == 2
        assert sorted(coloring.colors) == [1, 2, 2]
        assert Coloring.trivial(pi).colors == (1, 1, 1)
        with pytest.raises(ArgumentError):
            Coloring(pi, (1, 2), 2)

    def test_compose_blocks(self):
        """Refining each block of rho."""
        rho = NCPartition.parse("1,4/2,3")
        result = compose_blocks(rho, [zero(2), one(2)])
        assert result == NCPartition.parse("1/2,3/4")


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=1, max_value=6), st.data())
def test_interval_hull_is_interval(n, data):
    """The hull is an interval partition coarser than pi."""
    pi = data.draw(st.sampled_from(enumerate_partitions(n)))
    hull = interval_hull(pi)
    assert hull.is_interval
    assert leq(pi, hull)
