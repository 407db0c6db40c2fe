"""
Test suite for lin2_core.py - reduction, collections, witnesses, exhaustive search, decisions
"""

import random

import pytest
from hypothesis import given, settings, strategies as st

import metrics
from exact_search import brute_force_lin2, lin2_weight
from instances import all_bits, random_lin2
from lin2_core import (
    IndependentCollections, Kernel, Lin2Equation, Lin2System, assignment_above_average,
    build_collections, compact_system, eval_weight, exhaustive_solve, from_max_cut, gf2_rank,
    is_independent_of_layer, kernel_bound, kernelize, layer_dependence, reduce_system, solve_aa,
)
from models import BRANCH_CERTIFICATE, BRANCH_KERNEL, InstanceError, No, ResourceGuardError, Yes, YesCertificate


def eq(variables, rhs, weight):
    return Lin2Equation.of(variables, rhs, weight)


def system(n, *eqs, c=2):
    return Lin2System(n, c, tuple(eqs))


def oracle_verdict(sys_, k):
    _, best = brute_force_lin2(sys_)
    return 2 * best >= sys_.total_weight + k, best


class TestLin2Types:
    def test_equation_sorted_by_of(self):
        assert eq([3, 1], 1, 2).variables == (1, 3)

    def test_equation_rejects_unsorted(self):
        with pytest.raises(InstanceError):
            Lin2Equation((2, 1), 0, 1)

    def test_equation_rejects_repeats(self):
        with pytest.raises(InstanceError):
            eq([1, 1], 0, 1)

    def test_equation_rejects_bad_rhs_and_weight(self):
        with pytest.raises(InstanceError):
            eq([0], 2, 1)
        with pytest.raises(InstanceError):
            eq([0], 0, 0)

    def test_equation_mask(self):
        assert eq([0, 2], 0, 1).mask == 0b101

    def test_system_rejects_arity_above_bound(self):
        with pytest.raises(InstanceError):
            system(3, eq([0, 1, 2], 0, 1), c=2)

    def test_system_rejects_out_of_range(self):
        with pytest.raises(InstanceError):
            system(2, eq([2], 0, 1))

    def test_system_rejects_small_arity_bound(self):
        with pytest.raises(InstanceError):
            Lin2System(2, 1, ())

    def test_reduced_flag_checked(self):
        with pytest.raises(InstanceError):
            Lin2System(2, 2, (eq([0, 1], 0, 1), eq([0, 1], 1, 1)), reduced=True)

    def test_occurring_variables(self):
        assert system(5, eq([3], 0, 1), eq([1, 3], 1, 1)).occurring_variables() == [1, 3]


class TestReduceSystem:
    def test_complementary_pair(self):
        red = reduce_system(system(2, eq([0, 1], 0, 3), eq([0, 1], 1, 1)))
        assert red.equations == (eq([0, 1], 0, 2),)
        assert red.offset == 1
        assert red.reduced

    def test_identical_merge(self):
        red = reduce_system(system(2, eq([0, 1], 0, 2), eq([0, 1], 0, 5)))
        assert red.equations == (eq([0, 1], 0, 7),)
        assert red.offset == 0

    def test_tie_removes_both(self):
        red = reduce_system(system(2, eq([0, 1], 0, 4), eq([0, 1], 1, 4), eq([0], 1, 1)))
        assert red.equations == (eq([0], 1, 1),)
        assert red.offset == 4

    def test_heavier_side_keeps_its_rhs(self):
        red = reduce_system(system(2, eq([1], 0, 1), eq([1], 1, 6)))
        assert red.equations == (eq([1], 1, 5),)

    def test_offset_accumulates(self):
        red = reduce_system(Lin2System(1, 2, (eq([0], 0, 2), eq([0], 1, 3)), offset=10))
        assert red.offset == 12

    def test_every_assignment_shifts_by_offset(self):
        rng = random.Random(7)
        original = random_lin2(rng, 6, 20, 3, max_weight=5)
        red = reduce_system(original)
        for bits in all_bits(6):
            assert eval_weight(original, bits) == eval_weight(red, bits) + red.offset

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.tuples(st.sets(st.integers(0, 3), min_size=1, max_size=3),
                              st.integers(0, 1), st.integers(1, 5)), max_size=12))
    def test_reduction_identity_property(self, rows):
        original = Lin2System(4, 3, tuple(eq(vs, rhs, w) for vs, rhs, w in rows))
        red = reduce_system(original)
        assert len({e.variables for e in red.equations}) == len(red.equations)
        for bits in all_bits(4):
            assert eval_weight(original, bits, original_units=True) == eval_weight(red, bits, original_units=True)


class TestBuildCollections:
    def test_three_layer_example(self):
        sys_ = reduce_system(system(7, eq([0, 1, 2], 0, 1), eq([3, 4, 5], 1, 1), eq([0, 3, 6], 0, 1), c=3))
        col = build_collections(sys_)
        assert col.layers[3] == (0, 1)
        assert col.layers[2] == ()
        assert col.layers[1] == (2,)
        assert col.fresh_vars[1] == ((6,),)
        assert col.layer_weights == {3: 2, 2: 0, 1: 1}

    def test_single_unit_equation(self):
        col = build_collections(reduce_system(system(1, eq([0], 0, 1))))
        assert col.layers[2] == ()
        assert col.layers[1] == (0,)

    def test_empty_system(self):
        col = build_collections(reduce_system(system(3)))
        assert all(not layer for layer in col.layers.values())
        assert col.heaviest_layer(1) is None

    def test_requires_reduced(self):
        with pytest.raises(ValueError):
            build_collections(system(2, eq([0], 0, 1)))

    def test_invariants_on_random_systems(self):
        rng = random.Random(11)
        for _ in range(40):
            c = rng.choice([2, 3, 4])
            sys_ = reduce_system(random_lin2(rng, 10, 25, c))
            col = build_collections(sys_)
            for j in range(1, c + 1):
                fresh = col.fresh_vars[j]
                assert all(len(f) == j for f in fresh)
                flat = [v for f in fresh for v in f]
                assert len(flat) == len(set(flat))
                above = col.covered_above(j, sys_)
                for e in sys_.equations:
                    assert len(set(e.variables) - above) <= j

    def test_heaviest_layer_prefers_largest_j(self):
        col = IndependentCollections(3, {3: (0,), 2: (), 1: (1,)}, {}, {3: 5, 2: 0, 1: 9})
        assert col.heaviest_layer(5) == 3
        assert col.heaviest_layer(6) == 1
        assert col.heaviest_layer(10) is None


class TestAssignmentAboveAverage:
    def test_forced_unit_variable(self):
        sys_ = reduce_system(system(1, eq([0], 0, 3)))
        col = build_collections(sys_)
        witness = assignment_above_average(sys_, col, 1)
        assert witness == (0,)
        assert eval_weight(sys_, witness) == 3

    def test_only_layer_equations(self):
        sys_ = reduce_system(system(4, eq([0, 1], 1, 2), eq([2, 3], 0, 5)))
        col = build_collections(sys_)
        witness = assignment_above_average(sys_, col, 2)
        assert eval_weight(sys_, witness) == sys_.total_weight

    def test_empty_layer_rejected(self):
        sys_ = reduce_system(system(1, eq([0], 0, 3)))
        with pytest.raises(ValueError):
            assignment_above_average(sys_, build_collections(sys_), 2)

    def test_bound_on_random_systems(self):
        rng = random.Random(5)
        for _ in range(60):
            c = rng.choice([2, 3, 4])
            sys_ = reduce_system(random_lin2(rng, 12, 30, c))
            col = build_collections(sys_)
            for j, layer in col.layers.items():
                if not layer:
                    continue
                witness = assignment_above_average(sys_, col, j)
                for idx in layer:
                    assert sys_.equations[idx].satisfied_by(witness)
                assert 2 * eval_weight(sys_, witness) >= sys_.total_weight + col.layer_weights[j]

    def test_layer_rows_independent(self):
        rng = random.Random(9)
        for _ in range(30):
            sys_ = reduce_system(random_lin2(rng, 10, 20, 3))
            col = build_collections(sys_)
            for j, layer in col.layers.items():
                if layer:
                    assert layer_dependence(sys_, col, j) == []


class TestExhaustiveSolve:
    def test_single_unit(self):
        assert exhaustive_solve(system(1, eq([0], 1, 5))) == ((1,), 5)

    def test_original_optimum_through_offset(self):
        original = system(2, eq([0, 1], 0, 2), eq([0, 1], 1, 3))
        red = reduce_system(original)
        assert red.equations == (eq([0, 1], 1, 1),)
        bits, best = exhaustive_solve(red)
        assert bits == (0, 1)
        assert best + red.offset == 3

    def test_non_occurring_variables_zero(self):
        bits, best = exhaustive_solve(system(4, eq([2], 1, 1)))
        assert bits == (0, 0, 1, 0)
        assert best == 1

    def test_guard(self):
        sys_ = system(5, *(eq([v], 1, 1) for v in range(5)))
        with pytest.raises(ResourceGuardError) as err:
            exhaustive_solve(sys_, guard=4)
        assert err.value.count == 5
        assert err.value.guard == 4

    def test_matches_oracle(self):
        rng = random.Random(3)
        for _ in range(40):
            sys_ = random_lin2(rng, 8, 10, 3)
            assert exhaustive_solve(sys_) == brute_force_lin2(sys_)

    def test_parallel_blocks_agree(self):
        rng = random.Random(21)
        base = random_lin2(rng, 14, 20, 3)
        sys_ = Lin2System(14, 3, base.equations + tuple(eq([v], v % 2, 1) for v in range(14)))
        assert exhaustive_solve(sys_, workers=3) == exhaustive_solve(sys_, workers=1)


class TestSolveAA:
    def test_single_equation(self):
        verdict = solve_aa(system(2, eq([0, 1], 1, 1)), 1)
        assert isinstance(verdict, Yes)
        assert verdict.witness == (0, 1)
        assert verdict.achieved_weight == 1
        assert verdict.branch == BRANCH_CERTIFICATE

    def test_degenerate_pairs_are_no(self):
        sys_ = system(4, eq([0, 1], 0, 1), eq([0, 1], 1, 1), eq([2, 3], 0, 1), eq([2, 3], 1, 1))
        verdict = solve_aa(sys_, 1)
        assert isinstance(verdict, No)
        assert verdict.optimum_weight == 2
        assert verdict.branch == BRANCH_KERNEL

    def test_rejects_bad_k(self):
        with pytest.raises(ValueError):
            solve_aa(system(1), 0)

    def test_counts_branches(self):
        before = metrics.branch_count("lin2", BRANCH_CERTIFICATE)
        solve_aa(system(2, eq([0, 1], 1, 1)), 1)
        assert metrics.branch_count("lin2", BRANCH_CERTIFICATE) == before + 1

    def _check_corpus(self, seed, count, max_n, max_m):
        rng = random.Random(seed)
        for _ in range(count):
            n = rng.randint(1, max_n)
            c = rng.choice([2, 3, 4])
            sys_ = random_lin2(rng, n, rng.randint(0, max_m), c)
            k = rng.randint(1, 6)
            expected, best = oracle_verdict(sys_, k)
            verdict = solve_aa(sys_, k)
            assert isinstance(verdict, Yes) == expected
            if isinstance(verdict, Yes):
                assert 2 * verdict.achieved_weight >= sys_.total_weight + k
                assert lin2_weight(sys_, verdict.witness) == verdict.achieved_weight
            else:
                assert verdict.optimum_weight == best
                assert lin2_weight(sys_, verdict.witness) == best

    def test_matches_oracle(self):
        self._check_corpus(seed=1, count=80, max_n=9, max_m=16)

    @pytest.mark.slow
    def test_matches_oracle_full_corpus(self):
        self._check_corpus(seed=2, count=500, max_n=14, max_m=30)


class TestKernelize:
    def test_certificate_when_layer_heavy(self):
        sys_ = system(3, eq([0, 1], 1, 5), eq([2], 0, 1))
        result = kernelize(sys_, 3)
        assert isinstance(result, YesCertificate)
        assert 2 * eval_weight(sys_, result.assignment) >= sys_.total_weight + 3

    def test_empty_system(self):
        result = kernelize(system(4), 1)
        assert isinstance(result, Kernel)
        assert result.system.num_vars == 0
        assert result.variables == ()

    def test_kernel_size_bound(self):
        rng = random.Random(13)
        kernels = 0
        for _ in range(120):
            c = rng.choice([2, 3, 4])
            k = rng.randint(3, 8)
            sys_ = random_lin2(rng, 14, rng.randint(1, 12), c, max_weight=3)
            result = kernelize(sys_, k)
            if isinstance(result, Kernel):
                kernels += 1
                assert result.system.num_vars < kernel_bound(sys_.arity_bound, k)
                assert len(result.variables) == result.system.num_vars
            else:
                assert 2 * eval_weight(sys_, result.assignment) >= sys_.total_weight + k
        assert kernels > 0

    def test_kernel_preserves_optimum(self):
        sys_ = system(6, eq([1, 4], 1, 1), eq([4], 0, 1), eq([1], 0, 1))
        result = kernelize(sys_, 5)
        assert isinstance(result, Kernel)
        assert result.variables == (1, 4)
        _, best = exhaustive_solve(result.system)
        assert best + result.system.offset == brute_force_lin2(sys_)[1]

    def test_compact_system_renumbers(self):
        compacted, variables = compact_system(system(5, eq([1, 4], 0, 2)))
        assert variables == (1, 4)
        assert compacted.equations == (eq([0, 1], 0, 2),)


class TestEvalWeight:
    def test_unit(self):
        assert eval_weight(system(1, eq([0], 0, 7)), (0,)) == 7

    def test_unsatisfied(self):
        assert eval_weight(system(2, eq([0, 1], 1, 3)), (1, 1)) == 0

    def test_original_units(self):
        sys_ = Lin2System(1, 2, (eq([0], 0, 7),), offset=2)
        assert eval_weight(sys_, (0,), original_units=True) == 9

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            eval_weight(system(2), (0,))

    def test_matches_independent_evaluator(self):
        rng = random.Random(17)
        for _ in range(30):
            sys_ = random_lin2(rng, 7, 12, 3)
            bits = tuple(rng.randint(0, 1) for _ in range(7))
            assert eval_weight(sys_, bits) == lin2_weight(sys_, bits)


class TestGf2Rank:
    def test_small(self):
        assert gf2_rank([0b11, 0b01, 0b10]) == 2
        assert gf2_rank([]) == 0
        assert gf2_rank([0, 0b100]) == 1
        assert gf2_rank([0b110, 0b011, 0b101, 0b111]) == 3

    def test_independence_of_layer(self):
        sys_ = reduce_system(system(4, eq([0, 1], 0, 1), eq([2, 3], 0, 1), eq([1, 2], 0, 1)))
        col = build_collections(sys_)
        assert col.layers[2] == (0, 1)
        assert is_independent_of_layer(sys_, col, 2, 2)


class TestMaxCut:
    def test_triangle(self):
        sys_ = from_max_cut(3, [(0, 1, 1), (1, 2, 1), (0, 2, 1)])
        assert brute_force_lin2(sys_)[1] == 2
        assert isinstance(solve_aa(sys_, 1), Yes)
        assert isinstance(solve_aa(sys_, 2), No)
