"""
Test suite for boolean_csp.py - Fourier expansion, reductions, solvers, hybrid algorithm
"""

import random
from fractions import Fraction

import pytest

from boolean_csp import (
    BooleanConstraint, BooleanCspInstance, CspKernel, Predicate, average_weight, csp_to_lin2,
    eval_weight, fourier_expand, hybrid_k, hybrid_solve, kernelize_csp, lift_assignment,
    lin2_to_csp, residual_polynomial, solve_csp_aa,
)
from exact_search import brute_force_csp, csp_weight
from instances import IS_FALSE, IS_TRUE, OR3, all_bits, random_csp, random_lin2
from lin2_core import Lin2Equation, Lin2System, eval_weight as lin2_eval, kernel_bound, reduce_system
from models import Approx, Exact, InstanceError, No, Yes, YesCertificate
from polynomial import DyadicRational


def csp(n, c, *cons):
    return BooleanCspInstance(n, c, tuple(BooleanConstraint(p, scope, w) for p, scope, w in cons))


def point_of(b, arity):
    return {i + 1: -1 if (b >> i) & 1 else 1 for i in range(arity)}


class TestPredicate:
    def test_from_bits(self):
        assert OR3.table == (0, 1, 1, 1, 1, 1, 1, 1)
        assert OR3.ones == 7

    def test_value_indexing(self):
        assert IS_TRUE.value([1]) == 1
        assert IS_TRUE.value([0]) == 0
        assert OR3.value([0, 0, 0]) == 0
        assert OR3.value([0, 0, 1]) == 1

    def test_rejects_bad_tables(self):
        with pytest.raises(InstanceError):
            Predicate.from_bits("bad", 2, "011")
        with pytest.raises(InstanceError):
            Predicate.from_bits("bad", 1, "0x")
        with pytest.raises(InstanceError):
            Predicate("bad", 0, (1,))

    def test_constraint_scope_checks(self):
        with pytest.raises(InstanceError):
            BooleanConstraint(OR3, (0, 1), 1)
        with pytest.raises(InstanceError):
            BooleanConstraint(OR3, (0, 1, 1), 1)
        with pytest.raises(InstanceError):
            BooleanConstraint(OR3, (0, 1, 2), 0)

    def test_instance_checks(self):
        with pytest.raises(InstanceError):
            csp(3, 2, (OR3, (0, 1, 2), 1))
        with pytest.raises(InstanceError):
            csp(2, 3, (OR3, (0, 1, 2), 1))

    def test_conflicting_predicate_names(self):
        other = Predicate.from_bits("or3", 3, "00000001")
        inst = csp(3, 3, (OR3, (0, 1, 2), 1), (other, (0, 1, 2), 1))
        with pytest.raises(InstanceError):
            inst.predicates()


class TestFourierExpand:
    def test_or3_clause(self):
        poly = fourier_expand(OR3)
        assert poly.constant == Fraction(7, 8)
        for mono, coef in poly.items():
            if mono:
                assert coef == Fraction(-1, 8)
        assert len(poly) == 8

    def test_constant_predicate(self):
        poly = fourier_expand(Predicate.from_bits("one", 2, "1111"))
        assert poly.terms == {(): Fraction(1)}

    def test_xor(self):
        poly = fourier_expand(Predicate.from_bits("xor", 2, "0110"))
        assert poly.terms == {(): Fraction(1, 2), (1, 2): Fraction(-1, 2)}

    def test_all_arity_three_predicates(self):
        for code in range(256):
            table = tuple((code >> b) & 1 for b in range(8))
            pred = Predicate(f"t{code}", 3, table)
            poly = fourier_expand(pred)
            for b in range(8):
                assert poly.evaluate(point_of(b, 3)) == table[b]
            for _, coef in poly.dyadic_items():
                assert isinstance(coef, DyadicRational)
                assert coef.log2_denominator <= 3

    def test_result_is_a_copy(self):
        poly = fourier_expand(OR3)
        poly.add_scaled(fourier_expand(OR3), 1)
        assert fourier_expand(OR3).constant == Fraction(7, 8)


class TestAverageWeight:
    def test_e3_clause(self):
        assert average_weight(csp(3, 3, (OR3, (0, 1, 2), 8))) == 7

    def test_always_true(self):
        assert average_weight(csp(2, 2, (Predicate.from_bits("one", 2, "1111"), (0, 1), 5))) == 5

    def test_matches_enumeration(self):
        rng = random.Random(4)
        for _ in range(20):
            inst = random_csp(rng, 6, 8, 3)
            total = sum(eval_weight(inst, bits) for bits in all_bits(6))
            assert average_weight(inst) == Fraction(total, 64)

    def test_constant_coefficients_sum_to_average(self):
        rng = random.Random(8)
        for _ in range(20):
            inst = random_csp(rng, 6, 8, 3)
            constants = sum(con.weight * fourier_expand(con.predicate).constant for con in inst.constraints)
            assert constants == average_weight(inst)


class TestCspToLin2:
    def test_unary_true(self):
        lin = csp_to_lin2(csp(1, 1, (IS_TRUE, (0,), 1)))
        assert lin.equations == (Lin2Equation((0,), 1, 1),)
        assert lin.arity_bound == 2

    def test_linearity(self):
        one = csp_to_lin2(csp(3, 3, (OR3, (0, 1, 2), 1)))
        two = csp_to_lin2(csp(3, 3, (OR3, (0, 1, 2), 1), (OR3, (0, 1, 2), 1)))
        assert len(one.equations) == 7
        assert all(e.rhs == 1 and e.weight == 1 for e in one.equations)
        assert [e.weight for e in two.equations] == [2 * e.weight for e in one.equations]

    def test_correspondence_identity(self):
        rng = random.Random(12)
        for _ in range(40):
            c = rng.choice([1, 2, 3])
            inst = random_csp(rng, 6, 7, c)
            lin = csp_to_lin2(inst)
            avg = average_weight(inst)
            for bits in all_bits(6):
                lhs = (1 << c) * (eval_weight(inst, bits) - avg)
                assert lhs == 2 * lin2_eval(lin, bits) - lin.total_weight

    def test_residual_evaluates_to_excess(self):
        inst = csp(3, 3, (OR3, (0, 1, 2), 8), (IS_FALSE, (1,), 2))
        r = residual_polynomial(inst)
        for bits in all_bits(3):
            point = {v: -1 if bits[v] else 1 for v in range(3)}
            assert r.evaluate(point) == eval_weight(inst, bits) - average_weight(inst)


class TestSolveCspAA:
    def test_e3_clause(self):
        verdict = solve_csp_aa(csp(3, 3, (OR3, (0, 1, 2), 8)), 8)
        assert isinstance(verdict, Yes)
        assert verdict.achieved_weight == 8

    def test_contradictory_units(self):
        verdict = solve_csp_aa(csp(1, 1, (IS_TRUE, (0,), 1), (IS_FALSE, (0,), 1)), 1)
        assert isinstance(verdict, No)
        assert verdict.optimum_weight == 1

    def test_rejects_bad_k(self):
        with pytest.raises(ValueError):
            solve_csp_aa(csp(1, 1), 0)

    def test_matches_oracle(self):
        rng = random.Random(19)
        for _ in range(60):
            c = rng.choice([1, 2, 3])
            inst = random_csp(rng, rng.randint(1, 8), rng.randint(0, 8), c)
            k = rng.randint(1, 6)
            _, best = brute_force_csp(inst)
            expected = (1 << c) * (best - average_weight(inst)) >= k
            verdict = solve_csp_aa(inst, k)
            assert isinstance(verdict, Yes) == expected
            if isinstance(verdict, Yes):
                assert (1 << c) * (verdict.achieved_weight - average_weight(inst)) >= k
                assert csp_weight(inst, verdict.witness) == verdict.achieved_weight
            else:
                assert verdict.optimum_weight == best


class TestHybridSolve:
    def test_approx_branch(self):
        inst = csp(3, 3, (OR3, (0, 1, 2), 8))
        result = hybrid_solve(inst, Fraction(1, 8))
        assert isinstance(result, Approx)
        assert result.weight == 8

    def test_exact_branch(self):
        inst = csp(1, 1, (IS_TRUE, (0,), 1), (IS_FALSE, (0,), 1))
        result = hybrid_solve(inst, 1)
        assert isinstance(result, Exact)
        assert result.weight == 1

    def test_eps_range(self):
        inst = csp(1, 1, (IS_TRUE, (0,), 1))
        with pytest.raises(ValueError):
            hybrid_solve(inst, 0)
        with pytest.raises(ValueError):
            hybrid_solve(inst, Fraction(3, 2))

    def test_hybrid_k(self):
        inst = csp(3, 3, (OR3, (0, 1, 2), 10))
        assert hybrid_k(inst, Fraction(1, 4)) == 3
        assert hybrid_k(csp(1, 1), Fraction(1, 2)) == 1

    def test_contract_on_random_instances(self):
        rng = random.Random(23)
        for _ in range(100):
            c = rng.choice([1, 2, 3])
            inst = random_csp(rng, rng.randint(1, 8), rng.randint(1, 10), c)
            eps = rng.choice([Fraction(1, 8), Fraction(1, 4), Fraction(1, 2), Fraction(1)])
            result = hybrid_solve(inst, eps)
            assert csp_weight(inst, result.assignment) == result.weight
            if isinstance(result, Approx):
                bound = average_weight(inst) + eps * inst.total_weight / (1 << (c + 1))
                assert result.weight >= bound
            else:
                assert result.weight == brute_force_csp(inst)[1]


class TestLin2ToCsp:
    def test_binary_equation(self):
        lin = Lin2System(2, 2, (Lin2Equation((0, 1), 1, 1),))
        inst, scale = lin2_to_csp(lin)
        assert scale == 2
        tables = sorted(con.predicate.table for con in inst.constraints)
        assert tables == [(0, 1, 1, 1), (1, 1, 1, 0)]
        assert all(con.weight == 1 and con.scope == (0, 1) for con in inst.constraints)

    def test_unit_equation(self):
        inst, _ = lin2_to_csp(Lin2System(1, 2, (Lin2Equation((0,), 1, 3),)))
        assert len(inst.constraints) == 1
        assert inst.constraints[0].predicate.table == (0, 1)
        assert inst.constraints[0].weight == 3

    def test_scale_follows_arity_bound(self):
        _, scale = lin2_to_csp(Lin2System(3, 3, ()))
        assert scale == 4

    def test_excess_identity(self):
        rng = random.Random(29)
        for _ in range(40):
            lin = reduce_system(random_lin2(rng, 6, 10, 3))
            inst, _ = lin2_to_csp(lin)
            avg = average_weight(inst)
            for bits in all_bits(6):
                assert eval_weight(inst, bits) - avg == lin2_eval(lin, bits) - Fraction(lin.total_weight, 2)


class TestKernelizeCsp:
    def test_certificate(self):
        inst = csp(3, 3, (OR3, (0, 1, 2), 8))
        result = kernelize_csp(inst, 8)
        assert isinstance(result, YesCertificate)
        assert eval_weight(inst, result.assignment) == 8

    def test_empty_kernel(self):
        inst = csp(1, 1, (IS_TRUE, (0,), 1), (IS_FALSE, (0,), 1))
        result = kernelize_csp(inst, 1)
        assert isinstance(result, CspKernel)
        assert result.instance.num_vars == 0
        assert result.variables == ()
        assert result.k == 2
        assert isinstance(solve_csp_aa(result.instance, result.k), No)

    def test_kernel_bound_and_equivalence(self):
        rng = random.Random(31)
        kernels = 0
        for _ in range(60):
            c = rng.choice([1, 2, 3])
            inst = random_csp(rng, rng.randint(1, 7), rng.randint(1, 6), c, max_weight=2)
            k = rng.randint(8, 30)
            result = kernelize_csp(inst, k)
            _, best = brute_force_csp(inst)
            expected = (1 << c) * (best - average_weight(inst)) >= k
            if isinstance(result, CspKernel):
                kernels += 1
                assert result.instance.num_vars < kernel_bound(max(2, c), k)
                verdict = solve_csp_aa(result.instance, result.k)
                assert isinstance(verdict, Yes) == expected
                lifted = lift_assignment(verdict.witness, result.variables, inst.num_vars)
                assert len(lifted) == inst.num_vars
            else:
                assert expected
        assert kernels > 0
