"""Jacobian construction, independence, and the finite-difference cross-check."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

import opfsens as ops
from opfsens.errors import CardinalityViolation, DependentBindings, RegionBoundary
from opfsens.jacobian import BindingSet, build_z_stack
from opfsens.network import assemble_network

from conftest import random_regular_params


def _reference_laplacian():
    """The 9-bus Laplacian rebuilt from raw branch data, independent of the
    Network assembly code."""
    branches = [
        (1, 4, 0.0576), (4, 5, 0.092), (5, 6, 0.17), (3, 6, 0.0586),
        (6, 7, 0.1008), (7, 8, 0.072), (8, 2, 0.0625), (8, 9, 0.161), (9, 4, 0.085),
    ]
    order = [1, 2, 3, 4, 5, 6, 7, 8, 9]
    pos = {b: i for i, b in enumerate(order)}
    lap = np.zeros((9, 9))
    for u, v, x in branches:
        b = 1.0 / x
        iu, iv = pos[u], pos[v]
        lap[iu, iu] += b
        lap[iv, iv] += b
        lap[iu, iv] -= b
        lap[iv, iu] -= b
    return lap


def test_stack_rows_case9(net9):
    bset = BindingSet(gens=(0,), branches=(1,))
    stack = build_z_stack(net9, bset)
    assert stack.shape == (9, 9)
    ref = _reference_laplacian()
    assert np.abs(stack[:6] - ref[3:]).max() < 1e-12      # load rows first
    assert np.abs(stack[6] - ref[0]).max() < 1e-12        # binding-gen row
    assert stack[8, 0] == 1.0 and not stack[8, 1:].any()  # reference row last


def test_stack_single_generator(two_bus):
    net, _ = two_bus
    stack = build_z_stack(net, BindingSet((), ()))
    assert stack.shape == (2, 2)
    assert np.array_equal(stack[1], [1.0, 0.0])


def test_duplicate_branch_rejected():
    with pytest.raises(CardinalityViolation):
        BindingSet(gens=(), branches=(3, 3))
    with pytest.raises(CardinalityViolation):
        BindingSet(gens=(1, 1), branches=())


def test_cardinality_enforced(net9):
    with pytest.raises(CardinalityViolation):
        build_z_stack(net9, BindingSet(gens=(0, 1), branches=(0,)))


def test_two_bus_jacobian_is_one(two_bus):
    net, _ = two_bus
    res = ops.jacobian_from_binding(net, BindingSet((), ()))
    assert res.jac.shape == (1, 1)
    assert res.jac[0, 0] == pytest.approx(1.0, abs=1e-12)


def test_conservation_properties_case9(net9):
    for bset in itertools.islice(ops.enumerate_binding_sets(net9), 25):
        jac = ops.jacobian_from_binding(net9, bset).jac
        assert np.abs(jac.sum(axis=0) - 1.0).max() < 1e-8   # columns sum to one
        for g in bset.gens:
            assert np.abs(jac[g]).max() < 1e-9              # binding rows vanish


def test_published_worst_entry(net9, table9):
    """The published (3,9) worst case is realized by an enumerated set."""
    best = 0.0
    for bset in ops.enumerate_binding_sets(net9):
        jac = ops.jacobian_from_binding(net9, bset).jac
        best = max(best, abs(jac[2, 5]))
    assert best == pytest.approx(table9[2, 5], abs=1e-3)


def test_dependent_set_raises(net9):
    # cut {(1,4)} isolates generator 1; marking it binding too is dependent
    with pytest.raises(DependentBindings):
        ops.jacobian_from_binding(net9, BindingSet(gens=(0,), branches=(0,)))


def test_finite_diff_two_bus(two_bus):
    net, params = two_bus
    jac = ops.jacobian_finite_diff(net, params, np.array([0.5]), step=1e-4)
    assert jac[0, 0] == pytest.approx(1.0, abs=1e-9)


def test_finite_diff_matches_binding_formula(net9, params9):
    rng = np.random.default_rng(12)
    checked = 0
    while checked < 5:
        params = random_regular_params(params9, rng)
        load = rng.uniform(0.1, 0.5, 6)
        try:
            sol = ops.solve_opf(net9, params, load)
            bset = ops.extract_binding_set(sol, net9, params)
            fd = ops.jacobian_finite_diff(net9, params, load, step=1e-4)
        except ops.errors.OpfSensError:
            continue
        jac = ops.jacobian_from_binding(net9, bset).jac
        assert np.abs(jac - fd).max() <= 1e-5
        checked += 1


def test_finite_diff_region_boundary(net9, params9):
    """A stencil wide enough to cross into a neighboring active-set region
    must be reported, not silently averaged."""
    center = np.array([0.202, 0.278, 0.302, 1.015, 0.498, 0.417])
    ops.extract_binding_set(ops.solve_opf(net9, params9, center), net9, params9)
    with pytest.raises(RegionBoundary):
        ops.jacobian_finite_diff(net9, params9, center, step=0.05)
    # the same point differentiates cleanly with a sane step
    jac = ops.jacobian_finite_diff(net9, params9, center, step=1e-4)
    assert jac.shape == (3, 6)


def test_independence_matches_rank_oracle(net9, params9, loads9):
    """Over all 66 candidate sets: the stack test agrees with an SVD rank
    oracle applied to the standard-form rows (equalities included)."""
    sf = ops.standard_form(net9, params9, loads9)
    n, n_g = net9.n_bus, net9.n_gen
    eq_rows = [0] + list(range(2, 2 + n))
    agree = total = 0
    for k in range(n_g):
        for sg in itertools.combinations(range(n_g), k):
            for sb in itertools.combinations(range(net9.n_edge), n_g - 1 - k):
                total += 1
                bset = BindingSet(gens=sg, branches=sb)
                mine = ops.independence_check(net9, bset)
                rows = eq_rows + [2 + 2 * n + g for g in sg] + \
                    [2 + 2 * n + 2 * n_g + e for e in sb]
                oracle = np.linalg.matrix_rank(sf.a[rows]) == n + n_g
                assert mine == oracle, (sg, sb)
                agree += 1
    assert total == agree == 66


def test_cut_with_all_component_generators_dependent(net9):
    """All generators of one cut side binding, plus the cut, is dependent.

    Each generator spur is a one-edge cut isolating exactly that generator;
    pairing the spur with the generator keeps the required cardinality and
    must always be rejected.
    """
    spur_of_gen = {0: 0, 1: 6, 2: 3}  # (1,4), (8,2), (3,6)
    for g, e in spur_of_gen.items():
        assert not ops.independence_check(net9, BindingSet(gens=(g,), branches=(e,)))


def test_empty_set_single_generator(two_bus):
    net, _ = two_bus
    assert ops.independence_check(net, BindingSet((), ()))


def test_scale_covariance(net9):
    """Scaling every susceptance by a common factor leaves J unchanged."""
    scaled = assemble_network(
        [net9.vertex_order[i] for i in range(net9.n_gen)],
        [net9.vertex_order[i] for i in range(net9.n_gen, net9.n_bus)],
        [(net9.vertex_order[u], net9.vertex_order[v], 7.5 * b) for u, v, b in net9.edges],
    )
    for bset in itertools.islice(ops.enumerate_binding_sets(net9), 10):
        j1 = ops.jacobian_from_binding(net9, bset).jac
        j2 = ops.jacobian_from_binding(scaled, bset).jac
        assert np.abs(j1 - j2).max() < 1e-9
