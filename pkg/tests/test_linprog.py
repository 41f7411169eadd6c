import itertools

import numpy as np
import pytest

import polyrest as pr
from polyrest import linprog
from polyrest.errors import Infeasible, Unbounded
from polyrest.linprog import BoxBounds, LinearObjective
from polyrest.restriction import build_restriction_nominal


def _vertex_enumeration_optimum(lhs, rhs, lower, upper, weights, maximize):
    """Exhaustive oracle: enumerate basic feasible points of the box-
    constrained polyhedron and return the best objective value."""
    dim = lhs.shape[1]
    rows = [(*row, b) for row, b in zip(lhs, rhs)]
    for j in range(dim):
        e = np.zeros(dim)
        e[j] = 1.0
        rows.append((*e, upper[j]))
        rows.append((*(-e), -lower[j]))
    rows = np.array(rows)
    best = None
    for combo in itertools.combinations(range(len(rows)), dim):
        a = rows[list(combo), :dim]
        b = rows[list(combo), dim]
        if abs(np.linalg.det(a)) < 1e-10:
            continue
        x = np.linalg.solve(a, b)
        if np.any(lhs @ x > rhs + 1e-9):
            continue
        if np.any(x < lower - 1e-9) or np.any(x > upper + 1e-9):
            continue
        val = weights @ x
        if best is None or (val > best if maximize else val < best):
            best = val
    return best


def _tiny_restriction(lhs, rhs):
    n = lhs.shape[0] // 4
    return pr.PolyhedralRestriction(
        lhs=np.asarray(lhs, dtype=float),
        rhs=np.asarray(rhs, dtype=float),
        delta=0.1,
        center=pr.OperatingPoint(
            v_hat=pr.VoltageProfile.flat(n, 1.0),
            s_hat=pr.SplitLoadVector.zeros(n),
        ),
    )


def test_matches_vertex_enumeration_on_two_node(two_node):
    rng = np.random.default_rng(41)
    p = build_restriction_nominal(two_node, 1.0, 0.1)
    bounds = BoxBounds.from_limits(1, pc=(0, 2), qc=(0, 1), pg=(0, 2), qg=(0, 1))
    for _ in range(25):
        w = rng.uniform(-1, 1, 4)
        for direction in ("maximize", "minimize"):
            obj = LinearObjective(weights=w, direction=direction)
            _, value = linprog.solve(p, obj, bounds)
            oracle_value = _vertex_enumeration_optimum(
                p.lhs, p.rhs, bounds.lower, bounds.upper, w,
                direction == "maximize",
            )
            assert value == pytest.approx(oracle_value, abs=1e-8)


def test_matches_vertex_enumeration_on_random_systems():
    rng = np.random.default_rng(43)
    for _ in range(20):
        lhs = rng.uniform(-1, 1, (4, 4))
        rhs = rng.uniform(0.1, 1.0, 4)  # keeps 0 feasible
        p = _tiny_restriction(lhs, rhs)
        bounds = BoxBounds.from_limits(1, pc=(0, 3), qc=(0, 3), pg=(0, 3), qg=(0, 3))
        w = rng.uniform(-1, 1, 4)
        obj = LinearObjective(weights=w, direction="maximize")
        _, value = linprog.solve(p, obj, bounds)
        oracle_value = _vertex_enumeration_optimum(
            p.lhs, p.rhs, bounds.lower, bounds.upper, w, True
        )
        assert value == pytest.approx(oracle_value, abs=1e-8)


def test_optimum_is_on_boundary(two_node):
    p = build_restriction_nominal(two_node, 1.0, 0.1)
    bounds = BoxBounds.from_limits(1, pc=(0, 35), qc=(0, 0), pg=(0, 35), qg=(0, 0))
    s_star, value = linprog.solve(
        p, LinearObjective.active_load(1, "maximize"), bounds
    )
    slack = p.rhs - p.lhs @ s_star.stacked()
    at_bound = np.concatenate(
        [slack, s_star.stacked() - bounds.lower, bounds.upper - s_star.stacked()]
    )
    assert np.min(np.abs(at_bound)) <= 1e-9
    assert value > 0


def test_infeasible_detected(two_node):
    # Bounds pinned to a load outside the narrow nominal polyhedron.
    p = build_restriction_nominal(two_node, 1.0, 0.05)
    bounds = BoxBounds.from_limits(
        1, pc=(0, 0), qc=(0, 0), pg=(0.1, 0.1), qg=(0.01, 0.01)
    )
    with pytest.raises(Infeasible):
        linprog.solve(p, LinearObjective.active_load(1, "maximize"), bounds)


def test_unbounded_detected():
    lhs = -np.eye(4)
    p = _tiny_restriction(lhs, np.ones(4))
    bounds = BoxBounds(lower=np.zeros(4), upper=np.full(4, np.inf))
    obj = LinearObjective(weights=np.array([1.0, 0, 0, 0]), direction="maximize")
    with pytest.raises(Unbounded):
        linprog.solve(p, obj, bounds)


def test_pinned_bounds_act_as_equalities(two_node):
    p = build_restriction_nominal(two_node, 1.0, 0.1)
    bounds = BoxBounds.from_limits(
        1, pc=(0.05, 0.05), qc=(0, 0), pg=(0, 0), qg=(0.0, 0.0)
    )
    s_star, value = linprog.solve(
        p, LinearObjective.active_load(1, "maximize"), bounds
    )
    assert s_star.pc[0] == pytest.approx(0.05, abs=1e-12)
    assert value == pytest.approx(0.05, abs=1e-12)


def test_extra_equalities(two_node):
    p = build_restriction_nominal(two_node, 1.0, 0.1)
    bounds = BoxBounds.from_limits(1, pc=(0, 1), qc=(0, 1), pg=(0, 1), qg=(0, 1))
    row = np.array([1.0, 0.0, 0.0, 0.0])
    s_star, _ = linprog.solve(
        p,
        LinearObjective.active_load(1, "maximize"),
        bounds,
        extra_equalities=[(row, 0.03)],
    )
    assert s_star.pc[0] == pytest.approx(0.03, abs=1e-9)


def test_strong_duality_certificate(three_node):
    p = build_restriction_nominal(three_node, 1.0, 0.1)
    bounds = BoxBounds.from_limits(2, pc=(0, 35), qc=(0, 0), pg=(0, 35), qg=(0, 0))
    obj = LinearObjective.active_load(2, "maximize")
    sol = linprog.solve_detailed(p, obj, bounds)
    y = sol.duals
    assert np.all(np.isfinite(y))
    a, b, c = sol.standard_a, sol.standard_b, sol.standard_c
    # Dual feasibility (within tolerance) and zero duality gap for the
    # standard-form program min c'w, Aw = b, w >= 0.
    assert np.all(a.T @ y <= c + 1e-8)
    assert b @ y == pytest.approx(-sol.value, abs=1e-8)


def test_deterministic(three_node):
    p = build_restriction_nominal(three_node, 1.0, 0.1)
    bounds = BoxBounds.from_limits(2, pc=(0, 35), qc=(0, 0), pg=(0, 35), qg=(0, 0))
    obj = LinearObjective.active_load(2, "maximize")
    first = linprog.solve(p, obj, bounds)
    second = linprog.solve(p, obj, bounds)
    assert np.array_equal(first[0].stacked(), second[0].stacked())
    assert first[1] == second[1]
