import json

import numpy as np
import pytest

import polyrest as pr
from polyrest import linprog, seqopt
from polyrest.errors import InvalidInitialPoint
from polyrest.seqopt import SeqOptConfig, Termination, converged, update_delta


def _standard_setup(n):
    obj = linprog.LinearObjective.active_load(n, "maximize")
    bounds = linprog.BoxBounds.from_limits(
        n, pc=(0, 35), qc=(0, 0), pg=(0, 35), qg=(0, 0)
    )
    return obj, bounds


def _run(matrices, cfg=None, bounds=None):
    n = matrices.n
    obj, default_bounds = _standard_setup(n)
    return seqopt.run(
        matrices,
        pr.SplitLoadVector.zeros(n),
        pr.VoltageProfile.flat(n, matrices.v0),
        obj,
        bounds or default_bounds,
        cfg or SeqOptConfig(),
    )


def test_converges_on_three_node(three_node):
    trace = _run(three_node)
    assert trace.termination is Termination.CONVERGED
    assert trace.final.objective > 8.0


def test_objective_sequence_nondecreasing(three_node):
    trace = _run(three_node, SeqOptConfig(epsilon=0.001, max_iterations=200))
    objectives = trace.objectives()
    assert np.all(np.diff(objectives) >= -1e-12)


def test_every_iterate_is_power_flow_feasible(three_node):
    trace = _run(three_node)
    for it in trace.iterates:
        assert pr.pf_residual(three_node, it.voltages, it.load) <= 1e-8
        assert 0.0 <= it.delta <= 0.1 + 1e-15


def test_margin_shrinks_with_drift(three_node):
    trace = _run(three_node)
    deltas = [it.delta for it in trace.iterates[1:]]
    assert all(b <= a + 1e-15 for a, b in zip(deltas, deltas[1:]))


def test_max_iterations_zero_echoes_init(three_node):
    trace = _run(three_node, SeqOptConfig(max_iterations=0))
    assert trace.termination is Termination.MAX_ITERATIONS
    assert len(trace.iterates) == 1
    assert trace.final.objective == 0.0
    assert np.all(trace.final.load.stacked() == 0)


def test_max_iterations_cap(three_node):
    trace = _run(three_node, SeqOptConfig(epsilon=1e-12, max_iterations=3))
    assert len(trace.iterates) <= 4
    assert trace.termination in (Termination.MAX_ITERATIONS, Termination.CONVERGED)


def test_invalid_initial_point(three_node):
    with pytest.raises(InvalidInitialPoint):
        seqopt.run(
            three_node,
            pr.SplitLoadVector(pc=[1.0, 0.0], qc=[0.0, 0.0],
                               pg=[0.0, 0.0], qg=[0.0, 0.0]),
            pr.VoltageProfile.flat(2, 1.0),
            *_standard_setup(2),
        )


def test_lp_infeasible_at_start(two_node):
    bounds = linprog.BoxBounds.from_limits(
        1, pc=(0, 0), qc=(0, 0), pg=(0.1, 0.1), qg=(0.01, 0.01)
    )
    trace = _run(two_node, SeqOptConfig(delta0=0.05), bounds)
    assert trace.termination is Termination.LP_INFEASIBLE
    assert len(trace.iterates) == 1


def test_convergence_predicate():
    assert converged(10.0, 10.05, 0.01)
    assert not converged(10.0, 10.2, 0.01)
    assert converged(0.0, 0.0, 0.01)


def test_update_delta():
    v_ref = np.array([1.0 + 0j, 1.0 + 0j])
    v = np.array([0.98 + 0j, 1.0 + 0j])
    assert update_delta(0.1, v, v_ref) == pytest.approx(0.08)
    assert update_delta(0.1, v_ref, v_ref) == pytest.approx(0.1)


def test_trace_serializes(three_node):
    trace = _run(three_node, SeqOptConfig(max_iterations=2, epsilon=1e-9))
    doc = json.loads(trace.to_json())
    assert doc["termination"] in {t.value for t in Termination}
    assert len(doc["iterates"]) == len(trace.iterates)
    it0 = doc["iterates"][0]
    assert set(it0) == {"load", "voltages", "delta", "objective"}
