"""Sequential linear optimization over shifting polyhedral restrictions.

Each iteration rebuilds the restriction around the current power-flow
solution with a contracted stability margin, optimizes the linear
objective over it, and recovers an exact power-flow solution at the new
load, so every iterate in the trace is feasible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import linprog
from .errors import Infeasible, InvalidInitialPoint
from .network import BusMatrices
from .powerflow import (
    RESIDUAL_TOL,
    FixedPointConfig,
    OperatingPoint,
    SplitLoadVector,
    VoltageProfile,
    fixed_point_solve,
    pf_residual,
)
from .restriction import build_restriction, normalize_split


class Termination(Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    DELTA_EXHAUSTED = "DeltaExhausted"
    LP_INFEASIBLE = "LpInfeasible"


@dataclass(frozen=True)
class SeqOptConfig:
    delta0: float = 0.1
    epsilon: float = 0.01
    max_iterations: int = 100
    pf_config: FixedPointConfig = field(default_factory=FixedPointConfig)


@dataclass(frozen=True)
class Iterate:
    load: SplitLoadVector
    voltages: VoltageProfile
    delta: float
    objective: float


@dataclass(frozen=True)
class SeqOptTrace:
    iterates: tuple[Iterate, ...]
    termination: Termination

    @property
    def final(self) -> Iterate:
        return self.iterates[-1]

    def objectives(self) -> np.ndarray:
        return np.array([it.objective for it in self.iterates])

    def to_json(self) -> str:
        def _it(it: Iterate):
            return {
                "load": {
                    "pc": it.load.pc.tolist(),
                    "qc": it.load.qc.tolist(),
                    "pg": it.load.pg.tolist(),
                    "qg": it.load.qg.tolist(),
                },
                "voltages": [
                    {"re": float(v.real), "im": float(v.imag)}
                    for v in it.voltages.v
                ],
                "delta": it.delta,
                "objective": it.objective,
            }

        return json.dumps(
            {
                "termination": self.termination.value,
                "iterates": [_it(it) for it in self.iterates],
            },
            indent=2,
        )


def converged(f_prev: float, f_next: float, epsilon: float) -> bool:
    return abs(f_next - f_prev) <= epsilon * max(abs(f_prev), 1e-12)


def update_delta(delta0: float, v: np.ndarray, v_ref: np.ndarray) -> float:
    """Shrink the initial margin by the drift of v away from v_ref."""
    drift = float(np.max(np.abs(v - v_ref) / np.abs(v_ref)))
    return delta0 - drift


def run(
    matrices: BusMatrices,
    initial_load: SplitLoadVector,
    initial_voltages: VoltageProfile,
    objective: linprog.LinearObjective,
    bounds: linprog.BoxBounds,
    config: SeqOptConfig | None = None,
) -> SeqOptTrace:
    cfg = config or SeqOptConfig()
    if not 0.0 < cfg.delta0 < 1.0:
        raise ValueError("delta0 must lie in (0, 1)")

    res = pf_residual(matrices, initial_voltages, initial_load)
    if res > RESIDUAL_TOL:
        raise InvalidInitialPoint(
            f"initial point violates power flow (residual {res:.3e})"
        )

    v_ref = initial_voltages.v
    load = initial_load
    voltages = initial_voltages
    iterates = [
        Iterate(load, voltages, cfg.delta0, objective.value(load))
    ]
    if cfg.max_iterations == 0:
        return SeqOptTrace(tuple(iterates), Termination.MAX_ITERATIONS)

    termination = Termination.MAX_ITERATIONS
    for _ in range(cfg.max_iterations):
        delta_k = update_delta(cfg.delta0, voltages.v, v_ref)
        if delta_k <= 0.0:
            # Record the exhausted margin as zero; nothing further moves.
            iterates[-1] = Iterate(
                load, voltages, 0.0, iterates[-1].objective
            )
            termination = Termination.DELTA_EXHAUSTED
            break

        p = build_restriction(
            matrices, OperatingPoint(v_hat=voltages, s_hat=load), delta_k
        )
        try:
            s_next, _ = linprog.solve(p, objective, bounds)
        except Infeasible:
            termination = Termination.LP_INFEASIBLE
            break
        s_next = normalize_split(s_next)
        voltages = fixed_point_solve(
            matrices, s_next, start=voltages, cfg=cfg.pf_config
        )
        load = s_next
        f_prev = iterates[-1].objective
        f_next = objective.value(load)
        iterates.append(Iterate(load, voltages, delta_k, f_next))
        if converged(f_prev, f_next, cfg.epsilon):
            termination = Termination.CONVERGED
            break

    return SeqOptTrace(tuple(iterates), termination)
