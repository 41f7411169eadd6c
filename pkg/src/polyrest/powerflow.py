"""Fixed-point power flow, slack injection, and voltage-deviation tests.

Sign convention: entries of the net load ``s = (pc - pg) + i (qc - qg)``
are positive for consumption.  The fixed-point map is

    G(v) = v0 * 1 - Z diag(v*)^-1 s*

and a solution is a voltage vector with G(v) = v.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import Divergence, NonConvergence, ZeroVoltage
from .network import BusMatrices

RESIDUAL_TOL = 1e-8  # operating points must satisfy the power flow to this


def _as_vector(values, n: int, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.shape != (n,):
        raise ValueError(f"{name} must have shape ({n},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class SplitLoadVector:
    """Nonnegative split of loads into consumption and generation parts.

    The stacked 4N ordering is (pc, qc, pg, qg).
    """

    pc: np.ndarray
    qc: np.ndarray
    pg: np.ndarray
    qg: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.pc).shape[0]
        for name in ("pc", "qc", "pg", "qg"):
            arr = _as_vector(getattr(self, name), n, name)
            if np.any(arr < 0):
                raise ValueError(f"{name} must be nonnegative")
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.pc.shape[0]

    def net(self) -> np.ndarray:
        """Complex net load per bus (consumption minus generation)."""
        return (self.pc - self.pg) + 1j * (self.qc - self.qg)

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.pc, self.qc, self.pg, self.qg])

    @classmethod
    def from_stacked(cls, values) -> "SplitLoadVector":
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 1 or arr.size % 4 != 0:
            raise ValueError("stacked split load must be a 4N vector")
        n = arr.size // 4
        return cls(arr[:n], arr[n : 2 * n], arr[2 * n : 3 * n], arr[3 * n :])

    @classmethod
    def zeros(cls, n: int) -> "SplitLoadVector":
        z = np.zeros(n)
        return cls(z, z.copy(), z.copy(), z.copy())


@dataclass(frozen=True)
class VoltageProfile:
    """Complex voltages at PQ buses plus the fixed slack voltage."""

    v: np.ndarray
    v0: complex

    def __post_init__(self):
        arr = np.asarray(self.v, dtype=np.complex128)
        if arr.ndim != 1:
            raise ValueError("voltage vector must be one-dimensional")
        if not np.all(np.isfinite(arr)):
            raise ValueError("voltage vector contains non-finite entries")
        object.__setattr__(self, "v", arr)
        object.__setattr__(self, "v0", complex(self.v0))

    @property
    def n(self) -> int:
        return self.v.shape[0]

    @classmethod
    def flat(cls, n: int, v0: complex) -> "VoltageProfile":
        return cls(np.full(n, complex(v0), dtype=np.complex128), v0)


@dataclass(frozen=True)
class FixedPointConfig:
    tol: float = 1e-10
    max_iter: int = 1000
    divergence_bound: float = 1e-3

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.divergence_bound <= 0:
            raise ValueError("divergence_bound must be positive")


@dataclass(frozen=True)
class OperatingPoint:
    """A voltage/load pair satisfying the power-flow equations."""

    v_hat: VoltageProfile
    s_hat: SplitLoadVector


def _apply_map(matrices: BusMatrices, v: np.ndarray, load: SplitLoadVector):
    if np.any(v == 0):
        raise ZeroVoltage("fixed-point map undefined at a zero voltage entry")
    s_conj = np.conj(load.net())
    return matrices.v0 - matrices.z @ (s_conj / np.conj(v))


def fixed_point_solve(
    matrices: BusMatrices,
    load: SplitLoadVector,
    start: VoltageProfile | None = None,
    cfg: FixedPointConfig = FixedPointConfig(),
) -> VoltageProfile:
    """Iterate G from ``start`` (default: flat profile) to a fixed point.

    Raises NonConvergence when the iteration budget is exhausted and
    Divergence when a voltage magnitude collapses below the configured
    bound, which signals a load outside the solvable region.
    """
    profile, _ = fixed_point_solve_stats(matrices, load, start, cfg)
    return profile


def fixed_point_solve_stats(
    matrices: BusMatrices,
    load: SplitLoadVector,
    start: VoltageProfile | None = None,
    cfg: FixedPointConfig = FixedPointConfig(),
) -> tuple[VoltageProfile, int]:
    """Like fixed_point_solve, also reporting the iteration count."""
    n = matrices.n
    if load.n != n:
        raise ValueError("load dimension does not match the network")
    if start is None:
        v = np.full(n, matrices.v0, dtype=np.complex128)
    else:
        if start.n != n:
            raise ValueError("start profile dimension does not match")
        if np.any(start.v == 0):
            raise ZeroVoltage("start profile has a zero entry")
        v = start.v.astype(np.complex128)

    s = load.net().reshape(1, n)
    if start is None:
        v_out, status, iters = kernels.fixed_point_batch(
            matrices.z, s, matrices.v0, cfg.tol, cfg.max_iter, cfg.divergence_bound
        )
        v_final, code, it = v_out[0], int(status[0]), int(iters[0])
    else:
        v_final, code, it = _solve_from(matrices, s[0], v, cfg)
    if code == kernels.STATUS_DIVERGED:
        raise Divergence(it)
    if code == kernels.STATUS_MAX_ITER:
        residual = float(np.abs(_apply_map(matrices, v_final, load) - v_final).max())
        raise NonConvergence(cfg.max_iter, residual)
    return VoltageProfile(v_final, matrices.v0), it


def _solve_from(matrices, s, v, cfg):
    # Warm-started scalar solve; the batch kernels always start flat.
    s_conj = np.conj(s)
    for it in range(1, cfg.max_iter + 1):
        v_new = matrices.v0 - matrices.z @ (s_conj / np.conj(v))
        if np.abs(v_new).min() < cfg.divergence_bound:
            return v_new, kernels.STATUS_DIVERGED, it
        if np.abs(v_new - v).max() <= cfg.tol:
            return v_new, kernels.STATUS_CONVERGED, it
        v = v_new
    return v, kernels.STATUS_MAX_ITER, cfg.max_iter


def pf_residual(
    matrices: BusMatrices, v: VoltageProfile, load: SplitLoadVector
) -> float:
    """Infinity norm of G(v) - v."""
    if matrices.n == 0:
        return 0.0
    return float(np.abs(_apply_map(matrices, v.v, load) - v.v).max())


def slack_injection(matrices: BusMatrices, v: VoltageProfile) -> complex:
    """Complex power injected at the slack bus for a solved profile.

    A negative real part means the load buses feed power back into the
    source.
    """
    i0 = matrices.y00 * matrices.v0 + matrices.y0l @ v.v
    return complex(matrices.v0 * np.conj(i0))


def branch_currents(matrices: BusMatrices, v: VoltageProfile) -> np.ndarray:
    """Injected currents (I0, I) = Y (V0, V) as an (N+1,) vector."""
    full_v = np.concatenate([[v.v0], v.v])
    return matrices.full_admittance() @ full_v


def is_delta_stable(v: VoltageProfile, hat: VoltageProfile, delta: float) -> bool:
    """Elementwise test |v_j - hat_j| <= delta |hat_j| for every PQ bus."""
    if v.n != hat.n:
        raise ValueError("profiles have different dimensions")
    return bool(np.all(np.abs(v.v - hat.v) <= delta * np.abs(hat.v)))


def make_operating_point(
    matrices: BusMatrices,
    load: SplitLoadVector,
    cfg: FixedPointConfig = FixedPointConfig(),
) -> OperatingPoint:
    """Solve the power flow for ``load`` and package the pair."""
    v = fixed_point_solve(matrices, load, cfg=cfg)
    return OperatingPoint(v_hat=v, s_hat=load)


def nominal_operating_point(matrices: BusMatrices) -> OperatingPoint:
    """The zero-load point: flat voltages at the slack value."""
    return OperatingPoint(
        v_hat=VoltageProfile.flat(matrices.n, matrices.v0),
        s_hat=SplitLoadVector.zeros(matrices.n),
    )
