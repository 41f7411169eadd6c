"""Independent reference computations for validation.

Everything here avoids the fixed-point solver's code paths where
possible: closed-form solutions for the single-line network, a
current-elimination solver for a two-line feeder, and brute-force grid
search over load space with feasibility decided by direct simulation.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import NoFeasiblePoint
from .kernels import STATUS_CONVERGED, fixed_point_batch
from .linprog import BoxBounds, LinearObjective
from .network import BusMatrices
from .powerflow import SplitLoadVector, VoltageProfile


@dataclass(frozen=True)
class TwoNodeSolution:
    ell: float          # squared current magnitude on the line
    v1_sq: float        # squared voltage magnitude at the load bus
    p0: float           # active power drawn from the source
    q0: float           # reactive power drawn from the source


@dataclass(frozen=True)
class TwoNodeCase:
    """Single line from the source to one bus injecting (p1, q1).

    Positive p1/q1 denote net generation at the load bus, so the
    corresponding net consumption handed to the fixed-point solver is
    -(p1 + i q1).
    """

    r: float
    x: float
    p1: float
    q1: float
    v0_mag: float = 1.0

    @property
    def net_load(self) -> complex:
        return -complex(self.p1, self.q1)

    def solutions(self) -> list[TwoNodeSolution]:
        """Both power-flow branches, the high-voltage one first.

        Empty when the quadratic in the squared line current has no
        real root (no power-flow solution exists).
        """
        z_sq = self.r**2 + self.x**2
        k = self.r * self.p1 + self.x * self.q1
        b = 2.0 * k + self.v0_mag**2
        c = self.p1**2 + self.q1**2
        disc = b * b - 4.0 * z_sq * c
        if disc < 0.0:
            return []
        roots = sorted(
            ((b - math.sqrt(disc)) / (2.0 * z_sq), (b + math.sqrt(disc)) / (2.0 * z_sq))
        )
        out = []
        for ell in roots:
            v1_sq = self.v0_mag**2 + 2.0 * k - z_sq * ell
            out.append(
                TwoNodeSolution(
                    ell=ell,
                    v1_sq=v1_sq,
                    p0=self.r * ell - self.p1,
                    q0=self.x * ell - self.q1,
                )
            )
        return out

    def current_box(self, delta: float) -> tuple[float, float]:
        """Interval of squared currents keeping |V1| within delta of 1.

        Only meaningful for a unit-magnitude source, so that is asserted.
        """
        assert abs(self.v0_mag - 1.0) < 1e-12
        z_sq = self.r**2 + self.x**2
        k = self.r * self.p1 + self.x * self.q1
        lo = (1.0 + 2.0 * k - (1.0 + delta) ** 2) / z_sq
        hi = (1.0 + 2.0 * k - (1.0 - delta) ** 2) / z_sq
        return lo, hi


def _segment_high_voltage(v_src_sq: float, r: float, x: float,
                          p: float, q: float) -> tuple[float, float, float, float]:
    """High-voltage branch for one line serving consumption (p, q).

    Returns (ell, v_recv_sq, p_sent, q_sent) where the sent powers are
    measured at the source end of the line.
    """
    z_sq = r * r + x * x
    b = v_src_sq - 2.0 * (r * p + x * q)
    c = p * p + q * q
    disc = b * b - 4.0 * z_sq * c
    if disc < 0.0:
        raise NoFeasiblePoint("line segment has no power-flow solution")
    ell = (b - math.sqrt(disc)) / (2.0 * z_sq)
    v_recv_sq = b - z_sq * ell
    return ell, v_recv_sq, p + r * ell, q + x * ell


def three_node_voltages(
    r1: float, x1: float, r2: float, x2: float,
    s1: complex, s2: complex, v0_mag: float = 1.0,
) -> tuple[float, float]:
    """Squared voltage magnitudes on a two-line feeder 0-1-2.

    s1, s2 are net consumptions. Solved by eliminating the line
    currents: guess |V1|^2, propagate the far segment analytically, and
    close the loop on the near segment with a scalar root find.
    """
    from scipy.optimize import brentq

    def mismatch(u1: float) -> float:
        _, _, p12, q12 = _segment_high_voltage(u1, r2, x2, s2.real, s2.imag)
        p1 = s1.real + p12
        q1 = s1.imag + q12
        _, u1_new, _, _ = _segment_high_voltage(v0_mag**2, r1, x1, p1, q1)
        return u1_new - u1

    # Bracket the high-voltage fixed point by scanning downward from the
    # source magnitude.
    grid = np.linspace(4.0 * v0_mag**2, 0.05 * v0_mag**2, 400)
    vals = []
    for u in grid:
        try:
            vals.append(mismatch(u))
        except NoFeasiblePoint:
            vals.append(math.nan)
    root = None
    for i in range(len(grid) - 1):
        a, b = vals[i], vals[i + 1]
        if math.isnan(a) or math.isnan(b):
            continue
        if a == 0.0:
            root = grid[i]
            break
        if a * b < 0.0:
            root = brentq(mismatch, grid[i + 1], grid[i], xtol=1e-14)
            break
    if root is None:
        raise NoFeasiblePoint("no high-voltage solution found for the feeder")
    u1 = float(root)
    _, u2, _, _ = _segment_high_voltage(u1, r2, x2, s2.real, s2.imag)
    return u1, u2


@dataclass(frozen=True)
class AxisSpec:
    """One swept net-load coordinate: kind 'p' or 'q' at a load bus."""

    kind: str
    node: int          # 1-based load bus index
    lo: float
    hi: float
    resolution: int = 201

    def __post_init__(self):
        if self.kind not in ("p", "q"):
            raise ValueError("axis kind must be 'p' or 'q'")
        if self.resolution < 1:
            raise ValueError("resolution must be positive")

    @property
    def label(self) -> str:
        return f"{self.kind}{self.node}"


@dataclass(frozen=True)
class RegionSample:
    """Feasibility verdicts over a grid slice of net-load space.

    A point counts as feasible when the fixed-point iteration converges
    from a flat start and the solution stays within the stability band
    around the reference profile.
    """

    axes: tuple[AxisSpec, ...]
    points: np.ndarray     # (M, k) grid coordinates, one column per axis
    feasible: np.ndarray   # (M,) bool
    delta: float


def sample_region(
    matrices: BusMatrices,
    delta: float,
    axes: list[AxisSpec],
    hat: VoltageProfile | None = None,
    power_factor: float | None = None,
    tol: float = 1e-10,
    max_iter: int = 1000,
) -> RegionSample:
    """Classify a grid over up to three net-load coordinates.

    Coordinates not named by an axis are zero.  With a power factor,
    every swept active coordinate drives the same bus's reactive load
    as q = p tan(arccos(pf)), unless that bus has its own q axis.
    """
    n = matrices.n
    if not 1 <= len(axes) <= 3:
        raise ValueError("between one and three axes are supported")
    for ax in axes:
        if not 1 <= ax.node <= n:
            raise ValueError(f"axis bus {ax.node} outside 1..{n}")
    v_hat = hat.v if hat is not None else np.full(n, matrices.v0)

    grids = np.meshgrid(
        *[np.linspace(ax.lo, ax.hi, ax.resolution) for ax in axes], indexing="ij"
    )
    cols = [g.ravel() for g in grids]
    count = cols[0].size
    loads = np.zeros((count, n), dtype=np.complex128)
    q_nodes = {ax.node for ax in axes if ax.kind == "q"}
    for ax, col in zip(axes, cols):
        if ax.kind == "p":
            loads[:, ax.node - 1] += col
            if power_factor is not None and ax.node not in q_nodes:
                loads[:, ax.node - 1] += 1j * col * math.tan(
                    math.acos(power_factor)
                )
        else:
            loads[:, ax.node - 1] += 1j * col

    v, status, _ = fixed_point_batch(
        matrices.z, loads, matrices.v0, tol, max_iter, 1e-3
    )
    stable = np.all(
        np.abs(v - v_hat[None, :]) <= delta * np.abs(v_hat)[None, :] + 1e-12,
        axis=1,
    )
    return RegionSample(
        axes=tuple(axes),
        points=np.column_stack(cols),
        feasible=(status == STATUS_CONVERGED) & stable,
        delta=delta,
    )


def region_to_csv(sample: RegionSample) -> str:
    buf = io.StringIO()
    buf.write(",".join(ax.label for ax in sample.axes) + ",feasible\n")
    for row, f in zip(sample.points, sample.feasible):
        buf.write(",".join(f"{x:.10g}" for x in row) + f",{int(f)}\n")
    return buf.getvalue()


def _clip_halfspace(poly: list[np.ndarray], a: np.ndarray, b: float):
    """Sutherland-Hodgman clip of a convex polygon against a x <= b."""
    out: list[np.ndarray] = []
    m = len(poly)
    for i in range(m):
        p, q = poly[i], poly[(i + 1) % m]
        fp, fq = a @ p - b, a @ q - b
        if fp <= 1e-12:
            out.append(p)
        if (fp < -1e-12 < fq) or (fq < -1e-12 < fp):
            t = fp / (fp - fq)
            out.append(p + t * (q - p))
    return out


def restriction_slice_polygons(
    p, axes: tuple[AxisSpec, AxisSpec]
) -> list[np.ndarray]:
    """Intersection of a restriction with a 2-D net-load slice plane.

    The slice fixes all other net coordinates at zero and represents
    each swept net value by its complementary split, which is linear on
    each sign orthant, so the result is up to four convex polygons
    (possibly empty) returned as (k, 2) vertex arrays.
    """
    n = p.n
    polys = []
    for sign1 in (1.0, -1.0):
        for sign2 in (1.0, -1.0):
            # Orthant-restricted bounding box of the slice window.
            box = []
            empty = False
            for ax, sign in zip(axes, (sign1, sign2)):
                lo = max(ax.lo, 0.0) if sign > 0 else ax.lo
                hi = ax.hi if sign > 0 else min(ax.hi, 0.0)
                if hi <= lo:
                    empty = True
                    break
                box.append((lo, hi))
            if empty:
                continue
            (x0, x1), (y0, y1) = box
            poly = [np.array(v, dtype=float)
                    for v in ((x0, y0), (x1, y0), (x1, y1), (x0, y1))]
            # Per-orthant linear map from slice coordinates to the
            # stacked split vector: positive p -> consumption block,
            # negative p -> generation block, likewise for q.
            m_map = np.zeros((4 * n, 2))
            for k, (ax, sign) in enumerate(zip(axes, (sign1, sign2))):
                block = {"p": 0, "q": 1}[ax.kind] if sign > 0 else (
                    2 if ax.kind == "p" else 3
                )
                m_map[block * n + ax.node - 1, k] = sign
            rows = p.lhs @ m_map
            for a, b in zip(rows, p.rhs):
                poly = _clip_halfspace(poly, a, float(b))
                if len(poly) < 3:
                    poly = []
                    break
            if poly:
                polys.append(np.array(poly))
    return polys


@dataclass(frozen=True)
class BruteForceResult:
    point: SplitLoadVector
    value: float
    resolution: int


def _net_intervals(bounds: BoxBounds, n: int):
    """Net-load interval per stacked (p then q) coordinate."""
    lo = bounds.lower
    up = bounds.upper
    out = []
    for j in range(n):
        out.append((lo[j] - up[2 * n + j], up[j] - lo[2 * n + j]))        # net p
    for j in range(n):
        out.append((lo[n + j] - up[3 * n + j], up[n + j] - lo[3 * n + j]))  # net q
    return out


def brute_force_optimum(
    matrices: BusMatrices,
    obj: LinearObjective,
    bounds: BoxBounds,
    delta: float,
    grid_resolution: int = 101,
    hat: VoltageProfile | None = None,
    intervals_override: list[tuple[float, float]] | None = None,
    tol: float = 1e-10,
    max_iter: int = 1000,
) -> BruteForceResult:
    """Grid search over net loads with feasibility decided by simulation.

    Each net value is represented by its complementary consumption /
    generation split, so objectives must be functions of the net load
    (true for the net-active-load objective used throughout). At most
    three net coordinates may have nonzero width.
    """
    n = matrices.n
    intervals = intervals_override or _net_intervals(bounds, n)
    free = [i for i, (a, b) in enumerate(intervals) if b - a > 1e-15]
    if len(free) > 3:
        raise ValueError("brute force supports at most 3 free net coordinates")
    v_hat = hat.v if hat is not None else np.full(n, matrices.v0)

    axes = [np.linspace(*intervals[i], grid_resolution) for i in free]
    if axes:
        mesh = np.meshgrid(*axes, indexing="ij")
        grids = [m.ravel() for m in mesh]
        count = grids[0].size
    else:
        grids = []
        count = 1
    net = np.zeros((count, 2 * n))
    for i, (a, b) in enumerate(intervals):
        if i not in free:
            net[:, i] = a
    for k, i in enumerate(free):
        net[:, i] = grids[k]

    loads = net[:, :n] + 1j * net[:, n:]
    v, status, _ = fixed_point_batch(
        matrices.z, loads, matrices.v0, tol, max_iter, 1e-3
    )
    ok = (status == STATUS_CONVERGED) & np.all(
        np.abs(v - v_hat[None, :]) <= delta * np.abs(v_hat)[None, :] + 1e-12,
        axis=1,
    )
    if not ok.any():
        raise NoFeasiblePoint("no grid point converged within the stability band")

    # Objective in net coordinates via the complementary split.
    values = np.empty(count)
    w = obj.weights
    pc = np.maximum(net[:, :n], 0.0)
    pg = np.maximum(-net[:, :n], 0.0)
    qc = np.maximum(net[:, n:], 0.0)
    qg = np.maximum(-net[:, n:], 0.0)
    values = pc @ w[:n] + qc @ w[n : 2 * n] + pg @ w[2 * n : 3 * n] + qg @ w[3 * n :]
    values[~ok] = -np.inf if obj.direction == "maximize" else np.inf

    best = int(np.argmax(values) if obj.direction == "maximize" else np.argmin(values))
    s = SplitLoadVector(pc=pc[best], qc=qc[best], pg=pg[best], qg=qg[best])
    return BruteForceResult(point=s, value=float(values[best]),
                            resolution=grid_resolution)
