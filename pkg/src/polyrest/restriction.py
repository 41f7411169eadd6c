"""Polyhedral inner approximation of the power-flow feasibility region.

Every split load vector satisfying ``(A + delta B) s <= rhs`` together
with nonnegativity admits a power-flow solution whose voltages stay
within a relative distance ``delta`` of the center voltages.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DeltaOutOfRange, InfeasibleCenter
from .network import BusMatrices
from .powerflow import (
    RESIDUAL_TOL,
    OperatingPoint,
    SplitLoadVector,
    VoltageProfile,
    nominal_operating_point,
    pf_residual,
)

MEMBERSHIP_TOL = 1e-9  # LP optima sit on facets; exact zero slack is unattainable

# Sign patterns of the 4x4 block grid: block (i, j) of A is
# _SIGN_R[i][j] * R + _SIGN_X[i][j] * X.
_SIGN_R = np.array(
    [[-1, 1, 1, -1], [1, 1, -1, -1], [-1, -1, 1, 1], [1, -1, -1, 1]], dtype=float
)
_SIGN_X = np.array(
    [[-1, -1, 1, 1], [-1, 1, 1, -1], [1, -1, -1, 1], [1, 1, -1, -1]], dtype=float
)


@dataclass(frozen=True)
class RestrictionMatrices:
    a: np.ndarray  # 4N x 4N signed block pattern over R and X
    b: np.ndarray  # 4N x 4N, all-ones 4x4 Kronecker with R + X
    c: np.ndarray  # 4N x 4N, all-ones 4x4 Kronecker with |Z|


@dataclass(frozen=True)
class PolyhedralRestriction:
    """Constraint system ``lhs s <= rhs`` (plus implicit ``s >= 0``)."""

    lhs: np.ndarray
    rhs: np.ndarray
    delta: float
    center: OperatingPoint

    @property
    def n(self) -> int:
        return self.lhs.shape[0] // 4


def build_matrices(matrices: BusMatrices) -> RestrictionMatrices:
    """Assemble the three 4N x 4N coefficient matrices."""
    r, x = matrices.r, matrices.x
    a = np.kron(_SIGN_R, r) + np.kron(_SIGN_X, x)
    b = np.kron(np.ones((4, 4)), r + x)
    c = np.kron(np.ones((4, 4)), np.abs(matrices.z))
    return RestrictionMatrices(a=a, b=b, c=c)


def _assemble(matrices: BusMatrices, center: OperatingPoint, delta: float):
    rm = build_matrices(matrices)
    v_min = float(np.abs(center.v_hat.v).min()) if matrices.n else abs(matrices.v0)
    s_hat = center.s_hat.stacked()
    lhs = rm.a + delta * rm.b
    rhs = delta * (1.0 - delta) ** 2 * v_min**3 * np.ones(4 * matrices.n)
    rhs += (rm.a - delta * (rm.b + (1.0 - delta) * rm.c)) @ s_hat
    return PolyhedralRestriction(lhs=lhs, rhs=rhs, delta=delta, center=center)


def build_restriction(
    matrices: BusMatrices, center: OperatingPoint, delta: float
) -> PolyhedralRestriction:
    """Restriction around an arbitrary solved operating point.

    The center pair must satisfy the power-flow equations; a stale
    center would invalidate the feasibility guarantee.
    """
    if not 0.0 < delta < 1.0:
        raise DeltaOutOfRange(f"delta must lie in (0, 1), got {delta}")
    residual = pf_residual(matrices, center.v_hat, center.s_hat)
    if residual > RESIDUAL_TOL:
        raise InfeasibleCenter(
            f"center power-flow residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e}"
        )
    if matrices.n and np.abs(center.v_hat.v).min() <= 0.0:
        raise InfeasibleCenter("center has a zero voltage magnitude")
    return _assemble(matrices, center, delta)


def build_restriction_nominal(
    matrices: BusMatrices, v0: complex, delta: float
) -> PolyhedralRestriction:
    """Restriction around the zero-load point (flat profile at v0)."""
    if not 0.0 < delta < 1.0:
        raise DeltaOutOfRange(f"delta must lie in (0, 1), got {delta}")
    if complex(v0) != complex(matrices.v0):
        raise ValueError("v0 does not match the network slack voltage")
    return _assemble(matrices, nominal_operating_point(matrices), delta)


def contains(
    p: PolyhedralRestriction, s: SplitLoadVector, tol: float = MEMBERSHIP_TOL
) -> bool:
    s_tilde = s.stacked()
    if s_tilde.shape[0] != p.lhs.shape[0]:
        raise ValueError("load dimension does not match the restriction")
    if np.any(s_tilde < 0):
        return False
    return bool(np.all(p.lhs @ s_tilde - p.rhs <= tol))


def normalize_split(s: SplitLoadVector) -> SplitLoadVector:
    """Reduce each bus to a complementary consumption/generation split.

    Net load is preserved exactly; membership in any restriction is
    preserved because the A columns cancel the change and B only adds
    nonnegative terms.
    """
    net_p = s.pc - s.pg
    net_q = s.qc - s.qg
    return SplitLoadVector(
        pc=np.maximum(net_p, 0.0),
        qc=np.maximum(net_q, 0.0),
        pg=np.maximum(-net_p, 0.0),
        qg=np.maximum(-net_q, 0.0),
    )


def sample_points(
    p: PolyhedralRestriction, count: int, rng: np.random.Generator
) -> list[SplitLoadVector]:
    """Random points of the restriction via rays from an interior anchor.

    The anchor is the center load (always feasible for the nominal
    restriction; also feasible for moderately loaded centers).  Rays in
    random nonnegative-orthant-respecting directions are clipped against
    the facets and the nonnegativity bounds.
    """
    dim = p.lhs.shape[0]
    anchor = p.center.s_hat.stacked()
    slack = p.rhs - p.lhs @ anchor
    if np.any(slack < -MEMBERSHIP_TOL):
        raise ValueError("restriction center is not a feasible anchor")
    points = []
    while len(points) < count:
        direction = rng.standard_normal(dim)
        norm = np.linalg.norm(direction)
        if norm == 0.0:
            continue
        direction /= norm
        row_rates = p.lhs @ direction
        t_max = np.inf
        positive = row_rates > 1e-14
        if positive.any():
            t_max = min(t_max, (slack[positive] / row_rates[positive]).min())
        negative_dir = direction < -1e-14
        if negative_dir.any():
            t_max = min(
                t_max, (anchor[negative_dir] / -direction[negative_dir]).min()
            )
        if not np.isfinite(t_max) or t_max <= 0.0:
            continue
        t = rng.uniform(0.0, 0.999 * t_max)
        points.append(SplitLoadVector.from_stacked(anchor + t * direction))
    return points


def to_json(p: PolyhedralRestriction) -> str:
    """Serialize the constraint system for external LP tools."""
    return json.dumps(
        {
            "lhs": p.lhs.tolist(),
            "rhs": p.rhs.tolist(),
            "delta": p.delta,
            "center": {
                "v0": {"re": p.center.v_hat.v0.real, "im": p.center.v_hat.v0.imag},
                "v": [{"re": z.real, "im": z.imag} for z in p.center.v_hat.v],
                "s": {
                    "pc": p.center.s_hat.pc.tolist(),
                    "qc": p.center.s_hat.qc.tolist(),
                    "pg": p.center.s_hat.pg.tolist(),
                    "qg": p.center.s_hat.qg.tolist(),
                },
            },
        },
        indent=2,
    )


def from_json(text: str) -> PolyhedralRestriction:
    doc = json.loads(text)
    center_doc = doc["center"]
    v0 = complex(center_doc["v0"]["re"], center_doc["v0"]["im"])
    v = np.array(
        [complex(entry["re"], entry["im"]) for entry in center_doc["v"]],
        dtype=np.complex128,
    )
    s = SplitLoadVector(
        pc=np.asarray(center_doc["s"]["pc"], dtype=float),
        qc=np.asarray(center_doc["s"]["qc"], dtype=float),
        pg=np.asarray(center_doc["s"]["pg"], dtype=float),
        qg=np.asarray(center_doc["s"]["qg"], dtype=float),
    )
    return PolyhedralRestriction(
        lhs=np.asarray(doc["lhs"], dtype=float),
        rhs=np.asarray(doc["rhs"], dtype=float),
        delta=float(doc["delta"]),
        center=OperatingPoint(v_hat=VoltageProfile(v, v0), s_hat=s),
    )
