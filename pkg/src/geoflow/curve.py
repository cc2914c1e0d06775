"""Discrete differential geometry of closed plane curves.

A curve is a periodic polygon: node i connects to node i+1 mod N.  All
derivative stencils are centered second-order differences on the cyclic
node index.  The normal convention is N = T rotated by -pi/2, with the
curvature sign fixed so a counterclockwise unit circle has kappa = +1;
the inward flow velocity is then -kappa * N.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometryError

# Edges shorter than this fraction of total length are rejected rather
# than silently repaired: flows legitimately collapse curves, and the
# caller must detect extinction explicitly.
DEGENERATE_EDGE_FRACTION = 1e-14

MIN_NODES = 8


@dataclass(frozen=True)
class ClosedCurve:
    """Immutable periodic polygon in the plane.

    Parameters
    ----------
    nodes : (N, 2) float array
        Node positions, interpreted cyclically.  N >= 8 and every edge
        must have positive length.
    """

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.ascontiguousarray(np.asarray(self.nodes, dtype=float))
        if nodes.ndim != 2 or nodes.shape[1] != 2:
            raise DegenerateGeometryError("curve nodes must form an (N, 2) array")
        if nodes.shape[0] < MIN_NODES:
            raise DegenerateGeometryError(
                f"curve needs at least {MIN_NODES} nodes, got {nodes.shape[0]}"
            )
        if not np.all(np.isfinite(nodes)):
            raise DegenerateGeometryError("curve nodes must be finite")
        edges = np.linalg.norm(np.roll(nodes, -1, axis=0) - nodes, axis=1)
        total = float(edges.sum())
        if total <= 0.0 or np.any(edges <= DEGENERATE_EDGE_FRACTION * total):
            raise DegenerateGeometryError("curve has a degenerate (near zero-length) edge")
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)

    @property
    def n(self) -> int:
        return self.nodes.shape[0]

    def edge_lengths(self) -> np.ndarray:
        """Length of edge i (node i to node i+1 mod N)."""
        return np.linalg.norm(np.roll(self.nodes, -1, axis=0) - self.nodes, axis=1)


@dataclass(frozen=True)
class CurveGeometry:
    """Per-node geometric data of a closed curve.

    tangent and normal are unit vectors, curvature is signed (1/length),
    ds holds the half-edge arc-length weights and length their sum.
    """

    tangent: np.ndarray
    normal: np.ndarray
    curvature: np.ndarray
    ds: np.ndarray
    length: float

    def __post_init__(self):
        for name in ("tangent", "normal", "curvature", "ds"):
            arr = getattr(self, name)
            arr.flags.writeable = False


def circle(radius: float = 1.0, n: int = 256, center=(0.0, 0.0)) -> ClosedCurve:
    """Counterclockwise circle sampled uniformly in angle."""
    t = 2.0 * np.pi * np.arange(n) / n
    cx, cy = center
    return ClosedCurve(np.stack([cx + radius * np.cos(t), cy + radius * np.sin(t)], axis=1))


def ellipse(a: float = 2.0, b: float = 1.0, n: int = 256, center=(0.0, 0.0)) -> ClosedCurve:
    """Counterclockwise ellipse sampled uniformly in parameter."""
    t = 2.0 * np.pi * np.arange(n) / n
    cx, cy = center
    return ClosedCurve(np.stack([cx + a * np.cos(t), cy + b * np.sin(t)], axis=1))


def geometry(curve: ClosedCurve) -> CurveGeometry:
    """Tangent, normal, signed curvature and arc weights by centered differences.

    kappa = (x'y'' - y'x'') / |X'|^3 on the cyclic parameter grid, which is
    +1 everywhere on a counterclockwise unit circle.  The normal is the
    tangent rotated by -pi/2, so -kappa*N points inward on convex
    counterclockwise curves.
    """
    x = curve.nodes
    fwd = np.roll(x, -1, axis=0)
    bwd = np.roll(x, 1, axis=0)
    d1 = 0.5 * (fwd - bwd)
    d2 = fwd - 2.0 * x + bwd
    speed = np.linalg.norm(d1, axis=1)
    if np.any(speed <= 0.0):
        raise DegenerateGeometryError("vanishing parametric speed (coincident neighbors)")
    tangent = d1 / speed[:, None]
    normal = np.stack([tangent[:, 1], -tangent[:, 0]], axis=1)
    curvature = (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / speed**3
    edges = curve.edge_lengths()
    ds = 0.5 * (edges + np.roll(edges, 1))
    return CurveGeometry(
        tangent=tangent,
        normal=normal,
        curvature=curvature,
        ds=ds,
        length=float(edges.sum()),
    )


def length(curve: ClosedCurve) -> float:
    """Total polygon length (sum of edge lengths)."""
    return float(curve.edge_lengths().sum())


def total_curvature(curve: ClosedCurve) -> float:
    """Integral of signed curvature; 2*pi times the turning number."""
    geo = geometry(curve)
    return float(np.sum(geo.curvature * geo.ds))


def enclosed_area(curve: ClosedCurve) -> float:
    """Signed shoelace area, positive for counterclockwise orientation."""
    x = curve.nodes
    fwd = np.roll(x, -1, axis=0)
    return 0.5 * float(np.sum(x[:, 0] * fwd[:, 1] - fwd[:, 0] * x[:, 1]))


def turning_number(curve: ClosedCurve) -> float:
    """Winding of the edge direction, from summed (unwrapped) exterior angles."""
    e = np.roll(curve.nodes, -1, axis=0) - curve.nodes
    ang = np.arctan2(e[:, 1], e[:, 0])
    dang = np.diff(ang, append=ang[:1])
    dang = (dang + np.pi) % (2.0 * np.pi) - np.pi
    return float(dang.sum() / (2.0 * np.pi))


def _resample_once(nodes: np.ndarray, n: int) -> np.ndarray:
    """Place n nodes at equal cumulative arc length along the polygon."""
    edges = np.linalg.norm(np.roll(nodes, -1, axis=0) - nodes, axis=1)
    cum = np.concatenate([[0.0], np.cumsum(edges)])
    total = cum[-1]
    targets = total * np.arange(n) / n
    seg = np.searchsorted(cum, targets, side="right") - 1
    seg = np.clip(seg, 0, len(edges) - 1)
    frac = (targets - cum[seg]) / edges[seg]
    ring = np.vstack([nodes, nodes[:1]])
    return ring[seg] + frac[:, None] * (ring[seg + 1] - ring[seg])


def resample_arclength(curve: ClosedCurve, n: int, tol: float = 1e-10, max_passes: int = 5) -> ClosedCurve:
    """Redistribute n nodes to equal edge lengths along the curve.

    Each pass inverts the cumulative arc length of the current polygon with
    linear interpolation; passes repeat until the relative edge-length
    spread drops below tol or the pass budget is exhausted.
    """
    if n < MIN_NODES:
        raise DegenerateGeometryError(f"resample target must be at least {MIN_NODES} nodes")
    nodes = curve.nodes
    for _ in range(max_passes):
        nodes = _resample_once(nodes, n)
        edges = np.linalg.norm(np.roll(nodes, -1, axis=0) - nodes, axis=1)
        mean = edges.mean()
        if mean <= 0.0:
            raise DegenerateGeometryError("resampling collapsed the curve")
        if np.max(np.abs(edges - mean)) <= tol * mean:
            break
    return ClosedCurve(nodes)


def save_csv(curve: ClosedCurve, path) -> None:
    """Write the curve as CSV with header ``x,y``, one node per row."""
    np.savetxt(path, curve.nodes, delimiter=",", header="x,y", comments="", fmt="%.17g")


def load_csv(path) -> ClosedCurve:
    """Read a curve written by :func:`save_csv`."""
    nodes = np.loadtxt(path, delimiter=",", skiprows=1)
    return ClosedCurve(np.atleast_2d(nodes))
