"""Minimal surface equation on a rectangle: damped Newton with Dirichlet data.

The discretization is the exact gradient of a discrete area functional
built from cell-midpoint gradients, so the computed solution is a true
critical point: the discrete first variation vanishes there to solver
tolerance, and convexity of the area integrand makes it the global
minimizer among fields with the same boundary trace.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigError, DomainError, NonConvergenceError
from .field import ScalarField

MIN_GRID = 16
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class GraphProblem:
    """Dirichlet problem for the graph area functional on a square grid.

    boundary : (n, n) array whose edge ring holds the trace values
               (interior entries are ignored).
    h        : uniform node spacing.
    """

    boundary: np.ndarray
    h: float

    def __post_init__(self):
        b = np.ascontiguousarray(np.asarray(self.boundary, dtype=float))
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise ConfigError("boundary trace must be a square (n, n) array", field="boundary")
        if b.shape[0] < MIN_GRID:
            raise ConfigError(f"grid must be at least {MIN_GRID}x{MIN_GRID}", field="boundary")
        ring = np.concatenate([b[0, :], b[-1, :], b[:, 0], b[:, -1]])
        if not np.all(np.isfinite(ring)):
            raise ConfigError("boundary values must be finite", field="boundary")
        if self.h <= 0:
            raise ConfigError("grid spacing must be positive", field="h")
        b.flags.writeable = False
        object.__setattr__(self, "boundary", b)
        object.__setattr__(self, "h", float(self.h))

    @property
    def n(self) -> int:
        return self.boundary.shape[0]

    @classmethod
    def from_function(cls, fn, n: int, extent: float, origin: float = 0.0) -> "GraphProblem":
        """Sample fn(x, y) on the boundary ring of an n x n grid over a square."""
        h = extent / (n - 1)
        xs = origin + h * np.arange(n)
        vals = np.zeros((n, n))
        vals[0, :] = [fn(xs[0], y) for y in xs]
        vals[-1, :] = [fn(xs[-1], y) for y in xs]
        vals[:, 0] = [fn(x, xs[0]) for x in xs]
        vals[:, -1] = [fn(x, xs[-1]) for x in xs]
        return cls(vals, h)


def _cell_gradients(values: np.ndarray, h: float):
    """Cell-midpoint gradients from the four corners of each cell."""
    px = (values[1:, :-1] - values[:-1, :-1] + values[1:, 1:] - values[:-1, 1:]) / (2.0 * h)
    py = (values[:-1, 1:] - values[:-1, :-1] + values[1:, 1:] - values[1:, :-1]) / (2.0 * h)
    return px, py


def area(field: ScalarField | np.ndarray, h: float | None = None) -> float:
    """Discrete graph area: cell quadrature of sqrt(1 + |grad f|^2)."""
    if isinstance(field, ScalarField):
        values, h = field.values, field.h
    else:
        values = np.asarray(field, dtype=float)
        if h is None:
            raise DomainError("spacing h is required for raw arrays")
    px, py = _cell_gradients(values, h)
    return float(np.sum(np.sqrt(1.0 + px**2 + py**2))) * h * h


def _gradient(values: np.ndarray, h: float) -> np.ndarray:
    """Nodewise gradient of the discrete area (all nodes; boundary rows unused)."""
    px, py = _cell_gradients(values, h)
    q = np.sqrt(1.0 + px**2 + py**2)
    wx = px / q
    wy = py / q
    g = np.zeros_like(values)
    half_h = 0.5 * h  # d(area)/d(corner) carries h^2 * (1/(2h)) = h/2
    # corner (i, j) of cell contributes -wx - wy; see the cell gradient stencil.
    g[:-1, :-1] += (-wx - wy) * half_h
    g[1:, :-1] += (wx - wy) * half_h
    g[:-1, 1:] += (-wx + wy) * half_h
    g[1:, 1:] += (wx + wy) * half_h
    return g


def residual(values: np.ndarray, h: float) -> np.ndarray:
    """Interior residual of the divergence-form equation (gradient / cell volume)."""
    return _gradient(values, h)[1:-1, 1:-1] / (h * h)


def _hessian(values: np.ndarray, h: float) -> sp.csr_matrix:
    n = values.shape[0]
    px, py = _cell_gradients(values, h)
    q = np.sqrt(1.0 + px**2 + py**2)
    ncells = (n - 1) * (n - 1)
    inv2h = 1.0 / (2.0 * h)
    gx = np.array([-1.0, 1.0, -1.0, 1.0]) * inv2h  # corners 00,10,01,11
    gy = np.array([-1.0, -1.0, 1.0, 1.0]) * inv2h
    base = np.outer(gx, gx) + np.outer(gy, gy)  # (4,4)
    pxf = px.ravel()
    pyf = py.ravel()
    qf = q.ravel()
    v = pxf[:, None] * gx[None, :] + pyf[:, None] * gy[None, :]  # (ncells, 4)
    local = base[None, :, :] / qf[:, None, None] - (
        v[:, :, None] * v[:, None, :]
    ) / (qf**3)[:, None, None]
    local = local * (h * h)

    ii, jj = np.meshgrid(np.arange(n - 1), np.arange(n - 1), indexing="ij")
    c00 = (ii * n + jj).ravel()
    c10 = ((ii + 1) * n + jj).ravel()
    c01 = (ii * n + jj + 1).ravel()
    c11 = ((ii + 1) * n + jj + 1).ravel()
    corners = np.stack([c00, c10, c01, c11], axis=1)  # (ncells, 4)
    rows = np.repeat(corners, 4, axis=1).ravel()
    cols = np.tile(corners, (1, 4)).ravel()
    data = local.reshape(ncells, 16).ravel()
    return sp.csr_matrix((data, (rows, cols)), shape=(n * n, n * n))


def harmonic_extension(problem: GraphProblem) -> np.ndarray:
    """Solve the 5-point Laplace equation with the problem's boundary data."""
    n = problem.n
    values = problem.boundary.copy()
    interior = np.zeros((n, n), dtype=bool)
    interior[1:-1, 1:-1] = True
    idx = -np.ones(n * n, dtype=int)
    flat_int = np.flatnonzero(interior.ravel())
    idx[flat_int] = np.arange(flat_int.size)
    rows, cols, data = [], [], []
    rhs = np.zeros(flat_int.size)
    for k, flat in enumerate(flat_int):
        i, j = divmod(flat, n)
        rows.append(k)
        cols.append(k)
        data.append(4.0)
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            ni, nj = i + di, j + dj
            nflat = ni * n + nj
            if interior[ni, nj]:
                rows.append(k)
                cols.append(idx[nflat])
                data.append(-1.0)
            else:
                rhs[k] += values[ni, nj]
    lap = sp.csr_matrix((data, (rows, cols)), shape=(flat_int.size, flat_int.size))
    sol = spla.spsolve(lap, rhs)
    out = values.ravel().copy()
    out[flat_int] = sol
    return out.reshape(n, n)


def solve_mse(problem: GraphProblem, tol: float = RESIDUAL_TOL,
              max_iter: int = 60) -> ScalarField:
    """Damped Newton solve of the minimal surface equation.

    Starts from the harmonic extension of the boundary data; backtracks
    on the residual norm until the sup-norm of the divergence-form
    residual is below tol.  Raises NonConvergenceError with the residual
    history if the budget runs out.
    """
    n = problem.n
    h = problem.h
    values = harmonic_extension(problem)
    interior_mask = np.zeros((n, n), dtype=bool)
    interior_mask[1:-1, 1:-1] = True
    flat_int = np.flatnonzero(interior_mask.ravel())

    history = []
    for _ in range(max_iter):
        res = residual(values, h)
        res_inf = float(np.abs(res).max()) if res.size else 0.0
        history.append(res_inf)
        if res_inf <= tol:
            return ScalarField(values, h=h, periodic=False)
        hess = _hessian(values, h)[flat_int][:, flat_int]
        grad_int = _gradient(values, h).ravel()[flat_int]
        delta = spla.spsolve(hess.tocsc(), -grad_int)
        res_norm = float(np.linalg.norm(res))
        step = 1.0
        accepted = False
        for _ in range(40):
            cand = values.ravel().copy()
            cand[flat_int] += step * delta
            cand = cand.reshape(n, n)
            cand_norm = float(np.linalg.norm(residual(cand, h)))
            if cand_norm <= (1.0 - 1e-4 * step) * res_norm:
                values = cand
                accepted = True
                break
            step *= 0.5
        if not accepted:
            raise NonConvergenceError("Newton line search stalled", history=history,
                                      best=ScalarField(values, h=h, periodic=False))
    raise NonConvergenceError("Newton budget exhausted", history=history,
                              best=ScalarField(values, h=h, periodic=False))


def first_variation(field: ScalarField, eta: np.ndarray) -> float:
    """Directional derivative of the discrete area along an interior perturbation.

    eta must vanish on the boundary ring; at a solver solution this
    pairing is zero to solver tolerance for every admissible eta.
    """
    eta = np.asarray(eta, dtype=float)
    if eta.shape != field.values.shape:
        raise DomainError("perturbation must match the field's grid")
    ring = np.concatenate([eta[0, :], eta[-1, :], eta[:, 0], eta[:, -1]])
    if np.any(ring != 0.0):
        raise DomainError("perturbation must vanish on the boundary")
    h = field.h
    px, py = _cell_gradients(field.values, h)
    ex, ey = _cell_gradients(eta, h)
    q = np.sqrt(1.0 + px**2 + py**2)
    return float(np.sum((px * ex + py * ey) / q)) * h * h


def save_problem(problem: GraphProblem, path) -> None:
    """Boundary-trace sidecar CSV: i,j,value rows for the boundary ring."""
    n = problem.n
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# n={n} h={problem.h!r}\n")
        fh.write("i,j,value\n")
        for i in range(n):
            for j in range(n):
                if i in (0, n - 1) or j in (0, n - 1):
                    fh.write(f"{i},{j},{problem.boundary[i, j]!r}\n")


def load_problem(path) -> GraphProblem:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("#"):
            raise ConfigError("missing problem header", field="header")
        parts = dict(tok.split("=") for tok in header[1:].split())
        n = int(parts["n"])
        h = float(parts["h"])
        fh.readline()  # column names
        boundary = np.zeros((n, n))
        for line in fh:
            if not line.strip():
                continue
            i, j, val = line.strip().split(",")
            boundary[int(i), int(j)] = float(val)
    return GraphProblem(boundary, h)
