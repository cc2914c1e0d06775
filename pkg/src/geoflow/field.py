"""Scalar samples on uniform grids, periodic unless stated otherwise.

Fields are 1D (n,) or 2D (n, n) with physical spacing h.  An optional
slope vector stores an affine part, u(x) = slope . x + v(x) with v
periodic, so tilted planes are representable on the torus (used by the
graph flow).  Derivative helpers come in two flavors: second-order
centered stencils (the production stepping kernels) and spectral
derivatives (functional evaluation on periodic grids, exact for
band-limited data).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import BlowUpError, ConfigError

MIN_POINTS = 16


@dataclass(frozen=True)
class ScalarField:
    """Immutable scalar field on a uniform grid.

    values : (n,) or (n, n) array, finite.
    h      : grid spacing (length units); period per axis is n * h.
    slope  : optional affine gradient (scalar in 1D or length-2 vector in 2D);
             the stored values are then the periodic part only.
    periodic : rectangle fields (Dirichlet problems) set this False.
    """

    values: np.ndarray
    h: float
    slope: tuple = ()
    periodic: bool = True

    def __post_init__(self):
        vals = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if vals.ndim not in (1, 2):
            raise ConfigError("field values must be 1D or 2D", field="values")
        if vals.ndim == 2 and vals.shape[0] != vals.shape[1]:
            raise ConfigError("2D fields must be square", field="values")
        if min(vals.shape) < MIN_POINTS:
            raise ConfigError(f"grids need at least {MIN_POINTS} points per axis", field="values")
        if not np.all(np.isfinite(vals)):
            raise BlowUpError("field contains non-finite values")
        if self.h <= 0:
            raise ConfigError("grid spacing must be positive", field="h")
        slope = tuple(float(s) for s in np.atleast_1d(np.asarray(self.slope, dtype=float))) if len(np.atleast_1d(self.slope)) else ()
        if slope and len(slope) != vals.ndim:
            raise ConfigError("slope dimension must match the grid dimension", field="slope")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "slope", slope)
        object.__setattr__(self, "h", float(self.h))

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def period(self) -> float:
        return self.n * self.h

    def with_values(self, values: np.ndarray) -> "ScalarField":
        return replace(self, values=values)

    def cell_volume(self) -> float:
        return self.h**self.ndim

    def integral(self) -> float:
        """Grid quadrature of the periodic part (trapezoid = plain sum on the torus)."""
        return float(self.values.sum()) * self.cell_volume()


def grid_coordinates(field: ScalarField):
    """Axis coordinate arrays (0, h, 2h, ...)."""
    x = np.arange(field.n) * field.h
    if field.ndim == 1:
        return (x,)
    return (x, x)


def laplacian(field: ScalarField) -> np.ndarray:
    """Standard 3/5-point periodic stencil Laplacian (slope part drops out)."""
    u = field.values
    h2 = field.h**2
    if field.ndim == 1:
        return (np.roll(u, -1) + np.roll(u, 1) - 2.0 * u) / h2
    return (
        np.roll(u, -1, 0) + np.roll(u, 1, 0) + np.roll(u, -1, 1) + np.roll(u, 1, 1) - 4.0 * u
    ) / h2


def gradient_centered(field: ScalarField) -> list:
    """Centered first differences per axis, including the affine slope."""
    u = field.values
    two_h = 2.0 * field.h
    grads = []
    for axis in range(field.ndim):
        g = (np.roll(u, -1, axis) - np.roll(u, 1, axis)) / two_h
        if field.slope:
            g = g + field.slope[axis]
        grads.append(g)
    return grads


def gradient_spectral(field: ScalarField) -> list:
    """FFT derivatives per axis (exact for band-limited periodic data)."""
    u = field.values
    k = 2.0 * np.pi * np.fft.fftfreq(field.n, field.h)
    grads = []
    if field.ndim == 1:
        g = np.fft.ifft(1j * k * np.fft.fft(u)).real
        if field.slope:
            g = g + field.slope[0]
        return [g]
    uhat = np.fft.fft2(u)
    for axis in range(2):
        shape = (-1, 1) if axis == 0 else (1, -1)
        g = np.fft.ifft2(1j * k.reshape(shape) * uhat).real
        if field.slope:
            g = g + field.slope[axis]
        grads.append(g)
    return grads


def laplacian_spectral(field: ScalarField) -> np.ndarray:
    u = field.values
    k = 2.0 * np.pi * np.fft.fftfreq(field.n, field.h)
    if field.ndim == 1:
        return np.fft.ifft(-(k**2) * np.fft.fft(u)).real
    k2 = k.reshape(-1, 1) ** 2 + k.reshape(1, -1) ** 2
    return np.fft.ifft2(-k2 * np.fft.fft2(u)).real


def second_derivatives(field: ScalarField) -> dict:
    """Centered second-derivative stencils; cross term uses the 4-corner stencil."""
    u = field.values
    h2 = field.h**2
    if field.ndim == 1:
        return {"xx": (np.roll(u, -1) - 2.0 * u + np.roll(u, 1)) / h2}
    out = {
        "xx": (np.roll(u, -1, 0) - 2.0 * u + np.roll(u, 1, 0)) / h2,
        "yy": (np.roll(u, -1, 1) - 2.0 * u + np.roll(u, 1, 1)) / h2,
    }
    out["xy"] = (
        np.roll(np.roll(u, -1, 0), -1, 1)
        - np.roll(np.roll(u, -1, 0), 1, 1)
        - np.roll(np.roll(u, 1, 0), -1, 1)
        + np.roll(np.roll(u, 1, 0), 1, 1)
    ) / (4.0 * h2)
    return out


def save_csv(field: ScalarField, path) -> None:
    """1D fields as ``x,u`` rows; 2D as a row-major matrix behind a shape header."""
    if field.ndim == 1:
        x = np.arange(field.n) * field.h
        np.savetxt(path, np.stack([x, field.values], axis=1),
                   delimiter=",", header="x,u", comments="", fmt="%.17g")
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# n={field.n} h={field.h!r}\n")
            np.savetxt(fh, field.values, delimiter=",", fmt="%.17g")


def load_csv(path) -> ScalarField:
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().strip()
        if first.startswith("#"):
            parts = dict(tok.split("=") for tok in first[1:].split())
            values = np.loadtxt(fh, delimiter=",")
            return ScalarField(values, h=float(parts["h"]))
        if first != "x,u":
            raise ConfigError(f"unrecognized field CSV header {first!r}", field="header")
        data = np.loadtxt(fh, delimiter=",")
    x, u = data[:, 0], data[:, 1]
    h = float(x[1] - x[0])
    return ScalarField(u, h=h)
