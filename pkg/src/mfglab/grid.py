"""Uniform periodic grid on the unit torus with finite-difference calculus.

The domain is [0,1)^d, d in {1, 2}, sampled at n points per axis with
spacing h = 1/n (so n*h = 1 exactly).  Scalar fields are flat arrays of
length N = n^d in row-major order; vector fields carry one column per
axis.

Operator conventions:

- gradient: second-order central differences with periodic wrap,
  (grad f)_k = (f_{k+1} - f_{k-1}) / (2h) per axis.
- divergence: the exact negative adjoint of gradient under the
  rectangle-rule inner product.  For central differences this is again
  the central difference applied per component, so summation by parts
  <div g, f> = -<g, grad f> holds to machine rounding, and
  integrate(divergence(g)) telescopes to zero exactly.
- laplacian: compact (2d+1)-point stencil,
  sum over axes of (f_{k+1} - 2 f_k + f_{k-1}) / h^2.  Symmetric.
  The composition divergence(gradient(f)) instead produces the wide
  stencil with effective spacing 2h; the compact stencil is canonical
  (it obeys the discrete maximum principle).
- integrate: rectangle rule h^d * sum, spectrally accurate for smooth
  periodic integrands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TorusGrid:
    """Periodic lattice {(i_1 h, ..., i_d h)} on the unit torus."""

    d: int
    n: int

    def __post_init__(self) -> None:
        if self.d not in (1, 2):
            raise ValueError(f"spatial dimension must be 1 or 2, got {self.d}")
        if self.n < 8:
            raise ValueError(f"need at least 8 points per axis, got {self.n}")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def npoints(self) -> int:
        return self.n**self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    def coords(self) -> np.ndarray:
        """Grid point coordinates, shape (N, d), row-major ordering."""
        axis = np.arange(self.n) * self.h
        if self.d == 1:
            return axis[:, None]
        x, y = np.meshgrid(axis, axis, indexing="ij")
        return np.stack([x.ravel(), y.ravel()], axis=1)

    def _box(self, values: np.ndarray) -> np.ndarray:
        box = np.asarray(values, dtype=float).reshape(self.shape)
        return box

    # -- differential operators --------------------------------------

    def gradient(self, values: np.ndarray) -> np.ndarray:
        """Central-difference gradient, (N,) -> (N, d)."""
        box = self._box(values)
        out = np.empty((self.npoints, self.d))
        for ax in range(self.d):
            diff = np.roll(box, -1, axis=ax) - np.roll(box, 1, axis=ax)
            out[:, ax] = diff.ravel() / (2.0 * self.h)
        return out

    def gradient4(self, values: np.ndarray) -> np.ndarray:
        """Fourth-order central gradient, (N,) -> (N, d).

        (grad f)_k = (-f_{k+2} + 8 f_{k+1} - 8 f_{k-1} + f_{k-2}) / (12h).
        Used by the diagnostics so that certificates probe the fields
        independently of the solver's second-order stencil algebra.
        """
        box = self._box(values)
        out = np.empty((self.npoints, self.d))
        for ax in range(self.d):
            diff = (
                -np.roll(box, -2, axis=ax)
                + 8.0 * np.roll(box, -1, axis=ax)
                - 8.0 * np.roll(box, 1, axis=ax)
                + np.roll(box, 2, axis=ax)
            )
            out[:, ax] = diff.ravel() / (12.0 * self.h)
        return out

    def divergence(self, values: np.ndarray) -> np.ndarray:
        """Negative adjoint of gradient, (N, d) -> (N,)."""
        vals = np.asarray(values, dtype=float)
        if vals.shape != (self.npoints, self.d):
            raise ValueError(f"vector field must have shape ({self.npoints}, {self.d})")
        out = np.zeros(self.npoints)
        for ax in range(self.d):
            box = vals[:, ax].reshape(self.shape)
            diff = np.roll(box, -1, axis=ax) - np.roll(box, 1, axis=ax)
            out += diff.ravel() / (2.0 * self.h)
        return out

    def laplacian(self, values: np.ndarray) -> np.ndarray:
        """Compact (2d+1)-point Laplacian, (N,) -> (N,)."""
        box = self._box(values)
        acc = -2.0 * self.d * box
        for ax in range(self.d):
            acc = acc + np.roll(box, -1, axis=ax) + np.roll(box, 1, axis=ax)
        return acc.ravel() / self.h**2

    # -- quadrature and norms ----------------------------------------

    def integrate(self, values: np.ndarray) -> float:
        """Rectangle rule h^d * sum over grid points."""
        return float(np.sum(np.asarray(values, dtype=float))) * self.h**self.d

    def lp_norm(self, values: np.ndarray, p: float) -> float:
        """L^p norm via the rectangle rule; p = inf returns max |f_k|."""
        vals = np.asarray(values, dtype=float)
        if math.isinf(p):
            return float(np.max(np.abs(vals)))
        if p < 1.0:
            raise ValueError(f"L^p norm requires p >= 1, got {p}")
        return self.integrate(np.abs(vals) ** p) ** (1.0 / p)


@dataclass
class ScalarField:
    """Real-valued samples on a TorusGrid (flat, row-major)."""

    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float).ravel()
        if self.values.size != self.grid.npoints:
            raise ValueError(
                f"expected {self.grid.npoints} values, got {self.values.size}"
            )

    @classmethod
    def from_function(cls, grid: TorusGrid, fn) -> "ScalarField":
        xs = grid.coords()
        return cls(grid, np.asarray([fn(x) for x in xs], dtype=float))


@dataclass
class VectorField:
    """R^d-valued samples on a TorusGrid, shape (N, d)."""

    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.npoints, self.grid.d):
            raise ValueError(
                f"expected shape ({self.grid.npoints}, {self.grid.d}), "
                f"got {self.values.shape}"
            )


# -- serialization ----------------------------------------------------

_HEADERS = {1: "x,value", 2: "x,y,value"}


def write_field_csv(field: ScalarField, path) -> None:
    """Write `x[,y],value` rows (row-major), 17 significant digits."""
    grid = field.grid
    xs = grid.coords()
    with open(path, "w") as fh:
        fh.write(_HEADERS[grid.d] + "\n")
        for point, value in zip(xs, field.values):
            cells = [f"{c:.17g}" for c in point] + [f"{value:.17g}"]
            fh.write(",".join(cells) + "\n")


def read_field_csv(path, grid: TorusGrid | None = None) -> ScalarField:
    """Read a field written by write_field_csv; infers the grid if absent."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header not in _HEADERS.values():
            raise ValueError(f"{path}: unrecognized header {header!r}")
        d = 1 if header == _HEADERS[1] else 2
        rows = np.loadtxt(fh, delimiter=",", ndmin=2)
    if rows.shape[1] != d + 1:
        raise ValueError(f"{path}: expected {d + 1} columns, got {rows.shape[1]}")
    if grid is None:
        n = round(rows.shape[0] ** (1.0 / d))
        grid = TorusGrid(d, n)
    if grid.d != d or rows.shape[0] != grid.npoints:
        raise ValueError(
            f"{path}: {rows.shape[0]} rows of dimension {d} do not match "
            f"a {grid.d}D grid with n={grid.n}"
        )
    if not np.allclose(rows[:, :d], grid.coords(), rtol=0.0, atol=1e-12):
        raise ValueError(f"{path}: coordinates are not a row-major unit-torus lattice")
    return ScalarField(grid, rows[:, d])
