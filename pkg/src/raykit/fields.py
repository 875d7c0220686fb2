"""Space-time grids, sampled fields and the basic differential operators.

Everything downstream works on uniform tensor grids over
[t_min, t_max] x prod_j [x_min, x_max].  Axis 0 is always time, axes
1..n_space are space.  Fields are plain numpy arrays shaped like the grid;
the thin dataclasses below only bundle an array with its grid and carry
the declared spatial support radius where one exists.

All derivative operators are second-order central differences in the
interior, degraded to one-sided second-order stencils on the grid edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

__all__ = [
    "GridError",
    "GaugeBoundaryError",
    "SpaceTimeGrid",
    "ScalarField",
    "VectorPotential",
    "SupportReport",
    "partial_derivative",
    "gradient",
    "gauge_transform",
    "divergence",
    "check_support",
]


class GridError(ValueError):
    """Shape/spacing mismatch between fields or invalid grid parameters."""


class GaugeBoundaryError(ValueError):
    """Gauge phase does not vanish on the lateral boundary."""


@dataclass(frozen=True)
class SpaceTimeGrid:
    """Uniform rectangular grid; axis 0 is time, axes 1.. are space.

    Parameters
    ----------
    shape : per-axis sample counts, time axis first.
    origin : per-axis minimum coordinate.
    spacing : per-axis step, strictly positive.
    """

    shape: tuple[int, ...]
    origin: tuple[float, ...]
    spacing: tuple[float, ...]

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        origin = tuple(float(v) for v in self.origin)
        spacing = tuple(float(v) for v in self.spacing)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "spacing", spacing)
        ndim = len(shape)
        if not (len(origin) == len(spacing) == ndim):
            raise GridError("shape, origin and spacing must have equal length")
        if not 1 <= ndim - 1 <= 3:
            raise GridError(f"n_space must be 1, 2 or 3, got {ndim - 1}")
        if any(n < 4 for n in shape):
            raise GridError(f"all axes need at least 4 samples, got {shape}")
        if any(h <= 0 for h in spacing):
            raise GridError(f"spacings must be positive, got {spacing}")

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def n_space(self) -> int:
        return len(self.shape) - 1

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.shape))

    def axis_coords(self, axis: int) -> np.ndarray:
        """Node coordinates along one axis."""
        return self.origin[axis] + self.spacing[axis] * np.arange(self.shape[axis])

    def axes(self) -> list[np.ndarray]:
        return [self.axis_coords(a) for a in range(self.ndim)]

    def mesh(self, sparse: bool = True) -> list[np.ndarray]:
        """Meshgrid of node coordinates (ij indexing, sparse by default)."""
        return list(np.meshgrid(*self.axes(), indexing="ij", sparse=sparse))

    def spatial_radius(self) -> np.ndarray:
        """|x| at every node, broadcast over the time axis."""
        r2 = 0.0
        mesh = self.mesh()
        for a in range(1, self.ndim):
            r2 = r2 + mesh[a] ** 2
        return np.broadcast_to(np.sqrt(r2), self.shape)

    def axis_max(self, axis: int) -> float:
        return self.origin[axis] + self.spacing[axis] * (self.shape[axis] - 1)

    def bounds(self) -> list[tuple[float, float]]:
        return [(self.origin[a], self.axis_max(a)) for a in range(self.ndim)]

    def refined(self, factor: int = 2) -> "SpaceTimeGrid":
        """Grid covering the same box with (N-1)*factor + 1 nodes per axis.

        Coarse nodes coincide with every factor-th fine node, which keeps
        refinement studies and trace comparisons exact.
        """
        shape = tuple((n - 1) * factor + 1 for n in self.shape)
        spacing = tuple(h / factor for h in self.spacing)
        return SpaceTimeGrid(shape, self.origin, spacing)


def centered_grid(n_space: int, shape, extent) -> SpaceTimeGrid:
    """Grid centred at the origin, periodic-style sampling (endpoint open).

    ``extent`` is the full box length per axis; nodes sit at
    -L/2 + k*(L/N), k = 0..N-1, so a DFT over the nodes has period L.
    """
    if np.isscalar(shape):
        shape = (int(shape),) * (n_space + 1)
    if np.isscalar(extent):
        extent = (float(extent),) * (n_space + 1)
    shape = tuple(int(n) for n in shape)
    extent = tuple(float(L) for L in extent)
    spacing = tuple(L / n for L, n in zip(extent, shape))
    origin = tuple(-L / 2 for L in extent)
    return SpaceTimeGrid(shape, origin, spacing)


@dataclass(frozen=True)
class ScalarField:
    grid: SpaceTimeGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.shape != self.grid.shape:
            raise GridError(
                f"values shape {values.shape} != grid shape {self.grid.shape}"
            )
        object.__setattr__(self, "values", values)

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True)
class VectorPotential:
    """Sampled vector potential (A_0, ..., A_n); component 0 is the time part."""

    grid: SpaceTimeGrid
    components: tuple[np.ndarray, ...]
    support_radius: float = np.inf

    def __post_init__(self):
        comps = tuple(np.asarray(c) for c in self.components)
        if len(comps) != self.grid.n_space + 1:
            raise GridError(
                f"need {self.grid.n_space + 1} components, got {len(comps)}"
            )
        for c in comps:
            if c.shape != self.grid.shape:
                raise GridError("all components must be sampled on the grid")
        object.__setattr__(self, "components", comps)

    @property
    def n_space(self) -> int:
        return self.grid.n_space

    @property
    def max_abs(self) -> float:
        return float(max(np.max(np.abs(c)) for c in self.components))

    def combined(self, omega: Sequence[float]) -> np.ndarray:
        """A_0 + sum_j omega_j A_j as one array."""
        out = self.components[0].copy()
        for j, w in enumerate(np.asarray(omega, dtype=float)):
            if w != 0.0:
                out = out + w * self.components[j + 1]
        return out

    def scaled(self, factor: float) -> "VectorPotential":
        return VectorPotential(
            self.grid,
            tuple(factor * c for c in self.components),
            self.support_radius,
        )


def _same_grid(a: SpaceTimeGrid, b: SpaceTimeGrid):
    if a != b:
        raise GridError("fields live on different grids")


def partial_derivative(values: np.ndarray, grid: SpaceTimeGrid, axis: int) -> np.ndarray:
    """Second-order d/dx_axis: central interior, one-sided at the two edges."""
    h = grid.spacing[axis]
    out = np.empty_like(values, dtype=np.result_type(values, float))
    mid = [slice(None)] * values.ndim
    lo = [slice(None)] * values.ndim
    hi = [slice(None)] * values.ndim

    mid[axis] = slice(1, -1)
    lo[axis] = slice(2, None)
    hi[axis] = slice(None, -2)
    out[tuple(mid)] = (values[tuple(lo)] - values[tuple(hi)]) / (2 * h)

    def edge(idx, i0, i1, i2, sign):
        sl = [slice(None)] * values.ndim
        sl[axis] = idx
        s0, s1, s2 = list(sl), list(sl), list(sl)
        s0[axis], s1[axis], s2[axis] = i0, i1, i2
        out[tuple(sl)] = sign * (
            -3 * values[tuple(s0)] + 4 * values[tuple(s1)] - values[tuple(s2)]
        ) / (2 * h)

    edge(0, 0, 1, 2, +1)
    edge(-1, -1, -2, -3, -1)
    return out


def gradient(phi: ScalarField) -> tuple[np.ndarray, ...]:
    """Full (n+1)-dimensional gradient (d_t phi, d_x1 phi, ...)."""
    return tuple(
        partial_derivative(phi.values, phi.grid, a) for a in range(phi.grid.ndim)
    )


def spatial_boundary_max(values: np.ndarray, grid: SpaceTimeGrid) -> float:
    """Max |values| over nodes lying on the lateral (spatial) boundary."""
    m = 0.0
    for a in range(1, grid.ndim):
        sl = [slice(None)] * grid.ndim
        for idx in (0, -1):
            sl[a] = idx
            m = max(m, float(np.max(np.abs(values[tuple(sl)]))))
    return m


def gauge_transform(
    A: VectorPotential,
    V: ScalarField,
    phi: ScalarField,
    boundary_tol: float = 1e-8,
) -> tuple[VectorPotential, ScalarField]:
    """Apply the gauge map (A, V) -> (A + grad phi, V).

    ``phi`` must vanish on the lateral boundary (relative tolerance
    ``boundary_tol``) so the transform corresponds to a gauge factor that
    is 1 on the boundary.  The scalar potential is returned unchanged
    (same array object).
    """
    _same_grid(A.grid, phi.grid)
    _same_grid(A.grid, V.grid)
    scale = max(phi.max_abs, np.finfo(float).tiny)
    bmax = spatial_boundary_max(phi.values, phi.grid)
    if bmax > boundary_tol * scale:
        raise GaugeBoundaryError(
            f"gauge phase is {bmax:.3e} on the lateral boundary "
            f"(allowed {boundary_tol * scale:.3e})"
        )
    grad = gradient(phi)
    comps = tuple(c + g for c, g in zip(A.components, grad))
    return VectorPotential(A.grid, comps, A.support_radius), V


def divergence(A: VectorPotential) -> ScalarField:
    """Space-time divergence d_t A_0 + sum_j d_xj A_j."""
    out = partial_derivative(A.components[0], A.grid, 0)
    for j in range(1, A.grid.ndim):
        out = out + partial_derivative(A.components[j], A.grid, j)
    return ScalarField(A.grid, out)


def divergence_defect(A: VectorPotential) -> tuple[float, float]:
    """(max |div A|, scale) where scale is the largest individual term.

    The returned scale is the natural yardstick for deciding whether the
    sampled potential is divergence-free: the finite-difference defect of
    an analytically divergence-free field is O(h^2) times this scale.
    """
    terms = [partial_derivative(A.components[0], A.grid, 0)]
    for j in range(1, A.grid.ndim):
        terms.append(partial_derivative(A.components[j], A.grid, j))
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    scale = max(float(np.max(np.abs(t))) for t in terms)
    return float(np.max(np.abs(total))), scale


@dataclass(frozen=True)
class SupportReport:
    radius: float
    max_outside: float
    max_abs: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_outside <= self.tol


def check_support(
    A: VectorPotential, radius: float, tol_rel: float = 1e-10
) -> SupportReport:
    """Largest |component| at nodes with |x| >= radius.

    Passes when that maximum is below ``tol_rel`` times the overall field
    maximum (catalog entries are cut off with smooth bump multipliers and
    are exactly zero outside their declared radius).
    """
    r = A.grid.spatial_radius()
    outside = r >= radius
    max_abs = max(A.max_abs, np.finfo(float).tiny)
    if not np.any(outside):
        max_out = 0.0
    else:
        max_out = float(
            max(np.max(np.abs(c[outside])) for c in A.components)
        )
    return SupportReport(radius, max_out, max_abs, tol_rel * max_abs)
