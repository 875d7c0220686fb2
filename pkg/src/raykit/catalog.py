"""Closed-form potential catalog and its sampler.

Each entry evaluates exactly (value and, where the construction needs
them, derivatives) so the sampled fields double as oracles: gradients of
bumps are gradients of a known closed form, the divergence-free entry has
identically zero space-time divergence by construction, and the winding
entry integrates to 2*pi*m around its core.

Compact spatial support is enforced with a C-infinity cutoff in r^2, so
samples are exactly zero for |x - center| >= support radius.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .fields import GridError, ScalarField, SpaceTimeGrid, VectorPotential

__all__ = [
    "ResolutionError",
    "ScalarBumpSpec",
    "AnalyticPotentialSpec",
    "sample",
    "gauge_phi",
    "smooth_step",
    "smooth_step_deriv",
]

KINDS = (
    "gaussian_bump",
    "gradient_of_bump",
    "divergence_free_curl",
    "winding_theta",
    "custom_sum",
)


class ResolutionError(ValueError):
    """Spec features are too narrow for the requested grid."""


def smooth_step(y):
    """C-infinity step: 0 for y<=0, 1 for y>=1, monotone in between."""
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    out[y >= 1.0] = 1.0
    mid = (y > 0.0) & (y < 1.0)
    ym = y[mid]
    a = np.exp(-1.0 / ym)
    b = np.exp(-1.0 / (1.0 - ym))
    out[mid] = a / (a + b)
    return out


def smooth_step_deriv(y):
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    mid = (y > 0.0) & (y < 1.0)
    ym = y[mid]
    a = np.exp(-1.0 / ym)
    b = np.exp(-1.0 / (1.0 - ym))
    da = a / ym**2
    db = -b / (1.0 - ym) ** 2
    out[mid] = (da * b - a * db) / (a + b) ** 2
    return out


@dataclass(frozen=True)
class ScalarBumpSpec:
    """Scalar potential: gaussian in (t, x), optionally modulated in x_1.

    V = amplitude * exp(-((t-c0)^2 + |x-c|^2)/width^2) * cos(mod_wavenumber*(x_1-c_1)) * cutoff
    """

    amplitude: float = 1.0
    width: float = 1.0
    t_width: Optional[float] = None
    center: tuple[float, ...] = ()
    mod_wavenumber: float = 0.0
    support_radius: float = np.inf
    cutoff_inner: Optional[float] = None


@dataclass(frozen=True)
class AnalyticPotentialSpec:
    """Closed-form vector potential plus optional scalar part.

    kind:
      gaussian_bump         a gaussian on one component (default A_0)
      gradient_of_bump      exact (d_t phi, d_x phi) of a cut gaussian phi
      divergence_free_curl  stream-function construction, div == 0 exactly
      winding_theta         m * grad(theta) around ``center`` with a
                            mollified core; flat (dA = 0) between
                            core_outer and cutoff_inner
      custom_sum            sum of ``terms``
    """

    kind: str
    amplitude: float = 1.0
    width: float = 1.0
    t_width: Optional[float] = None
    center: tuple[float, ...] = ()
    support_radius: float = np.inf
    cutoff_inner: Optional[float] = None
    component: int = 0
    winding: int = 1
    core_radius: float = 0.1
    core_outer: Optional[float] = None
    stream_offsets: Optional[tuple[tuple[float, ...], ...]] = None
    terms: tuple["AnalyticPotentialSpec", ...] = ()
    scalar: Optional[ScalarBumpSpec] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown catalog kind {self.kind!r}")


def _center(spec_center, ndim) -> np.ndarray:
    c = np.zeros(ndim)
    got = np.asarray(spec_center, dtype=float)
    c[: got.size] = got
    return c


def _spatial_cutoff(mesh, center, r_outer, r_inner, ndim):
    """cutoff value and d/dx_j factors; returns (c, dc_1..dc_n) arrays."""
    if not np.isfinite(r_outer):
        return 1.0, [0.0] * (ndim - 1)
    if r_inner is None:
        r_inner = 0.75 * r_outer
    if not 0 < r_inner < r_outer:
        raise ValueError("need 0 < cutoff_inner < support_radius")
    r2 = 0.0
    for a in range(1, ndim):
        r2 = r2 + (mesh[a] - center[a]) ** 2
    denom = r_outer**2 - r_inner**2
    y = (r_outer**2 - r2) / denom
    c = smooth_step(y)
    dy = smooth_step_deriv(y) / denom
    dc = [-2.0 * (mesh[a] - center[a]) * dy for a in range(1, ndim)]
    return c, dc


def _gaussian(mesh, center, width, t_width, ndim):
    """gaussian value and its per-axis derivative factors (value, [d0..dn])."""
    wt = width if t_width is None else t_width
    arg = ((mesh[0] - center[0]) / wt) ** 2
    for a in range(1, ndim):
        arg = arg + ((mesh[a] - center[a]) / width) ** 2
    g = np.exp(-arg)
    dg = [-2.0 * (mesh[0] - center[0]) / wt**2 * g]
    for a in range(1, ndim):
        dg.append(-2.0 * (mesh[a] - center[a]) / width**2 * g)
    return g, dg


def _check_resolution(spec, grid):
    hmax = max(grid.spacing)
    widths = [spec.width]
    if spec.kind == "winding_theta":
        widths = [spec.core_radius]
    for w in widths:
        if w <= 2.0 * hmax:
            raise ResolutionError(
                f"{spec.kind}: width {w} under-resolved on spacing {hmax}"
            )


def _eval_phi(spec, grid, mesh):
    """Gauge phase of gradient_of_bump: value and exact gradient arrays."""
    ndim = grid.ndim
    c = _center(spec.center, ndim)
    g, dg = _gaussian(mesh, c, spec.width, spec.t_width, ndim)
    cut, dcut = _spatial_cutoff(mesh, c, spec.support_radius, spec.cutoff_inner, ndim)
    a = spec.amplitude
    phi = a * g * cut
    grad = [a * dg[0] * cut]
    for j in range(1, ndim):
        grad.append(a * (dg[j] * cut + g * dcut[j - 1]))
    return phi, grad


def _eval_components(spec, grid, mesh) -> list[np.ndarray]:
    ndim = grid.ndim
    zeros = np.zeros(grid.shape)
    comps = [np.zeros(grid.shape) for _ in range(ndim)]

    if spec.kind == "gaussian_bump":
        c = _center(spec.center, ndim)
        g, _ = _gaussian(mesh, c, spec.width, spec.t_width, ndim)
        cut, _ = _spatial_cutoff(mesh, c, spec.support_radius, spec.cutoff_inner, ndim)
        comps[spec.component] = np.broadcast_to(
            spec.amplitude * g * cut, grid.shape
        ).copy()

    elif spec.kind == "gradient_of_bump":
        _, grad = _eval_phi(spec, grid, mesh)
        comps = [np.broadcast_to(gc, grid.shape).copy() for gc in grad]

    elif spec.kind == "divergence_free_curl":
        # A_0 = sum_j d_xj psi_j, A_j = -d_t psi_j  =>  div == 0 exactly.
        offsets = spec.stream_offsets
        if offsets is None:
            offsets = tuple(
                tuple(0.35 * spec.width if a == j + 1 else -0.2 * spec.width
                      for a in range(ndim))
                for j in range(ndim - 1)
            )
        a0 = np.zeros(grid.shape)
        for j in range(1, ndim):
            c = _center(spec.center, ndim) + _center(offsets[j - 1], ndim)
            g, dg = _gaussian(mesh, c, spec.width, spec.t_width, ndim)
            cut, dcut = _spatial_cutoff(
                mesh, c, spec.support_radius, spec.cutoff_inner, ndim
            )
            amp = spec.amplitude
            a0 = a0 + amp * (dg[j] * cut + g * dcut[j - 1])
            comps[j] = np.broadcast_to(-amp * dg[0] * cut, grid.shape).copy()
        comps[0] = np.broadcast_to(a0, grid.shape).copy()

    elif spec.kind == "winding_theta":
        vals = winding_field_values(spec, mesh, ndim)
        comps = [np.broadcast_to(v, grid.shape).copy() for v in vals]

    elif spec.kind == "custom_sum":
        for term in spec.terms:
            sub = _eval_components(term, grid, mesh)
            comps = [c0 + c1 for c0, c1 in zip(comps, sub)]

    return comps


def winding_field_values(spec, mesh, ndim):
    """m * grad(theta) about spec.center in the (x_1, x_2) plane.

    The angular gradient is mollified to zero inside ``core_radius`` and
    reaches its full 1/r strength at ``core_outer``; an outer cutoff takes
    it to zero at ``support_radius``.  Between core_outer and cutoff_inner
    the field equals m * grad(theta) exactly, so it is closed there.
    """
    if ndim - 1 < 2:
        raise ValueError("winding_theta needs at least 2 spatial dimensions")
    c = _center(spec.center, ndim)
    x1 = mesh[1] - c[1]
    x2 = mesh[2] - c[2]
    r2 = x1**2 + x2**2
    core_outer = spec.core_outer
    if core_outer is None:
        core_outer = 2.0 * spec.core_radius
    eta = smooth_step((r2 - spec.core_radius**2) / (core_outer**2 - spec.core_radius**2))
    if np.isfinite(spec.support_radius):
        r_in = spec.cutoff_inner
        if r_in is None:
            r_in = 0.75 * spec.support_radius
        eta = eta * smooth_step(
            (spec.support_radius**2 - r2) / (spec.support_radius**2 - r_in**2)
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        gx1 = np.where(r2 > 0, -x2 / np.where(r2 > 0, r2, 1.0), 0.0)
        gx2 = np.where(r2 > 0, x1 / np.where(r2 > 0, r2, 1.0), 0.0)
    m = float(spec.winding) * spec.amplitude
    comps = [np.zeros_like(eta * gx1) for _ in range(ndim)]
    comps[1] = m * eta * gx1
    comps[2] = m * eta * gx2
    return comps


def _eval_scalar(sspec: ScalarBumpSpec, grid, mesh) -> np.ndarray:
    ndim = grid.ndim
    c = _center(sspec.center, ndim)
    g, _ = _gaussian(mesh, c, sspec.width, sspec.t_width, ndim)
    cut, _ = _spatial_cutoff(mesh, c, sspec.support_radius, sspec.cutoff_inner, ndim)
    v = sspec.amplitude * g * cut
    if sspec.mod_wavenumber:
        v = v * np.cos(sspec.mod_wavenumber * (mesh[1] - c[1]))
    return np.broadcast_to(v, grid.shape).copy()


def sample(
    spec: AnalyticPotentialSpec, grid: SpaceTimeGrid
) -> tuple[VectorPotential, ScalarField]:
    """Evaluate a catalog entry nodewise on ``grid``.

    Returns the vector potential and the scalar potential (zero unless the
    spec carries a scalar part).  Raises ResolutionError when a feature is
    narrower than twice the largest grid spacing.
    """
    if spec.kind != "custom_sum":
        _check_resolution(spec, grid)
    else:
        for term in spec.terms:
            _check_resolution(term, grid)
    mesh = grid.mesh()
    comps = _eval_components(spec, grid, mesh)
    radius = _support_radius(spec)
    A = VectorPotential(grid, tuple(comps), support_radius=radius)
    if spec.scalar is not None:
        V = ScalarField(grid, _eval_scalar(spec.scalar, grid, mesh))
    else:
        V = ScalarField(grid, np.zeros(grid.shape))
    return A, V


def _support_radius(spec) -> float:
    if spec.kind == "custom_sum":
        if not spec.terms:
            return 0.0
        return max(_support_radius(t) for t in spec.terms)
    r = spec.support_radius
    if np.isfinite(r):
        off = float(np.linalg.norm(_center(spec.center, len(spec.center) + 1)[1:]))
        return r + off
    return r


def gauge_phi(spec: AnalyticPotentialSpec, grid: SpaceTimeGrid) -> ScalarField:
    """Closed-form gauge phase phi with grad phi == sample(gradient_of_bump).

    Only defined for gradient_of_bump entries (and custom sums of them).
    """
    if spec.kind == "gradient_of_bump":
        phi, _ = _eval_phi(spec, grid, grid.mesh())
        return ScalarField(grid, np.broadcast_to(phi, grid.shape).copy())
    if spec.kind == "custom_sum":
        total = np.zeros(grid.shape)
        for term in spec.terms:
            total = total + gauge_phi(term, grid).values
        return ScalarField(grid, total)
    raise ValueError(f"no closed-form gauge phase for kind {spec.kind!r}")


def gauge_phi_gradient(
    spec: AnalyticPotentialSpec, grid: SpaceTimeGrid
) -> tuple[np.ndarray, ...]:
    """Exact gradient of the gauge phase (the sampled components themselves)."""
    if spec.kind == "gradient_of_bump":
        _, grad = _eval_phi(spec, grid, grid.mesh())
        return tuple(np.broadcast_to(g, grid.shape).copy() for g in grad)
    raise ValueError(f"no closed-form gradient for kind {spec.kind!r}")
