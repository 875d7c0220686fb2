"""Recover the gauge phase phi with A = grad phi from annihilated ray data.

Pipeline: verify that the light-ray transforms of A vanish on a probe set
(if they do not, the input is not pure gauge and reconstruction is
refused), then resolve the spectral proportionality Ahat = i Phi (tau, xi)
by least squares per frequency node and invert.  The additive constant of
phi is not determined (same gauge class); compare mod constants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .catalog import AnalyticPotentialSpec
from .fields import (
    ScalarField,
    SpaceTimeGrid,
    VectorPotential,
    gradient,
    partial_derivative,
)
from .rays import LightRay, RayIntegrator, random_rays
from .spectral import SpectralField, dft, idft

__all__ = [
    "NotAGaugeError",
    "GaugeResidualReport",
    "GaugeCandidate",
    "phi_spectral",
    "reconstruct_phi",
    "verify_gauge_pair",
]


class NotAGaugeError(RuntimeError):
    """Probe rays show non-vanishing transforms; input is not pure gauge."""

    def __init__(self, message, max_transform, tol):
        super().__init__(message)
        self.max_transform = max_transform
        self.tol = tol


@dataclass(frozen=True)
class GaugeResidualReport:
    component_max: tuple[float, ...]   # per-component max |A_j - d_j phi|
    support_radius: float
    support_leakage: float             # max |phi| at |x| >= R, relative
    max_ray_transform: float
    ray_tol: float

    @property
    def max_residual(self) -> float:
        return max(self.component_max)


@dataclass(frozen=True)
class GaugeCandidate:
    phi: ScalarField
    spectral_phi: SpectralField
    residual: GaugeResidualReport


def phi_spectral(component_spectra, w_min: float | None = None) -> SpectralField:
    """Least-squares Phi with (Ahat_0 .. Ahat_n) = i Phi (tau, xi).

    Phi = -i (w . Ahat) / |w|^2 per node, which reduces to the single
    quotient -i Ahat_j / w_j wherever the proportionality is exact and
    stays stable where discretization breaks it.  Bins with |w| < w_min
    (default: one frequency step, i.e. the zero bin) are set to zero;
    sampled gauges carry no information there.
    """
    specs = list(component_spectra)
    grid = specs[0].grid
    freqs = specs[0].freqs
    if len(specs) != grid.ndim:
        raise ValueError(f"need {grid.ndim} component spectra, got {len(specs)}")
    mesh = np.meshgrid(*freqs, indexing="ij", sparse=True)
    w2 = 0.0
    for m in mesh:
        w2 = w2 + m**2
    w2 = np.broadcast_to(w2, specs[0].values.shape)
    num = 0.0
    for m, s in zip(mesh, specs):
        num = num + m * s.values
    if w_min is None:
        w_min = min(float(f[1] - f[0]) for f in freqs)
    keep = w2 >= w_min**2
    phi = np.zeros_like(specs[0].values)
    np.divide(-1j * num, w2, out=phi, where=keep)
    return SpectralField(grid, freqs, phi)


def _default_probe_rays(A: VectorPotential, n: int, rng) -> list[LightRay]:
    grid = A.grid
    extent = min(
        grid.axis_max(a) - grid.origin[a] for a in range(1, grid.ndim)
    )
    radius = min(
        0.45 * extent,
        A.support_radius if np.isfinite(A.support_radius) else np.inf,
    )
    return random_rays(rng, n, 0.7 * radius, grid.n_space)


def reconstruct_phi(
    A: VectorPotential,
    n_probe_rays: int = 50,
    tol_ray: float | None = None,
    rng: np.random.Generator | None = None,
    w_min: float | None = None,
) -> GaugeCandidate:
    """Gauge phase from a (purportedly) pure-gauge vector potential.

    Raises NotAGaugeError when the probe-ray transforms exceed ``tol_ray``
    (default 1e-6 * max|A| * time window, separating quadrature noise from
    a genuine obstruction).
    """
    rng = rng or np.random.default_rng(0)
    grid = A.grid
    window = grid.axis_max(0) - grid.origin[0]
    if tol_ray is None:
        tol_ray = 1e-6 * max(A.max_abs, np.finfo(float).tiny) * window
    integ = RayIntegrator(A)
    max_p = integ.max_over_rays(_default_probe_rays(A, n_probe_rays, rng))
    if max_p > tol_ray:
        raise NotAGaugeError(
            f"max |ray transform| = {max_p:.3e} exceeds tol {tol_ray:.3e}; "
            "the input is not pure gauge",
            max_transform=max_p,
            tol=tol_ray,
        )
    specs = [dft(ScalarField(grid, np.asarray(c, dtype=float)), check_edges=False)
             for c in A.components]
    sphi = phi_spectral(specs, w_min=w_min)
    # taking the real part is the Hermitian symmetrization of sphi
    phi = ScalarField(grid, idft(sphi).values.real)
    report = _residuals(A, phi, max_p, tol_ray)
    return GaugeCandidate(phi, sphi, report)


def _residuals(A, phi, max_ray, tol_ray) -> GaugeResidualReport:
    grad = gradient(phi)
    comp_max = tuple(
        float(np.max(np.abs(np.asarray(c) - g)))
        for c, g in zip(A.components, grad)
    )
    R = A.support_radius
    leak = 0.0
    if np.isfinite(R):
        outside = phi.grid.spatial_radius() >= R
        if np.any(outside):
            scale = max(phi.max_abs, np.finfo(float).tiny)
            leak = float(np.max(np.abs(phi.values[outside]))) / scale
    return GaugeResidualReport(comp_max, R, leak, max_ray, tol_ray)


def verify_gauge_pair(A: VectorPotential, phi: ScalarField,
                      radius: float | None = None) -> GaugeResidualReport:
    """Residuals of the pair (A, phi): finite-difference |A - grad phi| per
    component and the support leakage of phi beyond ``radius``."""
    if A.grid != phi.grid:
        raise ValueError("A and phi live on different grids")
    R = A.support_radius if radius is None else radius
    grad = gradient(phi)
    comp_max = tuple(
        float(np.max(np.abs(np.asarray(c) - g)))
        for c, g in zip(A.components, grad)
    )
    leak = 0.0
    if np.isfinite(R):
        outside = phi.grid.spatial_radius() >= R
        if np.any(outside):
            scale = max(phi.max_abs, np.finfo(float).tiny)
            leak = float(np.max(np.abs(phi.values[outside]))) / scale
    return GaugeResidualReport(comp_max, R, leak, 0.0, 0.0)
