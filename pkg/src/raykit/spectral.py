"""Discrete Fourier analysis connecting ray data to space-time spectra.

Conventions (fixed once, all modules agree):
  forward   F(w) = prod(h) * sum_nodes f(z) exp(-i w . z)      (no prefactor)
  inverse   f(z) = (2*pi)^-(d) * sum_freqs F(w) exp(+i w . z) * prod(dw)
with z = (t, x), w = (tau, xi).  Frequency axes are stored in ascending
(fftshifted) order.  For fields sampled on a centred grid the forward and
inverse maps are exact mutual inverses.

The slice identity evaluated here: the spatial Fourier transform of the
t = 0 ray-transform field at xi equals the full space-time transform of
A_0 + sum_j omega_j A_j at (-omega.xi, xi); off-grid tau values are
evaluated by the trigonometric (semi-discrete) sum over time samples.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fields import GridError, ScalarField, SpaceTimeGrid, VectorPotential
from .rays import RayTransformField

__all__ = [
    "EdgeLeakageWarning",
    "ConeRegionError",
    "SpectralField",
    "dft",
    "idft",
    "freq_axes",
    "freq_mesh",
    "hermitian_defect",
    "time_slice_transform",
    "spatial_dft",
    "OmegaSolution",
    "perp_frame",
    "solve_omega",
    "SliceReport",
    "slice_identity",
    "cone_support_test",
    "perp_rank",
]


class EdgeLeakageWarning(UserWarning):
    """Field is not negligible at the grid edges; spectra will wrap around."""


class ConeRegionError(ValueError):
    """(tau, xi) is not strictly inside the complement of the light cone."""


@dataclass(frozen=True)
class SpectralField:
    """Complex spectrum with explicit (ascending) frequency axes."""

    grid: SpaceTimeGrid
    freqs: tuple[np.ndarray, ...]
    values: np.ndarray

    def freq_mesh(self, sparse: bool = True) -> list[np.ndarray]:
        return list(np.meshgrid(*self.freqs, indexing="ij", sparse=sparse))

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


def freq_axes(grid: SpaceTimeGrid) -> tuple[np.ndarray, ...]:
    """Angular frequency axes (ascending) for each grid axis."""
    return tuple(
        2.0 * np.pi * np.fft.fftshift(np.fft.fftfreq(n, d=h))
        for n, h in zip(grid.shape, grid.spacing)
    )


def freq_mesh(grid: SpaceTimeGrid, sparse: bool = True) -> list[np.ndarray]:
    return list(np.meshgrid(*freq_axes(grid), indexing="ij", sparse=sparse))


def _edge_max(values: np.ndarray) -> float:
    m = 0.0
    for a in range(values.ndim):
        sl = [slice(None)] * values.ndim
        for idx in (0, -1):
            sl[a] = idx
            m = max(m, float(np.max(np.abs(values[tuple(sl)]))))
    return m


def _origin_phase(grid: SpaceTimeGrid, sign: float) -> np.ndarray:
    """prod_a exp(sign * i * w_a * origin_a) on the fftshifted frequency grid."""
    phase = 1.0
    for a, w in enumerate(freq_axes(grid)):
        shape = [1] * grid.ndim
        shape[a] = w.size
        phase = phase * np.exp(sign * 1j * w * grid.origin[a]).reshape(shape)
    return phase


def dft(field: ScalarField, check_edges: bool = True) -> SpectralField:
    """Forward transform of a sampled field (see module conventions)."""
    values = np.asarray(field.values)
    if check_edges:
        peak = float(np.max(np.abs(values)))
        if peak > 0 and _edge_max(values) > 1e-8 * peak:
            warnings.warn(
                "field is not negligible at the grid edges; the discrete "
                "spectrum will alias across the periodic boundary",
                EdgeLeakageWarning,
                stacklevel=2,
            )
    grid = field.grid
    vol = float(np.prod(grid.spacing))
    spec = vol * np.fft.fftshift(np.fft.fftn(values)) * _origin_phase(grid, -1.0)
    return SpectralField(grid, freq_axes(grid), spec)


def idft(spec: SpectralField) -> ScalarField:
    """Exact inverse of dft (complex output; take .real for real fields)."""
    grid = spec.grid
    vol = float(np.prod(grid.spacing))
    work = np.fft.ifftshift(spec.values * _origin_phase(grid, +1.0))
    values = np.fft.ifftn(work) / vol
    return ScalarField(grid, values)


def hermitian_defect(spec: SpectralField) -> float:
    """Relative deviation from value(-w) == conj(value(w)).

    Zero (to rounding) when the originating field is real.  Uses the
    unshifted layout so the unpaired Nyquist bins are matched correctly.
    """
    v = np.fft.ifftshift(spec.values)
    mirrored = v.copy()
    for a in range(v.ndim):
        mirrored = np.flip(mirrored, axis=a)
        mirrored = np.roll(mirrored, 1, axis=a)
    scale = max(float(np.max(np.abs(v))), np.finfo(float).tiny)
    return float(np.max(np.abs(v - np.conj(mirrored)))) / scale


def spatial_dft(values: np.ndarray, grid: SpaceTimeGrid) -> np.ndarray:
    """Spatial-axes transform of a t-slice array (fftshifted, via conventions)."""
    n_sp = grid.ndim - 1
    if values.ndim != n_sp:
        raise GridError("expected an array over the spatial axes only")
    vol = float(np.prod(grid.spacing[1:]))
    out = vol * np.fft.fftshift(np.fft.fftn(values))
    for a in range(n_sp):
        w = 2.0 * np.pi * np.fft.fftshift(np.fft.fftfreq(grid.shape[a + 1],
                                                         d=grid.spacing[a + 1]))
        shape = [1] * n_sp
        shape[a] = w.size
        out = out * np.exp(-1j * w * grid.origin[a + 1]).reshape(shape)
    return out


def time_slice_transform(values: np.ndarray, grid: SpaceTimeGrid,
                         taus: np.ndarray, chunk: int = 1 << 22) -> np.ndarray:
    """Space-time transform evaluated at per-node (tau(xi), xi) points.

    ``taus`` is broadcastable against the spatial frequency grid; the
    spatial part is the on-grid transform, the time part is the
    trigonometric sum  dt * sum_m exp(-i tau t_m) f(t_m, .), which for
    on-grid tau coincides with the full discrete transform bin.
    """
    n_sp = grid.ndim - 1
    vol_sp = float(np.prod(grid.spacing[1:]))
    fx = vol_sp * np.fft.fftshift(np.fft.fftn(values, axes=tuple(range(1, grid.ndim))),
                                  axes=tuple(range(1, grid.ndim)))
    for a in range(n_sp):
        w = 2.0 * np.pi * np.fft.fftshift(np.fft.fftfreq(grid.shape[a + 1],
                                                         d=grid.spacing[a + 1]))
        shape = [1] * grid.ndim
        shape[a + 1] = w.size
        fx = fx * np.exp(-1j * w * grid.origin[a + 1]).reshape(shape)
    t = grid.axis_coords(0)
    dt = grid.spacing[0]
    taus = np.broadcast_to(np.asarray(taus), fx.shape[1:])
    out = np.empty(fx.shape[1:], dtype=complex)
    flat_fx = fx.reshape(grid.shape[0], -1)
    flat_tau = taus.reshape(-1)
    flat_out = out.reshape(-1)
    step = max(1, chunk // max(t.size, 1))
    for lo in range(0, flat_tau.size, step):
        hi = min(lo + step, flat_tau.size)
        phase = np.exp(-1j * np.outer(t, flat_tau[lo:hi]))
        flat_out[lo:hi] = dt * np.einsum("tk,tk->k", phase, flat_fx[:, lo:hi])
    return out


# ---------------------------------------------------------------------------
# omega solutions on the cone complement
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OmegaSolution:
    tau: float
    xi: tuple[float, ...]
    omega: tuple[float, ...]
    s_param: float

    @property
    def residual(self) -> float:
        return abs(self.tau + float(np.dot(self.omega, self.xi)))


def perp_frame(xi: Sequence[float]) -> list[np.ndarray]:
    """Deterministic orthonormal basis of the hyperplane orthogonal to xi.

    Gram-Schmidt over the standard basis rejected against xi/|xi|; depends
    on the direction of xi only, so the frame (and everything built from
    it) is homogeneous of degree 0 in xi.
    """
    xi = np.asarray(xi, dtype=float)
    norm = np.linalg.norm(xi)
    if norm == 0:
        raise ConeRegionError("xi = 0 is degenerate")
    xhat = xi / norm
    frame: list[np.ndarray] = []
    for k in range(xi.size):
        v = np.zeros(xi.size)
        v[k] = 1.0
        v -= np.dot(v, xhat) * xhat
        for u in frame:
            v -= np.dot(v, u) * u
        n = np.linalg.norm(v)
        if n > 1e-8:
            frame.append(v / n)
        if len(frame) == xi.size - 1:
            break
    return frame


def solve_omega(tau: float, xi: Sequence[float], s_param: float = 0.0) -> OmegaSolution:
    """Unit omega with tau + omega.xi = 0, |tau| < |xi|.

    omega = -(tau/|xi|) xihat + sqrt(1 - tau^2/|xi|^2) u(s_param), where
    u runs over the unit sphere of the hyperplane orthogonal to xi.  For
    n_space = 2 the sphere is two points (sign of cos(s_param) picks one),
    for n_space = 3 s_param is the angle on the frame circle.  The result
    depends only on the direction of (tau, xi): degree-0 homogeneous.
    """
    xi = np.asarray(xi, dtype=float)
    nxi = float(np.linalg.norm(xi))
    if nxi == 0:
        raise ConeRegionError("xi = 0 is degenerate")
    if abs(tau) >= nxi:
        raise ConeRegionError(
            f"|tau| = {abs(tau)} >= |xi| = {nxi}: inside the light cone"
        )
    if xi.size < 2:
        raise ConeRegionError("the solution sphere is empty for n_space = 1")
    q = -float(tau) / nxi
    r = float(np.sqrt(max(1.0 - q * q, 0.0)))
    frame = perp_frame(xi)
    if xi.size == 2:
        u = frame[0] if np.cos(s_param) >= 0 else -frame[0]
    else:
        u = np.cos(s_param) * frame[0] + np.sin(s_param) * frame[1]
    omega = q * xi / nxi + r * u
    return OmegaSolution(float(tau), tuple(xi), tuple(omega), float(s_param))


# ---------------------------------------------------------------------------
# slice identity and cone support
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SliceReport:
    omega: tuple[float, ...]
    max_rel_mismatch: float
    scale: float
    n_checked: int


def slice_identity(rayF: RayTransformField, A: VectorPotential,
                   xi_limit_frac: float = 0.5) -> SliceReport:
    """Compare the two routes to G(xi; omega) over |xi| <= frac * Nyquist.

    Route 1: spatial transform of the t = base_time ray-transform field.
    Route 2: space-time transform of A_0 + sum omega_j A_j at (-omega.xi, xi),
    off-grid tau handled by the trigonometric time sum.
    """
    grid = A.grid
    if rayF.grid != grid:
        raise GridError("ray field and potential live on different grids")
    omega = np.asarray(rayF.omega)
    lhs = spatial_dft(np.asarray(rayF.values, dtype=float), grid)
    if rayF.base_time != 0.0:
        # route 2 below is the t = 0 slice; shift the ray data accordingly
        raise GridError("slice identity expects base_time = 0 ray data")
    sp_freqs = freq_axes(grid)[1:]
    mesh = np.meshgrid(*sp_freqs, indexing="ij", sparse=True)
    taus = 0.0
    for a in range(omega.size):
        taus = taus - omega[a] * mesh[a]
    B = A.combined(omega)
    rhs = time_slice_transform(B, grid, taus)
    r2 = 0.0
    for m in mesh:
        r2 = r2 + m**2
    nyq = min(np.pi / h for h in grid.spacing[1:])
    region = np.broadcast_to(np.sqrt(r2), lhs.shape) <= xi_limit_frac * nyq
    scale = max(float(np.max(np.abs(rhs[region]))), np.finfo(float).tiny)
    mism = float(np.max(np.abs(lhs[region] - rhs[region]))) / scale
    return SliceReport(tuple(omega), mism, scale, int(region.sum()))


def cone_support_test(A: VectorPotential, n_points: int = 64,
                      s_params: Sequence[float] = (0.0, 1.2, np.pi / 2, 2.7),
                      rng: np.random.Generator | None = None,
                      tau_frac: float = 0.5) -> dict:
    """Sample (1, omega(tau, xi)) . Ahat on the cone complement.

    Draws nodes with |tau| <= tau_frac * |xi| from the discrete spectrum
    and reports the largest |(1, omega) . Ahat| relative to the overall
    spectral peak; pure-gauge inputs should sit at discretization level.
    """
    rng = rng or np.random.default_rng(0)
    specs = [dft(ScalarField(A.grid, np.asarray(c, dtype=float)))
             for c in A.components]
    freqs = specs[0].freqs
    mesh = np.meshgrid(*freqs, indexing="ij", sparse=True)
    tau_m = mesh[0]
    r2 = 0.0
    for m in mesh[1:]:
        r2 = r2 + m**2
    xi_norm = np.broadcast_to(np.sqrt(r2), specs[0].values.shape)
    nyq = min(np.pi / h for h in A.grid.spacing[1:])
    ok = (np.broadcast_to(np.abs(tau_m), xi_norm.shape) <= tau_frac * xi_norm)
    ok &= (xi_norm > 0) & (xi_norm <= 0.5 * nyq)
    nodes = np.argwhere(ok)
    if nodes.shape[0] == 0:
        raise ConeRegionError("no in-region frequency nodes on this grid")
    take = nodes[rng.choice(nodes.shape[0], size=min(n_points, nodes.shape[0]),
                            replace=False)]
    peak = max(s.max_abs for s in specs)
    worst = 0.0
    for idx in take:
        idx = tuple(int(i) for i in idx)
        tau = float(freqs[0][idx[0]])
        xi = np.array([float(freqs[a + 1][idx[a + 1]])
                       for a in range(A.grid.n_space)])
        ahat = np.array([s.values[idx] for s in specs])
        for sp in s_params:
            om = solve_omega(tau, xi, sp)
            val = ahat[0] + np.dot(np.asarray(om.omega), ahat[1:])
            worst = max(worst, abs(val))
    return {
        "max_relative": worst / peak,
        "peak": peak,
        "n_points": int(take.shape[0]),
        "n_s_params": len(s_params),
    }


def perp_rank(tau: float, xi: Sequence[float], n_samples: int,
              threshold: float = 1e-10) -> int:
    """Dimension of the orthogonal complement of span{(1, omega(tau, xi))}.

    Builds ``n_samples`` vectors (1, omega) over spread s_params and
    returns (n+1) - numerical rank.  Expected value is 1 strictly inside
    the cone complement with at least n+1 well-spread samples.
    """
    xi = np.asarray(xi, dtype=float)
    n = xi.size
    params = [2.0 * np.pi * k / n_samples for k in range(n_samples)]
    rows = []
    for sp in params:
        om = solve_omega(tau, xi, sp)
        rows.append(np.concatenate(([1.0], om.omega)))
    sv = np.linalg.svd(np.array(rows), compute_uv=False)
    rank = int(np.sum(sv > threshold * sv[0]))
    return n + 1 - rank
