"""Ghost point extension across the PEC boundary.

The field just inside the PEC is reconstructed from outside data: H is
decomposed into normal/tangential components, the boundary traces and
normal derivatives are transported inward along the normal direction by
the level-set advection equation, and one-layer ghost values are
assembled from two-term Taylor expansions. H.n and E are odd across the
wall (zero trace), H.t is even.

Values on the authoritative side (phi <= 0 for transported field values,
phi < 0 for transported derivatives) are never written: the transport
sweeps scatter only into their update region, so frozen nodes stay
bitwise identical.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .grid import GridTopology, NodeClass
from .levelset import LevelSetData
from .stencil import FitTable, neighbor_flat_offsets

DEFAULT_STEPS = 24
DEFAULT_PSEUDO_CFL = 0.2
BAND_MARGIN = 3.0        # extra dx beyond the pseudo-time information horizon
DEFAULT_MAX_STEPS = 400  # cap for tolerance-driven sweeps
DEFAULT_TOL = 1e-9       # relative stagnation tolerance per extension call
DEFAULT_BAND = 12.0      # update-band depth in dx units


def decompose(hx: np.ndarray, hy: np.ndarray, ls: LevelSetData):
    """Split H into (H.n, H.t) using the local unit frame."""
    h_perp = hx * ls.normal_x + hy * ls.normal_y
    h_par = hx * ls.tangent_x + hy * ls.tangent_y
    return h_perp, h_par


def recompose(h_perp: np.ndarray, h_par: np.ndarray, ls: LevelSetData):
    hx = h_perp * ls.normal_x + h_par * ls.tangent_x
    hy = h_perp * ls.normal_y + h_par * ls.tangent_y
    return hx, hy


def normal_derivatives(field: np.ndarray, ls: LevelSetData,
                       fits: FitTable) -> np.ndarray:
    """grad(field) . n with the least-squares gradient, over the interior.

    Values at exterior nodes (phi < 0) are the authoritative data that the
    extension transports; inside values are merely a warm start and get
    overwritten by the sweep."""
    return fits.ddx(field) * ls.normal_x + fits.ddy(field) * ls.normal_y


def _flat(a: np.ndarray) -> np.ndarray:
    """C-contiguous flat view; scatter through a copy would be silently lost."""
    if not a.flags.c_contiguous:
        raise ValueError("field array must be C-contiguous")
    return a.reshape(-1)


class _TransportRegion:
    """Precomputed gather/scatter machinery for one update region."""

    def __init__(self, mask: np.ndarray, fits: FitTable,
                 vel_x: np.ndarray, vel_y: np.ndarray):
        ny = mask.shape[1]
        self.idx = np.flatnonzero(mask)
        self.nbr = self.idx[None, :] + neighbor_flat_offsets(ny)[:, None]
        self.w = fits.w.reshape(3, 5, -1)[:, :, self.idx].copy()
        self.vx = _flat(vel_x)[self.idx].copy()
        self.vy = _flat(vel_y)[self.idx].copy()

    @property
    def size(self) -> int:
        return int(self.idx.size)

    def data_scale(self, work: np.ndarray) -> float:
        """Magnitude of the band data (region plus its stencil halo)."""
        if not self.size:
            return 0.0
        return float(np.abs(_flat(work)[self.nbr]).max())

    def gradient_dot(self, field: np.ndarray, normal_x, normal_y,
                     out: np.ndarray) -> np.ndarray:
        """Scatter grad(field).n (nodal n) into ``out`` at region nodes."""
        vals = _flat(field)[self.nbr]
        c = np.einsum("rkm,km->rm", self.w[:2], vals)
        flat = _flat(out)
        flat[self.idx] = (c[0] * _flat(normal_x)[self.idx]
                          + c[1] * _flat(normal_y)[self.idx])
        return out

    def sweep(self, work: np.ndarray, dtau: float, steps: int,
              tol: float = 0.0) -> int:
        """Advect ``work`` along the fitted normal in pseudo-time, in place.

        Runs at most ``steps`` sweeps; with ``tol > 0`` stops as soon as
        the largest band update drops below it (the transport transient
        decays geometrically, so warm starts exit after a few sweeps).
        Reads complete before the single scatter per step, so the update
        is double-buffered by construction. Returns the sweeps taken.
        """
        flat = _flat(work)
        for n in range(1, steps + 1):
            vals = flat[self.nbr]
            c = np.einsum("rkm,km->rm", self.w, vals)
            new = c[2] - dtau * (self.vx * c[0] + self.vy * c[1])
            if tol > 0.0:
                delta = float(np.abs(new - flat[self.idx]).max())
                flat[self.idx] = new
                if delta <= tol:
                    return n
            else:
                flat[self.idx] = new
        return steps


def _region_mask(phi: np.ndarray, valid: np.ndarray, include_zero: bool,
                 cap: Optional[float]) -> np.ndarray:
    mask = (phi >= 0.0) if include_zero else (phi > 0.0)
    mask &= valid
    if cap is not None:
        mask &= phi <= cap
    return mask


def constant_extend(field: np.ndarray,
                    ls: LevelSetData,
                    grid: GridTopology,
                    classes: np.ndarray,
                    fits: FitTable,
                    update_region: str = "phi_pos",
                    steps: int = DEFAULT_STEPS,
                    pseudo_cfl: float = DEFAULT_PSEUDO_CFL,
                    band_cap: Optional[float] = None,
                    tol: float = 0.0) -> np.ndarray:
    """Transport ``field`` unchanged along the normal across the boundary.

    ``update_region`` is "phi_pos" (field values: the phi <= 0 side stays
    frozen) or "phi_nonneg" (derivatives: only phi < 0 stays frozen).
    Returns a new array; frozen nodes are bitwise copies of the input.
    """
    if update_region not in ("phi_pos", "phi_nonneg"):
        raise ValueError(f"unknown update_region {update_region!r}")
    h = max(grid.dx, grid.dy)
    if band_cap is None:
        band_cap = (steps * pseudo_cfl + BAND_MARGIN) * h
    vel_x = fits.value(ls.normal_x)
    vel_y = fits.value(ls.normal_y)
    mask = _region_mask(ls.phi, fits.valid, update_region == "phi_nonneg",
                        band_cap)
    region = _TransportRegion(mask, fits, vel_x, vel_y)
    out = field.astype(float, copy=True)
    if region.size:
        region.sweep(out, pseudo_cfl * h, steps, tol=tol)
    return out


class GhostExtender:
    """Reusable extension pipeline bound to one static geometry.

    Precomputes the transport regions, the fitted normal velocity, and the
    ghost-node frame so that the per-step work is a handful of gathered
    band sweeps. ``extend`` mutates the field arrays at ghost nodes only.

    Sweeps are tolerance-driven: up to ``max_steps`` pseudo-time steps,
    stopping once the band stagnates to ``tol`` (relative to the band data
    scale). Warm starts from the previous time step exit quickly; cold
    starts flush their transient completely instead of leaving a
    fixed-step residue.
    """

    def __init__(self, grid: GridTopology, ls: LevelSetData,
                 classes: np.ndarray, fits: FitTable,
                 max_steps: int = DEFAULT_MAX_STEPS,
                 pseudo_cfl: float = DEFAULT_PSEUDO_CFL,
                 tol: float = DEFAULT_TOL,
                 band: float = DEFAULT_BAND):
        self.grid = grid
        self.ls = ls
        self.fits = fits
        self.max_steps = max_steps
        self.tol = tol
        self.h = max(grid.dx, grid.dy)
        self.dtau = pseudo_cfl * self.h
        cap = band * self.h

        vel_x = fits.value(ls.normal_x)
        vel_y = fits.value(ls.normal_y)
        self.region_pos = _TransportRegion(
            _region_mask(ls.phi, fits.valid, False, cap), fits, vel_x, vel_y)
        self.region_nonneg = _TransportRegion(
            _region_mask(ls.phi, fits.valid, True, cap), fits, vel_x, vel_y)
        # Derivatives are needed on the frozen halo feeding the sweeps and,
        # as a warm start, on the swept band itself.
        deriv_mask = (np.abs(ls.phi) <= cap + 2 * self.h) & fits.valid
        self.deriv_band = _TransportRegion(deriv_mask, fits, vel_x, vel_y)

        self.boundary_flat = np.flatnonzero(classes == NodeClass.BOUNDARY)
        g = np.flatnonzero(classes == NodeClass.GHOST)
        self.ghost_flat = g
        self.ghost_phi = _flat(ls.phi)[g].copy()
        self.ghost_nx = _flat(ls.normal_x)[g].copy()
        self.ghost_ny = _flat(ls.normal_y)[g].copy()
        self.ghost_tx = _flat(ls.tangent_x)[g].copy()
        self.ghost_ty = _flat(ls.tangent_y)[g].copy()

        self._scratch = [np.zeros(grid.shape) for _ in range(2)]

    def _normal_derivative_band(self, field: np.ndarray,
                                out: np.ndarray) -> np.ndarray:
        out.fill(0.0)
        return self.deriv_band.gradient_dot(field, self.ls.normal_x,
                                            self.ls.normal_y, out)

    def _transport(self, work: np.ndarray, region: _TransportRegion) -> None:
        tol_abs = self.tol * region.data_scale(work)
        region.sweep(work, self.dtau, self.max_steps,
                     tol=max(tol_abs, 1e-300))

    def extend_h(self, hx: np.ndarray, hy: np.ndarray) -> None:
        """Write ghost values of (hx, hy) in place; nothing else changes."""
        if not self.ghost_flat.size:
            return
        h_perp, h_par = decompose(hx, hy, self.ls)
        _flat(h_perp)[self.boundary_flat] = 0.0

        d_perp = self._normal_derivative_band(h_perp, self._scratch[0])
        d_par = self._normal_derivative_band(h_par, self._scratch[1])

        self._transport(h_par, self.region_pos)
        self._transport(d_perp, self.region_nonneg)
        self._transport(d_par, self.region_nonneg)

        g = self.ghost_flat
        perp_g = _flat(d_perp)[g] * self.ghost_phi
        par_g = _flat(h_par)[g] - _flat(d_par)[g] * self.ghost_phi
        _flat(hx)[g] = perp_g * self.ghost_nx + par_g * self.ghost_tx
        _flat(hy)[g] = perp_g * self.ghost_ny + par_g * self.ghost_ty

    def extend_e(self, ez: np.ndarray) -> None:
        """Write ghost values of ez in place (odd extension, zero trace)."""
        if not self.ghost_flat.size:
            return
        d_ez = self._normal_derivative_band(ez, self._scratch[0])
        self._transport(d_ez, self.region_nonneg)
        g = self.ghost_flat
        _flat(ez)[g] = _flat(d_ez)[g] * self.ghost_phi

    def extend_fields(self, hx: np.ndarray, hy: np.ndarray,
                      ez: np.ndarray) -> None:
        self.extend_h(hx, hy)
        self.extend_e(ez)


def extend_h(hx: np.ndarray, hy: np.ndarray, ls: LevelSetData,
             grid: GridTopology, classes: np.ndarray, fits: FitTable,
             **extender_kwargs):
    """Functional variant of :meth:`GhostExtender.extend_h`; returns new
    arrays with ghost nodes filled."""
    ext = GhostExtender(grid, ls, classes, fits, **extender_kwargs)
    hx2, hy2 = hx.astype(float, copy=True), hy.astype(float, copy=True)
    ext.extend_h(hx2, hy2)
    return hx2, hy2


def extend_e(ez: np.ndarray, ls: LevelSetData, grid: GridTopology,
             classes: np.ndarray, fits: FitTable,
             **extender_kwargs) -> np.ndarray:
    ext = GhostExtender(grid, ls, classes, fits, **extender_kwargs)
    ez2 = ez.astype(float, copy=True)
    ext.extend_e(ez2)
    return ez2
