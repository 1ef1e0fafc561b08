"""Godunov solver for the density equation with a frozen marker field.

The density sees the marker only through the flux f(rho, u) = rho V(rho, u).
One explicit step with interface marker values u_{i+1/2} = (u_i + u_{i+1})/2:

    rho_i^+ = rho_i - (dt/h) (F_{i+1/2} - F_{i-1/2}),
    F_{i+1/2} = min over [rho_i, rho_{i+1}] of f(., u_{i+1/2})   (rho_i <= rho_{i+1})
              = max over [rho_{i+1}, rho_i] of f(., u_{i+1/2})   (otherwise).

Two ghost cells per side copy the edge cells; with the domain-margin rule the
edge cells never move, so this is exact outflow handling.  Since f(0, u) =
f(1, u) = 0 for every admissible closure, the scheme preserves 0 <= rho <= 1
regardless of how u varies in space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import CellField, Grid, SystemState
from .errors import CflViolationError, InputRangeError
from .model import VelocityModel

SPEED_FLOOR = 1e-12
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def pad2(a: np.ndarray) -> np.ndarray:
    """Two copy-ghost cells on each side."""
    return np.concatenate((a[:1], a[:1], a, a[-1:], a[-1:]))


def interface_marker(u: np.ndarray) -> np.ndarray:
    """Arithmetic interface averages, one value per interface (n+1)."""
    ue = pad2(u)
    return 0.5 * (ue[1:-2] + ue[2:-1])


def _golden_extremum(flux_of, lo, hi, maximize, n_sample=64, iters=48):
    """Vectorized extremum of f over [lo, hi]: dense sampling, then a
    golden-section refinement around the best sample."""
    sign = 1.0 if maximize else -1.0
    ts = np.linspace(0.0, 1.0, n_sample)[:, None]
    xs = lo[None, :] + (hi - lo)[None, :] * ts
    vals = sign * flux_of(xs)
    best = vals.max(axis=0)
    idx = vals.argmax(axis=0)
    a_idx = np.clip(idx - 1, 0, n_sample - 1)
    b_idx = np.clip(idx + 1, 0, n_sample - 1)
    a = np.take_along_axis(xs, a_idx[None, :], axis=0)[0]
    b = np.take_along_axis(xs, b_idx[None, :], axis=0)[0]
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc = sign * flux_of(c)
    fd = sign * flux_of(d)
    for _ in range(iters):
        take_left = fc >= fd
        b = np.where(take_left, d, b)
        a = np.where(take_left, a, c)
        d_new = np.where(take_left, c, a + _INV_PHI * (b - a))
        c_new = np.where(take_left, b - _INV_PHI * (b - a), d)
        fd_new = np.where(take_left, fc, sign * flux_of(d_new))
        fc_new = np.where(take_left, sign * flux_of(c_new), fd)
        c, d, fc, fd = c_new, d_new, fc_new, fd_new
    refined = sign * flux_of(0.5 * (a + b))
    return sign * np.maximum(best, refined)


def godunov_flux(rho_left, rho_right, u_interface, model: VelocityModel):
    """Exact-Riemann (Godunov) interface flux of the density equation.

    For built-in closures the flux is unimodal in rho with the critical point
    known in closed form, so the minimum branch is the endpoint minimum and
    the maximum branch checks the critical point.  Generic closures fall back
    to dense sampling plus golden-section refinement on each interface.
    """
    rl = np.asarray(rho_left, dtype=float)
    rr = np.asarray(rho_right, dtype=float)
    ui = np.asarray(u_interface, dtype=float)
    scalar = rl.ndim == 0 and rr.ndim == 0 and ui.ndim == 0
    rl, rr, ui = np.atleast_1d(rl, rr, ui)
    rl, rr, ui = np.broadcast_arrays(rl, rr, ui)

    f_l = model.flux(rl, ui)
    f_r = model.flux(rr, ui)
    crit = model.critical_density(ui)
    if crit is not None:
        crit = np.broadcast_to(np.asarray(crit, dtype=float), rl.shape)
        f_min = np.minimum(f_l, f_r)
        lo = np.minimum(rl, rr)
        hi = np.maximum(rl, rr)
        f_max = np.where((lo <= crit) & (crit <= hi),
                         model.flux(np.clip(crit, lo, hi), ui),
                         np.maximum(f_l, f_r))
    else:
        lo = np.minimum(rl, rr)
        hi = np.maximum(rl, rr)
        flux_of = lambda r: model.flux(r, ui[None, :] if r.ndim > 1 else ui)
        f_min = _golden_extremum(flux_of, lo, hi, maximize=False)
        f_max = _golden_extremum(flux_of, lo, hi, maximize=True)
        f_min = np.minimum(f_min, np.minimum(f_l, f_r))
        f_max = np.maximum(f_max, np.maximum(f_l, f_r))
    out = np.where(rl <= rr, f_min, f_max)
    return float(out[0]) if scalar else out


def max_speed(rho: np.ndarray, u: np.ndarray, model: VelocityModel) -> float:
    """Largest wave speed seen by the pair (rho, u), floored at 1e-12."""
    lam1, lam2 = model.eigenvalues(rho, u)
    s = max(float(np.abs(lam1).max()), float(np.abs(lam2).max()),
            float(np.max(model.max_wave_speed(u))))
    return max(s, SPEED_FLOOR)


def cfl_dt(state: SystemState, model: VelocityModel, cfl: float) -> float:
    """Stable step dt = cfl * h / s_max (uncapped; callers cap at events)."""
    if not 0.0 < cfl <= 1.0:
        raise InputRangeError(f"cfl must be in (0, 1], got {cfl}")
    return cfl * state.grid.h / max_speed(state.rho.values, state.u.values,
                                          model)


@dataclass(frozen=True)
class InterfaceFluxes:
    """Interface flux values stamped with the step they belong to."""

    values: np.ndarray  # n_cells + 1 entries, F_{i-1/2} for i = 0..n
    h: float
    dt: float

    @property
    def n_cells(self) -> int:
        return len(self.values) - 1


@dataclass(frozen=True)
class StepDiagnostics:
    dt: float
    max_cfl: float
    mass_before: float
    mass_after: float
    boundary_influx: float
    rho_min: float
    rho_max: float


def density_step_arrays(rho: np.ndarray, u: np.ndarray, h: float, dt: float,
                        model: VelocityModel):
    """One Godunov step on raw arrays; returns (rho_new, interface fluxes)."""
    s = max_speed(rho, u, model)
    if dt * s > h * (1.0 + 1e-9):
        raise CflViolationError(
            f"dt={dt:.3e} exceeds stable limit h/s_max={h / s:.3e}")
    re = pad2(rho)
    flux = godunov_flux(re[1:-2], re[2:-1], interface_marker(u), model)
    rho_new = rho - (dt / h) * (flux[1:] - flux[:-1])
    return rho_new, flux


def step_density(state: SystemState, dt: float, model: VelocityModel):
    """One density step from a full state (marker frozen at state.u).

    Returns (rho_new, InterfaceFluxes, StepDiagnostics).
    """
    if dt <= 0.0:
        raise InputRangeError(f"dt must be positive, got {dt}")
    grid = state.grid
    rho = state.rho.values
    u = state.u.values
    rho_new, flux = density_step_arrays(rho, u, grid.h, dt, model)
    mass_before = grid.h * rho.sum()
    mass_after = grid.h * rho_new.sum()
    diag = StepDiagnostics(
        dt=dt,
        max_cfl=dt * max_speed(rho, u, model) / grid.h,
        mass_before=float(mass_before),
        mass_after=float(mass_after),
        boundary_influx=float(dt * (flux[0] - flux[-1])),
        rho_min=float(rho_new.min()),
        rho_max=float(rho_new.max()),
    )
    return (CellField(rho_new, grid),
            InterfaceFluxes(flux, grid.h, dt),
            diag)


def entropy_residual_arrays(rho_old: np.ndarray, rho_new: np.ndarray,
                            u: np.ndarray, k: float, dt: float, h: float,
                            model: VelocityModel) -> np.ndarray:
    """Discrete Kruzhkov residual at level k for one recorded step.

    R_i = (|rho_i^+ - k| - |rho_i - k|)/dt + (Q_{i+1/2} - Q_{i-1/2})/h
          + s_i * k * dV/du(k, u_i) * (u_{i+1} - u_{i-1})/(2h),

    with the Godunov entropy flux Q(a,b) = F(a v k, b v k) - F(a ^ k, b ^ k)
    and s_i = sign(rho_i - k), ties at rho_i == k broken by sign(rho_i^+ - k)
    (the selection of the set-valued sign that keeps the cell inequality).
    The solution satisfies R_i <= tol_e = 10 h.
    """
    if not 0.0 <= k <= 1.0:
        raise InputRangeError(f"entropy level k must be in [0,1], got {k}")
    re = pad2(rho_old)
    ue = pad2(u)
    u_if = interface_marker(u)
    a = re[1:-2]
    b = re[2:-1]
    q_hi = godunov_flux(np.maximum(a, k), np.maximum(b, k), u_if, model)
    q_lo = godunov_flux(np.minimum(a, k), np.minimum(b, k), u_if, model)
    q = q_hi - q_lo
    sgn = np.sign(rho_old - k)
    sgn = np.where(sgn == 0.0, np.sign(rho_new - k), sgn)
    du_center = (ue[3:-1] - ue[1:-3]) / (2.0 * h)
    src = sgn * k * model.d_u(k, u) * du_center
    return ((np.abs(rho_new - k) - np.abs(rho_old - k)) / dt
            + (q[1:] - q[:-1]) / h + src)


def entropy_residual(rho_old: CellField, rho_new: CellField, u: CellField,
                     k: float, dt: float, model: VelocityModel) -> CellField:
    """CellField wrapper around entropy_residual_arrays."""
    if dt <= 0.0:
        raise InputRangeError(f"dt must be positive, got {dt}")
    grid = rho_old.grid
    res = entropy_residual_arrays(rho_old.values, rho_new.values, u.values,
                                  k, dt, grid.h, model)
    return CellField(res, grid)
