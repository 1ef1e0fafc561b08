"""Fixed-point construction of the coupled solution on time slabs.

Each slab [t0, t0+tau0] is solved by Picard iteration.  The first iterate is
the slab's start profile frozen in time.  Every later iterate m:

1. solves the density equation by Godunov steps with the marker field frozen
   at iterate m-1's trajectory (linear interpolation between its snapshots);
2. transports both conserved markers v = rho z and w = rho psi with the
   density fluxes produced in step 1;
3. reconstructs z and u from the markers by prefix sums.

Convergence is declared when the contraction functional

    Phi_{m-1} = sup over stored times of
        ||rho_{m-1} - rho_m||_L1 + ||v_{m-1} - v_{m-2}||_L1

falls below tol_phi.  (The two terms deliberately carry different iterate
offsets; the symmetric variant with matching offsets is recorded alongside
for diagnostics.)  The slab length tau0 and the growth constant C_tilde are
advisory: convergence is decided by Phi, and the global driver halves tau0
and retries, up to five times, if a slab fails to converge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (CellField, Grid, InitialData, SystemState,
                   build_initial_state, check_margins, l1_norm, ratio_or,
                   state_from_arrays, total_variation)
from .errors import InputRangeError, PicardDivergenceError
from .model import ModelBounds, VelocityModel, require_valid_model
from .scalar import (SPEED_FLOOR, density_step_arrays, entropy_residual_arrays,
                     max_speed)
from .transport import marker_step_arrays

DEFAULT_ENTROPY_LEVELS = 11
MAX_TAU_HALVINGS = 5


@dataclass(frozen=True)
class SlabConfig:
    """Knobs of the slab iteration; None fields are computed from the data."""

    tau0: float | None = None
    m0: float | None = None
    tol_phi: float | None = None
    max_picard_iters: int = 25
    cfl: float = 0.5
    snapshots_per_slab: int = 32
    entropy_levels: int = DEFAULT_ENTROPY_LEVELS

    def __post_init__(self):
        if self.tau0 is not None and not self.tau0 > 0.0:
            raise InputRangeError(f"tau0 must be positive, got {self.tau0}")
        if self.m0 is not None and not self.m0 > 0.0:
            raise InputRangeError(f"m0 must be positive, got {self.m0}")
        if self.tol_phi is not None and not self.tol_phi > 0.0:
            raise InputRangeError(
                f"tol_phi must be positive, got {self.tol_phi}")
        if self.max_picard_iters < 2:
            raise InputRangeError("max_picard_iters must be >= 2")
        if not 0.0 < self.cfl <= 1.0:
            raise InputRangeError(f"cfl must be in (0, 1], got {self.cfl}")
        if self.snapshots_per_slab < 1:
            raise InputRangeError("snapshots_per_slab must be >= 1")
        if self.entropy_levels < 0:
            raise InputRangeError("entropy_levels must be >= 0")


def compute_M0(rho0: CellField) -> float:
    """Total-variation budget 4 TV(rho0) + 4."""
    return 4.0 * total_variation(rho0) + 4.0


def compute_tilde_C(model: VelocityModel, z0_sup: float, psi0_sup: float,
                    rho0_l1: float, u_max: float) -> float:
    """Growth constant assembled from closure sup norms on the working box."""
    if min(z0_sup, psi0_sup, rho0_l1) < 0.0 or u_max < 0.0:
        raise InputRangeError("sup norms must be nonnegative")
    b = model.sup_bounds(u_max)
    return (b.d_u_rho_sup * z0_sup
            + b.d_u_sup * z0_sup
            + b.d_uu_sup * z0_sup ** 2 * rho0_l1
            + b.d_u_sup * (psi0_sup * rho0_l1 + z0_sup))


def compute_tau0(tilde_c: float) -> float:
    """Largest tau0 <= 1/4 with exp(C tau0) - 1 <= 2 tau0 (bisected to 1e-10).

    For C >= 2 the inequality has no positive solution (e^{Ct}-1 >= Ct >= 2t),
    so the slab length falls back to the largest tau0 <= 1/4 with
    exp(C tau0) - 1 <= 1/2, i.e. min(1/4, ln(3/2)/C) -- the weakest condition
    under which the variation budget M0 still closes.  tau0 is advisory
    either way; convergence is decided by the contraction functional.
    """
    if tilde_c < 0.0:
        raise InputRangeError(f"tilde_c must be >= 0, got {tilde_c}")
    if tilde_c == 0.0:
        return 0.25

    def feasible(t):
        return math.expm1(tilde_c * t) - 2.0 * t <= 0.0

    if feasible(0.25):
        return 0.25
    lo, hi = 0.0, 0.25
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if mid > 0.0 and feasible(mid):
            lo = mid
        else:
            hi = mid
    if lo > 1e-9:
        return lo
    return min(0.25, math.log(1.5) / tilde_c)


@dataclass(frozen=True)
class ProblemContext:
    """Data-derived constants shared by the solver and the audits."""

    model: VelocityModel
    grid: Grid
    t_final: float
    u0_sup: float
    u0_min: float
    z0_sup: float
    psi0_sup: float
    rho0_l1: float
    tv0: float
    m0: float
    c_tilde: float
    tau0: float
    tol_phi: float
    wave_bound: float
    constant_u: bool
    bounds: ModelBounds

    def tv_envelope(self, t: float) -> float:
        """Implemented variation envelope M0 e^{Ct} + (e^{Ct} - 1)."""
        g = math.exp(self.c_tilde * t)
        return self.m0 * g + (g - 1.0)


@dataclass
class _IterateStats:
    rho_min: float = math.inf
    rho_max: float = -math.inf
    u_min: float = math.inf
    u_max: float = -math.inf
    z_sup: float = 0.0
    psi_sup: float = 0.0


@dataclass
class SlabIterate:
    """Snapshots of one Picard iterate at the slab's stored times."""

    times: np.ndarray
    rho: list
    v: list
    w: list
    u: list
    mass: list
    tv: list
    influx: list  # cumulative boundary influx since slab start
    stats: _IterateStats


class SlabRecorder:
    """Per-step diagnostics of one iterate's march (entropy, CFL, influx)."""

    def __init__(self, model: VelocityModel, h: float, k_levels):
        self.model = model
        self.h = h
        self.k_levels = np.asarray(k_levels, dtype=float)
        self.entropy_max = np.full(len(self.k_levels), -math.inf)
        self.influx = 0.0
        self.n_steps = 0
        self.max_cfl = 0.0

    def on_step(self, rho_old, rho_new, u, dt, flux):
        self.influx += dt * (flux[0] - flux[-1])
        self.n_steps += 1
        self.max_cfl = max(self.max_cfl,
                           dt * max_speed(rho_old, u, self.model) / self.h)
        for j, k in enumerate(self.k_levels):
            res = entropy_residual_arrays(rho_old, rho_new, u, float(k), dt,
                                          self.h, self.model)
            self.entropy_max[j] = max(self.entropy_max[j], float(res.max()))

    def entropy_table(self) -> dict:
        if self.n_steps == 0 or len(self.k_levels) == 0:
            return {}
        return {float(k): float(r)
                for k, r in zip(self.k_levels, self.entropy_max)}


def _merge_times(base: np.ndarray, extra, tol: float) -> np.ndarray:
    """Sorted union of time lattices, deduplicated to within tol."""
    allt = np.sort(np.concatenate((np.asarray(base, dtype=float),
                                   np.asarray(list(extra), dtype=float))))
    keep = [allt[0]]
    for t in allt[1:]:
        if t - keep[-1] > tol:
            keep.append(t)
    return np.asarray(keep)


def _frozen_iterate(rho, v, w, u, times, h, z_inf) -> SlabIterate:
    n = len(times)
    mass = float(h * rho.sum())
    tv = float(np.abs(np.diff(rho)).sum())
    z = z_inf + h * np.cumsum(w)
    psi = ratio_or(w, rho)
    stats = _IterateStats(float(rho.min()), float(rho.max()),
                          float(u.min()), float(u.max()),
                          float(np.abs(z).max()), float(np.abs(psi).max()))
    return SlabIterate(times=times, rho=[rho] * n, v=[v] * n, w=[w] * n,
                       u=[u] * n, mass=[mass] * n, tv=[tv] * n,
                       influx=[0.0] * n, stats=stats)


def _interp_u(iterate: SlabIterate):
    times = iterate.times

    def u_at(t: float) -> np.ndarray:
        j = int(np.searchsorted(times, t, side="right")) - 1
        j = min(max(j, 0), len(times) - 2)
        t0, t1 = times[j], times[j + 1]
        if t1 <= t0:
            return iterate.u[j]
        lam = min(max((t - t0) / (t1 - t0), 0.0), 1.0)
        if lam == 0.0:
            return iterate.u[j]
        return (1.0 - lam) * iterate.u[j] + lam * iterate.u[j + 1]

    return u_at


def _march_slab(rho, v, w, times, u_of_t, model, h, cfl, z_inf, u_inf,
                recorder: SlabRecorder) -> SlabIterate:
    """March (rho, v, w) through all stored times with a frozen marker field."""
    rho = rho.copy()
    v = v.copy()
    w = w.copy()
    stats = _IterateStats()
    out = SlabIterate(times=times, rho=[], v=[], w=[], u=[], mass=[], tv=[],
                      influx=[], stats=stats)

    def store():
        u_rec = u_inf + h * np.cumsum(v)
        z_rec = z_inf + h * np.cumsum(w)
        psi = ratio_or(w, rho)
        out.rho.append(rho.copy())
        out.v.append(v.copy())
        out.w.append(w.copy())
        out.u.append(u_rec)
        out.mass.append(float(h * rho.sum()))
        out.tv.append(float(np.abs(np.diff(rho)).sum()))
        out.influx.append(float(recorder.influx))
        stats.rho_min = min(stats.rho_min, float(rho.min()))
        stats.rho_max = max(stats.rho_max, float(rho.max()))
        stats.u_min = min(stats.u_min, float(u_rec.min()))
        stats.u_max = max(stats.u_max, float(u_rec.max()))
        stats.z_sup = max(stats.z_sup, float(np.abs(z_rec).max()))
        stats.psi_sup = max(stats.psi_sup, float(np.abs(psi).max()))

    t = float(times[0])
    store()
    time_tol = 1e-13 * max(1.0, abs(float(times[-1])))
    for t_next in times[1:]:
        t_next = float(t_next)
        while t_next - t > time_tol:
            u_now = u_of_t(t)
            dt_stable = cfl * h / max_speed(rho, u_now, model)
            remaining = t_next - t
            dt = min(dt_stable, remaining)
            rho_new, flux = density_step_arrays(rho, u_now, h, dt, model)
            v = marker_step_arrays(v, rho, flux, h, dt)
            w = marker_step_arrays(w, rho, flux, h, dt)
            recorder.on_step(rho, rho_new, u_now, dt, flux)
            rho = rho_new
            t = t_next if dt >= remaining * (1.0 - 1e-12) else t + dt
        t = t_next
        store()
    return out


def _phi_series(it_prev: SlabIterate, it_curr: SlabIterate,
                it_prevprev: SlabIterate, h: float) -> np.ndarray:
    """Phi at every stored time: L1 rho gap (prev, curr) plus L1 v gap
    (prev, prevprev)."""
    n = len(it_curr.times)
    out = np.empty(n)
    for s in range(n):
        out[s] = h * np.abs(it_prev.rho[s] - it_curr.rho[s]).sum() \
            + h * np.abs(it_prev.v[s] - it_prevprev.v[s]).sum()
    return out


def _phi_sym_series(it_curr: SlabIterate, it_prev: SlabIterate,
                    h: float) -> np.ndarray:
    n = len(it_curr.times)
    out = np.empty(n)
    for s in range(n):
        out[s] = h * np.abs(it_curr.rho[s] - it_prev.rho[s]).sum() \
            + h * np.abs(it_curr.v[s] - it_prev.v[s]).sum()
    return out


def phi_functional(curr: SystemState, prev: SystemState) -> float:
    """L1 density gap plus L1 gap of the conserved marker v (= d_x u)."""
    if abs(curr.t - prev.t) > 1e-12 * max(1.0, abs(curr.t)):
        raise InputRangeError(
            f"states are at different times: {curr.t} vs {prev.t}")
    h = curr.grid.h
    return float(h * np.abs(curr.rho.values - prev.rho.values).sum()
                 + h * np.abs(curr.v.values - prev.v.values).sum())


@dataclass(frozen=True)
class IterationRecord:
    index: int
    phi_mixed: float
    phi_sym: float
    ratio_mixed: float | None
    rho_min: float
    rho_max: float
    u_min: float
    u_max: float
    z_sup: float
    psi_sup: float
    tv_end: float


@dataclass
class PicardTrace:
    t0: float
    t1: float
    tol_phi: float
    records: list
    converged: bool
    iterations: int
    stop_reason: str

    def phi_history(self) -> list:
        return [r.phi_mixed for r in self.records]


def picard_slab(state: SystemState, t0: float, t1: float,
                model: VelocityModel, ctx: ProblemContext, cfg: SlabConfig,
                extra_events=()):
    """Iterate one slab to convergence.

    Returns (final SlabIterate, PicardTrace, SlabRecorder of the final
    iterate).  Raises PicardDivergenceError carrying the trace when tol_phi
    is not reached within max_picard_iters iterates.
    """
    if not t1 > t0:
        raise InputRangeError(f"need t1 > t0, got [{t0}, {t1}]")
    grid = state.grid
    h = grid.h
    time_tol = 1e-12 * max(1.0, abs(t1))
    base = np.linspace(t0, t1, cfg.snapshots_per_slab + 1)
    events = _merge_times(base, extra_events, time_tol)

    rho0 = state.rho.values
    v0 = state.v.values
    w0 = state.w.values
    u0 = state.u.values
    k_levels = (np.linspace(0.0, 1.0, cfg.entropy_levels)
                if cfg.entropy_levels > 0 else np.empty(0))

    frozen = _frozen_iterate(rho0, v0, w0, u0, events, h, state.z_inf)
    prev_prev = frozen
    prev = frozen
    records = []
    tol = ctx.tol_phi
    last_phi = None
    trace = PicardTrace(t0=t0, t1=t1, tol_phi=tol, records=records,
                        converged=False, iterations=1, stop_reason="")
    for m in range(2, cfg.max_picard_iters + 1):
        recorder = SlabRecorder(model, h, k_levels)
        curr = _march_slab(rho0, v0, w0, events, _interp_u(prev), model, h,
                           cfg.cfl, state.z_inf, state.u_inf, recorder)
        phi_mixed = float(_phi_series(prev, curr, prev_prev, h).max())
        phi_sym = float(_phi_sym_series(curr, prev, h).max())
        ratio = (phi_mixed / last_phi
                 if last_phi is not None and last_phi > 0.0 else None)
        records.append(IterationRecord(
            index=m, phi_mixed=phi_mixed, phi_sym=phi_sym, ratio_mixed=ratio,
            rho_min=curr.stats.rho_min, rho_max=curr.stats.rho_max,
            u_min=curr.stats.u_min, u_max=curr.stats.u_max,
            z_sup=curr.stats.z_sup, psi_sup=curr.stats.psi_sup,
            tv_end=curr.tv[-1]))
        trace.iterations = m
        if phi_mixed <= tol:
            trace.converged = True
            trace.stop_reason = f"phi {phi_mixed:.3e} <= tol {tol:.3e}"
            return curr, trace, recorder
        prev_prev = prev
        prev = curr
        last_phi = phi_mixed
    trace.stop_reason = (f"phi still {last_phi:.3e} after "
                         f"{cfg.max_picard_iters} iterates (tol {tol:.3e})")
    raise PicardDivergenceError(
        f"slab [{t0:g}, {t1:g}] did not converge: {trace.stop_reason}", trace)


@dataclass
class SlabSummary:
    t0: float
    t1: float
    trace: PicardTrace
    entropy_max: dict
    n_steps: int
    max_cfl: float


@dataclass
class Trajectory:
    """Solver output: states at the output times plus per-slab diagnostics."""

    states: list
    output_times: np.ndarray
    slabs: list
    series_times: np.ndarray
    mass_series: np.ndarray
    tv_series: np.ndarray
    influx_series: np.ndarray
    context: ProblemContext

    @property
    def grid(self) -> Grid:
        return self.states[0].grid

    def final_state(self) -> SystemState:
        return self.states[-1]

    def state_at(self, t: float) -> SystemState:
        times = np.asarray([s.t for s in self.states])
        j = int(np.argmin(np.abs(times - t)))
        if abs(times[j] - t) > 1e-9 * max(1.0, abs(t)):
            raise InputRangeError(f"no stored state at t={t}")
        return self.states[j]


def _wave_bound(model: VelocityModel, u_max: float) -> float:
    lattice = np.linspace(0.0, max(u_max, 0.0), 65)
    speed = float(np.max(model.max_wave_speed(lattice)))
    bounds = model.sup_bounds(u_max)
    return max(bounds.v_sup, speed, SPEED_FLOOR)


def make_context(data: InitialData, grid: Grid, t_final: float,
                 model: VelocityModel, cfg: SlabConfig
                 ) -> tuple[ProblemContext, SystemState]:
    """Validate everything and assemble the run constants."""
    if not t_final > 0.0:
        raise InputRangeError(f"t_final must be positive, got {t_final}")
    state0 = build_initial_state(data, grid)
    u_max = float(state0.u.values.max())
    require_valid_model(model, u_max)
    wave = _wave_bound(model, u_max)
    check_margins(state0, t_final, wave)
    tv0 = total_variation(state0.rho)
    rho0_l1 = l1_norm(state0.rho)
    z0_sup = float(np.abs(state0.z.values).max())
    psi0_sup = float(np.abs(state0.psi.values).max())
    m0 = cfg.m0 if cfg.m0 is not None else compute_M0(state0.rho)
    c_tilde = compute_tilde_C(model, z0_sup, psi0_sup, rho0_l1, u_max)
    tau0 = cfg.tau0 if cfg.tau0 is not None else compute_tau0(c_tilde)
    tol_phi = cfg.tol_phi if cfg.tol_phi is not None \
        else max(grid.h * rho0_l1, 1e-14)
    constant_u = bool(np.abs(state0.v.values).max() <= 1e-14)
    ctx = ProblemContext(
        model=model, grid=grid, t_final=float(t_final),
        u0_sup=u_max, u0_min=float(state0.u.values.min()),
        z0_sup=z0_sup, psi0_sup=psi0_sup, rho0_l1=rho0_l1, tv0=tv0,
        m0=m0, c_tilde=c_tilde, tau0=tau0, tol_phi=tol_phi,
        wave_bound=wave, constant_u=constant_u,
        bounds=model.sup_bounds(u_max))
    return ctx, state0


def solve_global(data: InitialData, grid: Grid, t_final: float,
                 model: VelocityModel, cfg: SlabConfig | None = None,
                 n_output: int = 32) -> Trajectory:
    """Chain converged slabs from 0 to t_final.

    States are stored at n_output+1 uniform output times.  A slab that fails
    to converge triggers halving of the slab length, at most five times per
    run, after which the divergence error propagates with its trace.
    """
    cfg = cfg or SlabConfig()
    if n_output < 1:
        raise InputRangeError("n_output must be >= 1")
    ctx, state0 = make_context(data, grid, t_final, model, cfg)
    output_times = np.linspace(0.0, t_final, n_output + 1)
    time_tol = 1e-12 * max(1.0, t_final)

    states = [state0]
    slabs = []
    series_times = [0.0]
    mass_series = [state0.mass()]
    tv_series = [total_variation(state0.rho)]
    influx_series = [0.0]

    t = 0.0
    tau = ctx.tau0
    state = state0
    halvings = 0
    cum_influx = 0.0
    while t < t_final - time_tol:
        t1 = min(t + tau, t_final)
        inner = output_times[(output_times > t + time_tol)
                             & (output_times <= t1 + time_tol)]
        try:
            iterate, trace, recorder = picard_slab(
                state, t, t1, model, ctx, cfg, extra_events=inner)
        except PicardDivergenceError:
            halvings += 1
            if halvings > MAX_TAU_HALVINGS:
                raise
            tau *= 0.5
            continue
        for s in range(1, len(iterate.times)):
            ts = float(iterate.times[s])
            series_times.append(ts)
            mass_series.append(iterate.mass[s])
            tv_series.append(iterate.tv[s])
            influx_series.append(cum_influx + iterate.influx[s])
        for ot in inner:
            s = int(np.argmin(np.abs(iterate.times - ot)))
            states.append(state_from_arrays(
                float(ot), iterate.rho[s], iterate.v[s], iterate.w[s],
                state.z_inf, state.u_inf, grid))
        cum_influx += iterate.influx[-1]
        slabs.append(SlabSummary(t0=t, t1=t1, trace=trace,
                                 entropy_max=recorder.entropy_table(),
                                 n_steps=recorder.n_steps,
                                 max_cfl=recorder.max_cfl))
        state = state_from_arrays(t1, iterate.rho[-1], iterate.v[-1],
                                  iterate.w[-1], state.z_inf, state.u_inf,
                                  grid)
        t = t1
    return Trajectory(states=states, output_times=output_times, slabs=slabs,
                      series_times=np.asarray(series_times),
                      mass_series=np.asarray(mass_series),
                      tv_series=np.asarray(tv_series),
                      influx_series=np.asarray(influx_series),
                      context=ctx)
