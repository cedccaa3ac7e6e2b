"""Two-reservoir engine cycle: forward ramp through the cold band, swap to
the hot reservoir, backward ramp through the hot band.

The working substance S couples alternately to a cold and a hot phonon
chain.  The full tripartite Gaussian state (S + both chains) is tracked
exactly: the active S+chain pair is propagated through the ramp while the
detached chain rotates freely in its normal modes, so heat bookkeeping and
inter-cycle correlations carry no approximation beyond the integrator
tolerance.  Between strokes the decoupled S is re-targeted to the other
reservoir's detuning window by the exact adiabatic rescaling (constant
action), and the instantaneous coupling switches are performed far from
resonance with their energy cost recorded.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import IntegratorConfig, evolve_gaussian, propagate, static_propagator
from .errors import ConfigError, SpeedBoundViolated, SwitchTooCloseToResonance
from .protocols import ChainParams, ProtocolSpec, assemble_chain_form
from .ramp import build_schedule, system_frequency
from .states import GaussianState, bath_basis, oscillator_state, product_state, thermal_state


@dataclass(frozen=True)
class EngineConfig:
    """Cycle parameters; reservoirs share the coupling strengths and size."""

    omega_C: float = 1.0
    omega_H: float = 2.0
    T_H: float = 100.0
    r: float = 0.96                      # (T_C/T_H)/(omega_C/omega_H)
    n_bath: int = 100
    gamma_SB: float = 0.02
    gamma_BB: float = 0.03
    #: peak ramp rate in units of omega_bath * gamma_SB^2 (per stroke)
    speed: float = 10.0
    protocol: ProtocolSpec = field(default_factory=lambda: ProtocolSpec("rwff"))
    relax_policy: str = "wait"           # or "fresh"
    wait_factor: float = 5.0             # wait >= factor / (omega_B gamma_BB)
    n_warmup: int = 2
    #: extra detuning beyond the band edge 2 gamma_BB where switches happen
    margin: float = 0.0                  # 0 -> automatic
    delta_lambda_frac: float = 0.2
    ramp_profile: str = "smoothstep"
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    trace_points: int = 0

    def __post_init__(self):
        if not 0.0 < self.omega_C < self.omega_H:
            raise ConfigError("require 0 < omega_C < omega_H")
        if not 0.0 < self.r:
            raise ConfigError("r must be positive")
        if self.relax_policy not in ("wait", "fresh"):
            raise ConfigError("relax_policy must be 'wait' or 'fresh'")
        if self.margin == 0.0:
            m = max(2.0 * self.gamma_SB,
                    3.0 * max(self.gamma_SB, self.gamma_BB) - 2.0 * self.gamma_BB)
            object.__setattr__(self, "margin", m)
        lam_max = 2.0 * self.gamma_BB + self.margin
        if lam_max < 3.0 * max(self.gamma_SB, self.gamma_BB):
            raise SwitchTooCloseToResonance(
                f"switch at |lambda|={lam_max} < 3 max(gamma_SB, gamma_BB)")

    @property
    def T_C(self) -> float:
        return self.r * self.T_H * self.omega_C / self.omega_H

    @property
    def lambda_extent(self) -> float:
        return 2.0 * self.gamma_BB + self.margin

    def chain(self, omega_B: float) -> ChainParams:
        return ChainParams(self.n_bath, omega_B, self.gamma_SB, self.gamma_BB)


@dataclass
class CycleResult:
    Q_H: float
    Q_C: float
    W: float
    eta: float
    P: float
    tau: float
    #: signed energy changes and diagnostics for bookkeeping checks
    ledger: dict
    traces: dict


def eta_carnot(config: EngineConfig) -> float:
    return 1.0 - config.T_C / config.T_H


def eta_slow(config: EngineConfig) -> float:
    """Quasistatic efficiency from the thermalization + isothermal heats."""
    r, g = config.r, config.gamma_BB
    if not 0.0 < r <= 1.0:
        raise ConfigError("eta_slow requires 0 < r <= 1")
    return eta_carnot(config) - (config.T_C / config.T_H) * (1.0 - r) ** 2 \
        / (r * (1.0 - r + 2.0 * g))


def q_slow(config: EngineConfig) -> tuple[float, float]:
    """(Q_H, Q_C) of the quasistatic cycle with the exact bandwidth logarithm."""
    D = config.T_H / config.omega_H - config.T_C / config.omega_C
    L = math.log((1.0 + config.gamma_BB) / (1.0 - config.gamma_BB))
    return config.omega_H * D + config.T_H * L, config.omega_C * D + config.T_C * L


def q_fast(config: EngineConfig) -> tuple[float, float]:
    """(Q_H, Q_C) of the fast swap cycle including bandwidth corrections."""
    g2 = config.gamma_BB ** 2
    D = (config.T_H / config.omega_H - config.T_C / config.omega_C) * (1.0 + g2)
    return (config.omega_H * D - 2.0 * config.T_H * g2,
            config.omega_C * D + 2.0 * config.T_C * g2)


def r_0(omega_C: float, omega_H: float, gamma_BB: float) -> float:
    """Breakdown ratio where the fast cycle ceases to extract work."""
    return 1.0 - 2.0 * gamma_BB ** 2 * (omega_H + omega_C) / (omega_H - omega_C)


def r_min(gamma_BB: float) -> float:
    """Ratio minimizing the fast-cycle deviation from the Carnot efficiency."""
    return (1.0 - 2.0 * gamma_BB - gamma_BB ** 2) / (1.0 + gamma_BB ** 2)


def eta_fast(config: EngineConfig) -> float:
    from .errors import BeyondBreakdown

    r, g2 = config.r, config.gamma_BB ** 2
    if r >= r_0(config.omega_C, config.omega_H, config.gamma_BB):
        raise BeyondBreakdown(f"r={r} >= r_0")
    ratio = ((1.0 - r) * (1.0 + g2) + 2.0 * r * g2) \
        / ((1.0 - r) * (1.0 + g2) - 2.0 * g2)
    return 1.0 - (config.omega_C / config.omega_H) * ratio


def eta_gap(config: EngineConfig) -> float:
    """Carnot deficit eta_C - eta of the fast cycle."""
    r, g2 = config.r, config.gamma_BB ** 2
    return (config.omega_C / config.omega_H) \
        * ((1.0 - r) ** 2 * (1.0 + g2) + 4.0 * r * g2) \
        / ((1.0 - r) * (1.0 + g2) - 2.0 * g2)


def power(W: float, tau: float) -> float:
    return W / tau


# --------------------------------------------------------------------------
# cycle simulation
# --------------------------------------------------------------------------

class _EngineState:
    """Tripartite Gaussian state with block bookkeeping.

    Site ordering: x = (X, c_1..c_N, h_1..h_N), p likewise; mode counts
    n_tot = 1 + 2 N.
    """

    def __init__(self, config: EngineConfig):
        self.cfg = config
        N = config.n_bath
        self.N = N
        self.n_tot = 1 + 2 * N
        self.bath_C = bath_basis(N, config.omega_C, config.gamma_BB)
        self.bath_H = bath_basis(N, config.omega_H, config.gamma_BB)
        lam = config.lambda_extent
        # S parked at the cold-side start, carrying the hot occupation
        self.omega_S = math.sqrt(system_frequency(-lam, config.omega_C))
        s0 = oscillator_state(config.T_H / config.omega_H, self.omega_S)
        state = product_state(s0, thermal_state(config.T_C, self.bath_C),
                              thermal_state(config.T_H, self.bath_H))
        self.mean = state.mean
        self.cov = state.cov

    # ---- index helpers ----
    def _indices(self, which: str) -> np.ndarray:
        N, n = self.N, self.n_tot
        if which == "C":
            sites = np.arange(1, N + 1)
        elif which == "H":
            sites = np.arange(N + 1, 2 * N + 1)
        else:  # S + chain
            raise ValueError(which)
        return np.concatenate([sites, n + sites])

    def _active_indices(self, which: str) -> np.ndarray:
        N, n = self.N, self.n_tot
        start = 1 if which == "C" else N + 1
        sites = np.concatenate([[0], np.arange(start, start + N)])
        return np.concatenate([sites, n + sites])

    # ---- observables ----
    def bath_hamiltonian(self, which: str) -> np.ndarray:
        cfg = self.cfg
        w2 = (cfg.omega_C if which == "C" else cfg.omega_H) ** 2
        N = self.N
        H = np.zeros((2 * N, 2 * N))
        for j in range(N):
            H[j, j] = w2
            H[N + j, N + j] = 1.0
        for j in range(N - 1):
            H[j, j + 1] = H[j + 1, j] = -cfg.gamma_BB * w2
        return H

    def bath_energy(self, which: str) -> float:
        idx = self._indices(which)
        cov = self.cov[np.ix_(idx, idx)]
        mean = self.mean[idx]
        H = self.bath_hamiltonian(which)
        return float(0.5 * np.trace(H @ cov) + 0.5 * mean @ H @ mean)

    def system_energy(self) -> float:
        n = self.n_tot
        w2 = self.omega_S ** 2
        return float(0.5 * (self.cov[n, n] + self.mean[n] ** 2)
                     + 0.5 * w2 * (self.cov[0, 0] + self.mean[0] ** 2))

    def system_occupation(self) -> float:
        return self.system_energy() / self.omega_S

    def coupling_energy(self, which: str) -> float:
        """<H_SB> for the S-to-chain coupling at the attachment site."""
        cfg = self.cfg
        w2 = (cfg.omega_C if which == "C" else cfg.omega_H) ** 2
        N = self.N
        site = (1 if which == "C" else N + 1) + (cfg.chain(1.0).attach_site - 1)
        return float(-cfg.gamma_SB * w2
                     * (self.cov[0, site] + self.mean[0] * self.mean[site]))

    # ---- evolution ----
    def apply_full(self, M_active: np.ndarray, which: str, duration: float):
        """Active-pair propagator + exact free rotation of the passive chain."""
        n = self.n_tot
        M = np.eye(2 * n)
        act = self._active_indices(which)
        M[np.ix_(act, act)] = M_active
        other = "H" if which == "C" else "C"
        basis = self.bath_H if other == "H" else self.bath_C
        idx = self._indices(other)
        M[np.ix_(idx, idx)] = _free_rotation(basis, duration)
        self.mean = M @ self.mean
        self.cov = M @ self.cov @ M.T

    def free_evolve(self, duration: float):
        """All parts decoupled: S rotates trivially (energies unaffected)."""
        n = self.n_tot
        M = np.eye(2 * n)
        c, s = math.cos(self.omega_S * duration), math.sin(self.omega_S * duration)
        w = self.omega_S
        M[0, 0] = c
        M[0, n] = s / w
        M[n, 0] = -s * w
        M[n, n] = c
        for which in ("C", "H"):
            basis = self.bath_C if which == "C" else self.bath_H
            idx = self._indices(which)
            M[np.ix_(idx, idx)] = _free_rotation(basis, duration)
        self.mean = M @ self.mean
        self.cov = M @ self.cov @ M.T

    def retarget(self, omega_new: float):
        """Exact adiabatic rescaling of the decoupled S to a new frequency."""
        n = self.n_tot
        dx = math.sqrt(self.omega_S / omega_new)
        D = np.ones(2 * n)
        D[0] = dx
        D[n] = 1.0 / dx
        self.mean = D * self.mean
        self.cov = D[:, None] * self.cov * D[None, :]
        self.omega_S = omega_new

    def refresh_baths(self):
        """Fresh-site policy: reconnect to pristine thermal chain segments."""
        n = self.n_tot
        for which, T, basis in (("C", self.cfg.T_C, self.bath_C),
                                ("H", self.cfg.T_H, self.bath_H)):
            idx = self._indices(which)
            self.cov[np.ix_(idx, np.arange(2 * n))] = 0.0
            self.cov[np.ix_(np.arange(2 * n), idx)] = 0.0
            self.mean[idx] = 0.0
            th = thermal_state(T, basis)
            self.cov[np.ix_(idx, idx)] = th.cov


def _free_rotation(basis, duration: float) -> np.ndarray:
    w = basis.frequencies
    c, s = np.cos(w * duration), np.sin(w * duration)
    N = w.size
    R = np.zeros((2 * N, 2 * N))
    R[:N, :N] = np.diag(c)
    R[:N, N:] = np.diag(s / w)
    R[N:, :N] = np.diag(-s * w)
    R[N:, N:] = np.diag(c)
    T = basis.transform
    return T.T @ R @ T


def _stroke(state: _EngineState, which: str, direction: int,
            config: EngineConfig) -> dict:
    """One thermal stroke: attach, ramp across the band, detach."""
    cfg = config
    omega_B = cfg.omega_C if which == "C" else cfg.omega_H
    lam = cfg.lambda_extent
    lam_i, lam_f = (-lam, lam) if direction > 0 else (lam, -lam)
    v = direction * cfg.speed * omega_B * cfg.gamma_SB ** 2
    bound = 2.0 * omega_B * abs(lam_f - lam_i) * cfg.gamma_BB
    if abs(v) > bound and cfg.relax_policy == "wait":
        warnings.warn(f"ramp speed {abs(v)} exceeds the bath-relaxation bound "
                      f"{bound}", SpeedBoundViolated, stacklevel=3)
    schedule = build_schedule(lam_i, lam_f, cfg.delta_lambda_frac * 2.0 * abs(lam),
                              v, cfg.ramp_profile)
    params = cfg.chain(omega_B)

    e_bath_0 = state.bath_energy(which)
    e_sys_0 = state.system_energy()
    switch_on = state.coupling_energy(which)

    chk = None
    if cfg.trace_points:
        chk = list(np.linspace(0.0, schedule.duration, cfg.trace_points + 1)[1:-1])
    icfg = IntegratorConfig(rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol)
    out = propagate(cfg.protocol, params, schedule, icfg, checkpoints=chk)
    prop, partials = (out if chk else (out, []))

    trace = {}
    if partials:
        snap_cov, snap_mean = state.cov.copy(), state.mean.copy()
        ns, ts = [], []
        for pp in partials:
            probe = _EngineState.__new__(_EngineState)
            probe.cfg, probe.N, probe.n_tot = cfg, state.N, state.n_tot
            probe.bath_C, probe.bath_H = state.bath_C, state.bath_H
            probe.omega_S = math.sqrt(system_frequency(schedule(pp.t_end), omega_B))
            probe.cov, probe.mean = snap_cov.copy(), snap_mean.copy()
            probe.apply_full(pp.M, which, pp.t_end)
            ns.append(probe.system_occupation())
            ts.append(pp.t_end)
        trace = {"t": np.asarray(ts),
                 "lam": np.asarray([schedule(t) for t in ts]),
                 "n_S": np.asarray(ns)}

    state.apply_full(prop.M, which, schedule.duration)
    state.omega_S = math.sqrt(system_frequency(lam_f, omega_B))

    switch_off = state.coupling_energy(which)
    e_bath_1 = state.bath_energy(which)
    e_sys_1 = state.system_energy()
    return {
        "which": which,
        "duration": schedule.duration,
        "dE_bath": e_bath_1 - e_bath_0,
        "dE_sys": e_sys_1 - e_sys_0,
        "switch_energy": abs(switch_on) + abs(switch_off),
        "defect": prop.defect,
        "n_steps": prop.n_steps,
        "trace": trace,
    }


def run_cycle(config: EngineConfig) -> CycleResult:
    """Simulate warm-up cycles plus the measured one; returns the latter."""
    state = _EngineState(config)
    result = None
    for cycle in range(config.n_warmup + 1):
        measured = cycle == config.n_warmup
        result = _one_cycle(state, config, measured)
    return result


def _one_cycle(state: _EngineState, config: EngineConfig,
               measured: bool) -> CycleResult:
    cfg = config
    lam = cfg.lambda_extent

    if cfg.relax_policy == "fresh":
        state.refresh_baths()

    e_sys_start = state.system_energy()
    cold = _stroke(state, "C", +1, cfg)

    # adiabatic re-targeting to the hot window's upper edge
    state.retarget(math.sqrt(system_frequency(lam, cfg.omega_H)))
    hot = _stroke(state, "H", -1, cfg)

    # park S back at the cold start
    state.retarget(math.sqrt(system_frequency(-lam, cfg.omega_C)))
    e_sys_end = state.system_energy()

    if cfg.relax_policy == "wait":
        omega_min = cfg.omega_C
        wait = cfg.wait_factor / (omega_min * cfg.gamma_BB) if cfg.gamma_BB else 0.0
        if wait:
            state.free_evolve(wait)

    Q_C = cold["dE_bath"]
    Q_H = -hot["dE_bath"]
    W = Q_H - Q_C
    tau = cold["duration"] + hot["duration"]
    ledger = {
        "Q_C_signed": cold["dE_bath"],
        "Q_H_signed": hot["dE_bath"],
        "dE_sys_cycle": e_sys_end - e_sys_start,
        "switch_energy": cold["switch_energy"] + hot["switch_energy"],
        "max_defect": max(cold["defect"], hot["defect"]),
        "n_steps": cold["n_steps"] + hot["n_steps"],
    }
    traces = {"cold": cold["trace"], "hot": hot["trace"]} if measured else {}
    return CycleResult(Q_H=Q_H, Q_C=abs(Q_C), W=W,
                       eta=W / Q_H if Q_H > 0 else math.nan,
                       P=W / tau, tau=tau, ledger=ledger, traces=traces)
