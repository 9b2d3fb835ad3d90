"""Large-N saddle of the SYK echo on the multi-round time-reversal contour.

The melonic two-point function G on the 4n-branch contour obeys the
integral Dyson equation G = G0 + G0*(W Sigma[G] W)*G, solved by a damped
fixed-point iteration with a dense LU solve per step.  The self-energy
holds three pieces:

  * melon: Sigma_J = -J^2 zeta1 zeta2 G^3 on all node pairs;
  * incoherent errors (jump operators in every evolution): delta-correlated
    cross terms +(V/2) G^3/dt at equal local time on each same-superoperator
    branch pair, plus same-branch near-diagonal terms built from the ordered
    equal-time value 1/2 (these discretize an exactly inert normalization);
  * coherent errors (one noise trajectory reused by every backward
    evolution): delta-correlated terms -V zeta_a zeta_b G^3/dt at equal
    local time on every ordered pair of distinct backward branches, both
    same-round and cross-round.

The constants are pinned by executable constraints rather than convention:
V=0 gives F=1; at J=0 the echo obeys F_n = exp(-n V t / 4) exactly and the
single-flavor cross-pair decay rate is V/16; the melon reproduces the exact
infinite-temperature expansion G(t) = 1/2 - J^2 t^2/16; and the n=1
coherent and incoherent decays coincide.  tests/test_saddle.py asserts all
four.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .contour import ContourGrid, build_contour, free_propagator, DEFAULT_NODE_CAP
from .errors import (ModeError, SaddleConvergenceError, SaddleDivergenceError)
from .tables import EchoRow, EchoTable

logger = logging.getLogger(__name__)

ERROR_MODES = ("none", "incoherent", "coherent", "both")

# Divergence guard on the propagator magnitude; the physical bound is 1/2.
G_BOUND = 10.0


@dataclass(frozen=True)
class SykParams:
    """Microscopic couplings for the contour solver.

    J is the static quartic coupling scale, V the error strength (Brownian
    variance scale and jump rate scale share it, which ties the coherent
    and incoherent strengths together).  The kappa_* constants are the
    pinned self-energy prefactors; they are exposed for the constraint
    tests, not for casual tuning.
    """

    J: float = 1.0
    V: float = 0.0
    error_mode: str = "none"
    kappa_J: float = -1.0
    kappa_V_incoherent: float = 0.5
    kappa_V_coherent: float = -1.0
    kappa_V_same_branch: float = -0.25

    def __post_init__(self):
        if self.J < 0 or self.V < 0:
            raise ValueError("J and V must be nonnegative")
        if self.error_mode not in ERROR_MODES:
            raise ModeError(
                f"unknown error_mode {self.error_mode!r}; expected one of {ERROR_MODES}")


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-7            # threshold on the applied max-abs update
    max_iter: int = 500
    mixing: float = 0.5          # damped-update weight alpha in (0, 1]
    dt_target: float = 0.025     # grid spacing when M is derived from t
    coarse_factors: tuple = (4, 2)   # continuation levels ahead of the fine solve
    node_cap: int = DEFAULT_NODE_CAP
    accel: str = "plain"         # 'plain' damped mixing | 'anderson'
    anderson_depth: int = 2

    def __post_init__(self):
        if not 0.0 < self.mixing <= 1.0:
            raise ValueError(f"mixing must lie in (0, 1], got {self.mixing}")
        if self.tol <= 0 or self.max_iter < 1 or self.dt_target <= 0:
            raise ValueError("tol, max_iter and dt_target must be positive")
        if self.accel not in ("plain", "anderson"):
            raise ValueError(f"unknown accel {self.accel!r}")
        if self.anderson_depth < 1:
            raise ValueError("anderson_depth must be >= 1")


@dataclass
class SaddleSolution:
    G: np.ndarray
    grid: ContourGrid
    iterations: int
    residual: float
    converged: bool
    trace: list = field(default_factory=list)   # (iteration, applied update)


def self_energy(G: np.ndarray, grid: ContourGrid, p: SykParams) -> np.ndarray:
    """Contour self-energy Sigma[G] for the requested error mode."""
    if p.error_mode not in ERROR_MODES:
        raise ModeError(f"unknown error_mode {p.error_mode!r}")
    n_nodes = grid.n_nodes
    if G.shape != (n_nodes, n_nodes):
        raise ValueError(f"G has shape {G.shape}, expected {(n_nodes, n_nodes)}")

    if p.J != 0.0:
        sigma = G * G
        sigma *= G
        sigma *= grid.zeta[:, None]
        sigma *= grid.zeta[None, :]
        sigma *= p.kappa_J * p.J * p.J
    else:
        sigma = np.zeros_like(G)

    if p.V == 0.0 or p.error_mode == "none":
        return sigma

    inv_w = 1.0 / grid.weights     # delta-function weight per local node
    incoherent = p.error_mode in ("incoherent", "both")
    coherent = p.error_mode in ("coherent", "both")

    if incoherent:
        for (u, v) in grid.superoperator_pairs():
            iu = grid.branch_nodes(u)
            iv = grid.branch_nodes(v)
            cross = p.kappa_V_incoherent * p.V * inv_w[iu]
            sigma[iu, iv] += cross * G[iu, iv] ** 3
            sigma[iv, iu] += cross * G[iv, iu] ** 3
        # Same-branch terms from the jump-operator anticommutator, with the
        # ordered equal-time value 1/2.  They form an antisymmetric pair on
        # adjacent nodes and are inert as dt -> 0 (the anticommutator is a
        # multiple of the identity); kept for structural completeness.
        dt = grid.dt
        for b in range(1, 4 * grid.n_rounds + 1):
            g = grid.branch_nodes(b)
            lo, hi = g[:-1], g[1:]
            s = np.sign(grid.rank[hi] - grid.rank[lo]).astype(float)
            val = p.kappa_V_same_branch * p.V * (s * 0.5) ** 3 / dt
            sigma[hi, lo] += val
            sigma[lo, hi] -= val

    if coherent:
        backward = grid.backward_positions()
        for a in backward:
            ia = grid.branch_nodes(a)
            za = grid.branches[a - 1].action_factor
            for c in backward:
                if c == a:
                    continue
                ic = grid.branch_nodes(c)
                zc = grid.branches[c - 1].action_factor
                coeff = p.kappa_V_coherent * p.V * za * zc * inv_w[ia]
                sigma[ia, ic] += coeff * G[ia, ic] ** 3
    return sigma


def solve_saddle(grid: ContourGrid, p: SykParams, opt: SolverOptions,
                 G_init: np.ndarray | None = None,
                 tol: float | None = None) -> SaddleSolution:
    """Damped fixed-point solve of the weighted-quadrature Dyson equation.

    Each iteration evaluates Sigma[G], solves (I - G0 W Sigma W) G_new = G0
    by dense LU, antisymmetrizes, and mixes G <- (1-alpha) G + alpha G_new.
    Convergence is judged on the applied max-abs update.
    """
    tol = opt.tol if tol is None else tol
    w = grid.weights
    G0 = free_propagator(grid)
    G = G0.copy() if G_init is None else np.asarray(G_init, dtype=float).copy()

    def dyson_map(G_cur):
        K = self_energy(G_cur, grid, p)
        K *= w[:, None]
        K *= w[None, :]
        A = G0 @ K
        np.negative(A, out=A)
        A.flat[:: A.shape[0] + 1] += 1.0
        G_new = scipy.linalg.solve(A, G0, overwrite_a=True, check_finite=False)
        return 0.5 * (G_new - G_new.T)

    # Anderson history: differences of iterates and of residuals, flattened.
    hist_dx, hist_df = [], []
    prev_x = prev_f = None
    prev_norm = math.inf
    stalls = 0

    trace = []
    for it in range(1, opt.max_iter + 1):
        G_new = dyson_map(G)
        f = G_new - G
        fnorm = float(np.max(np.abs(f)))
        use_anderson = opt.accel == "anderson"
        if use_anderson:
            if fnorm > prev_norm:
                stalls += 1
                if stalls >= 2:           # acceleration misbehaving: restart
                    hist_dx.clear()
                    hist_df.clear()
                    stalls = 0
            if prev_x is not None:
                hist_dx.append((G - prev_x).ravel())
                hist_df.append((f - prev_f).ravel())
                if len(hist_dx) > opt.anderson_depth:
                    hist_dx.pop(0)
                    hist_df.pop(0)
            prev_x, prev_f, prev_norm = G.copy(), f.copy(), fnorm
        if use_anderson and hist_df:
            DF = np.stack(hist_df, axis=1)
            rhs = DF.T @ f.ravel()
            mat = DF.T @ DF
            mat.flat[:: mat.shape[0] + 1] += 1e-12 * max(1.0, mat.max())
            gamma = np.linalg.solve(mat, rhs)
            G_next = G + opt.mixing * f
            for coef, dx, df in zip(gamma, hist_dx, hist_df):
                G_next -= coef * (dx + opt.mixing * df).reshape(G.shape)
            applied = float(np.max(np.abs(G_next - G)))
            G = 0.5 * (G_next - G_next.T)
        else:
            applied = opt.mixing * fnorm
            G = G + opt.mixing * f
        trace.append((it, fnorm))
        if not np.isfinite(applied) or np.max(np.abs(G)) > G_BOUND:
            raise SaddleDivergenceError(
                f"propagator magnitude exceeded {G_BOUND} at iteration {it} "
                f"(n={grid.n_rounds}, t={grid.t_max}, M={grid.points_per_branch})")
        if fnorm < tol:
            return SaddleSolution(G=G, grid=grid, iterations=it,
                                  residual=fnorm, converged=True, trace=trace)
    raise SaddleConvergenceError(
        f"no convergence after {opt.max_iter} iterations "
        f"(last update {trace[-1][1]:.3e}, tol {tol:.3e}, "
        f"n={grid.n_rounds}, t={grid.t_max}, M={grid.points_per_branch})",
        trace=trace)


def echo_from_propagator(G, grid: ContourGrid) -> float:
    """Loschmidt echo F = [2 G(first probe node, second probe node)]^2.

    The probe is a two-flavor bilinear, so the echo factorizes into the
    squared single-flavor propagator between its insertion points; the
    factor 2 absorbs the equal-point normalization 1/2, making the
    error-free value exactly 1.
    """
    if isinstance(G, SaddleSolution):
        G = G.G
    g = float(G[grid.probe_start_node, grid.probe_end_node])
    return (2.0 * g) ** 2


def _prolongation(m_coarse: int, m_fine: int) -> np.ndarray:
    """Linear interpolation matrix from an (m_coarse+1)- to (m_fine+1)-node branch."""
    ratio = m_coarse / m_fine
    P = np.zeros((m_fine + 1, m_coarse + 1))
    for i in range(m_fine + 1):
        x = i * ratio
        j = min(int(math.floor(x)), m_coarse - 1)
        frac = x - j
        P[i, j] = 1.0 - frac
        P[i, j + 1] = frac
    return P


def points_per_branch_for(t: float, dt_target: float) -> int:
    """Branch node count M = ceil(t/dt_target), rounded up to a multiple of 4."""
    m = max(8, int(math.ceil(t / dt_target - 1e-12)))
    return ((m + 3) // 4) * 4


def solve_echo_point(n: int, t: float, p: SykParams, opt: SolverOptions,
                     log_lines: list | None = None):
    """Solve one (n, t) echo point with coarse-to-fine continuation.

    The coarse levels run the same damped iteration at looser tolerance and
    seed the next level through per-branch linear prolongation; the finest
    level converges at the requested tolerance, so the solution contract is
    the plain solve_saddle one.
    """
    m_fine = points_per_branch_for(t, opt.dt_target)
    levels = []
    for f in sorted(set(opt.coarse_factors), reverse=True):
        if f > 1 and m_fine % f == 0 and m_fine // f >= 8:
            levels.append(m_fine // f)
    levels.append(m_fine)

    G_init = None
    sol = None
    for m in levels:
        grid = build_contour(n, t, m, node_cap=opt.node_cap)
        level_tol = opt.tol * (m_fine / m) ** 2
        mixing = opt.mixing
        while True:
            try:
                sol = solve_saddle(grid, replace(p), replace(opt, mixing=mixing),
                                   G_init=G_init, tol=level_tol)
                break
            except (SaddleDivergenceError, SaddleConvergenceError):
                # strong-damping retry; give up below alpha = 1/8 of requested
                if mixing <= opt.mixing / 8.0 + 1e-12:
                    raise
                mixing *= 0.5
                logger.info("retrying n=%d t=%g M=%d with mixing=%g",
                            n, t, m, mixing)
        if log_lines is not None:
            for it, res in sol.trace:
                log_lines.append(f"M={m} {it} {res:.6e}")
        if m != m_fine:
            nxt = levels[levels.index(m) + 1]
            P = np.kron(np.eye(4 * n), _prolongation(m, nxt))
            G_init = P @ sol.G @ P.T
            G_init = 0.5 * (G_init - G_init.T)
    F = echo_from_propagator(sol, sol.grid)
    return F, sol


def sweep_echo(n_list, t_list, p: SykParams, opt: SolverOptions,
               source: str = "saddle", log_dir=None) -> EchoTable:
    """One independent contour solve per (n, t); failures are collected,
    not raised, so a sweep survives individual bad points."""
    table = EchoTable(metadata={
        "source": source, "mode": p.error_mode, "J": repr(p.J), "V": repr(p.V),
        "dt_target": repr(opt.dt_target), "tol": repr(opt.tol),
        "mixing": repr(opt.mixing), "time_unit": "1/J",
    })
    for n in n_list:
        for t in t_list:
            log_lines = [] if log_dir is not None else None
            try:
                F, sol = solve_echo_point(int(n), float(t), p, opt,
                                          log_lines=log_lines)
            except Exception as exc:  # aggregate, keep sweeping
                logger.warning("sweep point n=%s t=%s failed: %s", n, t, exc)
                table.failures.append((int(n), float(t), f"{type(exc).__name__}: {exc}"))
                continue
            table.append(EchoRow(source=source, mode=p.error_mode, n=int(n),
                                 t=float(t), F=F,
                                 extras={"iterations": sol.iterations,
                                         "residual": sol.residual}))
            if log_dir is not None:
                from pathlib import Path
                path = Path(log_dir) / f"solve_{p.error_mode}_n{int(n)}_t{float(t):g}.log"
                path.write_text("\n".join(log_lines) + "\n")
    return table
