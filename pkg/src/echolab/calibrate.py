"""Fitting echo curves to the closed forms and locating the n^2 -> n crossover.

Residuals are taken in log F (the echo spans orders of magnitude, and log
residuals weight the crossover region sensibly), restricted to a fit
window in F.  Minimization is damped Gauss-Newton (scipy's trust-region
reflective least_squares with numerically differenced Jacobians), run
from a deterministic multi-start grid; the best start wins by residual
norm, ties by start index.  Covariances come from the normal-matrix
inverse at the optimum and are reported as approximate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .errors import FitError, IdentifiabilityWarning, WindowError
from .params import ScramblonParams
from . import scramblon
from .tables import EchoTable

DEFAULT_WINDOW = (0.02, 0.98)
DEFAULT_KAPPA_GRID = (0.3, 0.6, 0.9, 1.2)
DEFAULT_GAMMA_GRID = tuple(10.0 ** e for e in (-5.0, -4.0, -3.0, -2.0))
DEFAULT_DELTA_GRID = (0.5, 1.0, 1.5, 2.0)


@dataclass
class FitResult:
    params: dict
    stderr: dict
    covariance: np.ndarray
    param_names: list
    residual_norm: float
    n_points: int
    window: tuple
    converged: bool
    n_starts: int
    best_start: int
    message: str = ""

    def as_scramblon_params(self) -> ScramblonParams:
        p = self.params
        return ScramblonParams(
            kappa=p["kappa"], gamma_I=p.get("gamma_I", 0.0),
            gamma_c=p.get("gamma_c", 0.0), delta_O=p["delta_O"],
            delta_d=p.get("delta_d", 2.0 * p["delta_O"]), b=p.get("b", 1.0))

    def report_lines(self):
        lines = [f"converged={self.converged}",
                 f"residual_norm={self.residual_norm:.6e}",
                 f"n_points={self.n_points}",
                 f"window=[{self.window[0]},{self.window[1]}]",
                 f"n_starts={self.n_starts}", f"best_start={self.best_start}"]
        for k in self.param_names:
            lines.append(f"{k}={self.params[k]:.10g} +- {self.stderr[k]:.3g}")
        for k, v in self.params.items():
            if k not in self.param_names:
                lines.append(f"{k}={v:.10g} (fixed)")
        return lines


def _windowed_series(table: EchoTable, mode, n, window, source=None):
    t, F = table.series(mode=mode, n=n, source=source)
    keep = (F >= window[0]) & (F <= window[1])
    return t[keep], F[keep]


def _covariance(res, n_params):
    """Gauss-Newton normal-matrix covariance at the optimum (approximate)."""
    m = res.fun.size
    dof = max(m - n_params, 1)
    sigma2 = 2.0 * res.cost / dof
    JtJ = res.jac.T @ res.jac
    try:
        cov = sigma2 * np.linalg.inv(JtJ)
    except np.linalg.LinAlgError:
        cov = np.full((n_params, n_params), np.inf)
    return cov


def _multistart(residual_fn, starts, bounds, x_scale):
    best = None
    best_idx = -1
    for idx, x0 in enumerate(starts):
        try:
            res = least_squares(residual_fn, x0, bounds=bounds, method="trf",
                                x_scale=x_scale, xtol=1e-15, ftol=1e-15,
                                gtol=1e-12, max_nfev=2000)
        except Exception:
            continue
        if not np.all(np.isfinite(res.fun)):
            continue
        if best is None or res.cost < best.cost - 1e-300 or (
                res.cost == best.cost and idx < best_idx):
            best, best_idx = res, idx
    if best is None:
        raise FitError("no start of the multi-start grid converged")
    return best, best_idx


def fit_incoherent_family(table: EchoTable, n_set, bounds=None, init_grid=None,
                          window=DEFAULT_WINDOW, source=None) -> FitResult:
    """Joint fit of incoherent-mode series to the n-round closed form.

    All series share (gamma_I, kappa, delta_O); gamma is fitted in log
    space.  Requires >= 8 windowed points per series.
    """
    n_set = sorted(int(n) for n in n_set)
    data = []
    for n in n_set:
        t, F = _windowed_series(table, "incoherent", n, window, source=source)
        if t.size < 8:
            raise WindowError(
                f"series n={n} has {t.size} points inside F-window {window}; "
                "need >= 8 (under-determined)")
        data.append((n, t, np.log(F)))

    if init_grid is None:
        init_grid = [(math.log(g), k, d)
                     for k in DEFAULT_KAPPA_GRID
                     for g in DEFAULT_GAMMA_GRID
                     for d in DEFAULT_DELTA_GRID]
    if bounds is None:
        bounds = ([math.log(1e-10), 1e-3, 0.05], [math.log(10.0), 10.0, 10.0])

    def residual(x):
        lng, kappa, dO = x
        g = math.exp(lng)
        out = []
        for n, t, logF in data:
            model = -2.0 * dO * np.log1p(n * g * np.exp(kappa * t))
            out.append(model - logF)
        return np.concatenate(out)

    res, best_idx = _multistart(residual, init_grid, bounds, [1.0, 1.0, 1.0])
    lng, kappa, dO = res.x
    gamma = math.exp(lng)
    cov_log = _covariance(res, 3)
    # transform the log-gamma row/column to gamma
    jac = np.diag([gamma, 1.0, 1.0])
    cov = jac @ cov_log @ jac.T
    names = ["gamma_I", "kappa", "delta_O"]
    stderr = {k: float(math.sqrt(max(cov[i, i], 0.0)))
              for i, k in enumerate(names)}
    return FitResult(
        params={"gamma_I": gamma, "kappa": float(kappa), "delta_O": float(dO)},
        stderr=stderr, covariance=cov, param_names=names,
        residual_norm=float(np.linalg.norm(res.fun)),
        n_points=sum(len(t) for _, t, _ in data), window=tuple(window),
        converged=bool(res.success), n_starts=len(init_grid),
        best_start=best_idx, message=res.message)


def fit_full_two_round(table: EchoTable, fixed=None, bounds=None,
                       window=DEFAULT_WINDOW, mode="both", init_grid=None,
                       source=None) -> FitResult:
    """Fit the mixed two-round closed form, separating gamma_c from gamma_I.

    `fixed` may pin any of delta_d, b, kappa, delta_O; by default
    delta_d is tied to 2*delta_O and b to 1.  Emits IdentifiabilityWarning
    when the gamma_I/gamma_c block of the covariance is degenerate over
    the window (flat crossover).
    """
    fixed = dict(fixed or {})
    fixed.setdefault("delta_d", "2*delta_O")
    fixed.setdefault("b", 1.0)
    t, F = _windowed_series(table, mode, 2, window, source=source)
    if t.size < 8:
        raise WindowError(
            f"two-round series has {t.size} points inside window {window}; need >= 8")
    logF = np.log(F)

    free = [p for p in ("gamma_I", "gamma_c", "kappa", "delta_O")
            if p not in fixed]

    def build_params(x):
        vals = dict(zip(free, x))
        vals.update({k: v for k, v in fixed.items() if not isinstance(v, str)})
        if fixed.get("delta_d") == "2*delta_O":
            vals["delta_d"] = 2.0 * vals["delta_O"]
        return vals

    def residual(x):
        v = build_params(x)
        g = v["gamma_I"] + v["gamma_c"]
        if g <= 0:
            return logF - 0.0
        xarg = g * np.exp(v["kappa"] * t)
        arg = 2.0 * xarg + (v["gamma_c"] / (v["b"] * v["delta_d"] * g)) \
            * (1.0 - np.power(1.0 + v["b"] * xarg, -2.0 * v["delta_d"]))
        model = -2.0 * v["delta_O"] * np.log1p(arg)
        return model - logF

    lower, upper = [], []
    scale = []
    for p in free:
        if p in ("gamma_I", "gamma_c"):
            lower.append(0.0)
            upper.append(0.5)
            scale.append(1e-3)
        elif p == "kappa":
            lower.append(1e-3)
            upper.append(10.0)
            scale.append(1.0)
        else:
            lower.append(0.05)
            upper.append(10.0)
            scale.append(1.0)
    if bounds is not None:
        lower, upper = bounds

    if init_grid is None:
        init_grid = []
        for k in DEFAULT_KAPPA_GRID:
            for g in DEFAULT_GAMMA_GRID:
                for d in DEFAULT_DELTA_GRID:
                    x0 = []
                    for p in free:
                        x0.append({"gamma_I": 0.5 * g, "gamma_c": 0.5 * g,
                                   "kappa": k, "delta_O": d}[p])
                    init_grid.append(x0)

    res, best_idx = _multistart(residual, init_grid, (lower, upper), scale)
    vals = build_params(res.x)
    cov = _covariance(res, len(free))
    stderr = {p: float(math.sqrt(max(cov[i, i], 0.0)))
              for i, p in enumerate(free)}
    if {"gamma_I", "gamma_c"} <= set(free):
        i, j = free.index("gamma_I"), free.index("gamma_c")
        denom = math.sqrt(max(cov[i, i] * cov[j, j], 0.0))
        corr = cov[i, j] / denom if denom > 0 else 0.0
        if not np.isfinite(denom) or abs(corr) > 0.999:
            warnings.warn(
                "gamma_I and gamma_c are degenerate over this window "
                f"(correlation {corr:.4f}); crossover too flat to separate them",
                IdentifiabilityWarning, stacklevel=2)
    return FitResult(
        params=vals, stderr=stderr, covariance=cov, param_names=free,
        residual_norm=float(np.linalg.norm(res.fun)), n_points=int(t.size),
        window=tuple(window), converged=bool(res.success),
        n_starts=len(init_grid), best_start=best_idx, message=res.message)


@dataclass
class CrossoverReport:
    times: np.ndarray = field(default_factory=lambda: np.empty(0))
    exponent: np.ndarray = field(default_factory=lambda: np.empty(0))
    t_match_early: float | None = None
    t_match_late: float | None = None
    t_crossover_measured: float | None = None
    t_crossover_predicted: float | None = None
    tolerance: float = 0.03
    notes: list = field(default_factory=list)

    @property
    def empty(self) -> bool:
        return self.exponent.size == 0

    def report_lines(self):
        lines = [f"tolerance={self.tolerance}"]
        for name in ("t_match_early", "t_match_late",
                     "t_crossover_measured", "t_crossover_predicted"):
            value = getattr(self, name)
            lines.append(f"{name}={'' if value is None else format(value, '.6g')}")
        for note in self.notes:
            lines.append(f"note={note}")
        lines.append("t,exponent")
        for t, p in zip(self.times, self.exponent):
            lines.append(f"{t:.6g},{p:.6g}")
        return lines


def crossover_analysis(table: EchoTable, fit: FitResult,
                       tolerance: float = 0.03, coherent_mode: str = "coherent",
                       source=None) -> CrossoverReport:
    """Quadratic-to-linear crossover diagnostics on echo series.

    Matching uses absolute echo differences (the echo is normalized to
    [0, 1]); the measured crossover time is where the effective round
    exponent crosses 1.5, compared against ln(1/gamma_c)/kappa from the
    fit.  With incoherent-only input the exponent trace is identically 1
    and the match times stay empty.
    """
    report = CrossoverReport(tolerance=tolerance)
    dO = fit.params["delta_O"]
    kappa = fit.params["kappa"]

    t2c, F2c = table.series(mode=coherent_mode, n=2, source=source)
    if t2c.size == 0:
        t2i, F2i = table.series(mode="incoherent", n=2, source=source)
        t1i, F1i = table.series(mode="incoherent", n=1, source=source)
        common = np.intersect1d(t2i, t1i)
        inside = [t for t in common
                  if 0 < _at(t2i, F2i, t) < 1 and 0 < _at(t1i, F1i, t) < 1]
        if inside:
            ts = np.array(inside)
            p = np.array([scramblon.effective_round_exponent(
                _at(t2i, F2i, t), _at(t1i, F1i, t), 2, dO) for t in ts])
            report.times, report.exponent = ts, p
        report.notes.append("incoherent-only input; crossover not applicable")
        return report

    t1c, F1c = table.series(mode=coherent_mode, n=1, source=source)
    if t1c.size == 0:
        t1c, F1c = table.series(mode="incoherent", n=1, source=source)
        report.notes.append("n=1 baseline taken from incoherent mode")
    if t1c.size == 0:
        raise WindowError("no n=1 series available for the exponent trace")

    common = np.intersect1d(t2c, t1c)
    inside = [t for t in common
              if 0 < _at(t2c, F2c, t) < 1 and 0 < _at(t1c, F1c, t) < 1]
    if not inside:
        raise WindowError("coherent and baseline series never overlap in t")
    ts = np.array(sorted(inside))
    p = np.array([scramblon.effective_round_exponent(
        _at(t2c, F2c, t), _at(t1c, F1c, t), 2, dO) for t in ts])
    report.times, report.exponent = ts, p

    # crossing of p = 1.5, linearly interpolated
    for k in range(len(ts) - 1):
        if (p[k] - 1.5) * (p[k + 1] - 1.5) <= 0 and p[k] != p[k + 1]:
            frac = (1.5 - p[k]) / (p[k + 1] - p[k])
            report.t_crossover_measured = float(ts[k] + frac * (ts[k + 1] - ts[k]))
            break
    gamma_c = fit.params.get("gamma_c", fit.params.get("gamma_I"))
    if gamma_c and gamma_c > 0:
        report.t_crossover_predicted = math.log(1.0 / gamma_c) / kappa

    t4i, F4i = table.series(mode="incoherent", n=4, source=source)
    if t4i.size:
        matches = [t for t in np.intersect1d(t2c, t4i)
                   if _at(t4i, F4i, t) >= 0.85
                   and abs(_at(t2c, F2c, t) - _at(t4i, F4i, t)) <= tolerance]
        if matches:
            report.t_match_early = float(max(matches))
    t2i, F2i = table.series(mode="incoherent", n=2, source=source)
    if t2i.size:
        matches = [t for t in np.intersect1d(t2c, t2i)
                   if _at(t2i, F2i, t) <= 0.1
                   and abs(_at(t2c, F2c, t) - _at(t2i, F2i, t)) <= tolerance]
        if matches:
            report.t_match_late = float(min(matches))
    return report


def _at(t_arr, F_arr, t):
    idx = int(np.argmin(np.abs(t_arr - t)))
    return float(F_arr[idx])
