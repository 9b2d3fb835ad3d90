"""Command-line front end tying prediction, simulation, fitting and analysis
into reproducible runs.

Subcommands: predict | sd-sim | ed-sim | fit | analyze.  Every run writes
its outputs plus a manifest (resolved configuration, seed, version,
command line) into one directory, enough to re-run bit-identically.
Exit codes: 0 success, 1 usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, apply_overrides, load_config
from .errors import EchoLabError
from .params import ScramblonParams
from . import scramblon
from .calibrate import crossover_analysis, fit_full_two_round, fit_incoherent_family
from .oracle import build_majoranas, echo_ed_curve
from .saddle import SolverOptions, SykParams, sweep_echo
from .svgplot import PlotStyle, render_plot_svg, series_from_table
from .tables import EchoRow, EchoTable, read_echo_csv, write_echo_csv

logger = logging.getLogger(__name__)

OVERRIDE_NAMES = ("J", "V", "error_mode", "gamma_I", "gamma_c", "kappa",
                  "delta_O", "delta_d", "b", "n_list", "t_list", "dt_target",
                  "tol", "max_iter", "mixing", "accel", "N", "realizations",
                  "trajectories", "dt_trotter", "window_lo", "window_hi",
                  "n_set", "out", "seed")


class _Parser(argparse.ArgumentParser):
    """argparse, but usage errors exit 1 (2 is reserved for numerics)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _parse_int_list(text):
    return tuple(int(x) for x in text.split(",") if x.strip())


def _parse_t_list(text):
    """Comma list '1,2,3', or range 'a..b' (11 points) / 'a..b/n'."""
    text = text.strip()
    if ".." in text:
        body, _, npts = text.partition("/")
        a, _, b = body.partition("..")
        k = int(npts) if npts else 11
        return tuple(float(x) for x in np.linspace(float(a), float(b), k))
    return tuple(float(x) for x in text.split(",") if x.strip())


def _add_common(sub):
    sub.add_argument("--config", help="INI configuration file")
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--plot", dest="plot", action="store_true", default=None)
    sub.add_argument("--no-plot", dest="plot", action="store_false", default=None)
    sub.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = _Parser(prog="echolab",
                     description="multi-round time-reversal echo laboratory")
    parser.add_argument("--version", action="version",
                        version=f"echolab {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    sp = subs.add_parser("predict", parents=[], help="evaluate closed forms")
    sp.add_argument("--mode", choices=("incoherent", "coherent", "full"),
                    default="incoherent")
    sp.add_argument("--n", dest="n_list", type=_parse_int_list)
    sp.add_argument("--t", dest="t_list", type=_parse_t_list)
    for name in ("gamma-i", "gamma-c", "kappa", "delta-o", "delta-d", "b"):
        sp.add_argument(f"--{name}", dest=name.replace("-", "_")
                        .replace("gamma_i", "gamma_I").replace("gamma_c", "gamma_c")
                        .replace("delta_o", "delta_O").replace("delta_d", "delta_d"),
                        type=float)
    _add_common(sp)

    sp = subs.add_parser("sd-sim", help="contour saddle-point echo sweep")
    sp.add_argument("--J", type=float)
    sp.add_argument("--V", type=float)
    sp.add_argument("--mode", dest="error_mode",
                    choices=("none", "incoherent", "coherent", "both"))
    sp.add_argument("--n", dest="n_list", type=_parse_int_list)
    sp.add_argument("--t", dest="t_list", type=_parse_t_list)
    sp.add_argument("--dt-target", dest="dt_target", type=float)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--max-iter", dest="max_iter", type=int)
    sp.add_argument("--mixing", type=float)
    sp.add_argument("--accel", choices=("plain", "anderson"))
    _add_common(sp)

    sp = subs.add_parser("ed-sim", help="exact-diagonalization echo sweep")
    sp.add_argument("--N", type=int)
    sp.add_argument("--J", type=float)
    sp.add_argument("--V", type=float)
    sp.add_argument("--mode", dest="error_mode",
                    choices=("none", "incoherent", "coherent", "both"))
    sp.add_argument("--n", dest="n_list", type=_parse_int_list)
    sp.add_argument("--t", dest="t_list", type=_parse_t_list)
    sp.add_argument("--realizations", type=int)
    sp.add_argument("--trajectories", type=int)
    sp.add_argument("--dt-trotter", dest="dt_trotter", type=float)
    _add_common(sp)

    sp = subs.add_parser("fit", help="calibrate parameters from an echo table")
    sp.add_argument("--input", required=True, help="echo-table CSV")
    sp.add_argument("--kind", choices=("incoherent", "full"), default="incoherent")
    sp.add_argument("--n-set", dest="n_set", type=_parse_int_list)
    sp.add_argument("--window-lo", dest="window_lo", type=float)
    sp.add_argument("--window-hi", dest="window_hi", type=float)
    _add_common(sp)

    sp = subs.add_parser("analyze", help="crossover analysis of an echo table")
    sp.add_argument("--input", required=True, help="echo-table CSV")
    sp.add_argument("--fit-json", help="fit_result.json from a fit run")
    sp.add_argument("--tolerance", type=float, default=0.03)
    _add_common(sp)
    return parser


def _resolve_config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        cfg = load_config(args.config, cfg)
    return apply_overrides(cfg, args, OVERRIDE_NAMES)


def _run_dir(cfg: RunConfig, command: str) -> Path:
    root = cfg.output_root()
    run_dir = root / command
    run_dir.mkdir(parents=True, exist_ok=True)
    return run_dir


def _write_manifest(run_dir: Path, cfg: RunConfig, argv):
    lines = [f"# echolab {__version__}",
             f"# command: echolab {' '.join(argv)}",
             f"# seed: {cfg.seed}", ""]
    lines += cfg.manifest_lines()
    (run_dir / "manifest.txt").write_text("\n".join(lines) + "\n")


def _emit(run_dir: Path, cfg: RunConfig, table: EchoTable, overlays=()):
    write_echo_csv(table, run_dir / "echo.csv")
    if cfg.plot and table.rows:
        series = series_from_table(table)
        series.extend(overlays)
        render_plot_svg(series, PlotStyle(title="Loschmidt echo"),
                        run_dir / "echo.svg")


def _scramblon_params(cfg: RunConfig) -> ScramblonParams:
    delta_d = cfg.delta_d if cfg.delta_d is not None else 2.0 * cfg.delta_O
    return ScramblonParams(kappa=cfg.kappa, gamma_I=cfg.gamma_I,
                           gamma_c=cfg.gamma_c, delta_O=cfg.delta_O,
                           delta_d=delta_d, b=cfg.b)


def cmd_predict(args, argv) -> int:
    cfg = _resolve_config(args)
    mode = args.mode
    if mode in ("coherent", "full") and cfg.gamma_c <= 0:
        raise EchoLabError(f"mode {mode} needs --gamma-c > 0")
    if mode == "incoherent" and cfg.gamma_I <= 0:
        raise EchoLabError("mode incoherent needs --gamma-i > 0")
    p = _scramblon_params(cfg)
    t_list = cfg.t_list
    if not t_list:
        gref = max(cfg.gamma_I, cfg.gamma_c)
        t_hi = 1.2 * scramblon.crossover_time(
            ScramblonParams(kappa=cfg.kappa, gamma_c=gref))
        t_list = tuple(np.linspace(0.0, t_hi, 25))
    run_dir = _run_dir(cfg, "predict")
    table = EchoTable(metadata={"source": "closed-form", "mode": mode,
                                "time_unit": "1/J"})
    if mode == "incoherent":
        for n in cfg.n_list:
            for t in t_list:
                table.append(EchoRow("closed-form", "incoherent", int(n),
                                     float(t), scramblon.echo_incoherent(n, t, p)))
    elif mode == "coherent":
        for t in t_list:
            table.append(EchoRow("closed-form", "coherent", 1, float(t),
                                 scramblon.f_ansatz(
                                     cfg.gamma_c * np.exp(cfg.kappa * t),
                                     p.delta_O, 1.0)))
            table.append(EchoRow("closed-form", "coherent", 2, float(t),
                                 scramblon.echo_coherent_two_round(t, p)))
    else:
        for t in t_list:
            table.append(EchoRow("closed-form", "both", 2, float(t),
                                 scramblon.echo_full_two_round(t, p)))
    _emit(run_dir, cfg, table)
    _write_manifest(run_dir, cfg, argv)
    print(f"wrote {len(table)} closed-form rows to {run_dir}")
    return 0


def cmd_sd_sim(args, argv) -> int:
    cfg = _resolve_config(args)
    if not cfg.t_list:
        raise EchoLabError("sd-sim needs --t")
    run_dir = _run_dir(cfg, "sd-sim")
    p = SykParams(J=cfg.J, V=cfg.V, error_mode=cfg.error_mode)
    opt = SolverOptions(tol=cfg.tol, max_iter=cfg.max_iter, mixing=cfg.mixing,
                        dt_target=cfg.dt_target, accel=cfg.accel)
    table = sweep_echo(cfg.n_list, cfg.t_list, p, opt, log_dir=run_dir)
    for n, t, reason in table.failures:
        print(f"point n={n} t={t} failed: {reason}", file=sys.stderr)
    if not table.rows:
        raise EchoLabError("every sweep point failed")
    _emit(run_dir, cfg, table)
    _write_manifest(run_dir, cfg, argv)
    print(f"wrote {len(table)} solver rows to {run_dir} "
          f"({len(table.failures)} failures)")
    return 0


def cmd_ed_sim(args, argv) -> int:
    cfg = _resolve_config(args)
    if not cfg.t_list:
        raise EchoLabError("ed-sim needs --t")
    run_dir = _run_dir(cfg, "ed-sim")
    ms = build_majoranas(cfg.N)
    table = EchoTable(metadata={"source": "oracle", "mode": cfg.error_mode,
                                "N": str(cfg.N), "J": repr(cfg.J),
                                "V": repr(cfg.V), "seed": str(cfg.seed),
                                "time_unit": "1/J"})
    for t in cfg.t_list:
        samples = echo_ed_curve(ms, cfg.J, cfg.V, cfg.error_mode, float(t),
                                cfg.n_list, seed=cfg.seed,
                                n_realizations=cfg.realizations,
                                n_trajectories=cfg.trajectories,
                                dt_trotter=cfg.dt_trotter)
        for n in cfg.n_list:
            s = samples[int(n)]
            table.append(EchoRow("oracle", cfg.error_mode, int(n), float(t),
                                 s.F, stderr=s.stderr or None))
    _emit(run_dir, cfg, table)
    _write_manifest(run_dir, cfg, argv)
    print(f"wrote {len(table)} oracle rows to {run_dir}")
    return 0


def _fit_to_json(fit) -> dict:
    return {"params": fit.params, "stderr": fit.stderr,
            "covariance": np.asarray(fit.covariance).tolist(),
            "param_names": fit.param_names,
            "residual_norm": fit.residual_norm, "n_points": fit.n_points,
            "window": list(fit.window), "converged": fit.converged,
            "n_starts": fit.n_starts, "best_start": fit.best_start}


def cmd_fit(args, argv) -> int:
    cfg = _resolve_config(args)
    table = read_echo_csv(args.input)
    run_dir = _run_dir(cfg, "fit")
    window = (cfg.window_lo, cfg.window_hi)
    if args.kind == "incoherent":
        fit = fit_incoherent_family(table, cfg.n_set, window=window)
    else:
        fit = fit_full_two_round(table, window=window)
    (run_dir / "fit_report.txt").write_text("\n".join(fit.report_lines()) + "\n")
    (run_dir / "fit_result.json").write_text(json.dumps(_fit_to_json(fit),
                                                        indent=2) + "\n")
    if cfg.plot:
        p = fit.as_scramblon_params()
        overlays = []
        for mode, n in table.modes_and_rounds():
            t, _ = table.series(mode=mode, n=n)
            if t.size == 0:
                continue
            tt = np.linspace(t.min(), t.max(), 120)
            if mode == "incoherent":
                FF = scramblon.echo_incoherent(n, tt, p)
            elif n == 2:
                FF = scramblon.echo_coherent_two_round(tt, p) \
                    if mode == "coherent" else scramblon.echo_full_two_round(tt, p)
            else:
                continue
            from .svgplot import PlotSeries
            overlays.append(PlotSeries(label=f"fit {mode} n={n}", t=list(tt),
                                       F=list(np.atleast_1d(FF)), kind="line"))
        series = series_from_table(table)
        render_plot_svg(series + overlays, PlotStyle(title="echo fit"),
                        run_dir / "fit.svg")
    _write_manifest(run_dir, cfg, argv)
    for line in fit.report_lines():
        print(line)
    return 0


def cmd_analyze(args, argv) -> int:
    cfg = _resolve_config(args)
    table = read_echo_csv(args.input)
    run_dir = _run_dir(cfg, "analyze")
    if args.fit_json:
        payload = json.loads(Path(args.fit_json).read_text())
        from .calibrate import FitResult
        fit = FitResult(params=payload["params"], stderr=payload["stderr"],
                        covariance=np.array(payload["covariance"]),
                        param_names=payload["param_names"],
                        residual_norm=payload["residual_norm"],
                        n_points=payload["n_points"],
                        window=tuple(payload["window"]),
                        converged=payload["converged"],
                        n_starts=payload["n_starts"],
                        best_start=payload["best_start"])
    else:
        fit = fit_incoherent_family(table, cfg.n_set,
                                    window=(cfg.window_lo, cfg.window_hi))
    report = crossover_analysis(table, fit, tolerance=args.tolerance)
    (run_dir / "crossover_report.txt").write_text(
        "\n".join(report.report_lines()) + "\n")
    _write_manifest(run_dir, cfg, argv)
    for line in report.report_lines():
        print(line)
    return 0


COMMANDS = {"predict": cmd_predict, "sd-sim": cmd_sd_sim, "ed-sim": cmd_ed_sim,
            "fit": cmd_fit, "analyze": cmd_analyze}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args, argv)
    except EchoLabError as exc:
        print(f"echolab: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, ValueError) as exc:
        print(f"echolab: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
