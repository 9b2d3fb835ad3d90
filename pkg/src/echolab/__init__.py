"""echolab: a laboratory for multi-round time-reversed quantum dynamics.

Distinguishes coherent from incoherent errors through the round-number
scaling of the Loschmidt echo: closed-form scramblon predictions, a
large-N contour saddle solver that reproduces them from microscopics, an
exact small-system Lindblad oracle, and calibration fits.
"""

__version__ = "0.1.0"

from .params import AnsatzFunction, ScramblonParams
from .scramblon import (
    coherent_argument,
    crossover_time,
    echo_coherent_two_round,
    echo_coherent_via_vertex_integral,
    echo_full_two_round,
    echo_incoherent,
    echo_perturbative,
    echo_series_incoherent,
    effective_round_exponent,
    f_ansatz,
    renormalized_vertex,
    vertex_coefficient,
)
from .contour import BranchMeta, ContourGrid, build_contour, free_propagator
from .saddle import (
    SaddleSolution,
    SolverOptions,
    SykParams,
    echo_from_propagator,
    self_energy,
    solve_echo_point,
    solve_saddle,
    sweep_echo,
)
from .oracle import (
    EchoSample,
    MajoranaSet,
    build_majoranas,
    echo_ed_curve,
    lindblad_superoperator,
    multi_round_echo_ed,
    perturbative_deficit,
    sample_hamiltonian,
    scaling_ratio_test,
)
from .tables import EchoRow, EchoTable, read_echo_csv, write_echo_csv
from .calibrate import (
    CrossoverReport,
    FitResult,
    crossover_analysis,
    fit_full_two_round,
    fit_incoherent_family,
)
from .svgplot import PlotSeries, PlotStyle, render_plot_svg, series_from_table

__all__ = [name for name in dir() if not name.startswith("_")]
