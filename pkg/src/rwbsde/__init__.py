"""Random-walk approximation of Markovian BSDEs on a recombining lattice,
with the Skorohod embedding that couples the walk to a Brownian path and a
Monte Carlo harness measuring empirical L2 convergence rates."""

from .benchmarks import (
    BenchmarkCase,
    ExactSolution,
    exact_case_exp,
    exact_case_sqrt,
    exact_case_square,
    make_case,
    verify_terminal,
)
from .coupling import SkorohodPath, bridge_sample, couple
from .exit_time import (
    ExitTimeCdf,
    TauSequence,
    cdf_laplace_inversion,
    cdf_series,
    laplace_transform,
    sample_sigma,
    sample_tau_sequence,
    tabulate,
)
from .experiment import (
    ErrorRow,
    ErrorSeries,
    ExperimentConfig,
    RegressionResult,
    emit_csv,
    parse_csv,
    regress_loglog,
    run_mc,
)
from .lattice import (
    LatticeGeometry,
    RademacherPath,
    enumerate_paths,
    node_coordinate,
    walk_values,
)
from .solver import (
    BsdeProblem,
    SolutionLattice,
    evaluate_along_path,
    solve_explicit,
    solve_implicit,
    z_by_representation,
)

__version__ = "0.1.0"
