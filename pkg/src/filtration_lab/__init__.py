"""Exact verification of martingale representation on finite filtered spaces."""

__version__ = "0.1.0"

from .credit import (
    DefaultModel,
    EnlargedSpace,
    HazardProcess,
    build_enlarged,
    decoupling_pstar,
    density_hypothesis_check,
    hazard,
    immersion_check,
    kusuoka_verify,
)
from .enlarge import (
    BracketFamily,
    EnlargementScenario,
    bracket_family,
    bracket_vector,
    iterated_bracket,
    multiplicity,
    theorem34_verify,
    theorem42_verify,
)
from .errors import *  # noqa: F401,F403
from .process import (
    AdaptedProcess,
    DoobDecomposition,
    PredictableProcess,
    doob_decomposition,
    is_martingale,
    predictable_covariation,
    quadratic_covariation,
    strongly_orthogonal,
)
from .report import VerificationReport
from .representation import (
    Integrand,
    StableSpace,
    direct_sum_check,
    integral_norm,
    prp_check,
    represent,
    stable_space,
    vector_integral,
)
from .scenario import Scenario, generate, load_scenario, run
from .semimart import (
    MinimalMeasure,
    StructureCondition,
    doleans_exponential,
    girsanov_martingale_part,
    minimal_martingale_measure,
    structure_condition,
)
from .space import (
    FiniteProbSpace,
    Filtration,
    Measure,
    Partition,
    conditional_expectation,
    density_process,
    independent,
    join,
    radon_nikodym,
)
