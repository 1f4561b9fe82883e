"""Discrete p-energy machinery on the planar Sierpinski carpet.

Graph approximations of the carpet, p-energies and p-harmonic solvers,
capacities and combinatorial moduli, the p-scaling factor and p-walk
dimension, rescaled Sobolev seminorms, Korevaar-Schoen energies, and
self-similar p-energy-measure tables.
"""

__version__ = "0.1.0"

from .carpet import (  # noqa: F401
    D4,
    IDENTITY,
    CellBox,
    SymmetryElement,
    Word,
    apply_symmetry,
    box_to_word,
    cell_centers,
    cell_measure,
    cells_adjacent,
    compose,
    face_codes,
    face_words,
    inverse,
    word_to_box,
)
from .graph import (  # noqa: F401
    GraphFunction,
    LevelGraph,
    build_graph,
    coarsen,
    graph_ball,
    load_function,
    p_energy,
    p_energy_form,
    p_laplacian,
    p_laplacian_all,
    save_function,
)
from .solve import (  # noqa: F401
    DirichletProblem,
    ModulusResult,
    PotentialSolution,
    capacity,
    coordinate_descent,
    shortest_vertex_weighted_path,
    solve_p_harmonic,
    vertex_modulus,
)
from .scaling import (  # noqa: F401
    FRACTAL_DIMENSION,
    ScalingReport,
    annulus_capacity,
    ball_loewner_probe,
    estimate_rho,
    face_capacity,
    walk_dimension,
    walk_dimension_grid,
)
from .sobolev import (  # noqa: F401
    CellFunction,
    SeminormReport,
    average_to_level,
    default_suite,
    ks_energy,
    lift_to_level,
    normalized_energy,
    poincare_constant,
    restrict_to_cell,
    seminorm_report,
)
from .emeasure import (  # noqa: F401
    EnergyMeasureTable,
    affine_chain_rule_check,
    consistency_check,
    energy_measure_table,
    smooth_chain_rule_probe,
    symmetry_pushforward_check,
    triangle_inequality_check,
)
from .regularity import (  # noqa: F401
    CutoffProfile,
    HarnackReport,
    cutoff_profile,
    harnack_report,
    log_caccioppoli_check,
)
