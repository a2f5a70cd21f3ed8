"""Fourier multipliers from martingale Hardy spaces to l^1, on finite truncations."""

__version__ = "0.1.0"

from .harmonics import (GroupFunction, GroupSpec, MultiIndex, SpectrumTable, build_group,
                        character, dft_forward, dft_inverse, torus)
from .filtration import (AdaptedSequence, MartingaleDifferences, adapted_l1_norm,
                         conditional_expectation, conditional_square_norm, dual_norm_maximize,
                         lepingle_project, martingale_differences, pairing,
                         square_function_norm, weisz_dual_norm)
from .hardy import (h1_last_norm, is_hardy_last, phi_psi_test_function, project_hardy_last,
                    sample_hardy_martingale)
from .formulas import (GradedMultiplierFamily, MultiplierTable, adapted_multiplier_norm,
                       fefferman_norm, hardy_last_multiplier_norm,
                       martingale_hardy_multiplier_norm)
from .oracles import prop1_dual_value, primal_pairing, primal_ratio_search
from .davis_garsia import DecompositionPair, davis_garsia_solve, dg_objective
from .commands import ExperimentConfig, run_command
from .report import Report
from .tables import emit_multiplier_table, parse_graded_family, parse_multiplier_table

__all__ = [name for name in dir() if not name.startswith("_") and name not in {
    "harmonics", "filtration", "hardy", "formulas", "oracles", "davis_garsia", "commands",
    "report", "tables", "equivalence", "soundness"}]
