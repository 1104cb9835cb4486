"""Two-process (bra-ket) jump unraveling of the von Neumann equation.

A density matrix is represented as the ensemble mean of dyadic products of
two independent, identically distributed Markov jump processes in Hilbert
space, each confined to complex multiples of the distinguished basis
vectors. This package builds the unique jump process for a given model,
simulates trajectory pairs, and validates the estimates against an exact
integrator; the EPR and double-slit experiments are included as worked
ensemble studies.
"""

__version__ = "0.1.0"

from .amone import (AmoneRoot, JumpColumn, JumpTable, amone_residual,
                    amone_sweep, build_jump_table, solve_amone,
                    solve_amone_grid, verify_generator)
from .doubleslit import (IntensityProfile, MCIntensity, PathSet, PathSpec,
                         SlitGeometry, closed_form_intensity, detector_set,
                         enumerate_paths, fraunhofer_geometry, fringe_spacing,
                         intensity_profile, load_geometry, make_geometry,
                         mc_intensity, mc_profile, pair_sum_intensity,
                         save_geometry, theoretical_fringe_spacing)
from .engine import (AmplitudeOverflow, DensityEstimate, InitialSampler,
                     ObservableEstimate, ProcessState, apply_jump,
                     estimate_density, estimate_observable, evolve_process,
                     free_phase, next_jump_time, sampler_from_amplitudes)
from .epr import (CHSH_CANONICAL_ANGLES, KINDS, chsh_mc, chsh_value,
                  correlation, epr_exact_probability, epr_initial_sampler,
                  epr_mc_probability, epr_model, epr_observable)
from .model import (HamiltonianModel, diagonal_shift, exact_evolve, load_model,
                    make_model, save_model, trace_inner, validate_model)
from .report import (CompareReport, ConvergenceReport, StatisticalFailure,
                     compare_exact, convergence)
