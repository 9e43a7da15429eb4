"""Adaptive coherent-state receivers, photon-starved capacities and coded reception."""

__version__ = "0.1.0"

from .capacity import (CapacityResult, binary_channel_mi, coherent_pie_bound, dd_asymptotic,
                       dd_capacity, heuristic_ook_probability, holevo_asymptotic, holevo_capacity,
                       mi_rate_at_optimum, mi_rate_coefficient, mi_upper_bound_binary,
                       ook_mutual_information, solve_energy_for_pie)
from .coded import (Codebook, MessagePosterior, build_codebook, choose_symbol_control,
                    effective_symbol_prior, ook_codebook, run_coded_reception,
                    update_message_posterior)
from .core import (AlphaSchedule, DetectionParams, DolinarBinary, HypothesisEnsemble, PerSymbolMI,
                   PiecewiseWaveform, Posterior, RenyiIncremental, SearchConfig, TrialRecord,
                   ZeroControl, constant_ensemble, make_ensemble, trial_rng, waveform_energy)
from .dolinar import (commitment_trajectory, control_waveforms, g_closed_form, g_ode_integrate,
                      g_ode_step, optimal_control_binary, simulate_dolinar_batch,
                      simulate_dolinar_trial, ykl_error)
from .estimators import DolinarReceiver, RenyiReceiver
from .photodetect import (ImpossibleObservation, bayes_update, sample_slice,
                          slice_click_probability, slice_mutual_information)
from .renyi import (enumerate_error_probability, expected_posterior_renyi, optimize_control,
                    renyi_entropy, simulate_mary_batch, simulate_mary_trial)

__all__ = [name for name in dir() if not name.startswith("_")]
