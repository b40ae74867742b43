"""Delay-accelerated dynamic average consensus.

Exact convergence rates of split-feedback Laplacian consensus through the
Lambert W function, the delays that speed it up, and a delay-differential
simulator to check them against.
"""
from .lambertw import OMEGA, LambertWSingularityError, lambert_w, lambert_w_derivative
from .graph import Graph, GraphValidationError, Spectrum, laplacian, example_graph, spectrum
from .gain import critical_x, gain, gain_array, landmarks, peak_x, unity_crossing_x
from .scalar import (
    ScalarSystem,
    UnstableDelayWarning,
    admissible_delay,
    decay_rate,
    optimal_delay,
    rate_gain_window,
)
from .network import (
    ConsensusParams,
    RateProfile,
    admissible_delay_network,
    convergence_rate,
    optimal_network_delay,
    rate_increase_window,
    split_factor_report,
    ultimate_rate_bound,
)
from .signals import RampReference, SinusoidReference, StaticReference, ZOHSinusoidReference
from .simulator import (
    InsufficientDataError,
    Trajectory,
    control_effort,
    estimate_decay_rate,
    simulate,
    simulate_derivative_free,
    tracking_error,
    zero_input_simulate,
)
from .modal import modal_closed_form, series_solution

__version__ = "0.1.0"
