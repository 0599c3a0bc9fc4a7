"""Multimode boson bunching with partially distinguishable photons."""

__version__ = "0.1.0"

from .conjectures import ConjectureVerdict, check_m1, check_m2, random_violation_search, verify_theorem1
from .distinguishability import (
    InternalStateFamily,
    PerturbationSpec,
    ScanResult,
    bunching_probability,
    epsilon_scan,
    indistinguishability,
    interpolation_gram,
    optimal_directions,
    perturbed_gram,
    perturbed_states,
    predicted_delta_p,
)
from .interferometry import (
    BunchingSetup,
    Interferometer,
    clements_decompose,
    clements_reconstruct,
    complete_to_unitary,
    drury_gram,
    drury_matrix,
    drury_setup,
    extend_counterexample,
    h_matrix,
    rescale_to_contraction,
)
from .permanent import f_matrix, minc_sum_expansion, perm, permanent_minor, permanent_naive, permanent_ryser
