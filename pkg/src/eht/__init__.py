"""Entanglement Hamiltonian tomography from randomized single-qubit measurements."""
from .ansatz import AnsatzFamily, ParamVector, build_ansatz, density_matrix_from_params
from .baselines import RankConfig, lrls, pls, rho_rt
from .core import DensityMatrix, PureState, entanglement_spectrum, partial_trace, uhlmann_fidelity
from .fitting import FitConfig, FitResult, fit, fit_with_errors, fitted_density, measurement_budget_scan
from .measurements import Dataset, estimate_fmax, estimate_purity, exact_dataset, sample_dataset
from .models import SpinModel, build_hamiltonian, evolve, ground_state

__version__ = "0.1.0"
