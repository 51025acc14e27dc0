"""Design of TX switching sequences for switched-array MIMO channel sounders.

Sequences are chosen by simulated annealing on the sidelobe cost of a
spatio-temporal ambiguity function. Monte Carlo runs of a maximum-likelihood
path estimator then compare the resulting accuracy with Cramer-Rao bounds.
"""

from .ambiguity import (AmbiguityGrid, CostParams, cost_fp, nsl, x_t_grid, x_t_value,
                        x_tot_value)
from .annealer import AnnealConfig, AnnealTrace, anneal, transition_probability
from .array_model import ArrayModel, eadf_from_samples, steering_vector, uca, ula
from .errors import ConfigurationError, DomainError, FeasibilityError, NumericalError
from .estimation import crlb, estimate, fim, montecarlo_rmse
from .signal_sim import (Observation, PathSet, SounderConfig, basis_matrix,
                         delay_doppler_spectrum, simulate, synthesize_observation)
from .switching import (SwitchingSchedule, Timing, dense_schedule, eta_from_schedule,
                        neighbor_swap, random_schedule, uniform_schedule)

__version__ = "0.1.0"
