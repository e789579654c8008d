"""Energy-efficient user association and power allocation for mmWave
ultra-dense networks with energy-harvesting base stations."""

from .baseline import max_sinr_associate, run_max_sinr
from .channel import (GainMatrix, LinkBudget, achievable_rate, blockage_path_loss_db,
                      build_gain_matrix, friis_gain, interference_plus_noise, sinr)
from .errors import ConfigError, DomainError, ModelViolationError
from .metrics import MetricsReport, empirical_cdf, energy_efficiency
from .power import (NetPowerBreakdown, net_power, newton_power_step, power_gradient,
                    power_objective, project_bs_budget, qos_power_floor)
from .scenario import (BlockageConfig, ScenarioConfig, Topology, blockage_profile,
                       desk_profile, generate_topology, load_config, paper_profile)
from .solver import (Multipliers, SolverConfig, SolverState, StepSchedule, associate_users,
                     association_score, run_solver, update_load_targets, update_multipliers)

__version__ = "0.1.0"
