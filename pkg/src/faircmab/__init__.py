"""Merit-based fair combinatorial semi-bandits with delayed feedback."""

from .core import DeliveryBatch, FeedbackLedger, new_ledger
from .delay import (
    INFINITE, BiasedFixed, DelayModel, Empirical, Fixed, Geometric, PacketLoss, ParetoTypeI,
    delay_from_spec, max_quantile, quantile, sample_delay,
)
from .exceptions import ConfigError, LogFormatError, MeritAssumptionError, SimulationError, ValidationError
from .merit import Custom, Identity, MeritFunction, PowerPlus, merit, merit_from_spec, optimal_policy
from .metrics import RegretTrace, accumulate, selection_fractions, step_regrets
from .optimize import ConfidenceRegion, SolverOptions, grid_oracle, maximize_over_region
from .policies import POLICY_KINDS, BetaPosterior, Policy, make_policy, op_posteriors, posterior_update
from .rounding import rrs

__version__ = "0.1.0"
