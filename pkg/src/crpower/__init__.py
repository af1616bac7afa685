"""Distributed multi-agent Q-learning for underlay spectrum sharing.

Library layers, bottom to top: topology (wrap-around grid geometry),
channel (gains and SINR), link_adaptation (SINR-to-throughput and the
relative-throughput-change limit), environment (states, rewards, step
semantics), qfunc (table and network Q backends), agent (exploration
phases and best reply with inertia), oracle (brute-force optimum), and
harness (seeded Monte Carlo sweeps, also exposed as the ``simulate``
CLI).
"""

from .agent import (
    AgentHyperparams,
    DqlAgent,
    TableAgent,
    run_learning,
    run_with_restarts,
)
from .channel import ChannelGains, PowerVector, path_gain, pn_sinr, sn_sinr
from .environment import (
    ActionSpace,
    EnvConfig,
    EnvironmentView,
    Scenario,
    build_scenario,
    measure_phase_change_probability,
    observe,
    pn_power_control,
    reward,
)
from .harness import ExperimentConfig, RunMetrics, run_experiment, sweep_p_vs_rho
from .link_adaptation import AmcTable, relative_throughput_change, throughput
from .oracle import OracleResult, exhaustive_search, score_policy
from .qfunc import (
    MlpParams,
    QTable,
    TargetArray,
    Transition,
    forward,
    refresh_target,
    table_update,
    train_minibatch,
)
from .topology import GridSpec, NodePlacement, sample_placement, wrap_distance

__version__ = "0.1.0"
