"""Multi-agent environment: states, rewards, and step semantics.

A Scenario freezes one sampled network (geometry, shadowed gains, primary
powers). Each cognitive radio monitors the primary link it hears loudest
and is in state S0 while the relative throughput change it inflicts there
stays within the configured limit. Rewards are 10^throughput in S0 and
zero in S1, either per link or summed over links (global mode).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import channel
from .channel import ChannelGains, PowerVector, all_sinrs, dbm_to_mw, mw_to_dbm
from .link_adaptation import AmcTable, relative_throughput_change, throughput
from .topology import ConfigurationError, GridSpec, NodePlacement, sample_placement

__all__ = [
    "ActionSpace",
    "EnvConfig",
    "EnvironmentView",
    "Scenario",
    "build_scenario",
    "pn_power_control",
    "observe",
    "reward",
    "measure_phase_change_probability",
]

STATE_S0 = 0
STATE_S1 = 1

DEFAULT_PN_TARGET_SINR_DB = 10.0


@dataclass(frozen=True)
class ActionSpace:
    """Ordered CR transmit options; index 0 is always "off".

    powers_dbm holds the dBm level of indices 1.., strictly increasing.
    """

    powers_dbm: tuple[float, ...]

    def __post_init__(self):
        if np.any(np.diff(self.powers_dbm) <= 0):
            raise ConfigurationError("transmit levels must be strictly increasing")

    @staticmethod
    def default() -> "ActionSpace":
        """Off plus 13 levels from -10 to 20 dBm in 2.5 dBm steps (14 total)."""
        space = ActionSpace(tuple(np.arange(-10.0, 20.0 + 1e-9, 2.5)))
        assert len(space) == 14
        return space

    def __len__(self) -> int:
        return len(self.powers_dbm) + 1

    def power_mw(self, action: int) -> float:
        """Linear transmit power of one action (0.0 for "off")."""
        if action == 0:
            return 0.0
        return float(dbm_to_mw(self.powers_dbm[action - 1]))

    def powers_mw(self, actions) -> np.ndarray:
        return np.array([self.power_mw(a) for a in actions])


@dataclass(frozen=True)
class EnvConfig:
    """Shared environment knobs.

    tpc_reference picks the power the secondary interference is compared
    against inside the relative-throughput-change formula: "noise" (the
    AWGN floor; the conservative default) or "signal" (the monitored
    link's received signal power, i.e. a protection-ratio style limit).
    With "noise" and the default geometry even the lowest transmit level
    usually breaks the 5% limit, so optima collapse to all-off; "signal"
    spreads them over the action range.
    """

    epsilon: float = 0.05           # limit on |T%| at the monitored link
    reward_mode: str = "local"      # "local" (own throughput) or "global" (sum)
    n_cr: int = 2
    tpc_reference: str = "noise"    # "noise" or "signal"

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigurationError("epsilon must lie in (0, 1)")
        if self.reward_mode not in ("local", "global"):
            raise ConfigurationError(f"unknown reward mode {self.reward_mode!r}")
        if self.n_cr < 1:
            raise ConfigurationError("need at least one CR")
        if self.tpc_reference not in ("noise", "signal"):
            raise ConfigurationError(
                f"unknown tpc reference {self.tpc_reference!r}")


@dataclass(frozen=True)
class Scenario:
    """One immutable network instance the agents learn on."""

    placement: NodePlacement
    gains: ChannelGains
    pn_powers_dbm: np.ndarray
    actions: ActionSpace
    amc: AmcTable
    config: EnvConfig
    pn_power_converged: bool = True

    @property
    def n_cr(self) -> int:
        return self.gains.n_cr

    @property
    def n_pn(self) -> int:
        return self.gains.n_pn

    def monitored_links(self) -> np.ndarray:
        """Per CR, the primary link received with the largest power."""
        received = self.gains.g_sp * dbm_to_mw(self.pn_powers_dbm)[:, None]
        return np.argmax(received, axis=0)

    def to_json(self) -> str:
        return json.dumps({
            "placement": json.loads(self.placement.to_json()),
            "gains": json.loads(self.gains.to_json()),
            "pn_powers_dbm": np.asarray(self.pn_powers_dbm).tolist(),
            "action_powers_dbm": list(self.actions.powers_dbm),
            "epsilon": self.config.epsilon,
            "reward_mode": self.config.reward_mode,
            "pn_power_converged": self.pn_power_converged,
        }, indent=2)


@dataclass(frozen=True)
class EnvironmentView:
    """Everything one joint action reveals to the agents."""

    states: np.ndarray            # per CR: STATE_S0 or STATE_S1
    monitored_links: np.ndarray   # per CR: index of the assessed PN link
    tpc_magnitudes: np.ndarray    # per CR: |T%| at the monitored link
    margins: np.ndarray           # per CR: epsilon - |T%| (>= 0 iff S0)
    sn_throughputs_mbps: np.ndarray
    sn_sinrs: np.ndarray
    pn_sinrs: np.ndarray


def pn_power_control(scenario: Scenario,
                     target_sinr_db: float = DEFAULT_PN_TARGET_SINR_DB,
                     max_iters: int = 100,
                     tol_db: float = 0.01) -> tuple[PowerVector, bool]:
    """Fixed-point primary power allocation toward a common SINR target.

    With the CRs silent, each AP scales its power by target/SINR and clips
    to [-20, 40] dBm until the largest per-AP change drops below tol_db.
    Returns the final powers and whether the loop converged; an infeasible
    target simply rails the powers and reports False.
    """
    gains = scenario.gains
    target = 10.0 ** (target_sinr_db / 10.0)
    silent = np.zeros(gains.n_cr)
    p_dbm = np.asarray(scenario.pn_powers_dbm, dtype=float).copy()
    converged = False
    for _ in range(max_iters):
        pn, _ = all_sinrs(gains, PowerVector(p_dbm, silent))
        new_mw = dbm_to_mw(p_dbm) * (target / pn)
        new_dbm = np.clip(mw_to_dbm(new_mw),
                          channel.PN_POWER_MIN_DBM, channel.PN_POWER_MAX_DBM)
        if np.max(np.abs(new_dbm - p_dbm)) < tol_db:
            p_dbm = new_dbm
            converged = True
            break
        p_dbm = new_dbm
    return PowerVector(p_dbm, silent), converged


def build_scenario(grid: GridSpec,
                   config: EnvConfig,
                   amc: AmcTable,
                   rng: np.random.Generator,
                   actions: ActionSpace | None = None,
                   pn_target_sinr_db: float = DEFAULT_PN_TARGET_SINR_DB,
                   noise_power_mw: float = channel.NOISE_POWER_MW) -> Scenario:
    """Sample a placement, freeze gains, and run primary power control."""
    placement = sample_placement(grid, config.n_cr, rng)
    gains = channel.build_gains(placement, rng, noise_power_mw=noise_power_mw)
    provisional = Scenario(
        placement=placement,
        gains=gains,
        pn_powers_dbm=np.zeros(gains.n_pn),
        actions=actions or ActionSpace.default(),
        amc=amc,
        config=config,
    )
    powers, converged = pn_power_control(provisional, pn_target_sinr_db)
    return replace(provisional, pn_powers_dbm=powers.pn_powers_dbm,
                   pn_power_converged=converged)


def observe(scenario: Scenario, joint_action) -> EnvironmentView:
    """Evaluate one joint action; pure in (scenario, joint_action)."""
    n = scenario.n_cr
    if len(joint_action) != n:
        raise ValueError(f"expected {n} actions, got {len(joint_action)}")
    for a in joint_action:
        if not 0 <= a < len(scenario.actions):
            raise ValueError(f"action index {a} outside the action space")

    gains = scenario.gains
    cr_mw = scenario.actions.powers_mw(joint_action)
    powers = PowerVector(scenario.pn_powers_dbm, cr_mw)
    pn, sn = all_sinrs(gains, powers)

    monitored = scenario.monitored_links()
    # total SN interference arriving at each monitored link's receiver
    interference_mw = gains.g_ps.T @ cr_mw

    if scenario.config.tpc_reference == "signal":
        pn_mw = powers.pn_powers_mw
        reference_mw = np.diag(gains.g_pp) * pn_mw
    else:
        reference_mw = np.full(gains.n_pn, gains.noise_power_mw)

    eps = scenario.config.epsilon
    tpc = np.zeros(n)
    for i in range(n):
        interf = interference_mw[monitored[i]]
        if interf > 0.0:
            i_db = 10.0 * np.log10(interf / reference_mw[monitored[i]])
            tpc[i] = abs(relative_throughput_change(i_db, scenario.amc))
    states = np.where(tpc <= eps, STATE_S0, STATE_S1)
    tputs = np.array([throughput(s, scenario.amc) for s in sn])

    return EnvironmentView(
        states=states,
        monitored_links=monitored,
        tpc_magnitudes=tpc,
        margins=eps - tpc,
        sn_throughputs_mbps=tputs,
        sn_sinrs=sn,
        pn_sinrs=pn,
    )


def reward(view: EnvironmentView, agent: int, mode: str = "local") -> float:
    """Reward of one agent under a computed view.

    Zero whenever the agent's own state is S1; otherwise 10^T with T its
    own throughput (local) or the sum over all SN links (global), in Mbps.
    """
    if view.states[agent] == STATE_S1:
        return 0.0
    if mode == "local":
        return float(10.0 ** view.sn_throughputs_mbps[agent])
    if mode == "global":
        return float(10.0 ** np.sum(view.sn_throughputs_mbps))
    raise ValueError(f"unknown reward mode {mode!r}")


class ObservationCache:
    """Memoized observe(); the joint action space is small and observe is pure."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self._views: dict[tuple, EnvironmentView] = {}

    def __call__(self, joint_action) -> EnvironmentView:
        key = tuple(int(a) for a in joint_action)
        view = self._views.get(key)
        if view is None:
            view = observe(self.scenario, key)
            self._views[key] = view
        return view


@dataclass(frozen=True)
class PhaseChangeProbe:
    """Outcome of a phase-change measurement for the reference agent."""

    p_hat: float
    rewards: np.ndarray
    steps: int

    @property
    def mean_nonzero_reward(self) -> float:
        nz = self.rewards[self.rewards > 0.0]
        return float(nz.mean()) if nz.size else 0.0

    @property
    def reward_variance(self) -> float:
        return float(self.rewards.var())


def measure_phase_change_probability(scenario: Scenario,
                                     policy,
                                     rho: float,
                                     steps: int,
                                     rng: np.random.Generator,
                                     reference: int = 0) -> PhaseChangeProbe:
    """Empirical probability that co-agent experimentation flips the
    reference agent into S1.

    policy is one action index per agent and must keep every agent in S0
    when nobody experiments. Each step the other agents keep their policy
    action with probability 1-rho and otherwise draw uniformly from the
    whole action space; the reference agent always plays its policy
    action. Returns the observed S1 fraction and the reward samples.
    """
    policy = [int(a) for a in policy]
    base = observe(scenario, policy)
    if np.any(base.states != STATE_S0):
        raise ValueError("policy must keep every agent in S0 absent experimentation")

    n = scenario.n_cr
    n_actions = len(scenario.actions)
    cache = ObservationCache(scenario)
    mode = scenario.config.reward_mode

    flips = 0
    rewards = np.empty(steps)
    joint = list(policy)
    for t in range(steps):
        for j in range(n):
            if j == reference:
                joint[j] = policy[j]
            elif rng.uniform() < rho:
                joint[j] = int(rng.integers(n_actions))
            else:
                joint[j] = policy[j]
        view = cache(joint)
        if view.states[reference] == STATE_S1:
            flips += 1
        rewards[t] = reward(view, reference, mode)
    return PhaseChangeProbe(p_hat=flips / steps, rewards=rewards, steps=steps)
