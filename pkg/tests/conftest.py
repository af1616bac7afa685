"""Shared fixtures: hand-built scenarios with chosen gains.

Building Scenario objects directly from gain matrices keeps the expected
numbers computable by hand; the helpers below fabricate the placement
geometry only to satisfy the dataclass shape.
"""

import numpy as np
import pytest

from crpower.channel import ChannelGains
from crpower.environment import ActionSpace, EnvConfig, Scenario
from crpower.link_adaptation import AmcTable
from crpower.topology import GridSpec, NodePlacement

TINY = 1e-30


def make_scenario(g_pp, g_ps, g_ss, g_sp, pn_dbm, config=None, actions=None,
                  amc=None, noise_mw=1e-13):
    """Scenario straight from gain matrices (placement is a stub)."""
    g_pp = np.asarray(g_pp, dtype=float)
    g_ss = np.asarray(g_ss, dtype=float)
    m, n = g_pp.shape[0], g_ss.shape[0]
    grid = GridSpec(rows=max(m, 1), cols=1, spacing_m=200.0, active_ap_count=m)
    placement = NodePlacement(
        ap_positions=np.zeros((max(m, 1), 2)),
        active_ap_indices=tuple(range(m)),
        pn_rx_positions=np.zeros((m, 2)),
        cr_tx_positions=np.zeros((n, 2)),
        cr_rx_positions=np.zeros((n, 2)),
        grid=grid,
    )
    gains = ChannelGains(
        g_pp=g_pp,
        g_ps=np.asarray(g_ps, dtype=float),
        g_ss=g_ss,
        g_sp=np.asarray(g_sp, dtype=float),
        noise_power_mw=noise_mw,
    )
    return Scenario(
        placement=placement,
        gains=gains,
        pn_powers_dbm=np.asarray(pn_dbm, dtype=float),
        actions=actions or ActionSpace.default(),
        amc=amc or AmcTable.default(xi=4.0, snr_gap=1.0),
        config=config or EnvConfig(n_cr=n),
    )


@pytest.fixture
def one_ap_one_cr():
    """Single PN link, single CR whose |T%| crosses the 5% limit between
    17.5 dBm (|T%| = 0.0472) and 20 dBm (|T%| = 0.08 exactly)."""
    # 20 dBm = 100 mW; |T%| = 0.08 with xi=4 needs I/noise = 2^0.32 - 1
    iota = 2.0 ** 0.32 - 1.0
    g_cr_to_rx = iota * 1e-13 / 100.0
    return make_scenario(
        g_pp=[[1e-10]],
        g_ps=[[g_cr_to_rx]],
        g_ss=[[1e-12]],
        g_sp=[[TINY]],
        pn_dbm=[0.0],
        config=EnvConfig(n_cr=1),
    )


@pytest.fixture
def bernoulli_probe_scenario():
    """One PN link, two CRs.

    Agent 0 at 20 dBm sits at |T%| = 0.04; agent 1 (policy off) pushes the
    link past the 5% limit only at its top three power levels, and its
    cross gain onto agent 0's receiver is negligible, so agent 0's reward
    is exactly Bernoulli under co-agent experimentation.
    """
    iota0 = 2.0 ** 0.16 - 1.0                 # |T%| = 0.04 at the policy
    g0 = iota0 * 1e-13 / 100.0
    g1 = 1e-16   # agent 1 exceeds the remaining margin above ~15 dBm
    return make_scenario(
        g_pp=[[1e-10]],
        g_ps=[[g0], [g1]],
        g_ss=[[1e-12, TINY], [TINY, 1e-12]],
        g_sp=[[TINY, TINY]],
        pn_dbm=[0.0],
        config=EnvConfig(n_cr=2, reward_mode="local"),
    )
