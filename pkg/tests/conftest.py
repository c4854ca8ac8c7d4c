"""Shared fixtures and independent reference implementations.

The reference filter here is deliberately naive: explicit ring buffers over
past inputs and outputs evaluating the difference equation term by term.  It
is the oracle the production Direct Form II transposed stepper is checked
against and must stay independent of it.
"""

from collections import deque

import numpy as np
import pytest

import specfilter as sf


def reference_filter(b, a, u):
    """Difference-equation evaluation with explicit ring buffers."""
    b = [float(x) for x in b]
    a = [float(x) for x in a]
    past_u = deque([0.0] * len(b), maxlen=len(b))
    n_fb = len(a) - 1
    past_y = deque([0.0] * n_fb, maxlen=n_fb) if n_fb else None
    out = np.empty(len(u), dtype=np.float64)
    for i, x in enumerate(u):
        past_u.appendleft(float(x))
        acc = sum(bk * uk for bk, uk in zip(b, past_u))
        if past_y is not None:
            acc -= sum(ak * yk for ak, yk in zip(a[1:], past_y))
        out[i] = acc
        if past_y is not None:
            past_y.appendleft(acc)
    return out


def random_stable_filter(rng, max_order=5, filter_id=0):
    """Random stable filter from poles drawn strictly inside the unit circle."""
    order = int(rng.integers(1, max_order + 1))
    poles = []
    remaining = order
    while remaining > 0:
        if remaining >= 2 and rng.random() < 0.6:
            r = rng.uniform(0.1, 0.95)
            theta = rng.uniform(0.05, np.pi - 0.05)
            poles += [r * np.exp(1j * theta), r * np.exp(-1j * theta)]
            remaining -= 2
        else:
            poles.append(complex(rng.uniform(-0.95, 0.95)))
            remaining -= 1
    a = np.real(np.poly(poles))
    n_zeros = int(rng.integers(0, order + 1))
    zeros = rng.uniform(-1.5, 1.5, n_zeros) + 1j * rng.uniform(-1.5, 1.5, n_zeros)
    zeros = np.concatenate([zeros, np.conj(zeros)])  # keep coefficients real
    b = np.real(np.poly(zeros)) * rng.uniform(0.1, 2.0)
    return sf.make_filter(filter_id, b, a)


class ScriptedPolicy:
    """Replays a fixed command schedule; used to probe the runtime directly."""

    def __init__(self, schedule, node_label="F1_ONLY"):
        self.schedule = {n: list(cmds) for n, cmds in schedule.items()}
        self.node_label = node_label
        self._n = -1

    def update(self, sig):
        self._n += 1
        return self.schedule.get(self._n, [])


@pytest.fixture(scope="session")
def filter_pair():
    return sf.default_filter_pair()


@pytest.fixture(scope="session")
def scenario():
    return sf.default_scenario()


@pytest.fixture(scope="session")
def benchmark_trace(scenario, filter_pair):
    return sf.run_scenario(scenario, sf.StrategyConfig("benchmark"), filter_pair)
