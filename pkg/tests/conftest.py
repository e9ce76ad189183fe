"""Shared strategies and independent oracles for the test suite."""

from __future__ import annotations

import itertools

import numpy as np
from hypothesis import strategies as st

from socsim.opinions import PRIOR_WEIGHT, Opinion

_unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False, allow_infinity=False)


@st.composite
def opinions(draw, min_uncertainty=0.0, base_rate=None):
    """Valid opinions with b + d + u = 1 by construction."""
    b = draw(_unit)
    d = draw(st.floats(min_value=0.0, max_value=1.0 - b, allow_nan=False, allow_infinity=False))
    u = max(0.0, 1.0 - b - d)
    if u < min_uncertainty:
        scale = (1.0 - min_uncertainty) / (b + d) if (b + d) > 0 else 0.0
        b, d, u = b * scale, d * scale, min_uncertainty
    a = draw(_unit) if base_rate is None else base_rate
    return Opinion(b, d, u, a)


def non_dogmatic(base_rate=None):
    return opinions(min_uncertainty=1e-6, base_rate=base_rate)


# ----------------------------------------------------------------------
# independent oracles


def evidence_fuse_oracle(a: Opinion, b: Opinion) -> Opinion:
    """Cumulative fusion by adding Dirichlet evidence counts."""
    ra, sa = PRIOR_WEIGHT * a.belief / a.uncertainty, PRIOR_WEIGHT * a.disbelief / a.uncertainty
    rb, sb = PRIOR_WEIGHT * b.belief / b.uncertainty, PRIOR_WEIGHT * b.disbelief / b.uncertainty
    r, s = ra + rb, sa + sb
    denom = r + s + PRIOR_WEIGHT
    return Opinion(r / denom, s / denom, PRIOR_WEIGHT / denom, a.base_rate)


def evidence_average_oracle(ops: list[Opinion]) -> Opinion:
    """N-ary averaging fusion by averaging Dirichlet evidence counts."""
    rs = [PRIOR_WEIGHT * o.belief / o.uncertainty for o in ops]
    ss = [PRIOR_WEIGHT * o.disbelief / o.uncertainty for o in ops]
    r, s = sum(rs) / len(ops), sum(ss) / len(ops)
    denom = r + s + PRIOR_WEIGHT
    return Opinion(r / denom, s / denom, PRIOR_WEIGHT / denom, ops[0].base_rate)


def brute_force_pair_counts(blocks_p, blocks_q):
    """O(n^2) pair enumeration over two partitions given as block lists."""
    label_p = {a: i for i, b in enumerate(blocks_p) for a in b}
    label_q = {a: i for i, b in enumerate(blocks_q) for a in b}
    agents = sorted(label_p)
    counts = [0, 0, 0, 0]  # n11, n10, n01, n00
    for x, y in itertools.combinations(agents, 2):
        same_p = label_p[x] == label_p[y]
        same_q = label_q[x] == label_q[y]
        if same_p and same_q:
            counts[0] += 1
        elif same_p:
            counts[1] += 1
        elif same_q:
            counts[2] += 1
        else:
            counts[3] += 1
    return tuple(counts)


def random_partition(rng: np.random.Generator, n: int, max_blocks: int | None = None):
    """A uniformly labeled random partition of range(n) as a block list."""
    if n == 0:
        return []
    k = int(rng.integers(1, (max_blocks or n) + 1))
    labels = rng.integers(0, k, size=n)
    blocks: dict[int, set[int]] = {}
    for agent, label in enumerate(labels):
        blocks.setdefault(int(label), set()).add(agent)
    return list(blocks.values())


def assert_opinions_close(x: Opinion, y: Opinion, tol: float = 1e-9) -> None:
    assert abs(x.belief - y.belief) <= tol, (x, y)
    assert abs(x.disbelief - y.disbelief) <= tol, (x, y)
    assert abs(x.uncertainty - y.uncertainty) <= tol, (x, y)
    assert abs(x.base_rate - y.base_rate) <= tol, (x, y)
