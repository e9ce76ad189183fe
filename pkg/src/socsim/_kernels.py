"""Hot numeric kernels, JIT-compiled with numba when available.

Setting the environment variable ``SOCSIM_NO_NUMBA=1`` forces the pure
numpy implementations; otherwise numba is used if importable. Both
backends are always exposed (``*_numpy`` / ``*_numba``) so tests and the
benchmark can compare them directly.
"""

from __future__ import annotations

import math
import os

import numpy as np

_ENV_DISABLED = os.environ.get("SOCSIM_NO_NUMBA", "").strip().lower() in {"1", "true", "yes"}

try:
    if _ENV_DISABLED:
        raise ImportError("numba disabled via SOCSIM_NO_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def decorator(func):
            return func

        if args and callable(args[0]):
            return args[0]
        return decorator


def pairwise_features_numpy(pos, ang):
    """Pair geometry for agents with positions ``pos`` (m, 2) and shoulder
    normals ``ang`` (m,) radians.

    Returns flat arrays (i_idx, j_idx, dist, phi) over unordered index
    pairs i < j. ``phi`` is the mutual-facing feature in [0, 1]:
    (cos a_ij + cos a_ji + 2) / 4 with a_xy the angle between x's shoulder
    normal and the direction from x to y.
    """
    m = pos.shape[0]
    i_idx, j_idx = np.triu_indices(m, k=1)
    dx = pos[j_idx, 0] - pos[i_idx, 0]
    dy = pos[j_idx, 1] - pos[i_idx, 1]
    dist = np.hypot(dx, dy)
    safe = np.where(dist > 0.0, dist, 1.0)
    ux, uy = dx / safe, dy / safe
    cos_ij = np.cos(ang[i_idx]) * ux + np.sin(ang[i_idx]) * uy
    cos_ji = -(np.cos(ang[j_idx]) * ux + np.sin(ang[j_idx]) * uy)
    phi = (cos_ij + cos_ji + 2.0) / 4.0
    phi = np.where(dist > 0.0, phi, 1.0)
    return i_idx.astype(np.int64), j_idx.astype(np.int64), dist, phi


@njit(cache=True)
def pairwise_features_numba(pos, ang):  # pragma: no cover - numba path
    m = pos.shape[0]
    npairs = m * (m - 1) // 2
    i_idx = np.empty(npairs, dtype=np.int64)
    j_idx = np.empty(npairs, dtype=np.int64)
    dist = np.empty(npairs, dtype=np.float64)
    phi = np.empty(npairs, dtype=np.float64)
    k = 0
    for i in range(m):
        ci = math.cos(ang[i])
        si = math.sin(ang[i])
        for j in range(i + 1, m):
            dx = pos[j, 0] - pos[i, 0]
            dy = pos[j, 1] - pos[i, 1]
            d = math.sqrt(dx * dx + dy * dy)
            dist[k] = d
            if d > 0.0:
                ux = dx / d
                uy = dy / d
                cos_ij = ci * ux + si * uy
                cos_ji = -(math.cos(ang[j]) * ux + math.sin(ang[j]) * uy)
                phi[k] = (cos_ij + cos_ji + 2.0) / 4.0
            else:
                phi[k] = 1.0
            i_idx[k] = i
            j_idx[k] = j
            k += 1
    return i_idx, j_idx, dist, phi


def force_step_numpy(pos, center, k_center, k_repel, eps, max_disp, dt):
    """One explicit-Euler step of the group arrangement force model.

    Each agent is attracted to ``center`` and repelled by its two nearest
    neighbors with force k_repel / d (distance clamped below ``eps``).
    Per-step displacement is capped at ``max_disp``.
    """
    m = pos.shape[0]
    force = k_center * (center[None, :] - pos)
    if m >= 2:
        diff = pos[:, None, :] - pos[None, :, :]
        d2 = np.sum(diff * diff, axis=2)
        np.fill_diagonal(d2, np.inf)
        n_nb = min(2, m - 1)
        nearest = np.argpartition(d2, n_nb - 1, axis=1)[:, :n_nb]
        rows = np.arange(m)[:, None]
        dvec = diff[rows, nearest]
        dist = np.maximum(np.sqrt(d2[rows, nearest]), eps)
        force += np.sum(k_repel * dvec / (dist * dist)[..., None], axis=1)
    disp = force * dt
    norm = np.hypot(disp[:, 0], disp[:, 1])
    scale = np.where(norm > max_disp, max_disp / np.where(norm > 0, norm, 1.0), 1.0)
    return pos + disp * scale[:, None]


@njit(cache=True)
def force_step_numba(pos, center, k_center, k_repel, eps, max_disp, dt):  # pragma: no cover
    m = pos.shape[0]
    out = np.empty_like(pos)
    for i in range(m):
        fx = k_center * (center[0] - pos[i, 0])
        fy = k_center * (center[1] - pos[i, 1])
        d1 = np.inf
        d2 = np.inf
        n1 = -1
        n2 = -1
        for j in range(m):
            if j == i:
                continue
            dx = pos[i, 0] - pos[j, 0]
            dy = pos[i, 1] - pos[j, 1]
            dd = dx * dx + dy * dy
            if dd < d1:
                d2 = d1
                n2 = n1
                d1 = dd
                n1 = j
            elif dd < d2:
                d2 = dd
                n2 = j
        for nb in (n1, n2):
            if nb < 0:
                continue
            dx = pos[i, 0] - pos[nb, 0]
            dy = pos[i, 1] - pos[nb, 1]
            d = math.sqrt(dx * dx + dy * dy)
            if d < eps:
                d = eps
            fx += k_repel * dx / (d * d)
            fy += k_repel * dy / (d * d)
        mx = fx * dt
        my = fy * dt
        norm = math.sqrt(mx * mx + my * my)
        if norm > max_disp and norm > 0.0:
            mx *= max_disp / norm
            my *= max_disp / norm
        out[i, 0] = pos[i, 0] + mx
        out[i, 1] = pos[i, 1] + my
    return out


if HAVE_NUMBA:
    pairwise_features = pairwise_features_numba
    force_step = force_step_numba
else:
    pairwise_features = pairwise_features_numpy
    force_step = force_step_numpy
