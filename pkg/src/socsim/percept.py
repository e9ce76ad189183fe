"""Logical sensor: pairwise geometry to subjective-logic opinions.

For every pair of individuals an observer can see, the relative distance
and a mutual-facing feature are turned into a likelihood of an ongoing
social interaction, either through a parametric distance-sigmoid times
facing term or through a two-class Gaussian mixture posterior. The
likelihood is embedded into an opinion with a configured floor of
uncertainty; sensor noise is injected here so one trace can be observed
at several accuracy levels.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .mobility import TraceFrame
from .opinions import Opinion


class DegenerateDataError(ValueError):
    """Raised when mixture fitting collapses despite regularization."""


@dataclass
class GmmModel:
    """Two class-conditional Gaussian mixtures over (distance, facing)."""

    means: tuple[np.ndarray, np.ndarray]  # per class: (K, 2)
    covariances: tuple[np.ndarray, np.ndarray]  # per class: (K, 2, 2)
    weights: tuple[np.ndarray, np.ndarray]  # per class: (K,)
    class_priors: tuple[float, float]

    def posterior(self, d: np.ndarray, phi: np.ndarray) -> np.ndarray:
        """P(interaction | d, phi) under the fitted mixtures."""
        x = np.stack([np.asarray(d, float), np.asarray(phi, float)], axis=-1)
        like0 = _mixture_density(x, self.means[0], self.covariances[0], self.weights[0])
        like1 = _mixture_density(x, self.means[1], self.covariances[1], self.weights[1])
        p0, p1 = self.class_priors
        denom = p0 * like0 + p1 * like1
        out = np.where(denom > 0, p1 * like1 / np.where(denom > 0, denom, 1.0), p1)
        return out

    def to_json(self) -> str:
        payload = {
            "classes": [
                {
                    "means": self.means[c].tolist(),
                    "covariances": self.covariances[c].tolist(),
                    "weights": self.weights[c].tolist(),
                }
                for c in (0, 1)
            ],
            "class_priors": list(self.class_priors),
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GmmModel":
        payload = json.loads(text)
        classes = payload["classes"]
        return cls(
            means=tuple(np.asarray(c["means"], float) for c in classes),
            covariances=tuple(np.asarray(c["covariances"], float) for c in classes),
            weights=tuple(np.asarray(c["weights"], float) for c in classes),
            class_priors=tuple(payload["class_priors"]),
        )


@dataclass
class PerceptConfig:
    model: str = "parametric"  # "parametric" | "gmm"
    distance_midpoint: float = 1.5
    distance_steepness: float = 4.0
    facing_weight: float = 1.0
    base_uncertainty: float = 0.1
    noise_sigma_pos: float = 0.0
    noise_sigma_angle: float = 0.0
    observation_radius: float = 10.0
    base_rate: float = 0.2
    gmm: Optional[GmmModel] = None

    def __post_init__(self) -> None:
        if not 0.0 < self.base_uncertainty <= 1.0:
            raise ValueError("base_uncertainty must lie in (0, 1]")
        if self.observation_radius <= 0:
            raise ValueError("observation_radius must be positive")
        if self.model not in ("parametric", "gmm"):
            raise ValueError(f"unknown percept model {self.model!r}")
        if self.model == "gmm" and self.gmm is None:
            raise ValueError("gmm model selected but no fitted model supplied")


def observe(
    frame: TraceFrame,
    observer: int,
    config: PerceptConfig,
    rng: np.random.Generator,
) -> list[tuple[int, int, Opinion]]:
    """Opinions about every unordered pair with both individuals within
    the observation radius of ``observer``. Positions and shoulder angles
    are perturbed with the configured sensor noise before the geometry
    features are computed, so the opinion about (i, j) does not depend on
    pair ordering."""
    oidx = frame.index_of(observer)
    if oidx is None:
        raise ValueError(f"observer {observer} not present in frame at t={frame.time}")
    rel = frame.pos - frame.pos[oidx]
    within = np.hypot(rel[:, 0], rel[:, 1]) <= config.observation_radius
    sel = np.flatnonzero(within)
    if len(sel) < 2:
        return []
    pos = frame.pos[sel]
    ang = frame.angle[sel]
    if config.noise_sigma_pos > 0.0:
        pos = pos + rng.normal(0.0, config.noise_sigma_pos, size=pos.shape)
    if config.noise_sigma_angle > 0.0:
        ang = ang + rng.normal(0.0, config.noise_sigma_angle, size=ang.shape)
    i_idx, j_idx, dist, phi = _kernels.pairwise_features(
        np.ascontiguousarray(pos, dtype=float), np.ascontiguousarray(ang, dtype=float)
    )
    likelihood = _likelihood(dist, phi, config)
    u0 = config.base_uncertainty
    ids = [frame.ids[k] for k in sel]
    out: list[tuple[int, int, Opinion]] = []
    for k in range(len(i_idx)):
        a, b = ids[i_idx[k]], ids[j_idx[k]]
        if a > b:
            a, b = b, a
        lk = float(likelihood[k])
        out.append(
            (a, b, Opinion(lk * (1.0 - u0), (1.0 - lk) * (1.0 - u0), u0, config.base_rate))
        )
    return out


def neighbors_within(frame: TraceFrame, observer: int, radius: float) -> list[tuple[int, float]]:
    """(id, true distance) for every other individual within ``radius``."""
    oidx = frame.index_of(observer)
    if oidx is None:
        return []
    rel = frame.pos - frame.pos[oidx]
    dist = np.hypot(rel[:, 0], rel[:, 1])
    return [
        (frame.ids[k], float(dist[k]))
        for k in np.flatnonzero(dist <= radius)
        if frame.ids[k] != observer
    ]


def _likelihood(dist: np.ndarray, phi: np.ndarray, config: PerceptConfig) -> np.ndarray:
    if config.model == "gmm":
        assert config.gmm is not None
        return np.clip(config.gmm.posterior(dist, phi), 0.0, 1.0)
    z = config.distance_steepness * (config.distance_midpoint - dist)
    sig = 1.0 / (1.0 + np.exp(-z))
    return sig * np.power(np.clip(phi, 0.0, 1.0), config.facing_weight)


# ----------------------------------------------------------------------
# Gaussian mixture fitting (two classes over (distance, facing))

_MIN_SAMPLES_PER_CLASS = 10


def fit_gmm(
    labeled: Sequence[tuple[float, float, int]],
    n_components: int = 2,
    seed: int = 0,
    reg: float = 1e-6,
    max_iter: int = 200,
    tol: float = 1e-8,
) -> GmmModel:
    """EM-fit class-conditional mixtures from (distance, facing, label)
    samples; deterministic for a fixed seed."""
    data = {0: [], 1: []}
    for d, phi, label in labeled:
        if label not in (0, 1):
            raise ValueError(f"labels must be 0 or 1, got {label!r}")
        data[label].append((float(d), float(phi)))
    for label, rows in data.items():
        if len(rows) < _MIN_SAMPLES_PER_CLASS:
            raise ValueError(
                f"need at least {_MIN_SAMPLES_PER_CLASS} samples per class, "
                f"class {label} has {len(rows)}"
            )
    rng = np.random.default_rng(seed)
    means, covs, weights = [], [], []
    for label in (0, 1):
        x = np.asarray(data[label])
        mu, cov, w = _fit_single_mixture(x, n_components, rng, reg, max_iter, tol)
        means.append(mu)
        covs.append(cov)
        weights.append(w)
    n0, n1 = len(data[0]), len(data[1])
    total = n0 + n1
    return GmmModel(
        means=(means[0], means[1]),
        covariances=(covs[0], covs[1]),
        weights=(weights[0], weights[1]),
        class_priors=(n0 / total, n1 / total),
    )


def _fit_single_mixture(x, k, rng, reg, max_iter, tol):
    n = x.shape[0]
    picks = rng.choice(n, size=min(k, n), replace=False)
    mu = x[picks].copy()
    if len(picks) < k:
        mu = np.vstack([mu, x[rng.choice(n, size=k - len(picks))]])
    base_cov = np.cov(x.T) + reg * np.eye(2)
    cov = np.stack([base_cov.copy() for _ in range(k)])
    w = np.full(k, 1.0 / k)
    prev = -np.inf
    for _ in range(max_iter):
        dens = np.stack(
            [w[c] * _gaussian_density(x, mu[c], cov[c]) for c in range(k)], axis=1
        )
        total = dens.sum(axis=1, keepdims=True)
        total = np.maximum(total, 1e-300)
        resp = dens / total
        loglik = float(np.sum(np.log(total)))
        nk = resp.sum(axis=0)
        nk = np.maximum(nk, 1e-12)
        w = nk / n
        mu = (resp.T @ x) / nk[:, None]
        for c in range(k):
            centered = x - mu[c]
            cov[c] = (resp[:, c][:, None] * centered).T @ centered / nk[c]
            cov[c] += reg * np.eye(2)
        if abs(loglik - prev) < tol:
            break
        prev = loglik
    for c in range(k):
        det = float(np.linalg.det(cov[c]))
        if not math.isfinite(det) or det <= 0:
            raise DegenerateDataError("singular component covariance after regularization")
    return mu, cov, w


def _gaussian_density(x, mean, cov):
    det = float(np.linalg.det(cov))
    if det <= 0:
        raise DegenerateDataError("singular covariance in density evaluation")
    inv = np.linalg.inv(cov)
    diff = x - mean
    expo = -0.5 * np.einsum("ni,ij,nj->n", diff, inv, diff)
    return np.exp(expo) / (2.0 * math.pi * math.sqrt(det))


def _mixture_density(x, means, covs, weights):
    flat = x.reshape(-1, 2)
    dens = np.zeros(flat.shape[0])
    for c in range(means.shape[0]):
        dens += weights[c] * _gaussian_density(flat, means[c], covs[c])
    return dens.reshape(x.shape[:-1])
