"""Synthetic prediction sets with known calibration.

True logits ``z`` are drawn i.i.d. normal with scale ``sigma``, labels are
sampled from ``softmax(z)``, and the emitted logits are ``distort * z``.
With ``distort == 1`` the emitted probabilities are the true conditional
label distribution; ``distort > 1`` gives overconfidence, ``< 1``
underconfidence.

Random numbers come from the Philox 4x32 counter-based generator, so output
is reproducible from the seed alone. Normals use the Box-Muller transform on
the generator's uniforms: the first ``2 * ceil(n*K/2)`` uniforms feed the
logits, the next ``n`` pick the labels by inverse CDF.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from calim.data_model import softmax, validate
from calim.errors import InvalidConfig


@dataclass(frozen=True)
class SynthConfig:
    n: int = 10_000
    K: int = 10
    sigma: float = 2.0
    distort: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise InvalidConfig(f"n must be a positive integer, got {self.n!r}")
        if int(self.K) != self.K or self.K < 2:
            raise InvalidConfig(f"K must be an integer >= 2, got {self.K!r}")
        if not (np.isfinite(self.sigma) and self.sigma >= 0):
            raise InvalidConfig(f"sigma must be >= 0, got {self.sigma!r}")
        if not (np.isfinite(self.distort) and self.distort > 0):
            raise InvalidConfig(f"distort must be > 0, got {self.distort!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise InvalidConfig(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")

    @property
    def mode(self) -> str:
        return "calibrated" if self.distort == 1.0 else "distorted"


def box_muller(u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
    """Standard normals from pairs of uniforms in [0, 1); returns 2 * len(u1) values."""
    r = np.sqrt(-2.0 * np.log1p(-u1))  # 1 - u1 lies in (0, 1]
    theta = 2.0 * np.pi * u2
    return np.concatenate([r * np.cos(theta), r * np.sin(theta)])


def generate(cfg: SynthConfig, *, return_true: bool = False):
    """Draw a prediction set. With ``return_true`` also return the true probabilities."""
    rng = np.random.Generator(np.random.Philox(int(cfg.seed)))
    total = cfg.n * cfg.K
    pairs = (total + 1) // 2
    u = rng.random(2 * pairs)
    normals = box_muller(u[:pairs], u[pairs:])[:total]
    z = cfg.sigma * normals.reshape(cfg.n, cfg.K)

    true_p = softmax(z)
    cdf = np.cumsum(true_p, axis=1)
    draws = rng.random(cfg.n)
    labels = (cdf <= draws[:, None]).sum(axis=1)
    labels = np.minimum(labels, cfg.K - 1)

    ps = validate(logits=cfg.distort * z, labels=labels)
    if return_true:
        return ps, true_p
    return ps
