"""Hyperparameters shared by inference, EM and the CLI."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Optional

PSI_MODES = ("at_least_two", "literal")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Hyperparams:
    """Model and inference settings.

    Exactly one of ``rate`` (fraction of vertices declared outliers) and
    ``threshold`` (the outlierness energy ``a0``) must be set.  ``coda``
    drops edge-vertices from the HMRF; see :func:`hcoda.em.coda_mode`.
    """

    K: int = 5
    lambda1: float = 0.5
    lambda2: float = 1.0
    lambda3: float = 1.0
    rate: Optional[float] = 0.05
    threshold: Optional[float] = None
    psi_mode: str = "at_least_two"
    weight_scheme: str = "inverse_degree"
    triangle_scheme: str = "strength_ratio"
    max_sweeps: int = 100
    max_em_iter: int = 50
    restarts: int = 5
    seed: int = 0
    kmeans_iter: int = 10
    kmeans_init: int = 10
    init_trim: float = 0.05
    random_order: bool = False
    empty_policy: str = "keep"
    sigma_floor: float = 1e-6
    smoothing: float = 1e-3
    rho_node: Optional[float] = None
    rho_edge: Optional[float] = None
    coda: bool = False

    def __post_init__(self):
        if self.K < 1:
            raise ConfigError("K must be >= 1")
        for name in ("lambda1", "lambda2", "lambda3"):
            val = getattr(self, name)
            if not (val >= 0 and math.isfinite(val)):
                raise ConfigError(f"{name} must be a finite nonnegative number")
        if (self.rate is None) == (self.threshold is None):
            raise ConfigError("exactly one of rate / threshold must be set")
        if self.rate is not None and not 0 <= self.rate < 1:
            raise ConfigError("rate must lie in [0, 1)")
        if self.psi_mode not in PSI_MODES:
            raise ConfigError(f"psi_mode must be one of {PSI_MODES}")
        if self.empty_policy not in ("keep", "reseed"):
            raise ConfigError("empty_policy must be 'keep' or 'reseed'")
        if not 0 <= self.init_trim < 1:
            raise ConfigError("init_trim must lie in [0, 1)")
        if self.max_sweeps < 1 or self.max_em_iter < 1 or self.restarts < 1:
            raise ConfigError("max_sweeps, max_em_iter and restarts must be >= 1")

    @property
    def rate_mode(self) -> bool:
        return self.rate is not None

    def replace(self, **changes) -> "Hyperparams":
        return dataclasses.replace(self, **changes)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls)]
