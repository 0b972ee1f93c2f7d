"""Resource caps shared by every module that materializes dense objects.

Caps can be overridden per call (``limits=Limits(...)``) or process-wide
through environment variables::

    REPLICA_TN_MAX_ELEMENT_DIM=4194304 replica-tn ipr --k 5 --d 3 ...
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass

from ._errors import ResourceError, UnsupportedParameterError

logger = logging.getLogger(__name__)

_ENV_PREFIX = "REPLICA_TN_"


@dataclass(frozen=True)
class Limits:
    """Upper bounds on dense array sizes (number of entries along one side)."""

    # d^{2k}: explicit single-site replica vectors
    max_element_dim: int = 4**10
    # n_B^N: dense replica-state oracle
    max_dense_dim: int = 2_000_000
    # d^N: Monte Carlo statevector
    max_statevector_dim: int = 4096
    # d^N: Monte Carlo density matrix side
    max_density_dim: int = 4096

    def __post_init__(self) -> None:
        for name in ("max_element_dim", "max_dense_dim", "max_statevector_dim", "max_density_dim"):
            if getattr(self, name) < 1:
                raise UnsupportedParameterError(f"{name} must be positive")

    @classmethod
    def from_env(cls, environ: dict[str, str] | None = None) -> Limits:
        """Build limits from ``REPLICA_TN_MAX_*`` environment variables."""
        env = os.environ if environ is None else environ
        overrides: dict[str, int] = {}
        for name in ("max_element_dim", "max_dense_dim", "max_statevector_dim", "max_density_dim"):
            raw = env.get(_ENV_PREFIX + name.upper())
            if raw is None:
                continue
            try:
                overrides[name] = int(raw)
            except ValueError as exc:
                raise UnsupportedParameterError(
                    f"{_ENV_PREFIX + name.upper()}={raw!r} is not an integer"
                ) from exc
        if overrides:
            logger.debug("Resource limits from environment: %s", overrides)
        return cls(**overrides)


DEFAULT_LIMITS = Limits()


def check_size(what: str, required: int, cap: int) -> None:
    """Raise ResourceError if ``required`` exceeds ``cap``."""
    if required > cap:
        raise ResourceError(f"{what} needs {required} entries, cap is {cap}", required=required, cap=cap)
