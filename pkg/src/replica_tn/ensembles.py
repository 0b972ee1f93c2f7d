"""Registry mapping gate-ensemble names to commutant-basis factories.

The default registry knows ``unitary``, ``orthogonal`` and ``clifford``;
callers can register further ensembles before building sweeps.

Usage::

    from replica_tn.ensembles import default_registry

    registry = default_registry()
    basis = registry.build_basis("orthogonal", k=2, d=2)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from ._errors import UnsupportedParameterError
from .commutant import (
    MAX_K_BRAUER,
    MAX_K_SYMMETRIC,
    CommutantBasis,
    brauer_basis,
    clifford_basis,
    symmetric_basis,
)


@dataclass(frozen=True)
class EnsembleConfig:
    """How to build the commutant basis of one gate ensemble."""

    name: str
    basis_factory: Callable[[int, int], CommutantBasis]
    max_k: int
    description: str = ""


class EnsembleRegistry:
    """Registry for ensemble name → EnsembleConfig mappings.

    Thread-safe for reads; populate before concurrent access.
    """

    def __init__(self) -> None:
        self._ensembles: dict[str, EnsembleConfig] = {}

    def register(self, name: str, config: EnsembleConfig) -> None:
        """Register an ensemble under ``name`` (stored lowercase)."""
        self._ensembles[name.lower()] = config

    def register_many(self, ensembles: dict[str, EnsembleConfig]) -> None:
        for name, config in ensembles.items():
            self._ensembles[name.lower()] = config

    def resolve(self, name: str) -> EnsembleConfig | None:
        """Case-insensitive lookup; None for unknown names."""
        return self._ensembles.get(name.lower())

    def list_ensembles(self) -> dict[str, EnsembleConfig]:
        """Return a copy of all registered ensembles."""
        return dict(self._ensembles)

    def build_basis(self, name: str, k: int, d: int) -> CommutantBasis:
        config = self.resolve(name)
        if config is None:
            raise UnsupportedParameterError(f"unknown ensemble {name!r}; {self.format_help()}")
        if k > config.max_k:
            raise UnsupportedParameterError(f"{config.name} supports k <= {config.max_k}, got k={k}")
        return config.basis_factory(k, d)

    def format_help(self) -> str:
        if not self._ensembles:
            return "No ensembles registered."
        lines = ["Available ensembles:"]
        for name, config in sorted(self._ensembles.items()):
            lines.append(f"  {name} (k <= {config.max_k}): {config.description}")
        return "\n".join(lines)


def default_registry() -> EnsembleRegistry:
    registry = EnsembleRegistry()
    registry.register_many({
        "unitary": EnsembleConfig(
            "unitary", lambda k, d: symmetric_basis(k), MAX_K_SYMMETRIC,
            "Haar-random U(d²) gates, permutation commutant",
        ),
        "orthogonal": EnsembleConfig(
            "orthogonal", lambda k, d: brauer_basis(k), MAX_K_BRAUER,
            "Haar-random O(d²) gates, Brauer commutant",
        ),
        "clifford": EnsembleConfig(
            "clifford", clifford_basis, 3,
            "uniform two-qudit Clifford gates (k=2, or k=3 qutrits)",
        ),
    })
    return registry
