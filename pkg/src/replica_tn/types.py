from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

from ._errors import UnsupportedParameterError

DEFAULT_CUTOFF = 1e-13


@dataclass(frozen=True)
class TruncationParams:
    """SVD truncation settings for the replica MPS."""

    chi_max: int
    cutoff: float = DEFAULT_CUTOFF
    # One SVD per commutant label when the gate output is locked to |σ⟩|σ⟩.
    block_sparse: bool = True

    def __post_init__(self) -> None:
        if self.chi_max < 1:
            raise UnsupportedParameterError(f"chi_max must be >= 1, got {self.chi_max}")
        if not 0.0 <= self.cutoff < 1.0:
            raise UnsupportedParameterError(f"cutoff must lie in [0, 1), got {self.cutoff}")

    @classmethod
    def for_basis(cls, n_basis: int, cutoff: float = DEFAULT_CUTOFF, block_sparse: bool = True,
                  N: int | None = None) -> TruncationParams:
        """Default truncation: chi_max = 4·n_B², raised to N/2 for long chains of small bases."""
        chi_max = 4 * n_basis * n_basis
        if N is not None:
            chi_max = max(chi_max, N // 2)
        return cls(chi_max=chi_max, cutoff=cutoff, block_sparse=block_sparse)


@dataclass
class LayerDiagnostics:
    """Bookkeeping emitted after every brickwork layer."""
    layer: int
    parity: str
    bond_dims: tuple[int, ...]
    discarded_weight: float
    log_scale: float

    def to_json(self, **extra: object) -> str:
        payload = asdict(self)
        payload["bond_dims"] = list(self.bond_dims)
        payload.update(extra)
        return json.dumps(payload, sort_keys=True)


@dataclass
class ContractionResult:
    """One averaged observable at one depth, kept in mantissa/log form."""

    t: int
    log_value: float
    sign: float = 1.0
    label: str = ""
    chi_used: int = 1
    discarded_weight_max: float = 0.0
    wall_time_s: float = 0.0

    @property
    def value(self) -> float:
        if self.sign == 0.0:
            return 0.0
        return self.sign * math.exp(self.log_value)


@dataclass
class OracleResult:
    """Monte Carlo sample mean with its standard error."""
    mean: float
    std_error: float
    n_samples: int
    samples: list[float] = field(default_factory=list, repr=False)
