"""Single-qudit channels in doubled (vectorized) representation and noisy Gram matrices.

A density matrix ρ is vectorized row-major, ``vec(ρ)[i·d + j] = ρ_ij``, which
matches the interleaved (ket, bra) pair of a replica vector. A channel is the
d²×d² matrix ``M`` with ``vec(N(ρ)) = M vec(ρ)``.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from ._errors import ShapeMismatchError, UnsupportedParameterError
from .commutant import CommutantBasis, GramMatrix, element_vector
from .config import Limits

logger = logging.getLogger(__name__)

_IMAG_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ChannelSuperop:
    """A single-qudit channel acting on vectorized operators."""

    matrix: np.ndarray
    label: str = ""
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        side = m.shape[0]
        d = int(round(np.sqrt(side)))
        if m.ndim != 2 or m.shape[1] != side or d * d != side:
            raise ShapeMismatchError(f"superoperator must be d²×d², got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def d(self) -> int:
        return int(round(np.sqrt(self.matrix.shape[0])))

    @property
    def is_identity(self) -> bool:
        return bool(np.array_equal(self.matrix, np.eye(self.matrix.shape[0])))

    def compose(self, other: ChannelSuperop) -> ChannelSuperop:
        """``self ∘ other``: apply ``other`` first."""
        if other.d != self.d:
            raise ShapeMismatchError(f"cannot compose channels on d={self.d} and d={other.d}")
        label = f"{self.label}*{other.label}" if self.label and other.label else self.label or other.label
        return ChannelSuperop(self.matrix @ other.matrix, label=label)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        d = self.d
        return (self.matrix @ np.asarray(rho, dtype=complex).reshape(-1)).reshape(d, d)

    def trace_functional_error(self) -> float:
        """max |vec(I)ᵀ M − vec(I)ᵀ|; zero for a trace-preserving channel."""
        e = np.eye(self.d).reshape(-1)
        return float(np.max(np.abs(e @ self.matrix - e)))


def identity_choi(d: int) -> ChannelSuperop:
    """The identity channel, a d²×d² identity matrix."""
    if d < 2:
        raise UnsupportedParameterError(f"d must be >= 2, got {d}")
    return ChannelSuperop(np.eye(d * d), label="id")


def depolarising_choi(d: int, p: float) -> ChannelSuperop:
    """``ρ ↦ (1-p) ρ + p tr(ρ) I/d`` as a superoperator."""
    if d < 2:
        raise UnsupportedParameterError(f"d must be >= 2, got {d}")
    if not 0.0 <= p <= 1.0:
        raise UnsupportedParameterError(f"depolarising rate must lie in [0, 1], got {p}")
    e = np.eye(d).reshape(-1)
    matrix = (1.0 - p) * np.eye(d * d) + p * np.outer(e / d, e)
    return ChannelSuperop(matrix, label=f"dep:{p:g}", params={"p": p})


_CHANNEL_RE = re.compile(r"^(?P<name>id|dep)(?::(?P<p>[0-9eE.+-]+))?$")


def parse_channel(spec: str, d: int) -> ChannelSuperop:
    """Parse ``"id"`` or ``"dep:<p>"``."""
    match = _CHANNEL_RE.match(spec.strip().lower())
    if match is None:
        raise UnsupportedParameterError(f"unknown channel spec {spec!r}; expected 'id' or 'dep:<p>'")
    if match["name"] == "id":
        if match["p"] is not None:
            raise UnsupportedParameterError(f"identity channel takes no rate: {spec!r}")
        return identity_choi(d)
    if match["p"] is None:
        raise UnsupportedParameterError(f"depolarising channel needs a rate: {spec!r}")
    try:
        p = float(match["p"])
    except ValueError as exc:
        raise UnsupportedParameterError(f"bad depolarising rate in {spec!r}") from exc
    return depolarising_choi(d, p)


@dataclass(frozen=True, eq=False)
class ChannelStack:
    """One channel per replica; replica ``a`` sees ``channels[a]``."""

    channels: tuple[ChannelSuperop, ...]

    def __post_init__(self) -> None:
        channels = tuple(self.channels)
        if not channels:
            raise ShapeMismatchError("a channel stack needs at least one channel")
        if len({c.d for c in channels}) != 1:
            raise ShapeMismatchError("all channels in a stack must share d")
        object.__setattr__(self, "channels", channels)

    @classmethod
    def uniform(cls, channel: ChannelSuperop, k: int) -> ChannelStack:
        return cls(tuple([channel] * k))

    @classmethod
    def identity(cls, d: int, k: int) -> ChannelStack:
        return cls.uniform(identity_choi(d), k)

    @property
    def k(self) -> int:
        return len(self.channels)

    @property
    def d(self) -> int:
        return self.channels[0].d

    @property
    def is_identity(self) -> bool:
        return all(c.is_identity for c in self.channels)

    def labels(self) -> list[str]:
        return [c.label for c in self.channels]

    def apply(self, vector: np.ndarray) -> np.ndarray:
        """Apply the stack replica by replica to a single-site vector of length d^{2k}."""
        d2 = self.d * self.d
        k = self.k
        if vector.size != d2 ** k:
            raise ShapeMismatchError(f"vector of length {vector.size} does not match d={self.d}, k={k}")
        v = np.asarray(vector, dtype=complex).reshape((d2,) * k)
        for a, channel in enumerate(self.channels):
            if channel.is_identity:
                continue
            v = np.moveaxis(np.tensordot(channel.matrix, v, axes=([1], [a])), 0, a)
        return v.reshape(-1)


def _real(values: np.ndarray, what: str) -> np.ndarray:
    if np.iscomplexobj(values):
        imag = float(np.max(np.abs(values.imag))) if values.size else 0.0
        scale = max(1.0, float(np.max(np.abs(values.real)))) if values.size else 1.0
        if imag > _IMAG_TOL * scale:
            logger.warning("Dropping imaginary part %.3g of %s", imag, what)
        return np.ascontiguousarray(values.real)
    return np.asarray(values, dtype=float)


def noisy_overlaps(
    basis: CommutantBasis,
    d: int,
    stack: ChannelStack,
    bra: np.ndarray,
    limits: Limits | None = None,
) -> np.ndarray:
    """``⟨⟨bra| N_1 ⊗ ... ⊗ N_k |σ⟩⟩`` for every basis element σ."""
    _check_stack(basis, d, stack)
    bra = np.asarray(bra)
    out = np.array([
        np.vdot(bra, stack.apply(element_vector(basis, j, d, limits)))
        for j in range(len(basis))
    ])
    return _real(out, "noisy overlaps")


def noisy_gram(
    basis: CommutantBasis,
    d: int,
    stack: ChannelStack,
    limits: Limits | None = None,
) -> GramMatrix:
    """Noisy Gram ``G̃[π, σ] = ⟨⟨π| N_1 ⊗ ... ⊗ N_k |σ⟩⟩``."""
    _check_stack(basis, d, stack)
    n = len(basis)
    vectors = np.stack([element_vector(basis, j, d, limits) for j in range(n)], axis=1)
    dressed = np.stack([stack.apply(vectors[:, j]) for j in range(n)], axis=1)
    entries = _real(vectors.conj().T @ dressed, "noisy Gram")
    entries.setflags(write=False)
    return GramMatrix(entries, d)


def _check_stack(basis: CommutantBasis, d: int, stack: ChannelStack) -> None:
    if stack.k != basis.k:
        raise ShapeMismatchError(f"stack has {stack.k} channels, basis has k={basis.k}")
    if stack.d != d:
        raise ShapeMismatchError(f"stack acts on d={stack.d}, expected d={d}")
