"""Dressed two-site gates and the replica-MPS evolution.

The ensemble average of one brickwork gate maps a pair of replica spins
``(τ1, τ2)`` to a single shared label ``(σ, σ)``::

    T[σ, σ, τ1, τ2] = Σ_π Wg_{σπ}(d²) · G^L_{π τ1} · G^R_{π τ2}

with the Weingarten matrix taken at the two-site dimension ``d²`` and link
Gram factors (clean or noisy) at ``d``. Contracting the network bottom-up is
a non-unitary TEBD sweep on an MPS over replica-spin sites.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Literal, Mapping, Sequence, Union

import numpy as np

from ._errors import ShapeMismatchError, UnsupportedParameterError
from ._internal.linalg import qr_left, qr_right, svd, truncation_rank
from .commutant import (
    CliffordElement,
    CommutantBasis,
    GramMatrix,
    IrrepProjector,
    element_vector,
    weingarten_matrix,
)
from .config import Limits
from .types import TruncationParams

logger = logging.getLogger(__name__)

Parity = Literal["odd", "even"]


@dataclass(frozen=True, eq=False)
class DressedGate:
    """Rank-4 averaged gate ``[σ_out_left, σ_out_right, τ_in_left, τ_in_right]``.

    Averaged gates also carry the factored form
    ``T = Σ_σ (e_σ ⊗ e_σ) core[σ]``: ``core[σ, τ1, τ2]`` maps the two inputs
    onto one commutant label and ``out_basis[:, σ]`` is the single-site image
    ``e_σ`` of that label (the identity when omitted).
    """

    tensor: np.ndarray
    # True while the outputs are locked to |σ⟩|σ⟩ (false after irrep reduction)
    locked: bool = True
    core: np.ndarray | None = None
    out_basis: np.ndarray | None = None

    @property
    def n(self) -> int:
        return int(self.tensor.shape[0])

    @property
    def factored(self) -> bool:
        return self.core is not None

    @property
    def diagonal(self) -> np.ndarray:
        """``D[σ, τ1, τ2] = T[σ, σ, τ1, τ2]``."""
        idx = np.arange(self.n)
        return self.tensor[idx, idx]

    def as_matrix(self) -> np.ndarray:
        n = self.n
        return self.tensor.reshape(n * n, n * n)


@dataclass(frozen=True, eq=False)
class InitOverlaps:
    """Per-site overlaps ``v_i(τ) = ⟨⟨τ|ρ0⟩⟩_i`` of the initial product state."""

    per_site: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        arrays = tuple(np.asarray(v, dtype=float) for v in self.per_site)
        if len({a.shape for a in arrays}) > 1:
            raise ShapeMismatchError("all initial-overlap vectors must have the same length")
        object.__setattr__(self, "per_site", arrays)

    def __len__(self) -> int:
        return len(self.per_site)

    @classmethod
    def zero_state(cls, basis: CommutantBasis, d: int, N: int, limits: Limits | None = None) -> InitOverlaps:
        """Overlaps with ``|0⟩⟨0|`` on every site."""
        v = zero_state_overlaps(basis, d, limits)
        return cls(tuple([v] * N))

    def replace(self, sites: Sequence[int], vector: np.ndarray) -> InitOverlaps:
        per_site = list(self.per_site)
        for i in sites:
            per_site[i] = np.asarray(vector, dtype=float)
        return InitOverlaps(tuple(per_site))


def zero_state_overlaps(basis: CommutantBasis, d: int, limits: Limits | None = None) -> np.ndarray:
    """``⟨⟨τ|0^{2k}⟩⟩``: one for every Brauer diagram, read off the vector otherwise."""
    out = np.ones(len(basis))
    for j, element in enumerate(basis.elements):
        if isinstance(element, CliffordElement) and element.kind == "q3":
            out[j] = float(np.real(element_vector(basis, j, d, limits)[0]))
    return out


# ---------------------------------------------------------------------------
# Gates and initial pairs
# ---------------------------------------------------------------------------

def dressed_gate(basis: CommutantBasis, d: int, gram_left: GramMatrix, gram_right: GramMatrix) -> DressedGate:
    """Average of one two-site gate with link Gram factors folded in."""
    n = len(basis)
    for name, gram in (("gram_left", gram_left), ("gram_right", gram_right)):
        if gram.entries.shape != (n, n):
            raise ShapeMismatchError(f"{name} has shape {gram.entries.shape}, basis has {n} elements")
    wg = weingarten_matrix(basis, d * d).entries
    diag = np.einsum("sp,pa,pb->sab", wg, gram_left.entries, gram_right.entries)
    tensor = np.zeros((n, n, n, n))
    idx = np.arange(n)
    tensor[idx, idx] = diag
    tensor.setflags(write=False)
    diag.setflags(write=False)
    return DressedGate(tensor, locked=True, core=diag)


def initial_pair_amplitudes(
    basis: CommutantBasis,
    d: int,
    v_left: np.ndarray,
    v_right: np.ndarray,
) -> np.ndarray:
    """``c(σ) = Σ_τ Wg_{στ}(d²) v_left(τ) v_right(τ)``: the first layer acting on ρ0."""
    n = len(basis)
    v_left = np.asarray(v_left, dtype=float)
    v_right = np.asarray(v_right, dtype=float)
    if v_left.shape != (n,) or v_right.shape != (n,):
        raise ShapeMismatchError(f"overlap vectors must have length {n}")
    return weingarten_matrix(basis, d * d).entries @ (v_left * v_right)


# ---------------------------------------------------------------------------
# MPS
# ---------------------------------------------------------------------------

BondLabels = Union[np.ndarray, None]


class RowMPS:
    """Open-boundary MPS over replica-spin sites with a separate log-scale.

    The represented vector is ``exp(log_scale) · ψ(tensors)``. Tensors are
    ``(left bond, physical, right bond)``; boundary bonds have size 1.

    ``bond_labels[b]``, when set, gives for every column of bond ``b`` the
    commutant label that both neighbouring tensors carry on that column
    (zero elsewhere). Locked splits record it and the next layer contracts
    through it without forming two-site tensors.
    """

    def __init__(self, tensors: Sequence[np.ndarray], log_scale: float = 0.0,
                 ortho_center: int | None = None, bond_labels: Sequence[BondLabels] | None = None) -> None:
        self.tensors: list[np.ndarray] = [np.asarray(t, dtype=float) for t in tensors]
        if not self.tensors:
            raise ShapeMismatchError("an MPS needs at least one site")
        if self.tensors[0].shape[0] != 1 or self.tensors[-1].shape[2] != 1:
            raise ShapeMismatchError("boundary bonds of an open MPS must have size 1")
        labels = list(bond_labels) if bond_labels is not None else [None] * (len(self.tensors) - 1)
        if len(labels) != len(self.tensors) - 1:
            raise ShapeMismatchError(f"{len(labels)} bond labels for {len(self.tensors)} sites")
        self.bond_labels: list[BondLabels] = labels
        self.log_scale = float(log_scale)
        self.ortho_center = ortho_center
        self.layer_discarded = 0.0

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def phys_dim(self) -> int:
        return int(self.tensors[0].shape[1])

    def bond_dims(self) -> list[int]:
        return [int(t.shape[2]) for t in self.tensors[:-1]]

    def max_bond(self) -> int:
        return max(self.bond_dims(), default=1)

    def copy(self) -> RowMPS:
        out = RowMPS([t.copy() for t in self.tensors], self.log_scale, self.ortho_center, self.bond_labels)
        out.layer_discarded = self.layer_discarded
        return out

    def _rescaled(self, a: np.ndarray) -> np.ndarray:
        m = float(np.max(np.abs(a))) if a.size else 0.0
        if m > 0.0 and math.isfinite(m):
            self.log_scale += math.log(m)
            return a / m
        return a

    def _normalize_site(self, i: int) -> None:
        self.tensors[i] = self._rescaled(self.tensors[i])

    def _forget_labels(self, *bonds: int) -> None:
        for b in bonds:
            if 0 <= b < len(self.bond_labels):
                self.bond_labels[b] = None

    def _shift_right(self, i: int) -> None:
        q, r = qr_right(self.tensors[i])
        self.tensors[i] = q
        self.tensors[i + 1] = np.tensordot(r, self.tensors[i + 1], axes=(1, 0))
        self._forget_labels(i)

    def _shift_left(self, i: int) -> None:
        l, q = qr_left(self.tensors[i])
        self.tensors[i] = q
        self.tensors[i - 1] = np.tensordot(self.tensors[i - 1], l, axes=(2, 0))
        self._forget_labels(i - 1)

    def canonicalize(self, center: int = 0) -> None:
        """Full QR sweep putting the orthogonality center at ``center``."""
        for i in range(center):
            self._shift_right(i)
        for i in range(self.n_sites - 1, center, -1):
            self._shift_left(i)
        self.ortho_center = center
        self._normalize_site(center)

    def move_center(self, target: int) -> None:
        if self.ortho_center is None:
            self.canonicalize(target)
            return
        while self.ortho_center < target:
            self._shift_right(self.ortho_center)
            self.ortho_center += 1
        while self.ortho_center > target:
            self._shift_left(self.ortho_center)
            self.ortho_center -= 1
        self._normalize_site(target)

    def apply_two_site(self, i: int, gate: DressedGate, trunc: TruncationParams) -> float:
        """Apply ``gate`` on sites ``(i, i+1)``; returns the discarded weight."""
        if gate.n != self.phys_dim:
            raise ShapeMismatchError(f"gate side {gate.n} does not match physical dimension {self.phys_dim}")
        self.move_center(i)
        a, b = self.tensors[i], self.tensors[i + 1]
        theta = np.tensordot(a, b, axes=(2, 0))
        if gate.locked and trunc.block_sparse:
            left, right, discarded = _split_locked(theta, gate, trunc)
        else:
            left, right, discarded = _split_dense(theta, gate, trunc)
        self.tensors[i] = left
        self.tensors[i + 1] = right
        self._forget_labels(i - 1, i, i + 1)
        self.ortho_center = i + 1
        self._normalize_site(i + 1)
        return discarded

    def apply_factored_layer(self, gates: Mapping[int, DressedGate], trunc: TruncationParams) -> float:
        """Apply factored gates keyed by their left site; returns the discarded weight.

        Every gate first contracts its two sites onto one label site. The
        contracted chain is brought to right-canonical form, and one
        left-to-right sweep splits each label site back into two sites and
        truncates every bond against orthonormal environments, so no bond is
        cut while a neighbouring gate is still pending.
        """
        chain: list[np.ndarray] = []
        owners: list[DressedGate | None] = []
        i = 0
        while i < self.n_sites:
            gate = gates.get(i)
            if gate is None:
                chain.append(self.tensors[i])
                i += 1
            else:
                chain.append(self._rescaled(self._contract_pair(i, gate)))
                i += 2
            owners.append(gate)
        for j in range(len(chain) - 1, 0, -1):
            l, q = qr_left(chain[j])
            chain[j] = q
            chain[j - 1] = self._rescaled(np.tensordot(chain[j - 1], l, axes=(2, 0)))

        tensors: list[np.ndarray] = []
        labels: list[BondLabels] = []
        discarded = 0.0
        carry: np.ndarray | None = None
        last = len(chain) - 1
        for j, (tensor, gate) in enumerate(zip(chain, owners)):
            if carry is not None:
                tensor = np.tensordot(carry, tensor, axes=(1, 0))
            label = None
            if gate is not None:
                left, tensor, label, disc = _split_label_site(tensor, gate, trunc)
                tensors.append(left)
                labels.append(label)
                discarded += disc
            if j == last:
                tensors.append(tensor)
                break
            dl, n, dr = tensor.shape
            u, s, vh = svd(tensor.reshape(dl * n, dr))
            keep, disc = truncation_rank(s, trunc)
            discarded += disc
            u = u[:, :keep].reshape(dl, n, keep)
            if label is not None:
                # keep the right half of a locked split exactly block-structured
                u = u * (np.arange(n)[None, :] == label[:, None])[:, :, None]
            tensors.append(u)
            labels.append(None)
            carry = self._rescaled(s[:keep, None] * vh[:keep])

        self.tensors = tensors
        self.bond_labels = labels
        self.ortho_center = self.n_sites - 1
        self._normalize_site(self.ortho_center)
        return discarded

    def _contract_pair(self, i: int, gate: DressedGate) -> np.ndarray:
        """``X[a, σ, c] = Σ core[σ, u, v] · A_i[a, u, m] · A_{i+1}[m, v, c]``."""
        a, b = self.tensors[i], self.tensors[i + 1]
        core = gate.core
        if core.shape[1:] != (a.shape[1], b.shape[1]):
            raise ShapeMismatchError(
                f"gate inputs {core.shape[1:]} do not match physical dimensions {(a.shape[1], b.shape[1])}"
            )
        left = self.bond_labels[i - 1] if i > 0 else None
        right = self.bond_labels[i + 1] if i + 1 < self.n_sites - 1 else None
        if left is not None:
            a = a[np.arange(a.shape[0]), left]
        if right is not None:
            b = b[:, right, np.arange(b.shape[2])]
        if left is not None and right is not None:
            return np.einsum("sac,ac->asc", core[:, left][:, :, right], a @ b)
        if left is not None:
            return np.einsum("sav,am,mvc->asc", core[:, left], a, b, optimize=True)
        if right is not None:
            return np.einsum("suc,aum,mc->asc", core[:, :, right], a, b, optimize=True)
        return np.einsum("suv,aum,mvc->asc", core, a, b, optimize=True)

    def to_dense(self) -> np.ndarray:
        """Full coefficient tensor including ``exp(log_scale)`` (small N only)."""
        psi = self.tensors[0]
        for t in self.tensors[1:]:
            psi = np.tensordot(psi, t, axes=(psi.ndim - 1, 0))
        return psi.reshape(psi.shape[1:-1]) * math.exp(self.log_scale)


def _block_split(x: np.ndarray, trunc: TruncationParams):
    """SVD of ``x[σ]`` label by label, truncated over the merged spectrum."""
    n, dl, dr = x.shape
    blocks = []
    for label in range(n):
        if not np.any(x[label]):
            continue
        u, s, vh = svd(x[label])
        blocks.append((label, u, s, vh))
    if not blocks:
        return np.zeros((dl, n, 1)), np.zeros((1, n, dr)), np.zeros(1, dtype=int), 0.0
    values = np.concatenate([blk[2] for blk in blocks])
    owner = np.concatenate([np.full(blk[2].size, j) for j, blk in enumerate(blocks)])
    local = np.concatenate([np.arange(blk[2].size) for blk in blocks])
    order = np.argsort(-values, kind="stable")
    keep, discarded = truncation_rank(values[order], trunc)
    left = np.zeros((dl, n, keep))
    right = np.zeros((keep, n, dr))
    labels = np.empty(keep, dtype=int)
    for col, g in enumerate(order[:keep]):
        label, u, s, vh = blocks[owner[g]]
        j = local[g]
        left[:, label, col] = u[:, j]
        right[col, label, :] = s[j] * vh[j]
        labels[col] = label
    return left, right, labels, discarded


def _split_label_site(x: np.ndarray, gate: DressedGate, trunc: TruncationParams):
    """Split ``X[a, σ, c]`` into two sites carrying ``e_σ ⊗ e_σ``."""
    if gate.out_basis is None and trunc.block_sparse:
        return _block_split(np.moveaxis(x, 1, 0), trunc)
    dl, nl, dr = x.shape
    images = np.eye(nl) if gate.out_basis is None else gate.out_basis
    ns = images.shape[0]
    theta = np.einsum("us,vs,asc->auvc", images, images, x, optimize=True)
    u, s, vh = svd(theta.reshape(dl * ns, ns * dr))
    keep, discarded = truncation_rank(s, trunc)
    left = u[:, :keep].reshape(dl, ns, keep)
    right = (s[:keep, None] * vh[:keep]).reshape(keep, ns, dr)
    return left, right, None, discarded


def _split_dense(theta: np.ndarray, gate: DressedGate, trunc: TruncationParams):
    dl, n, _, dr = theta.shape
    theta = np.einsum("xyij,aijc->axyc", gate.tensor, theta, optimize=True)
    u, s, vh = svd(theta.reshape(dl * n, n * dr))
    keep, discarded = truncation_rank(s, trunc)
    left = u[:, :keep].reshape(dl, n, keep)
    right = (s[:keep, None] * vh[:keep]).reshape(keep, n, dr)
    return left, right, discarded


def _split_locked(theta: np.ndarray, gate: DressedGate, trunc: TruncationParams):
    # Locked outputs make the two-site matrix block diagonal in σ.
    x = np.einsum("sij,aijc->sac", gate.diagonal, theta, optimize=True)
    left, right, _, discarded = _block_split(x, trunc)
    return left, right, discarded


def init_mps(
    N: int,
    basis: CommutantBasis,
    d: int,
    init_overlaps: InitOverlaps | None = None,
    rescaled: bool = True,
    projector: IrrepProjector | None = None,
    limits: Limits | None = None,
) -> RowMPS:
    """Product of N/2 pair states ``Σ_σ c(σ)|σ⟩|σ⟩`` (layer 1 absorbed)."""
    if N < 2 or N % 2:
        raise UnsupportedParameterError(f"N must be even and >= 2, got {N}")
    overlaps = init_overlaps or InitOverlaps.zero_state(basis, d, N, limits)
    if len(overlaps) != N:
        raise ShapeMismatchError(f"{len(overlaps)} initial-overlap vectors for N={N}")
    tensors: list[np.ndarray] = []
    labels: list[BondLabels] = []
    log_scale = 0.0
    for j in range(N // 2):
        c = initial_pair_amplitudes(basis, d, overlaps.per_site[2 * j], overlaps.per_site[2 * j + 1])
        if rescaled:
            m = float(np.max(np.abs(c)))
            if m > 0.0:
                c = c / m
                log_scale += math.log(m)
        if projector is None:
            pair = np.diag(c)
        else:
            pair = projector.P @ np.diag(c) @ projector.P.T
        side = pair.shape[0]
        tensors.append(pair[None, :, :])
        tensors.append(np.eye(side)[:, :, None])
        labels.append(np.arange(side) if projector is None else None)
        if j < N // 2 - 1:
            labels.append(None)
    return RowMPS(tensors, log_scale=log_scale, bond_labels=labels)


def layer_bonds(N: int, parity: Parity) -> range:
    """Left sites of the gates in one brickwork layer (0-based)."""
    if parity == "odd":
        return range(0, N - 1, 2)
    if parity == "even":
        return range(1, N - 1, 2)
    raise UnsupportedParameterError(f"parity must be 'odd' or 'even', got {parity!r}")


def layer_parity(layer: int) -> Parity:
    """Layer 1 is odd, layer 2 even, and so on."""
    return "odd" if layer % 2 else "even"


GateSource = Union[DressedGate, Callable[[int], DressedGate]]


def apply_layer(mps: RowMPS, gate: GateSource, parity: Parity, trunc: TruncationParams) -> RowMPS:
    """Apply one brickwork layer in place; ``gate`` may depend on the left site."""
    gates = {i: gate(i) if callable(gate) else gate for i in layer_bonds(mps.n_sites, parity)}
    if gates and all(g.factored for g in gates.values()):
        total = mps.apply_factored_layer(gates, trunc)
    else:
        total = 0.0
        for i, g in gates.items():
            total += mps.apply_two_site(i, g, trunc)
    mps.layer_discarded = total
    if total > 1e-8:
        logger.warning("Layer truncation discarded weight %.3g", total)
    logger.debug("Applied %s layer: bonds=%s discarded=%.3g", parity, mps.bond_dims(), total)
    return mps


def contract_top(mps: RowMPS, per_site_amplitudes: Sequence[np.ndarray]) -> tuple[float, float]:
    """``Σ_σ Π_i b_i(σ_i) ψ(σ)`` as ``(mantissa, log_scale)``."""
    if len(per_site_amplitudes) != mps.n_sites:
        raise ShapeMismatchError(f"{len(per_site_amplitudes)} boundary vectors for {mps.n_sites} sites")
    env = np.ones(1)
    log_acc = mps.log_scale
    for tensor, amps in zip(mps.tensors, per_site_amplitudes):
        amps = np.asarray(amps)
        if amps.shape != (tensor.shape[1],):
            raise ShapeMismatchError(f"boundary vector of shape {amps.shape} for physical dimension {tensor.shape[1]}")
        env = np.einsum("a,aib,i->b", env, tensor, amps)
        m = float(np.max(np.abs(env)))
        if m == 0.0:
            return 0.0, log_acc
        env = env / m
        log_acc += math.log(m)
    return float(env[0]), log_acc
