"""Boundaries, averaged-observable drivers and closed-form reference values.

Every driver evolves the replica MPS once (layer 1 absorbed into the
initial pairs, layers 2..t applied with alternating parity) and contracts
it against one or more top boundaries. Magnitudes are carried in log form
throughout; ``ContractionResult.value`` recombines them.

Noise after a gate is attached to the next consumer of each site: the
input links of the next gate on that site, or the top boundary.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Literal, Sequence, Union

import numpy as np
import scipy.special

from ._errors import NumericDegeneracyError, ShapeMismatchError, UnsupportedParameterError
from .channels import (
    ChannelStack,
    ChannelSuperop,
    depolarising_choi,
    identity_choi,
    noisy_gram,
    noisy_overlaps,
    parse_channel,
)
from .commutant import (
    CliffordElement,
    CommutantBasis,
    IrrepProjector,
    Permutation,
    cycle_count,
    element_vector,
    gram_matrix,
    irrep_reduce_boundary,
    irrep_reduce_gate,
    symmetric_basis,
)
from .config import Limits
from .ensembles import default_registry
from .rtn_core import (
    DressedGate,
    InitOverlaps,
    RowMPS,
    apply_layer,
    contract_top,
    dressed_gate,
    init_mps,
    layer_bonds,
    layer_parity,
)
from .types import ContractionResult, LayerDiagnostics, TruncationParams

logger = logging.getLogger(__name__)

DIAG = "diag"
BraKey = Union[str, int]
Normalization = Literal["none", "K", "K_log_d"]


# ---------------------------------------------------------------------------
# Boundaries
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BoundarySpec:
    """Per-site top amplitudes ``b_i(σ)``; the full product is scaled by ``exp(log_prefactor)``.

    ``bra_keys`` records which bra each site carries (``"diag"`` for the
    diagonal projector, an element index for a commutant bra) so the
    boundary can be re-derived under a pending noise channel.
    """

    per_site: tuple[np.ndarray, ...]
    log_prefactor: float = 0.0
    label: str = ""
    bra_keys: tuple[BraKey, ...] | None = None
    site_log_factors: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        arrays = tuple(np.asarray(b) for b in self.per_site)
        if len({a.shape for a in arrays}) > 1:
            raise ShapeMismatchError("all boundary vectors must have the same length")
        if not math.isfinite(self.log_prefactor):
            raise NumericDegeneracyError("boundary log prefactor is not finite", self.log_prefactor)
        if self.bra_keys is not None and len(self.bra_keys) != len(arrays):
            raise ShapeMismatchError("one bra key per site required")
        object.__setattr__(self, "per_site", arrays)

    def __len__(self) -> int:
        return len(self.per_site)

    def site_logs(self) -> list[float]:
        if self.site_log_factors is not None:
            return list(self.site_log_factors)
        return [self.log_prefactor / len(self)] * len(self)

    def rescaled(self) -> BoundarySpec:
        """Unit max-norm per site, magnitudes moved into the log prefactor."""
        per_site = []
        logs = self.site_logs()
        for i, b in enumerate(self.per_site):
            m = float(np.max(np.abs(b))) if b.size else 0.0
            if m > 0.0:
                per_site.append(b / m)
                logs[i] += math.log(m)
            else:
                per_site.append(b)
        return BoundarySpec(tuple(per_site), float(sum(logs)), self.label, self.bra_keys, tuple(logs))


def diagonal_projector_vector(d: int, k: int) -> np.ndarray:
    """Single-site vector with ones where all 2k indices coincide."""
    out = np.zeros(d ** (2 * k))
    stride = sum(d ** j for j in range(2 * k))
    out[np.arange(d) * stride] = 1.0
    return out


def ipr_site_amplitudes(basis: CommutantBasis, d: int, limits: Limits | None = None) -> np.ndarray:
    """``⟨⟨Ω_diag|σ⟩⟩``: d for every Brauer diagram, explicit contraction for Clifford extras."""
    out = np.full(len(basis), float(d))
    omega = None
    for j, element in enumerate(basis.elements):
        if isinstance(element, CliffordElement) and element.kind == "q3":
            if omega is None:
                omega = diagonal_projector_vector(d, basis.k)
            out[j] = float(np.real(np.dot(omega, element_vector(basis, j, d, limits))))
    return out


def ipr_boundary(basis: CommutantBasis, d: int, N: int, rescaled: bool = False,
                 limits: Limits | None = None) -> BoundarySpec:
    """Top boundary of ``E[Σ_x p_x^k]``."""
    amps = ipr_site_amplitudes(basis, d, limits)
    spec = BoundarySpec(tuple([amps] * N), 0.0, f"ipr{basis.k}", tuple([DIAG] * N))
    return spec.rescaled() if rescaled else spec


def purity_boundary(basis: CommutantBasis, d: int, N: int, region: Iterable[int],
                    rescaled: bool = False) -> BoundarySpec:
    """Top boundary of ``E[Tr ρ_A^k]``: cyclic permutation on A, identity elsewhere.

    ``region`` holds 0-based site indices.
    """
    region = frozenset(int(i) for i in region)
    if not region or min(region) < 0 or max(region) >= N:
        raise UnsupportedParameterError(f"region {sorted(region)} must be a non-empty subset of 0..{N - 1}")
    gram = gram_matrix(basis, d).entries
    eta, iota = basis.cyclic_index, basis.identity_index
    per_site = tuple(gram[eta].copy() if i in region else gram[iota].copy() for i in range(N))
    keys = tuple(eta if i in region else iota for i in range(N))
    label = "full-swap" if len(region) == N else f"purity{basis.k}"
    spec = BoundarySpec(per_site, 0.0, label, keys)
    return spec.rescaled() if rescaled else spec


def full_swap_boundary(basis: CommutantBasis, d: int, N: int, rescaled: bool = False) -> BoundarySpec:
    """``E[Tr ρ^k]`` of the whole chain."""
    return purity_boundary(basis, d, N, range(N), rescaled)


def dress_boundary(boundary: BoundarySpec, basis: CommutantBasis, d: int, stack: ChannelStack,
                   limits: Limits | None = None) -> BoundarySpec:
    """The same bras seen through a pending channel: ``⟨⟨Ω_i|N_1⊗…⊗N_k|σ⟩⟩``."""
    if boundary.bra_keys is None:
        raise UnsupportedParameterError(f"boundary {boundary.label!r} has no bra keys and cannot carry noise")
    gram = noisy_gram(basis, d, stack, limits).entries
    cache: dict[BraKey, np.ndarray] = {}
    per_site = []
    for key in boundary.bra_keys:
        if key not in cache:
            if key == DIAG:
                cache[key] = noisy_overlaps(basis, d, stack, diagonal_projector_vector(d, basis.k), limits)
            else:
                cache[key] = np.array(gram[int(key)])
        per_site.append(cache[key])
    return BoundarySpec(tuple(per_site), 0.0, boundary.label, boundary.bra_keys).rescaled()


def bell_init_overlaps(beta: Permutation, k: int, d: int) -> np.ndarray:
    """Initial overlaps of a B site Bell-paired with a reference qudit whose top bra is ``beta``.

    ``v(τ) = d^{#(τ∘β) − k}`` over ``symmetric_basis(k)``.
    """
    if k != 2:
        raise UnsupportedParameterError(f"Bell-pair overlaps are implemented for k=2, got k={k}")
    if beta.k != k:
        raise ShapeMismatchError(f"beta acts on {beta.k} replicas, expected {k}")
    return np.array([float(d) ** (cycle_count(tau.compose(beta)) - k) for tau in symmetric_basis(k).elements])


# ---------------------------------------------------------------------------
# Network
# ---------------------------------------------------------------------------

class BrickworkNetwork:
    """Gates, initial pairs and boundary plumbing for one (basis, d, N, noise) point.

    Shared by the MPS drivers and the dense oracle.
    """

    def __init__(
        self,
        basis: CommutantBasis,
        d: int,
        N: int,
        stack: ChannelStack | None = None,
        init_overlaps: InitOverlaps | None = None,
        projector: IrrepProjector | None = None,
        limits: Limits | None = None,
    ) -> None:
        if N < 2 or N % 2:
            raise UnsupportedParameterError(f"N must be even and >= 2, got {N}")
        if d < 2:
            raise UnsupportedParameterError(f"d must be >= 2, got {d}")
        if stack is not None and (stack.k != basis.k or stack.d != d):
            raise ShapeMismatchError(f"channel stack (k={stack.k}, d={stack.d}) does not match k={basis.k}, d={d}")
        if projector is not None and projector.n_basis != len(basis):
            raise ShapeMismatchError(f"projector has {projector.n_basis} columns, basis has {len(basis)} elements")
        self.basis = basis
        self.d = d
        self.N = N
        self.stack = None if stack is None or stack.is_identity else stack
        self.init_overlaps = init_overlaps
        self.projector = projector
        self.limits = limits
        self._clean_gram = gram_matrix(basis, d)
        self._noisy_gram = noisy_gram(basis, d, self.stack, limits) if self.stack is not None else None
        self._gates: dict[tuple[bool, bool], DressedGate] = {}

    @property
    def noisy(self) -> bool:
        return self.stack is not None

    @property
    def n_basis(self) -> int:
        return len(self.basis) if self.projector is None else self.projector.d_red

    def gate(self, pending_left: bool = False, pending_right: bool = False) -> DressedGate:
        key = (pending_left and self.noisy, pending_right and self.noisy)
        if key not in self._gates:
            left = self._noisy_gram if key[0] else self._clean_gram
            right = self._noisy_gram if key[1] else self._clean_gram
            gate = dressed_gate(self.basis, self.d, left, right)
            if self.projector is not None:
                gate = irrep_reduce_gate(gate, self.projector)
            self._gates[key] = gate
        return self._gates[key]

    def initial_mps(self, rescaled: bool = True) -> RowMPS:
        return init_mps(self.N, self.basis, self.d, self.init_overlaps, rescaled, self.projector, self.limits)

    def pair_matrices(self) -> tuple[list[np.ndarray], float]:
        """Pair states as matrices ``M[σ, σ']`` plus the log scale factored out of them."""
        mps = self.initial_mps(rescaled=True)
        mats = [mps.tensors[2 * j][0] for j in range(self.N // 2)]
        return mats, mps.log_scale

    def initial_pending(self) -> list[bool]:
        return [self.noisy] * self.N

    def advance_pending(self, pending: list[bool], parity: str) -> None:
        for i in layer_bonds(self.N, parity):
            pending[i] = pending[i + 1] = self.noisy

    def top_boundaries(self, boundary: BoundarySpec) -> tuple[BoundarySpec, BoundarySpec | None]:
        """Clean and (if noisy) pending-channel versions of ``boundary``, rescaled."""
        clean = boundary.rescaled()
        dressed = dress_boundary(boundary, self.basis, self.d, self.stack, self.limits) if self.noisy else None
        return clean, dressed

    def top_amplitudes(self, clean: BoundarySpec, dressed: BoundarySpec | None,
                       pending: Sequence[bool]) -> tuple[list[np.ndarray], float]:
        if len(clean) != self.N:
            raise ShapeMismatchError(f"boundary has {len(clean)} sites, network has N={self.N}")
        amps: list[np.ndarray] = []
        log_total = 0.0
        clean_logs = clean.site_logs()
        dressed_logs = dressed.site_logs() if dressed is not None else None
        for i in range(self.N):
            if pending[i] and dressed is not None:
                b, lg = dressed.per_site[i], dressed_logs[i]
            else:
                b, lg = clean.per_site[i], clean_logs[i]
            if self.projector is not None:
                b = irrep_reduce_boundary(b, self.projector)
            amps.append(b)
            log_total += lg
        return amps, log_total


def _make_result(mantissa: float, log_scale: float, t: int, label: str, chi: int, disc: float,
                 start: float) -> ContractionResult:
    sign = float(np.sign(mantissa))
    log_value = log_scale + (math.log(abs(mantissa)) if mantissa != 0.0 else -math.inf)
    return ContractionResult(t, log_value, sign, label, chi, disc, time.perf_counter() - start)


def iter_brickwork(
    network: BrickworkNetwork,
    boundaries: Sequence[BoundarySpec],
    t_max: int,
    trunc: TruncationParams | None = None,
    on_layer: Callable[[LayerDiagnostics], None] | None = None,
) -> Iterator[list[ContractionResult]]:
    """Evolve once and yield one result per boundary at every depth ``1..t_max``."""
    if t_max < 1:
        raise UnsupportedParameterError(f"depth must be >= 1, got t={t_max}")
    trunc = trunc or TruncationParams.for_basis(network.n_basis, N=network.N)
    start = time.perf_counter()
    tops = [network.top_boundaries(b) for b in boundaries]
    mps = network.initial_mps(rescaled=True)
    pending = network.initial_pending()
    chi_used = mps.max_bond()
    disc_max = 0.0
    for t in range(1, t_max + 1):
        if t > 1:
            parity = layer_parity(t)
            snapshot = list(pending)
            apply_layer(mps, lambda i: network.gate(snapshot[i], snapshot[i + 1]), parity, trunc)
            network.advance_pending(pending, parity)
            chi_used = max(chi_used, mps.max_bond())
            disc_max = max(disc_max, mps.layer_discarded)
            if on_layer is not None:
                on_layer(LayerDiagnostics(t, parity, tuple(mps.bond_dims()), mps.layer_discarded, mps.log_scale))
        results = []
        for boundary, (clean, dressed) in zip(boundaries, tops):
            amps, log_top = network.top_amplitudes(clean, dressed, pending)
            mantissa, log_scale = contract_top(mps, amps)
            results.append(_make_result(mantissa, log_scale + log_top, t, boundary.label, chi_used, disc_max, start))
        yield results


def brickwork_contract(
    basis: CommutantBasis,
    d: int,
    N: int,
    t: int,
    boundary: BoundarySpec,
    trunc: TruncationParams | None = None,
    *,
    stack: ChannelStack | None = None,
    init_overlaps: InitOverlaps | None = None,
    projector: IrrepProjector | None = None,
    limits: Limits | None = None,
    on_layer: Callable[[LayerDiagnostics], None] | None = None,
) -> ContractionResult:
    """Full result record of one averaged observable at depth ``t``."""
    network = BrickworkNetwork(basis, d, N, stack, init_overlaps, projector, limits)
    result = None
    for results in iter_brickwork(network, [boundary], t, trunc, on_layer):
        result = results[0]
    return result


def brickwork_average(basis: CommutantBasis, d: int, N: int, t: int, boundary: BoundarySpec,
                      trunc: TruncationParams | None = None, **kwargs) -> float:
    """``E[Λ(|Ψ_t⟩)]`` for the observable whose top boundary is ``boundary``."""
    return brickwork_contract(basis, d, N, t, boundary, trunc, **kwargs).value


def noisy_brickwork_average(basis: CommutantBasis, d: int, N: int, t: int, boundary: BoundarySpec,
                            stack: ChannelStack, trunc: TruncationParams | None = None, **kwargs) -> float:
    """As :func:`brickwork_average` with ``stack`` acting on every gated site after every layer."""
    return brickwork_contract(basis, d, N, t, boundary, trunc, stack=stack, **kwargs).value


def relative_coherence_from(numerator: ContractionResult, denominator: ContractionResult) -> float:
    if numerator.sign <= 0 or denominator.sign <= 0:
        raise NumericDegeneracyError(
            "relative coherence needs positive purity and IPR contractions",
            numerator.value if numerator.sign <= 0 else denominator.value,
        )
    return numerator.log_value - denominator.log_value


def relative_coherence(d: int, N: int, t: int, stack: ChannelStack | None,
                       trunc: TruncationParams | None = None, limits: Limits | None = None) -> float:
    """``log(E[Tr ρ²] / E[Σ_x ρ_xx²])`` from one shared noisy bulk."""
    basis = symmetric_basis(2)
    network = BrickworkNetwork(basis, d, N, stack, limits=limits)
    boundaries = [full_swap_boundary(basis, d, N), ipr_boundary(basis, d, N)]
    results = None
    for results in iter_brickwork(network, boundaries, t, trunc):
        pass
    return relative_coherence_from(results[0], results[1])


def bell_pair_network(d: int, N_B: int, K: int, p: float, beta: Permutation,
                      limits: Limits | None = None) -> BrickworkNetwork:
    """Chain B with its first K sites Bell-paired to an untouched reference whose top bra is ``beta``.

    ``beta`` = identity traces the reference out (ρ_B); the swap keeps it (ρ_RB).
    Every gated site is depolarised at rate ``p``.
    """
    if not 1 <= K <= N_B // 2:
        raise UnsupportedParameterError(f"need 1 <= K <= N_B/2, got K={K}, N_B={N_B}")
    basis = symmetric_basis(2)
    stack = ChannelStack.uniform(depolarising_choi(d, p) if p > 0 else identity_choi(d), 2)
    overlaps = InitOverlaps.zero_state(basis, d, N_B, limits).replace(range(K), bell_init_overlaps(beta, 2, d))
    return BrickworkNetwork(basis, d, N_B, stack, overlaps, limits=limits)


def _coherent_info_networks(d: int, N_B: int, K: int, p: float, limits: Limits | None):
    iota, swap = Permutation.identity(2), Permutation.transposition(2, 0, 1)
    net_b = bell_pair_network(d, N_B, K, p, iota, limits)
    net_rb = bell_pair_network(d, N_B, K, p, swap, limits)
    return net_b.basis, (net_b, net_rb)


def normalize_coherent_information(value: float, K: int, d: int, normalization: Normalization) -> float:
    if normalization == "none":
        return value
    if normalization == "K":
        return value / K
    if normalization == "K_log_d":
        return value / (K * math.log(d))
    raise UnsupportedParameterError(f"unknown normalization {normalization!r}")


def iter_coherent_information(
    d: int,
    N_B: int,
    K: int,
    t_max: int,
    p: float,
    trunc: TruncationParams | None = None,
    normalization: Normalization = "K_log_d",
    limits: Limits | None = None,
) -> Iterator[tuple[float, ContractionResult, ContractionResult]]:
    """Annealed coherent information at every depth, with the two purity contractions."""
    basis, (net_b, net_rb) = _coherent_info_networks(d, N_B, K, p, limits)
    boundary = [full_swap_boundary(basis, d, N_B)]
    for (res_b,), (res_rb,) in zip(iter_brickwork(net_b, boundary, t_max, trunc),
                                   iter_brickwork(net_rb, boundary, t_max, trunc)):
        if res_b.sign <= 0 or res_rb.sign <= 0:
            raise NumericDegeneracyError("purity contraction is not positive")
        raw = res_rb.log_value - res_b.log_value
        yield normalize_coherent_information(raw, K, d, normalization), res_b, res_rb


def coherent_information(d: int, N_B: int, K: int, t: int, p: float,
                         trunc: TruncationParams | None = None,
                         normalization: Normalization = "K_log_d",
                         limits: Limits | None = None) -> float:
    """``-log E[Tr ρ_B²] + log E[Tr ρ_RB²]`` for K Bell pairs on the first K sites of B."""
    value = None
    for value, _, _ in iter_coherent_information(d, N_B, K, t, p, trunc, normalization, limits):
        pass
    return value


def xeb_from(result: ContractionResult, d: int, N: int) -> float:
    """``χ = d^N · E[Σ p_cl p_n] − 1``."""
    if result.sign == 0.0:
        return -1.0
    return result.sign * math.exp(result.log_value + N * math.log(d)) - 1.0


def xeb_network(d: int, N: int, device_channel: ChannelSuperop, limits: Limits | None = None) -> BrickworkNetwork:
    basis = symmetric_basis(2)
    stack = ChannelStack((identity_choi(d), device_channel))
    return BrickworkNetwork(basis, d, N, stack, limits=limits)


def xeb(d: int, N: int, t: int, device_channel: ChannelSuperop,
        trunc: TruncationParams | None = None, limits: Limits | None = None) -> float:
    """Linear cross-entropy benchmark between the ideal and the noisy device distributions."""
    network = xeb_network(d, N, device_channel, limits)
    results = None
    for results in iter_brickwork(network, [ipr_boundary(network.basis, d, N)], t, trunc):
        pass
    return xeb_from(results[0], d, N)


# ---------------------------------------------------------------------------
# Sweep configuration
# ---------------------------------------------------------------------------

@dataclass
class SweepConfig:
    """One parameter point of a sweep."""

    ensemble: str = "unitary"
    k: int = 2
    d: int = 2
    N: int = 8
    t_max: int = 1
    trunc: TruncationParams | None = None
    channels: tuple[str, ...] = ()
    region: tuple[int, ...] | None = None
    K: int = 1
    p: float = 0.0
    seed: int = 0
    extras: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.N < 2 or self.N % 2:
            raise UnsupportedParameterError(f"N must be even and >= 2, got {self.N}")
        if self.t_max < 1:
            raise UnsupportedParameterError(f"t_max must be >= 1, got {self.t_max}")
        if self.d < 2:
            raise UnsupportedParameterError(f"d must be >= 2, got {self.d}")
        if not 0.0 <= self.p <= 1.0:
            raise UnsupportedParameterError(f"p must lie in [0, 1], got {self.p}")

    def basis(self) -> CommutantBasis:
        return default_registry().build_basis(self.ensemble, self.k, self.d)

    def stack(self) -> ChannelStack | None:
        if not self.channels:
            return None
        channels = [parse_channel(spec, self.d) for spec in self.channels]
        if len(channels) == 1:
            channels = channels * self.k
        return ChannelStack(tuple(channels))


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------

def _log(x: int | float) -> float:
    return math.log(x)


def log_haar_ipr(D: int, k: int) -> float:
    return float(scipy.special.gammaln(k + 1)) - sum(_log(D + m) for m in range(1, k))


def haar_ipr(D: int, k: int) -> float:
    """``k! D! / (D + k − 1)!``: IPR of a Haar-random state in dimension D."""
    if D < 2 or k < 1:
        raise UnsupportedParameterError(f"need D >= 2 and k >= 1, got D={D}, k={k}")
    return math.exp(log_haar_ipr(D, k))


def page_purity(D_A: int, D_B: int) -> float:
    """``(D_A + D_B) / (D_A D_B + 1)``."""
    if D_A < 1 or D_B < 1:
        raise UnsupportedParameterError(f"need positive dimensions, got {D_A}, {D_B}")
    return math.exp(_log(D_A + D_B) - _log(D_A * D_B + 1))


def orthogonal_ipr_stat(D: int, k: int) -> float:
    """``(2k−1)!! / Π_{j=1}^{k−1} (D + 2j)``: IPR of a Haar-random real state."""
    if D < 2 or k < 1:
        raise UnsupportedParameterError(f"need D >= 2 and k >= 1, got D={D}, k={k}")
    log_dfact = float(scipy.special.gammaln(2 * k + 1) - scipy.special.gammaln(k + 1)) - k * math.log(2)
    return math.exp(log_dfact - sum(_log(D + 2 * j) for j in range(1, k)))


def _log1p_pow(d: int, e: int) -> float:
    """``log(1 + d^e)`` without overflow."""
    if e > 0:
        return e * math.log(d) + math.log1p(float(d) ** -e)
    return math.log1p(float(d) ** e)


def clifford_ipr_stat(d: int, N: int, k: int) -> float:
    """``(−d^{2−k}; d)_N / (−d; d)_N``: stationary IPR of random Clifford circuits."""
    if d < 2 or N < 1 or k < 1:
        raise UnsupportedParameterError(f"need d >= 2, N >= 1, k >= 1, got d={d}, N={N}, k={k}")
    log_value = sum(_log1p_pow(d, 2 - k + m) - _log1p_pow(d, 1 + m) for m in range(N))
    return math.exp(log_value)


def entanglement_velocity(d: int) -> float:
    """Domain-wall line tension ``log((d²+1)/(2d))``; log(5/4) for qubits."""
    return math.log((d * d + 1) / (2 * d))


def annealed_renyi(value: float, k: int) -> float:
    """``−log(E[Tr ρ^k]) / (k − 1)``."""
    if k < 2:
        raise UnsupportedParameterError(f"Rényi index must be >= 2, got {k}")
    if value <= 0.0:
        raise NumericDegeneracyError("Rényi entropy of a non-positive moment", value)
    return -math.log(value) / (k - 1)


def plateau_depth(N: int) -> int:
    """Depth used as "t → large": ``4·ceil(log2 N) + 20``."""
    return 4 * math.ceil(math.log2(N)) + 20


def fit_decay_rate(ts: Sequence[float], deviations: Sequence[float]) -> float:
    """Least-squares rate α of ``deviation ∝ exp(−α t)``."""
    ts = np.asarray(ts, dtype=float)
    dev = np.asarray(deviations, dtype=float)
    if ts.size < 2 or np.any(dev <= 0):
        raise NumericDegeneracyError("decay fit needs at least two positive deviations")
    slope, _ = np.polyfit(ts, np.log(dev), 1)
    return float(-slope)


__all__ = [
    "BoundarySpec",
    "BrickworkNetwork",
    "SweepConfig",
    "annealed_renyi",
    "bell_init_overlaps",
    "bell_pair_network",
    "brickwork_average",
    "brickwork_contract",
    "clifford_ipr_stat",
    "coherent_information",
    "diagonal_projector_vector",
    "dress_boundary",
    "entanglement_velocity",
    "fit_decay_rate",
    "full_swap_boundary",
    "haar_ipr",
    "ipr_boundary",
    "iter_brickwork",
    "iter_coherent_information",
    "noisy_brickwork_average",
    "orthogonal_ipr_stat",
    "page_purity",
    "plateau_depth",
    "purity_boundary",
    "relative_coherence",
    "xeb",
]
