"""Independent verification paths for the replica-MPS drivers.

- :func:`dense_contract` evaluates the same averaged network as a dense
  vector over all ``n_B^N`` replica configurations, without truncation.
- :func:`mc_average` samples explicit Haar circuits and averages the
  observable over realizations.
- :func:`rw_purity` is the random-walk closed form of the half-chain
  purity for k=2.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

from ._errors import NumericDegeneracyError, ShapeMismatchError, UnsupportedParameterError
from .channels import ChannelStack
from .commutant import CommutantBasis, IrrepProjector
from .config import DEFAULT_LIMITS, Limits, check_size
from .observables import BoundarySpec, BrickworkNetwork, Normalization, normalize_coherent_information
from .rtn_core import DressedGate, InitOverlaps, layer_bonds, layer_parity
from .types import OracleResult

logger = logging.getLogger(__name__)

GateEnsemble = Literal["unitary", "orthogonal"]


# ---------------------------------------------------------------------------
# Random streams
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream; sample ``i`` always gets the same generator."""

    seed: int

    def generator(self, index: int) -> np.random.Generator:
        seq = np.random.SeedSequence(self.seed, spawn_key=(index,))
        return np.random.Generator(np.random.Philox(seq))


# ---------------------------------------------------------------------------
# Dense replica contraction
# ---------------------------------------------------------------------------

class DenseReplicaState:
    """Full replica vector ``exp(log_scale) · amplitudes`` with one axis per site."""

    def __init__(self, amplitudes: np.ndarray, log_scale: float = 0.0) -> None:
        self.amplitudes = np.asarray(amplitudes, dtype=float)
        self.log_scale = float(log_scale)

    @classmethod
    def from_pairs(cls, pairs: Sequence[np.ndarray], log_scale: float = 0.0) -> DenseReplicaState:
        psi = np.ones(())
        for pair in pairs:
            psi = np.multiply.outer(psi, pair)
        return cls(psi, log_scale)

    @property
    def n_sites(self) -> int:
        return self.amplitudes.ndim

    def _renormalize(self) -> None:
        m = float(np.max(np.abs(self.amplitudes)))
        if m > 0.0:
            self.amplitudes /= m
            self.log_scale += math.log(m)

    def apply_gate(self, i: int, gate: DressedGate) -> None:
        n = gate.n
        if self.amplitudes.shape[i] != n:
            raise ShapeMismatchError(f"gate side {n} does not match site dimension {self.amplitudes.shape[i]}")
        out = np.tensordot(gate.tensor, self.amplitudes, axes=([2, 3], [i, i + 1]))
        self.amplitudes = np.moveaxis(out, [0, 1], [i, i + 1])
        self._renormalize()

    def contract(self, per_site: Sequence[np.ndarray]) -> tuple[float, float]:
        """``(mantissa, log)`` of ``Σ_σ Π_i b_i(σ_i) ψ(σ)``."""
        psi = self.amplitudes
        log_acc = self.log_scale
        for b in per_site:
            psi = np.tensordot(np.asarray(b), psi, axes=(0, 0))
            m = float(np.max(np.abs(psi)))
            if m == 0.0:
                return 0.0, log_acc
            psi = psi / m
            log_acc += math.log(m)
        return float(psi), log_acc


def dense_contract(
    basis: CommutantBasis,
    d: int,
    N: int,
    t: int,
    boundary: BoundarySpec,
    stack: ChannelStack | None = None,
    *,
    init_overlaps: InitOverlaps | None = None,
    projector: IrrepProjector | None = None,
    limits: Limits | None = None,
) -> float:
    """Truncation-free contraction of the averaged brickwork network."""
    limits = limits or DEFAULT_LIMITS
    if t < 1:
        raise UnsupportedParameterError(f"depth must be >= 1, got t={t}")
    network = BrickworkNetwork(basis, d, N, stack, init_overlaps, projector, limits)
    check_size("dense replica state", network.n_basis ** N, limits.max_dense_dim)
    pairs, log_scale = network.pair_matrices()
    state = DenseReplicaState.from_pairs(pairs, log_scale)
    pending = network.initial_pending()
    for layer in range(2, t + 1):
        parity = layer_parity(layer)
        for i in layer_bonds(N, parity):
            state.apply_gate(i, network.gate(pending[i], pending[i + 1]))
        network.advance_pending(pending, parity)
    clean, dressed = network.top_boundaries(boundary)
    amps, log_top = network.top_amplitudes(clean, dressed, pending)
    mantissa, log_value = state.contract(amps)
    if mantissa == 0.0:
        return 0.0
    return math.copysign(math.exp(log_value + log_top), mantissa)


# ---------------------------------------------------------------------------
# Haar sampling
# ---------------------------------------------------------------------------

def _check_ensemble(ensemble: str) -> None:
    if ensemble not in ("unitary", "orthogonal"):
        raise UnsupportedParameterError(f"Monte Carlo sampling supports 'unitary' and 'orthogonal', got {ensemble!r}")


def sample_gates(ensemble: GateEnsemble, q: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` independent Haar matrices of side ``q``, shape ``(size, q, q)``."""
    _check_ensemble(ensemble)
    if q < 2:
        raise UnsupportedParameterError(f"gate dimension must be >= 2, got q={q}")
    if ensemble == "unitary":
        z = (rng.standard_normal((size, q, q)) + 1j * rng.standard_normal((size, q, q))) / math.sqrt(2.0)
    else:
        z = rng.standard_normal((size, q, q))
    qs, rs = np.linalg.qr(z)
    diag = np.diagonal(rs, axis1=-2, axis2=-1)
    return qs * (diag / np.abs(diag))[..., None, :]


def sample_gate(ensemble: GateEnsemble, q: int, rng: np.random.Generator) -> np.ndarray:
    """One Haar-random q×q unitary (or orthogonal) matrix."""
    return sample_gates(ensemble, q, rng, 1)[0]


# ---------------------------------------------------------------------------
# Monte Carlo circuits
# ---------------------------------------------------------------------------

McKind = Literal["ipr", "purity", "full-purity", "xeb", "bell-purity-B", "bell-purity-RB"]
_KINDS = ("ipr", "purity", "full-purity", "xeb", "bell-purity-B", "bell-purity-RB")


@dataclass(frozen=True)
class McObservable:
    """What to evaluate on each sampled circuit.

    ``region`` holds 0-based sites of the gated chain; ``K`` is the number
    of reference qudits for the Bell-pair observables.
    """

    kind: McKind
    k: int = 2
    region: tuple[int, ...] | None = None
    K: int = 1

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise UnsupportedParameterError(f"unknown Monte Carlo observable {self.kind!r}; expected one of {_KINDS}")
        if self.k < 1:
            raise UnsupportedParameterError(f"k must be >= 1, got {self.k}")
        if self.kind == "purity" and not self.region:
            raise UnsupportedParameterError("purity needs a non-empty region")

    @property
    def n_reference(self) -> int:
        return self.K if self.kind.startswith("bell") else 0


def _apply_ket(psi: np.ndarray, u: np.ndarray, a: int, d: int) -> np.ndarray:
    out = np.tensordot(u.reshape(d, d, d, d), psi, axes=([2, 3], [a, a + 1]))
    return np.moveaxis(out, [0, 1], [a, a + 1])


def _depolarise(rho: np.ndarray, j: int, n: int, d: int, p: float) -> np.ndarray:
    reduced = np.trace(rho, axis1=j, axis2=n + j)
    reduced = np.expand_dims(np.expand_dims(reduced, j), n + j)
    shape = [1] * (2 * n)
    shape[j] = shape[n + j] = d
    eye = np.eye(d).reshape(shape)
    return (1.0 - p) * rho + p * reduced * eye / d


def _initial_state(n_total: int, n_ref: int, d: int) -> np.ndarray:
    """``|0⟩`` everywhere, with reference qudit j Bell-paired to gated site j."""
    psi = np.zeros((d,) * n_total, dtype=complex)
    if n_ref == 0:
        psi[(0,) * n_total] = 1.0
        return psi
    amp = d ** (-n_ref / 2)
    for digits in np.ndindex(*(d,) * n_ref):
        index = digits + digits + (0,) * (n_total - 2 * n_ref)
        psi[index] = amp
    return psi


def _reduced_moment(rho: np.ndarray, keep: Sequence[int], n: int, d: int, k: int) -> float:
    """``Tr ρ_A^k`` of a density tensor with axes (ket..., bra...)."""
    rest = [j for j in range(n) if j not in keep]
    order = list(keep) + rest + [n + j for j in keep] + [n + j for j in rest]
    da, dr = d ** len(keep), d ** len(rest)
    m = np.transpose(rho, order).reshape(da, dr, da, dr)
    rho_a = np.einsum("arbr->ab", m)
    w = np.linalg.eigvalsh(0.5 * (rho_a + rho_a.conj().T))
    return float(np.sum(np.clip(w, 0.0, None) ** k))


def _pure_moment(psi: np.ndarray, keep: Sequence[int], n: int, d: int, k: int) -> float:
    rest = [j for j in range(n) if j not in keep]
    m = np.transpose(psi, list(keep) + rest).reshape(d ** len(keep), -1)
    s = np.linalg.svd(m, compute_uv=False)
    return float(np.sum(s ** (2 * k)))


class _CircuitRun:
    """One sampled realization: a clean statevector and, when needed, a noisy density tensor."""

    def __init__(self, d: int, N: int, n_ref: int, p: float, need_pure: bool, need_mixed: bool) -> None:
        self.d = d
        self.N = N
        self.n_ref = n_ref
        self.n_total = N + n_ref
        self.p = p
        psi = _initial_state(self.n_total, n_ref, d)
        self.psi = psi if need_pure else None
        self.rho = np.multiply.outer(psi, psi.conj()) if need_mixed else None

    def gate(self, site: int, u: np.ndarray) -> None:
        a = self.n_ref + site
        d, n = self.d, self.n_total
        if self.psi is not None:
            self.psi = _apply_ket(self.psi, u, a, d)
        if self.rho is not None:
            rho = _apply_ket(self.rho, u, a, d)
            rho = _apply_ket(rho, u.conj(), n + a, d)
            if self.p > 0.0:
                rho = _depolarise(rho, a, n, d, self.p)
                rho = _depolarise(rho, a + 1, n, d, self.p)
            self.rho = rho

    def probabilities(self, noisy: bool) -> np.ndarray:
        if noisy:
            side = self.d ** self.n_total
            return np.real(np.diagonal(self.rho.reshape(side, side))).copy()
        return (np.abs(self.psi) ** 2).reshape(-1)

    def moment(self, keep: Sequence[int], k: int) -> float:
        if self.rho is not None:
            return _reduced_moment(self.rho, keep, self.n_total, self.d, k)
        return _pure_moment(self.psi, keep, self.n_total, self.d, k)

    def evaluate(self, observable: McObservable) -> float:
        noisy = self.rho is not None
        k = observable.k
        gated = [self.n_ref + j for j in range(self.N)]
        if observable.kind == "ipr":
            return float(np.sum(self.probabilities(noisy) ** k))
        if observable.kind == "purity":
            return self.moment([self.n_ref + j for j in observable.region], k)
        if observable.kind == "full-purity":
            if not noisy:
                return 1.0
            return self.moment(gated, k)
        if observable.kind == "xeb":
            clean = self.probabilities(False)
            dev = self.probabilities(noisy)
            return float(self.d ** self.N * np.sum(clean * dev) - 1.0)
        if observable.kind == "bell-purity-B":
            return self.moment(gated, k)
        return self.moment(list(range(self.n_total)), k)


def _validate_mc(ensemble: str, d: int, N: int, t: int, p: float, observables: Iterable[McObservable]) -> None:
    _check_ensemble(ensemble)
    if N < 2 or N % 2:
        raise UnsupportedParameterError(f"N must be even and >= 2, got {N}")
    if d < 2 or t < 1:
        raise UnsupportedParameterError(f"need d >= 2 and t >= 1, got d={d}, t={t}")
    if not 0.0 <= p <= 1.0:
        raise UnsupportedParameterError(f"p must lie in [0, 1], got {p}")
    for obs in observables:
        if obs.region is not None and (min(obs.region) < 0 or max(obs.region) >= N):
            raise UnsupportedParameterError(f"region {obs.region} must lie in 0..{N - 1}")
        if obs.n_reference > N:
            raise UnsupportedParameterError(f"K={obs.K} reference qudits exceed N={N}")


def _mc_samples(
    ensemble: GateEnsemble,
    d: int,
    N: int,
    t: int,
    observables: Sequence[McObservable],
    p: float,
    n_samples: int,
    seed: int,
    limits: Limits | None,
) -> np.ndarray:
    limits = limits or DEFAULT_LIMITS
    _validate_mc(ensemble, d, N, t, p, observables)
    if n_samples < 2:
        raise UnsupportedParameterError(f"need at least 2 samples for a standard error, got {n_samples}")
    n_refs = {obs.n_reference for obs in observables}
    if len(n_refs) > 1:
        raise UnsupportedParameterError("observables sampled together must share the reference register")
    n_ref = n_refs.pop()
    need_mixed = p > 0.0
    need_pure = not need_mixed or any(obs.kind == "xeb" for obs in observables)
    side = d ** (N + n_ref)
    if need_pure:
        check_size("Monte Carlo statevector", side, limits.max_statevector_dim)
    if need_mixed:
        check_size("Monte Carlo density matrix side", side, limits.max_density_dim)

    stream = RngStream(seed)
    out = np.empty((n_samples, len(observables)))
    for s in range(n_samples):
        rng = stream.generator(s)
        run = _CircuitRun(d, N, n_ref, p, need_pure, need_mixed)
        for layer in range(1, t + 1):
            bonds = layer_bonds(N, layer_parity(layer))
            gates = sample_gates(ensemble, d * d, rng, len(bonds))
            for i, u in zip(bonds, gates):
                run.gate(i, u)
        out[s] = [run.evaluate(obs) for obs in observables]
    logger.debug("Sampled %d %s circuits at d=%d, N=%d, t=%d, p=%g", n_samples, ensemble, d, N, t, p)
    return out


def _summarize(samples: np.ndarray) -> OracleResult:
    n = samples.size
    return OracleResult(
        mean=float(np.mean(samples)),
        std_error=float(np.std(samples, ddof=1) / math.sqrt(n)),
        n_samples=n,
        samples=samples.tolist(),
    )


def mc_average(
    ensemble: GateEnsemble,
    d: int,
    N: int,
    t: int,
    observable: McObservable,
    p: float = 0.0,
    n_samples: int = 1000,
    seed: int = 0,
    limits: Limits | None = None,
) -> OracleResult:
    """Sample mean and standard error of ``observable`` over random brickwork circuits.

    With ``p > 0`` every gate is followed by a depolarising channel of rate
    ``p`` on both of its sites and the state is evolved as a density matrix.
    For ``xeb`` the clean and noisy runs share the same gates.
    """
    samples = _mc_samples(ensemble, d, N, t, [observable], p, n_samples, seed, limits)
    return _summarize(samples[:, 0])


def mc_coherent_information(
    d: int,
    N_B: int,
    K: int,
    t: int,
    p: float,
    n_samples: int = 1000,
    seed: int = 0,
    normalization: Normalization = "K_log_d",
    ensemble: GateEnsemble = "unitary",
    limits: Limits | None = None,
) -> OracleResult:
    """Annealed coherent information ``log E[Tr ρ_RB²] − log E[Tr ρ_B²]`` from sampled circuits.

    The error is propagated from the two purity means to first order.
    """
    if not 1 <= K <= N_B // 2:
        raise UnsupportedParameterError(f"need 1 <= K <= N_B/2, got K={K}, N_B={N_B}")
    observables = [McObservable("bell-purity-B", K=K), McObservable("bell-purity-RB", K=K)]
    samples = _mc_samples(ensemble, d, N_B, t, observables, p, n_samples, seed, limits)
    b, rb = _summarize(samples[:, 0]), _summarize(samples[:, 1])
    if b.mean <= 0.0 or rb.mean <= 0.0:
        raise NumericDegeneracyError("sampled purity is not positive", min(b.mean, rb.mean))
    raw = math.log(rb.mean) - math.log(b.mean)
    raw_se = math.hypot(b.std_error / b.mean, rb.std_error / rb.mean)
    scale = normalize_coherent_information(1.0, K, d, normalization)
    per_sample = np.log(samples[:, 1]) - np.log(samples[:, 0])
    return OracleResult(raw * scale, scale * raw_se, n_samples, (per_sample * scale).tolist())


# ---------------------------------------------------------------------------
# Random-walk purity
# ---------------------------------------------------------------------------

def _absorption_kernel(N: int, z: int, steps: int) -> np.ndarray:
    """First-passage probabilities ``u_{z,s}`` for ``s = 1..steps``."""
    theta = np.pi * (2 * np.arange(N // 2) + 1) / N
    s = np.arange(1, steps + 1)
    terms = np.sin(theta) * np.sin(theta * z) * np.cos(theta)[None, :] ** (s[:, None] - 1)
    return (2.0 / N) * terms.sum(axis=1)


def rw_purity(N: int, ell: int, d: int, t: int) -> float:
    """Averaged purity of the first ``ell`` qudits after ``t`` brickwork layers (k=2).

    The entanglement domain wall performs a random walk between the two
    chain ends; every step costs a factor ``2K_d`` with ``K_d = d/(d²+1)``.
    """
    if N < 2 or N % 2:
        raise UnsupportedParameterError(f"N must be even and >= 2, got {N}")
    if not 1 <= ell <= N - 1:
        raise UnsupportedParameterError(f"need 1 <= ell <= N-1, got ell={ell}")
    if d < 2 or t < 0:
        raise UnsupportedParameterError(f"need d >= 2 and t >= 0, got d={d}, t={t}")
    # a top layer that does not straddle the cut leaves the purity unchanged
    steps = t if (t - ell) % 2 == 0 else t - 1
    if steps <= 0:
        return 1.0
    step_cost = 2.0 * d / (d * d + 1)
    u = _absorption_kernel(N, ell, steps)
    weights = step_cost ** np.arange(1, steps + 1)
    tail = max(0.0, 1.0 - float(u.sum()))
    return float(step_cost**steps * tail + np.dot(weights, u))


__all__ = [
    "DenseReplicaState",
    "McObservable",
    "RngStream",
    "dense_contract",
    "mc_average",
    "mc_coherent_information",
    "rw_purity",
    "sample_gate",
    "sample_gates",
]
