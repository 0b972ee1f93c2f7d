"""Commutant bases of the k-fold gate moment and their Gram/Weingarten algebra.

Three ensembles are supported:

- ``unitary``: the symmetric group S_k (Schur-Weyl duality), k ≤ 5;
- ``orthogonal``: Brauer perfect matchings of 2k points, k ≤ 4;
- ``clifford``: S_2 at k=2 for any d, and the 8-element qutrit basis at (k, d) = (3, 3).

Replica vectors use the interleaved single-site index ordering
``(ket_1, bra_1, ..., ket_k, bra_k)``. In a Brauer diagram the points
``0..k-1`` are the kets and ``k..2k-1`` the bras; a permutation σ is the
diagram pairing ket m with bra σ(m).
"""

from __future__ import annotations

import functools
import itertools
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Literal, Union

import numpy as np
import scipy.linalg

from ._errors import ShapeMismatchError, UnsupportedParameterError
from .config import DEFAULT_LIMITS, Limits, check_size

if TYPE_CHECKING:
    from .rtn_core import DressedGate

logger = logging.getLogger(__name__)

Ensemble = Literal["unitary", "orthogonal", "clifford"]

MAX_K_SYMMETRIC = 5
MAX_K_BRAUER = 4
# Singular values below RANK_RTOL · max are treated as zero.
RANK_RTOL = 1e-10
_IMAG_TOL = 1e-12


# ---------------------------------------------------------------------------
# Elements
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Permutation:
    """A permutation of ``{0, ..., k-1}`` in one-line notation."""

    images: tuple[int, ...]

    def __post_init__(self) -> None:
        images = tuple(int(x) for x in self.images)
        if sorted(images) != list(range(len(images))) or not images:
            raise UnsupportedParameterError(f"{self.images!r} is not a permutation of 0..k-1")
        object.__setattr__(self, "images", images)

    @classmethod
    def identity(cls, k: int) -> Permutation:
        return cls(tuple(range(k)))

    @classmethod
    def cyclic(cls, k: int) -> Permutation:
        """The cycle ``0 -> 1 -> ... -> k-1 -> 0``."""
        return cls(tuple((m + 1) % k for m in range(k)))

    @classmethod
    def transposition(cls, k: int, a: int, b: int) -> Permutation:
        images = list(range(k))
        images[a], images[b] = images[b], images[a]
        return cls(tuple(images))

    @property
    def k(self) -> int:
        return len(self.images)

    def __call__(self, m: int) -> int:
        return self.images[m]

    def inverse(self) -> Permutation:
        inv = [0] * self.k
        for m, image in enumerate(self.images):
            inv[image] = m
        return Permutation(tuple(inv))

    def compose(self, other: Permutation) -> Permutation:
        """``self ∘ other``: apply ``other`` first."""
        if other.k != self.k:
            raise ShapeMismatchError(f"cannot compose S_{self.k} with S_{other.k}")
        return Permutation(tuple(self.images[m] for m in other.images))

    def cycles(self) -> list[tuple[int, ...]]:
        seen = [False] * self.k
        out: list[tuple[int, ...]] = []
        for start in range(self.k):
            if seen[start]:
                continue
            cycle = []
            m = start
            while not seen[m]:
                seen[m] = True
                cycle.append(m)
                m = self.images[m]
            out.append(tuple(cycle))
        return out

    def __str__(self) -> str:
        nontrivial = [c for c in self.cycles() if len(c) > 1]
        if not nontrivial:
            return "id"
        return "".join("(" + " ".join(str(m + 1) for m in c) + ")" for c in nontrivial)


def cycle_count(perm: Permutation) -> int:
    """Number of disjoint cycles of ``perm``, fixed points included."""
    return len(perm.cycles())


@dataclass(frozen=True)
class BrauerDiagram:
    """A perfect matching of ``2k`` points, stored as sorted pairs."""

    k: int
    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        pairs = tuple(sorted(tuple(sorted((int(a), int(b)))) for a, b in self.pairs))
        points = sorted(p for pair in pairs for p in pair)
        if len(pairs) != self.k or points != list(range(2 * self.k)):
            raise UnsupportedParameterError(f"{self.pairs!r} is not a perfect matching of {2 * self.k} points")
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def from_permutation(cls, perm: Permutation) -> BrauerDiagram:
        k = perm.k
        return cls(k, tuple((m, k + perm(m)) for m in range(k)))

    def as_permutation(self) -> Permutation | None:
        """The permutation this diagram represents, or None if it has a cup or cap."""
        images = [0] * self.k
        for a, b in self.pairs:
            if not (a < self.k <= b):
                return None
            images[a] = b - self.k
        return Permutation(tuple(images))

    def __str__(self) -> str:
        perm = self.as_permutation()
        if perm is not None:
            return str(perm)
        return "{" + ",".join(f"{a}-{b}" for a, b in self.pairs) + "}"


@dataclass(frozen=True)
class CliffordElement:
    """A Clifford commutant element: a permutation, or a stabilizer-code element Q3(σ)."""

    kind: Literal["permutation", "q3"]
    perm: Permutation

    def __str__(self) -> str:
        return str(self.perm) if self.kind == "permutation" else f"Q3({self.perm})"


Element = Union[Permutation, BrauerDiagram, CliffordElement]


def _as_diagram(element: Element) -> BrauerDiagram | None:
    if isinstance(element, Permutation):
        return BrauerDiagram.from_permutation(element)
    if isinstance(element, BrauerDiagram):
        return element
    if element.kind == "permutation":
        return BrauerDiagram.from_permutation(element.perm)
    return None


@dataclass(frozen=True)
class CommutantBasis:
    """An ordered, ensemble-tagged commutant basis."""

    ensemble: Ensemble
    k: int
    elements: tuple[Element, ...]
    d_hint: int | None = None

    def __len__(self) -> int:
        return len(self.elements)

    def labels(self) -> list[str]:
        return [str(e) for e in self.elements]

    def permutation_index(self, perm: Permutation) -> int:
        """Position of the element representing ``perm``."""
        target = BrauerDiagram.from_permutation(perm)
        for i, element in enumerate(self.elements):
            if _as_diagram(element) == target:
                return i
        raise UnsupportedParameterError(f"permutation {perm} is not in the {self.ensemble} basis")

    @property
    def identity_index(self) -> int:
        return self.permutation_index(Permutation.identity(self.k))

    @property
    def cyclic_index(self) -> int:
        return self.permutation_index(Permutation.cyclic(self.k))

    def retag(self, ensemble: Ensemble, d_hint: int | None = None) -> CommutantBasis:
        return CommutantBasis(ensemble, self.k, self.elements, d_hint if d_hint is not None else self.d_hint)


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """Overlaps ⟨⟨a|b⟩⟩ of commutant vectors at dimension ``dim_q`` (or noisy variants)."""
    entries: np.ndarray
    dim_q: int


@dataclass(frozen=True, eq=False)
class WeingartenMatrix:
    """Moore-Penrose pseudo-inverse of a Gram matrix."""
    entries: np.ndarray
    dim_q: int


@dataclass(frozen=True, eq=False)
class IrrepProjector:
    """Orthonormal rows spanning the column space of a Gram matrix."""

    P: np.ndarray
    d_red: int

    @property
    def n_basis(self) -> int:
        return int(self.P.shape[1])


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# Bases
# ---------------------------------------------------------------------------

def symmetric_basis(k: int) -> CommutantBasis:
    """All k! permutations in lexicographic one-line order; element 0 is the identity."""
    if not 1 <= k <= MAX_K_SYMMETRIC:
        raise UnsupportedParameterError(f"symmetric basis supports 1 <= k <= {MAX_K_SYMMETRIC}, got k={k}")
    return CommutantBasis("unitary", k, tuple(Permutation(p) for p in itertools.permutations(range(k))))


def _perfect_matchings(points: tuple[int, ...]):
    if not points:
        yield ()
        return
    first, rest = points[0], points[1:]
    for j, partner in enumerate(rest):
        remaining = rest[:j] + rest[j + 1:]
        for tail in _perfect_matchings(remaining):
            yield ((first, partner),) + tail


def brauer_basis(k: int) -> CommutantBasis:
    """All (2k-1)!! Brauer diagrams; the permutations come first in S_k order."""
    if not 1 <= k <= MAX_K_BRAUER:
        raise UnsupportedParameterError(f"Brauer basis supports 1 <= k <= {MAX_K_BRAUER}, got k={k}")
    perms = [BrauerDiagram.from_permutation(p) for p in symmetric_basis(k).elements]
    seen = set(perms)
    others = sorted(
        (BrauerDiagram(k, m) for m in _perfect_matchings(tuple(range(2 * k)))),
        key=lambda diagram: diagram.pairs,
    )
    return CommutantBasis("orthogonal", k, tuple(perms + [m for m in others if m not in seen]))


def clifford_basis(k: int, d: int) -> CommutantBasis:
    """Clifford commutant: S_2 for k=2, or the 6 permutations plus Q3(id), Q3((1 2)) at (3, 3)."""
    if k == 2 and d >= 2:
        return symmetric_basis(2).retag("clifford", d_hint=d)
    if (k, d) == (3, 3):
        perms = [CliffordElement("permutation", p) for p in symmetric_basis(3).elements]
        extras = [
            CliffordElement("q3", Permutation.identity(3)),
            CliffordElement("q3", Permutation.transposition(3, 0, 1)),
        ]
        return CommutantBasis("clifford", 3, tuple(perms + extras), d_hint=3)
    raise UnsupportedParameterError(f"Clifford commutant is available for k=2 or (k, d)=(3, 3), got ({k}, {d})")


# ---------------------------------------------------------------------------
# Explicit replica vectors
# ---------------------------------------------------------------------------

def _axis(point: int, k: int) -> int:
    return 2 * point if point < k else 2 * (point - k) + 1


def _matching_tensor(diagram: BrauerDiagram, d: int) -> np.ndarray:
    eye = np.eye(d)
    operands: list = []
    for a, b in diagram.pairs:
        operands += [eye, [_axis(a, diagram.k), _axis(b, diagram.k)]]
    return np.einsum(*operands, list(range(2 * diagram.k)))


def clock_shift_paulis(d: int) -> list[np.ndarray]:
    """Generalized Paulis ``X^a Z^b`` with ``X|j⟩ = |j+1⟩`` and ``Z|j⟩ = ω^j|j⟩``."""
    x = np.roll(np.eye(d), 1, axis=0)
    z = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    return [
        np.linalg.matrix_power(x, a) @ np.linalg.matrix_power(z, b)
        for a in range(d) for b in range(d)
    ]


def _q3_tensor(perm: Permutation, d: int) -> np.ndarray:
    base = _matching_tensor(BrauerDiagram.from_permutation(perm), d).astype(complex)
    total = np.zeros_like(base)
    for pauli in clock_shift_paulis(d):
        v = base
        for m in range(perm.k):
            ax = 2 * m + 1
            v = np.moveaxis(np.tensordot(pauli, v, axes=([1], [ax])), 0, ax)
        total += v
    total /= d
    if np.max(np.abs(total.imag)) < _IMAG_TOL:
        return total.real
    return total


@functools.lru_cache(maxsize=512)
def _element_vector_cached(basis: CommutantBasis, index: int, d: int) -> np.ndarray:
    element = basis.elements[index]
    diagram = _as_diagram(element)
    if diagram is not None:
        tensor = _matching_tensor(diagram, d)
    else:
        tensor = _q3_tensor(element.perm, d)
    return _readonly(tensor.reshape(-1))


def element_vector(basis: CommutantBasis, index: int, d: int, limits: Limits | None = None) -> np.ndarray:
    """Explicit single-site replica vector of length ``d^{2k}``."""
    limits = limits or DEFAULT_LIMITS
    if not 0 <= index < len(basis):
        raise ShapeMismatchError(f"index {index} out of range for basis of size {len(basis)}")
    element = basis.elements[index]
    if isinstance(element, CliffordElement) and element.kind == "q3" and d != basis.d_hint:
        raise UnsupportedParameterError(f"Q3 elements are defined for d={basis.d_hint}, got d={d}")
    check_size("replica vector", d ** (2 * basis.k), limits.max_element_dim)
    return _element_vector_cached(basis, index, d)


# ---------------------------------------------------------------------------
# Gram / Weingarten
# ---------------------------------------------------------------------------

def _component_count(a: BrauerDiagram, b: BrauerDiagram) -> int:
    parent = list(range(2 * a.k))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in a.pairs + b.pairs:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    return sum(1 for x in range(2 * a.k) if find(x) == x)


def loop_count(a: BrauerDiagram, b: BrauerDiagram) -> int:
    """Closed loops formed by stacking two diagrams; ⟨⟨a|b⟩⟩ = q^loops."""
    if a.k != b.k:
        raise ShapeMismatchError(f"diagrams on {2 * a.k} and {2 * b.k} points")
    return _component_count(a, b)


@functools.lru_cache(maxsize=128)
def _gram_entries(basis: CommutantBasis, q: int) -> np.ndarray:
    elements = basis.elements
    n = len(elements)
    if all(isinstance(e, Permutation) for e in elements):
        exps = [[cycle_count(s.inverse().compose(t)) for t in elements] for s in elements]
    elif all(_as_diagram(e) is not None for e in elements):
        diagrams = [_as_diagram(e) for e in elements]
        exps = [[_component_count(a, b) for b in diagrams] for a in diagrams]
    else:
        d = basis.d_hint
        if q == d:
            vectors = np.stack([_element_vector_cached(basis, i, d) for i in range(n)], axis=1)
            gram = vectors.conj().T @ vectors
            imag = float(np.max(np.abs(gram.imag))) if np.iscomplexobj(gram) else 0.0
            if imag > _IMAG_TOL * float(np.max(np.abs(gram))):
                logger.warning("Dropping imaginary part %.3g of Clifford Gram at q=%d", imag, q)
            return _readonly(np.ascontiguousarray(gram.real, dtype=float))
        if d is not None and q == d * d:
            return _readonly(_gram_entries(basis, d) ** 2)
        raise UnsupportedParameterError(f"Clifford Gram is defined at q=d or q=d² (d={d}), got q={q}")
    logger.debug("Built %s Gram at k=%d, q=%d", basis.ensemble, basis.k, q)
    return _readonly(np.array([[float(q ** e) for e in row] for row in exps]))


def gram_matrix(basis: CommutantBasis, q: int) -> GramMatrix:
    """Gram matrix of ``basis`` at dimension ``q``."""
    if q < 2:
        raise UnsupportedParameterError(f"Gram dimension must be >= 2, got q={q}")
    return GramMatrix(_gram_entries(basis, q), q)


@functools.lru_cache(maxsize=128)
def _weingarten_entries(basis: CommutantBasis, q: int) -> np.ndarray:
    gram = _gram_entries(basis, q)
    return _readonly(scipy.linalg.pinvh(gram, atol=0.0, rtol=RANK_RTOL))


def weingarten_matrix(basis: CommutantBasis, q: int) -> WeingartenMatrix:
    """Pseudo-inverse of :func:`gram_matrix`."""
    if q < 2:
        raise UnsupportedParameterError(f"Weingarten dimension must be >= 2, got q={q}")
    return WeingartenMatrix(_weingarten_entries(basis, q), q)


def dump_matrix_csv(matrix: GramMatrix | WeingartenMatrix | np.ndarray, path: str | Path) -> None:
    """Write a matrix row-major as CSV with 17 significant digits."""
    entries = matrix if isinstance(matrix, np.ndarray) else matrix.entries
    np.savetxt(path, np.asarray(entries, dtype=float), delimiter=",", fmt="%.17g")


# ---------------------------------------------------------------------------
# Irrep reduction
# ---------------------------------------------------------------------------

def irrep_projector(G: GramMatrix) -> IrrepProjector:
    """Orthonormal basis of the column space of ``G`` (eigenvalue-1 space of G⁺G)."""
    g = np.asarray(G.entries, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ShapeMismatchError(f"Gram matrix must be square, got {g.shape}")
    if not np.allclose(g, g.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.max(np.abs(g))))):
        raise UnsupportedParameterError("irrep reduction needs a symmetric Gram matrix")
    proj = scipy.linalg.pinvh(g, atol=0.0, rtol=RANK_RTOL) @ g
    proj = 0.5 * (proj + proj.T)
    w, v = np.linalg.eigh(proj)
    rows = v[:, w > 0.5][:, ::-1].T.copy()
    # fix the sign so the largest component of each row is positive
    for row in rows:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return IrrepProjector(_readonly(rows), rows.shape[0])


def irrep_reduce_gate(T: DressedGate, P: IrrepProjector) -> DressedGate:
    """Sandwich a dressed gate between ``P ⊗ P`` and its transpose."""
    from .rtn_core import DressedGate

    n = T.tensor.shape[0]
    if T.tensor.shape != (n, n, n, n) or n != P.n_basis:
        raise ShapeMismatchError(f"gate of shape {T.tensor.shape} does not match projector with {P.n_basis} columns")
    p = P.P
    reduced = np.einsum("as,bt,stuv,cu,ev->abce", p, p, T.tensor, p, p, optimize=True)
    if not T.factored:
        return DressedGate(_readonly(reduced), locked=False)
    core = np.einsum("suv,cu,ev->sce", T.core, p, p, optimize=True)
    images = p if T.out_basis is None else p @ T.out_basis
    return DressedGate(_readonly(reduced), locked=False, core=_readonly(core), out_basis=_readonly(images))


def irrep_reduce_boundary(b: np.ndarray, P: IrrepProjector) -> np.ndarray:
    """Reduce a per-site amplitude (or overlap) vector: ``b ↦ P b``."""
    b = np.asarray(b)
    if b.shape != (P.n_basis,):
        raise ShapeMismatchError(f"vector of shape {b.shape} does not match projector with {P.n_basis} columns")
    return P.P @ b
