"""Command-line front end: validate a run manifest, sweep it, write CSV or JSON.

Usage::

    replica-tn ipr --ensemble unitary --k 2 --d 2 --N 32 --t 1..40
    replica-tn purity --N 16 --region 1..8 --t 1..64 --reference rw --output purity.csv
    replica-tn xeb --N 16 --t 1..40 --device dep:0.1 --format json

Every (N, t) point is its own task; the tasks of one chain length share a
single evolution of the replica MPS. Rows are sorted by (N, t) before
writing, so the output does not depend on the worker count.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import os
import re
import sys
from dataclasses import dataclass
from functools import partial
from typing import Any, Callable, Sequence, TextIO

import anyio
import anyio.to_thread
import numpy as np

from ._errors import ManifestError, NumericDegeneracyError, ReplicaTNError, UnsupportedParameterError
from .channels import ChannelStack, depolarising_choi, parse_channel
from .commutant import Permutation, gram_matrix, irrep_projector
from .config import DEFAULT_LIMITS, Limits
from .ensembles import default_registry
from .observables import (
    BrickworkNetwork,
    SweepConfig,
    bell_pair_network,
    clifford_ipr_stat,
    full_swap_boundary,
    haar_ipr,
    ipr_boundary,
    iter_brickwork,
    iter_coherent_information,
    normalize_coherent_information,
    orthogonal_ipr_stat,
    page_purity,
    purity_boundary,
    relative_coherence_from,
    xeb_from,
    xeb_network,
)
from .oracles import McObservable, mc_average, rw_purity
from .subcommands import Subcommand, arg, get_subcommand, list_subcommands, subcommand
from .types import DEFAULT_CUTOFF, ContractionResult, LayerDiagnostics, TruncationParams

logger = logging.getLogger(__name__)

SCHEMA = "replica-tn-results/1"
COLUMNS = (
    "ensemble", "k", "d", "N", "t", "value", "log_value", "reference_value", "deviation",
    "chi_used", "discarded_weight", "wall_time_s", "seed", "error",
)

EXIT_OK = 0
EXIT_INVALID_MANIFEST = 2
EXIT_PARTIAL_FAILURE = 3

_NORMALIZATIONS = ("none", "K", "K_log_d")
_REFERENCES = ("auto", "rw", "page", "none")
_RANGE_RE = re.compile(r"^\s*(-?\d+)\s*(?:\.\.\s*(-?\d+)\s*)?$")


# ---------------------------------------------------------------------------
# Manifest
# ---------------------------------------------------------------------------

def parse_range(text: str, what: str) -> tuple[int, ...]:
    """``"a..b"`` (inclusive) or a single integer."""
    match = _RANGE_RE.match(text)
    if match is None:
        raise ManifestError(f"{what}: expected 'a..b' or an integer, got {text!r}")
    lo = int(match[1])
    hi = int(match[2]) if match[2] is not None else lo
    if hi < lo:
        raise ManifestError(f"{what}: empty range {text!r}")
    return tuple(range(lo, hi + 1))


def parse_int_list(text: str, what: str) -> tuple[int, ...]:
    """Comma-separated integers."""
    try:
        values = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise ManifestError(f"{what}: expected comma-separated integers, got {text!r}") from exc
    if not values:
        raise ManifestError(f"{what}: no values given")
    return values


@dataclass(frozen=True)
class RunManifest:
    """A validated CLI run: one subcommand over a grid of N and t."""

    subcommand: str
    ensemble: str = "unitary"
    k: int = 2
    d: int = 2
    Ns: tuple[int, ...] = (8,)
    ts: tuple[int, ...] = (1,)
    chi_max: int | None = None
    cutoff: float = DEFAULT_CUTOFF
    channels: tuple[str, ...] = ()
    # 1-based inclusive (first, last); None means the left half of the chain
    region: tuple[int, int] | None = None
    K: int = 1
    p: float = 0.0
    normalization: str = "K_log_d"
    reference: str = "auto"
    device: str = "id"
    observable: str = "ipr"
    n_samples: int = 1000
    seed: int = 0
    output: str | None = None
    format: str = "csv"
    threads: int | None = None
    diagnostics: str | None = None
    limits: Limits = DEFAULT_LIMITS

    @property
    def t_max(self) -> int:
        return max(self.ts)

    @classmethod
    def from_args(cls, ns: argparse.Namespace, limits: Limits | None = None) -> RunManifest:
        """Build and validate a manifest from parsed arguments."""
        region = None
        if getattr(ns, "region", None):
            sites = parse_range(ns.region, "--region")
            region = (sites[0], sites[-1])
        manifest = cls(
            subcommand=ns.command,
            ensemble=ns.ensemble.lower(),
            k=ns.k,
            d=ns.d,
            Ns=parse_int_list(ns.N, "--N"),
            ts=parse_range(ns.t, "--t"),
            chi_max=ns.chi,
            cutoff=ns.cutoff,
            channels=tuple(getattr(ns, "channel", None) or ()),
            region=region,
            K=getattr(ns, "K", 1),
            p=getattr(ns, "p", 0.0),
            normalization=getattr(ns, "normalization", "K_log_d"),
            reference=getattr(ns, "reference", "auto"),
            device=getattr(ns, "device", "id"),
            observable=getattr(ns, "observable", "ipr"),
            n_samples=getattr(ns, "samples", 1000),
            seed=ns.seed,
            output=ns.output,
            format=ns.format,
            threads=ns.threads,
            diagnostics=ns.diagnostics,
            limits=limits or DEFAULT_LIMITS,
        )
        manifest.validate()
        return manifest

    def truncation(self, n_basis: int, N: int, block_sparse: bool = True) -> TruncationParams:
        if self.chi_max is None:
            return TruncationParams.for_basis(n_basis, self.cutoff, block_sparse, N=N)
        return TruncationParams(self.chi_max, self.cutoff, block_sparse)

    def region_sites(self, N: int) -> tuple[int, ...]:
        """0-based sites of the region for a chain of length N."""
        if self.region is None:
            return tuple(range(N // 2))
        first, last = self.region
        return tuple(range(first - 1, last))

    def sweep_configs(self) -> list[SweepConfig]:
        basis_size = len(default_registry().build_basis(self.ensemble, self.k, self.d))
        return [
            SweepConfig(
                ensemble=self.ensemble,
                k=self.k,
                d=self.d,
                N=N,
                t_max=self.t_max,
                trunc=self.truncation(basis_size, N),
                channels=self.channels,
                region=self.region_sites(N),
                K=self.K,
                p=self.p,
                seed=self.seed,
            )
            for N in self.Ns
        ]

    def validate(self) -> None:
        """Raise ManifestError on the first problem found; computes nothing."""
        if get_subcommand(self.subcommand) is None:
            raise ManifestError(f"unknown subcommand {self.subcommand!r}")
        if self.format not in ("csv", "json"):
            raise ManifestError(f"--format must be 'csv' or 'json', got {self.format!r}")
        if self.d < 2 or self.k < 1:
            raise ManifestError(f"need d >= 2 and k >= 1, got d={self.d}, k={self.k}")
        for N in self.Ns:
            if N < 2 or N % 2:
                raise ManifestError(f"--N values must be even and >= 2, got {N}")
        if min(self.ts) < 1:
            raise ManifestError(f"--t values must be >= 1, got {min(self.ts)}")
        if self.chi_max is not None and self.chi_max < 1:
            raise ManifestError(f"--chi must be >= 1, got {self.chi_max}")
        if not 0.0 <= self.cutoff < 1.0:
            raise ManifestError(f"--cutoff must lie in [0, 1), got {self.cutoff}")
        if self.threads is not None and self.threads < 1:
            raise ManifestError(f"--threads must be >= 1, got {self.threads}")
        if not 0.0 <= self.p <= 1.0:
            raise ManifestError(f"--p must lie in [0, 1], got {self.p}")
        if self.region is not None:
            first, last = self.region
            if first < 1 or last > min(self.Ns):
                raise ManifestError(f"--region {first}..{last} must lie within 1..{min(self.Ns)}")
        try:
            default_registry().build_basis(self.ensemble, self.k, self.d)
            if self.channels:
                if len(self.channels) not in (1, self.k):
                    raise ManifestError(f"give one --channel or k={self.k} of them, got {len(self.channels)}")
                for spec in self.channels:
                    parse_channel(spec, self.d)
            parse_channel(self.device, self.d)
            self.sweep_configs()
        except UnsupportedParameterError as exc:
            raise ManifestError(str(exc)) from exc
        self._validate_subcommand()

    def _validate_subcommand(self) -> None:
        name = self.subcommand
        if name in ("coherence", "coherent-info", "xeb"):
            if self.k != 2 or self.ensemble not in ("unitary", "clifford"):
                raise ManifestError(f"{name} is defined for k=2 unitary or clifford gates")
        if name == "coherent-info":
            if self.normalization not in _NORMALIZATIONS:
                raise ManifestError(f"--normalization must be one of {_NORMALIZATIONS}")
            for N in self.Ns:
                if not 1 <= self.K <= N // 2:
                    raise ManifestError(f"--K must satisfy 1 <= K <= N/2, got K={self.K}, N={N}")
        if name == "purity":
            if self.reference not in _REFERENCES:
                raise ManifestError(f"--reference must be one of {_REFERENCES}")
            if self.reference == "rw":
                if self.k != 2 or self.ensemble == "orthogonal" or self.channels:
                    raise ManifestError("--reference rw needs clean k=2 unitary or clifford gates")
                if self.region is not None and self.region[0] != 1:
                    raise ManifestError("--reference rw needs a region starting at site 1")
            if self.reference == "page" and self.k != 2:
                raise ManifestError("--reference page needs k=2")
        if name == "oracle":
            if self.ensemble not in ("unitary", "orthogonal"):
                raise ManifestError("oracle samples unitary or orthogonal gates only")
            if self.n_samples < 2:
                raise ManifestError(f"--samples must be >= 2, got {self.n_samples}")
            try:
                McObservable(self.observable, self.k, self.region_sites(min(self.Ns)), self.K)
            except UnsupportedParameterError as exc:
                raise ManifestError(str(exc)) from exc


# ---------------------------------------------------------------------------
# Rows
# ---------------------------------------------------------------------------

def _log_abs(value: float) -> float:
    return math.log(abs(value)) if value != 0.0 else -math.inf


def _record(
    manifest: RunManifest,
    config: SweepConfig,
    t: int,
    value: float | None,
    log_value: float | None,
    reference: float | None = None,
    result: ContractionResult | None = None,
    **extra: Any,
) -> dict[str, Any]:
    deviation = abs(value - reference) if value is not None and reference is not None else None
    row: dict[str, Any] = {
        "ensemble": config.ensemble,
        "k": config.k,
        "d": config.d,
        "N": config.N,
        "t": t,
        "value": value,
        "log_value": log_value,
        "reference_value": reference,
        "deviation": deviation,
        "chi_used": result.chi_used if result is not None else None,
        "discarded_weight": result.discarded_weight_max if result is not None else None,
        "wall_time_s": result.wall_time_s if result is not None else None,
        "seed": manifest.seed,
        "error": None,
    }
    row.update(extra)
    return row


def _error_row(manifest: RunManifest, config: SweepConfig, t: int, exc: Exception) -> dict[str, Any]:
    row = _record(manifest, config, t, None, None)
    row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _contraction_row(manifest: RunManifest, config: SweepConfig, result: ContractionResult,
                     reference: float | None) -> dict[str, Any]:
    return _record(manifest, config, result.t, result.value, result.log_value, reference, result)


def _format(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def columns_for(command: Subcommand) -> tuple[str, ...]:
    return COLUMNS + command.extra_columns


def write_rows(rows: Sequence[dict[str, Any]], columns: Sequence[str], stream: TextIO, fmt: str) -> None:
    """CSV with a schema comment line, or a JSON document of records."""
    if fmt == "json":
        records = [{c: row.get(c) for c in columns} for row in rows]
        json.dump({"schema": SCHEMA, "records": records}, stream, indent=2)
        stream.write("\n")
        return
    stream.write(f"# schema: {SCHEMA}\n")
    writer = csv.DictWriter(stream, fieldnames=list(columns), extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({c: _format(row.get(c)) for c in columns})


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

OnLayer = Callable[[LayerDiagnostics], None]

_CHANNEL_ARG = arg("--channel", action="append", help="per-replica channel 'id' or 'dep:<p>' (repeat k times, or once for all)")


def _ipr_reference(ensemble: str, d: int, N: int, k: int) -> float | None:
    if ensemble == "unitary":
        return haar_ipr(d**N, k)
    if ensemble == "orthogonal":
        return orthogonal_ipr_stat(d**N, k)
    if ensemble == "clifford":
        return clifford_ipr_stat(d, N, k)
    return None


@subcommand("ipr", "Averaged inverse participation ratio E[sum_x p_x^k]", [_CHANNEL_ARG])
def run_ipr(manifest: RunManifest, config: SweepConfig, on_layer: OnLayer) -> list[dict[str, Any]]:
    basis = config.basis()
    stack = config.stack()
    network = BrickworkNetwork(basis, config.d, config.N, stack, limits=manifest.limits)
    boundary = ipr_boundary(basis, config.d, config.N, limits=manifest.limits)
    reference = _ipr_reference(config.ensemble, config.d, config.N, config.k) if network.stack is None else None
    rows = []
    for (result,) in iter_brickwork(network, [boundary], config.t_max, config.trunc, on_layer):
        if result.t in manifest.ts:
            rows.append(_contraction_row(manifest, config, result, reference))
    return rows


def _purity_reference(manifest: RunManifest, config: SweepConfig, noisy: bool) -> Callable[[int], float | None]:
    region = config.region
    mode = manifest.reference
    prefix = region == tuple(range(len(region)))
    if mode == "auto":
        if noisy or config.k != 2:
            mode = "none"
        elif prefix and len(region) < config.N and config.ensemble != "orthogonal":
            mode = "rw"
        elif config.ensemble != "orthogonal":
            mode = "page"
        else:
            mode = "none"
    if mode == "rw":
        ell = len(region)
        if ell >= config.N:
            return lambda t: 1.0
        return lambda t: rw_purity(config.N, ell, config.d, t)
    if mode == "page":
        value = page_purity(config.d ** len(region), config.d ** (config.N - len(region)))
        return lambda t: value
    return lambda t: None


@subcommand(
    "purity",
    "Averaged subsystem purity E[Tr rho_A^k]",
    [
        arg("--region", help="1-based sites 'a..b' of subsystem A (default: left half)"),
        arg("--reference", default="auto", choices=_REFERENCES, help="closed form for the reference column"),
        _CHANNEL_ARG,
    ],
)
def run_purity(manifest: RunManifest, config: SweepConfig, on_layer: OnLayer) -> list[dict[str, Any]]:
    basis = config.basis()
    network = BrickworkNetwork(basis, config.d, config.N, config.stack(), limits=manifest.limits)
    boundary = purity_boundary(basis, config.d, config.N, config.region)
    reference = _purity_reference(manifest, config, network.noisy)
    rows = []
    for (result,) in iter_brickwork(network, [boundary], config.t_max, config.trunc, on_layer):
        if result.t in manifest.ts:
            rows.append(_contraction_row(manifest, config, result, reference(result.t)))
    return rows


def _noise_stack(manifest: RunManifest, config: SweepConfig) -> ChannelStack | None:
    stack = config.stack()
    if stack is None and manifest.p > 0.0:
        stack = ChannelStack.uniform(depolarising_choi(config.d, manifest.p), config.k)
    return stack


@subcommand(
    "coherence",
    "Relative coherence log(E[Tr rho^2] / E[sum_x rho_xx^2]) under depolarising noise",
    [arg("--p", type=float, default=0.0, help="depolarising rate after every gate"), _CHANNEL_ARG],
)
def run_coherence(manifest: RunManifest, config: SweepConfig, on_layer: OnLayer) -> list[dict[str, Any]]:
    basis = config.basis()
    stack = _noise_stack(manifest, config)
    network = BrickworkNetwork(basis, config.d, config.N, stack, limits=manifest.limits)
    boundaries = [full_swap_boundary(basis, config.d, config.N), ipr_boundary(basis, config.d, config.N)]
    full_noise = stack is not None and all(c.params.get("p") == 1.0 for c in stack.channels)
    rows = []
    for purity, ipr in iter_brickwork(network, boundaries, config.t_max, config.trunc, on_layer):
        if purity.t not in manifest.ts:
            continue
        try:
            value = relative_coherence_from(purity, ipr)
        except NumericDegeneracyError as exc:
            rows.append(_error_row(manifest, config, purity.t, exc))
            continue
        rows.append(_record(manifest, config, purity.t, value, _log_abs(value), 0.0 if full_noise else None, purity))
    return rows


@subcommand(
    "coherent-info",
    "Annealed coherent information of K Bell pairs encoded into the chain",
    [
        arg("--K", type=int, default=1, help="number of Bell-paired reference qudits"),
        arg("--p", type=float, default=0.0, help="depolarising rate after every gate"),
        arg("--normalization", default="K_log_d", choices=_NORMALIZATIONS),
    ],
)
def run_coherent_info(manifest: RunManifest, config: SweepConfig, on_layer: OnLayer) -> list[dict[str, Any]]:
    reference = (
        normalize_coherent_information(config.K * math.log(config.d), config.K, config.d, manifest.normalization)
        if config.p == 0.0 else None
    )
    rows = []
    values = iter_coherent_information(
        config.d, config.N, config.K, config.t_max, config.p, config.trunc,
        manifest.normalization, manifest.limits,
    )
    for value, res_b, res_rb in values:
        if res_b.t not in manifest.ts:
            continue
        combined = dataclasses.replace(
            res_rb,
            chi_used=max(res_b.chi_used, res_rb.chi_used),
            discarded_weight_max=max(res_b.discarded_weight_max, res_rb.discarded_weight_max),
            wall_time_s=res_b.wall_time_s + res_rb.wall_time_s,
        )
        rows.append(_record(manifest, config, res_b.t, value, _log_abs(value), reference, combined))
    return rows


@subcommand(
    "xeb",
    "Linear cross-entropy benchmark between ideal and noisy output distributions",
    [arg("--device", default="id", help="device channel 'id' or 'dep:<p>'")],
)
def run_xeb(manifest: RunManifest, config: SweepConfig, on_layer: OnLayer) -> list[dict[str, Any]]:
    device = parse_channel(manifest.device, config.d)
    network = xeb_network(config.d, config.N, device, manifest.limits)
    boundary = ipr_boundary(network.basis, config.d, config.N)
    reference = 1.0 - 2.0 / (config.d**config.N + 1) if device.is_identity else None
    log_D = config.N * math.log(config.d)
    rows = []
    for (result,) in iter_brickwork(network, [boundary], config.t_max, config.trunc, on_layer):
        if result.t in manifest.ts:
            value = xeb_from(result, config.d, config.N)
            rows.append(_record(manifest, config, result.t, value, result.log_value + log_D, reference, result))
    return rows


def _oracle_network(manifest: RunManifest, config: SweepConfig, observable: McObservable):
    """Replica network and boundary whose contraction the sampled mean estimates."""
    d, N, p = config.d, config.N, config.p
    basis = config.basis()
    stack = ChannelStack.uniform(depolarising_choi(d, p), config.k) if p > 0 else None
    kind = observable.kind
    if kind == "ipr":
        network = BrickworkNetwork(basis, d, N, stack, limits=manifest.limits)
        return network, ipr_boundary(basis, d, N, limits=manifest.limits)
    if kind == "purity":
        network = BrickworkNetwork(basis, d, N, stack, limits=manifest.limits)
        return network, purity_boundary(basis, d, N, observable.region)
    if kind == "full-purity":
        network = BrickworkNetwork(basis, d, N, stack, limits=manifest.limits)
        return network, full_swap_boundary(basis, d, N)
    if config.k != 2 or config.ensemble != "unitary":
        return None, None
    if kind == "xeb":
        network = xeb_network(d, N, depolarising_choi(d, p), manifest.limits)
        return network, ipr_boundary(network.basis, d, N)
    beta = Permutation.identity(2) if kind == "bell-purity-B" else Permutation.transposition(2, 0, 1)
    network = bell_pair_network(d, N, observable.K, p, beta, manifest.limits)
    return network, full_swap_boundary(network.basis, d, N)


@subcommand(
    "oracle",
    "Monte Carlo average over sampled circuits, with the replica contraction as reference",
    [
        arg("--observable", default="ipr", help="ipr, purity, full-purity, xeb, bell-purity-B or bell-purity-RB"),
        arg("--p", type=float, default=0.0, help="depolarising rate after every gate"),
        arg("--region", help="1-based sites 'a..b' for purity (default: left half)"),
        arg("--K", type=int, default=1, help="reference qudits for the Bell-pair observables"),
        arg("--samples", type=int, default=1000, help="circuits per depth"),
    ],
    extra_columns=("n_samples", "std_error"),
)
def run_oracle(manifest: RunManifest, config: SweepConfig, on_layer: OnLayer) -> list[dict[str, Any]]:
    observable = McObservable(manifest.observable, config.k, config.region, config.K)
    network, boundary = _oracle_network(manifest, config, observable)
    references: dict[int, ContractionResult] = {}
    if network is not None:
        for (result,) in iter_brickwork(network, [boundary], config.t_max, config.trunc, on_layer):
            references[result.t] = result
    rows = []
    for t in manifest.ts:
        oracle = mc_average(
            config.ensemble, config.d, config.N, t, observable, config.p,
            manifest.n_samples, manifest.seed, manifest.limits,
        )
        ref = references.get(t)
        reference = None
        if ref is not None:
            reference = xeb_from(ref, config.d, config.N) if observable.kind == "xeb" else ref.value
        rows.append(_record(
            manifest, config, t, oracle.mean, _log_abs(oracle.mean), reference, ref,
            n_samples=oracle.n_samples, std_error=oracle.std_error,
        ))
    return rows


@subcommand(
    "reduce-bench",
    "IPR with the full commutant basis and with its irrep-reduced span, timed side by side",
    [_CHANNEL_ARG],
    extra_columns=("n_basis_full", "n_basis_reduced", "wall_time_full_s", "wall_time_reduced_s"),
)
def run_reduce_bench(manifest: RunManifest, config: SweepConfig, on_layer: OnLayer) -> list[dict[str, Any]]:
    d, N = config.d, config.N
    basis = config.basis()
    stack = config.stack()
    projector = irrep_projector(gram_matrix(basis, d))
    boundary = ipr_boundary(basis, d, N, limits=manifest.limits)
    full = BrickworkNetwork(basis, d, N, stack, limits=manifest.limits)
    reduced = BrickworkNetwork(basis, d, N, stack, projector=projector, limits=manifest.limits)
    full_results = {
        r.t: r for (r,) in iter_brickwork(full, [boundary], config.t_max, manifest.truncation(len(basis), N))
    }
    rows = []
    trunc = manifest.truncation(projector.d_red, N)
    for (result,) in iter_brickwork(reduced, [boundary], config.t_max, trunc, on_layer):
        if result.t not in manifest.ts:
            continue
        reference = full_results[result.t]
        rows.append(_record(
            manifest, config, result.t, result.value, result.log_value, reference.value, result,
            n_basis_full=len(basis),
            n_basis_reduced=projector.d_red,
            wall_time_full_s=reference.wall_time_s,
            wall_time_reduced_s=result.wall_time_s,
        ))
    return rows


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------

def _run_point(command: Subcommand, manifest: RunManifest, config: SweepConfig) -> tuple[int, list[dict[str, Any]], list[str]]:
    diagnostics: list[str] = []

    def on_layer(diag: LayerDiagnostics) -> None:
        diagnostics.append(diag.to_json(N=config.N))

    try:
        rows = command.handler(manifest, config, on_layer)
    except (ReplicaTNError, np.linalg.LinAlgError) as exc:
        logger.error("%s N=%d failed: %s", command.name, config.N, exc)
        rows = [_error_row(manifest, config, t, exc) for t in manifest.ts]
    return config.N, rows, diagnostics


@dataclass
class _ChainSweep:
    """Rows of one chain length, evolved once and shared by its (N, t) tasks."""

    config: SweepConfig
    lock: anyio.Lock
    rows: dict[int, dict[str, Any]] | None = None
    diagnostics: list[str] = dataclasses.field(default_factory=list)


async def _run_all(command: Subcommand, manifest: RunManifest,
                   configs: list[SweepConfig]) -> tuple[list[dict[str, Any]], list[str]]:
    limiter = anyio.CapacityLimiter(manifest.threads or os.cpu_count() or 1)
    sweeps = {config.N: _ChainSweep(config, anyio.Lock()) for config in configs}
    rows: list[dict[str, Any]] = []

    async def worker(N: int, t: int) -> None:
        sweep = sweeps[N]
        async with sweep.lock:
            if sweep.rows is None:
                _, point_rows, sweep.diagnostics = await anyio.to_thread.run_sync(
                    partial(_run_point, command, manifest, sweep.config), limiter=limiter
                )
                sweep.rows = {row["t"]: row for row in point_rows}
        row = sweep.rows.get(t)
        if row is not None:
            rows.append(row)

    async with anyio.create_task_group() as tg:
        for config in configs:
            for t in manifest.ts:
                tg.start_soon(worker, config.N, t)
    diagnostics = [line for N in sorted(sweeps) for line in sweeps[N].diagnostics]
    return rows, diagnostics


def run(manifest: RunManifest) -> int:
    """Execute a validated manifest; returns the process exit status."""
    command = get_subcommand(manifest.subcommand)
    configs = manifest.sweep_configs()
    rows, diagnostics = anyio.run(_run_all, command, manifest, configs)
    rows.sort(key=lambda r: (r["N"], r["t"]))
    columns = columns_for(command)
    if manifest.output is None:
        write_rows(rows, columns, sys.stdout, manifest.format)
    else:
        with open(manifest.output, "w", newline="", encoding="utf-8") as f:
            write_rows(rows, columns, f, manifest.format)
    if manifest.diagnostics is not None:
        with open(manifest.diagnostics, "w", encoding="utf-8") as f:
            f.writelines(line + "\n" for line in diagnostics)
    failed = sum(1 for row in rows if row["error"])
    if failed:
        logger.warning("%d of %d rows failed", failed, len(rows))
        return EXIT_PARTIAL_FAILURE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="replica-tn",
        description="Ensemble-averaged observables of brickwork random circuits by replica tensor networks",
    )
    parser.add_argument("--log-level", default="WARNING", help="logging level (DEBUG, INFO, WARNING, ...)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, command in sorted(list_subcommands().items()):
        p = sub.add_parser(name, help=command.description, description=command.description)
        p.add_argument("--ensemble", default="unitary", help=default_registry().format_help())
        p.add_argument("--k", type=int, default=2, help="replica number")
        p.add_argument("--d", type=int, default=2, help="local dimension")
        p.add_argument("--N", default="8", help="comma-separated chain lengths")
        p.add_argument("--t", default="1", help="depths 'a..b' (inclusive)")
        p.add_argument("--chi", type=int, default=None, help="maximum bond dimension (default max(4·n_B², N/2))")
        p.add_argument("--cutoff", type=float, default=DEFAULT_CUTOFF, help="relative singular-value cutoff")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
        p.add_argument("--output", default=None, help="output path (default: stdout)")
        p.add_argument("--format", default="csv", choices=("csv", "json"))
        p.add_argument("--diagnostics", default=None, help="write per-layer diagnostics as JSON lines")
        for argument in command.arguments:
            p.add_argument(*argument.flags, **argument.options)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    try:
        manifest = RunManifest.from_args(args, Limits.from_env())
    except (ManifestError, UnsupportedParameterError) as exc:
        print(f"replica-tn: error: {exc}", file=sys.stderr)
        return getattr(exc, "exit_code", EXIT_INVALID_MANIFEST)
    return run(manifest)


if __name__ == "__main__":
    sys.exit(main())
