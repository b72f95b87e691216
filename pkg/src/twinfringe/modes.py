"""Exact linear algebra over the eight-mode two-photon space.

The down-converter emits photon pairs into eight discrete ray modes: for each
of the two source points (p, q) there is a horizontal ("side") ray and an
oblique ray on both the signal (Alice) and idler (Bob) arms. The pair state
couples each signal mode to exactly one idler partner, so every quantity of
interest lives in a space of at most four signal x idler pairs and all
operations here are exact up to float rounding.

States are sparse complex amplitude maps, projectors are retained-mode sets,
and density operators are dense matrices over an explicitly ordered basis.
Everything is immutable and pure, so values can be shared freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import EmptyEnsembleError

NORM_TOL = 1e-12


class Party(Enum):
    SIGNAL = "signal"
    IDLER = "idler"


class SourcePoint(Enum):
    P = "p"
    Q = "q"


class Direction(Enum):
    SIDE = "side"        # horizontal ray, passes the direction filter
    UPDOWN = "updown"    # oblique ray: "down" on the signal arm, "up" on the idler arm


@dataclass(frozen=True, order=True)
class Mode:
    """One of the eight photon ray modes."""

    party: Party = field(compare=False)
    source_point: SourcePoint = field(compare=False)
    direction: Direction = field(compare=False)
    # sort_key fixes the canonical ordering used for reproducible matrices
    sort_key: int = field(default=0, repr=False)

    @property
    def label(self) -> str:
        prefix = "s" if self.party is Party.SIGNAL else "i"
        if self.direction is Direction.SIDE:
            suffix = "0"
        else:
            suffix = "-" if self.party is Party.SIGNAL else "+"
        return f"{prefix}_{self.source_point.value}{suffix}"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.label


def _mk(party: Party, point: SourcePoint, direction: Direction, key: int) -> Mode:
    return Mode(party, point, direction, key)


SIGNAL_P_SIDE = _mk(Party.SIGNAL, SourcePoint.P, Direction.SIDE, 0)
SIGNAL_P_DOWN = _mk(Party.SIGNAL, SourcePoint.P, Direction.UPDOWN, 1)
SIGNAL_Q_SIDE = _mk(Party.SIGNAL, SourcePoint.Q, Direction.SIDE, 2)
SIGNAL_Q_DOWN = _mk(Party.SIGNAL, SourcePoint.Q, Direction.UPDOWN, 3)
IDLER_P_SIDE = _mk(Party.IDLER, SourcePoint.P, Direction.SIDE, 4)
IDLER_P_UP = _mk(Party.IDLER, SourcePoint.P, Direction.UPDOWN, 5)
IDLER_Q_SIDE = _mk(Party.IDLER, SourcePoint.Q, Direction.SIDE, 6)
IDLER_Q_UP = _mk(Party.IDLER, SourcePoint.Q, Direction.UPDOWN, 7)

SIGNAL_MODES = (SIGNAL_P_SIDE, SIGNAL_P_DOWN, SIGNAL_Q_SIDE, SIGNAL_Q_DOWN)
IDLER_MODES = (IDLER_P_SIDE, IDLER_P_UP, IDLER_Q_SIDE, IDLER_Q_UP)
ALL_MODES = SIGNAL_MODES + IDLER_MODES

# Canonical pair listing; fixes basis order for all matrices.
CANONICAL_PAIRS: tuple[tuple[Mode, Mode], ...] = (
    (SIGNAL_P_SIDE, IDLER_P_SIDE),
    (SIGNAL_P_DOWN, IDLER_P_UP),
    (SIGNAL_Q_SIDE, IDLER_Q_SIDE),
    (SIGNAL_Q_DOWN, IDLER_Q_UP),
)


def entangled_partner(mode: Mode) -> Mode:
    """Map a mode to its pair-production partner (an involution)."""
    other = Party.IDLER if mode.party is Party.SIGNAL else Party.SIGNAL
    for candidate in ALL_MODES:
        if (
            candidate.party is other
            and candidate.source_point is mode.source_point
            and candidate.direction is mode.direction
        ):
            return candidate
    raise AssertionError("mode table is exhaustive")  # pragma: no cover


def mode_from_label(label: str) -> Mode:
    for mode in ALL_MODES:
        if mode.label == label:
            return mode
    raise ValueError(f"unknown mode label {label!r}")


# ---------------------------------------------------------------------------
# Two-photon states
# ---------------------------------------------------------------------------

Pair = tuple[Mode, Mode]


@dataclass(frozen=True)
class TwoPhotonState:
    """Sparse amplitude map over (signal, idler) mode pairs.

    The vacuum component of the emitted field is not stored: every derived
    quantity conditions on a pair having been produced. ``epsilon`` is kept
    only so physical rates can be reported with their epsilon^2 prefactors.
    """

    amplitudes: Mapping[Pair, complex]
    epsilon: float = 1.0

    def __post_init__(self):
        clean: dict[Pair, complex] = {}
        for (sig, idl), amp in self.amplitudes.items():
            if sig.party is not Party.SIGNAL or idl.party is not Party.IDLER:
                raise ValueError(f"pair ({sig}, {idl}) is not (signal, idler)")
            amp = complex(amp)
            if amp != 0:
                clean[(sig, idl)] = amp
        object.__setattr__(self, "amplitudes", clean)

    def amplitude(self, signal: Mode, idler: Mode) -> complex:
        return self.amplitudes.get((signal, idler), 0j)

    def squared_norm(self) -> float:
        return sum(abs(a) ** 2 for a in self.amplitudes.values())

    @property
    def is_normalized(self) -> bool:
        return abs(self.squared_norm() - 1.0) <= NORM_TOL

    def is_zero(self) -> bool:
        return not self.amplitudes

    def normalized(self) -> "TwoPhotonState":
        norm = math.sqrt(self.squared_norm())
        if norm == 0.0:
            raise ValueError("cannot normalize the zero state")
        return TwoPhotonState(
            {pair: amp / norm for pair, amp in self.amplitudes.items()},
            epsilon=self.epsilon,
        )

    def support(self) -> tuple[Pair, ...]:
        return tuple(sorted(self.amplitudes, key=lambda pr: (pr[0].sort_key, pr[1].sort_key)))


def canonical_spdc_state(epsilon: float) -> TwoPhotonState:
    """The four-term pair state emitted by the crystal, amplitude epsilon each.

    Unnormalized on purpose: coincidence rates then carry their physical
    epsilon^2 prefactor. Use ``.normalized()`` for state algebra.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    return TwoPhotonState({pair: epsilon for pair in CANONICAL_PAIRS}, epsilon=epsilon)


# ---------------------------------------------------------------------------
# Projectors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Projector:
    """Incomplete-measurement projector: keep a set of modes on one party."""

    party: Party
    retained_modes: frozenset[Mode]

    def __post_init__(self):
        object.__setattr__(self, "retained_modes", frozenset(self.retained_modes))
        for mode in self.retained_modes:
            if mode.party is not self.party:
                raise ValueError(f"mode {mode} does not belong to party {self.party.value}")

    def retains(self, mode: Mode) -> bool:
        return mode in self.retained_modes

    def is_orthogonal_to(self, other: "Projector") -> bool:
        return self.party is other.party and not (self.retained_modes & other.retained_modes)


def identity_projector(party: Party) -> Projector:
    modes = SIGNAL_MODES if party is Party.SIGNAL else IDLER_MODES
    return Projector(party, frozenset(modes))


def apply_projector(state: TwoPhotonState, proj: Projector) -> TwoPhotonState:
    """Zero every amplitude whose mode on the projector's party is not retained.

    Does not renormalize; callers decide what the surviving norm means.
    """
    kept = {}
    for (sig, idl), amp in state.amplitudes.items():
        mode = sig if proj.party is Party.SIGNAL else idl
        if proj.retains(mode):
            kept[(sig, idl)] = amp
    return TwoPhotonState(kept, epsilon=state.epsilon)


# ---------------------------------------------------------------------------
# Density operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DensityOperator:
    """Dense Hermitian matrix over an ordered basis of labels.

    ``basis`` entries are (signal, idler) pairs for the two-photon space or
    single idler modes after the signal has been traced out.
    """

    matrix: np.ndarray
    basis: tuple

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        n = len(self.basis)
        if mat.shape != (n, n):
            raise ValueError(f"matrix shape {mat.shape} does not match basis of size {n}")
        mat = mat.copy()
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "basis", tuple(self.basis))

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def is_hermitian(self, tol: float = NORM_TOL) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= tol)

    def is_positive(self, tol: float = NORM_TOL) -> bool:
        return bool(np.min(np.linalg.eigvalsh(self.matrix)) >= -tol)

    def index_of(self, label) -> int:
        try:
            return self.basis.index(label)
        except ValueError:
            raise ValueError(f"label {label!r} is not in this operator's basis") from None


def _pair_basis_for(support: Iterable[Pair]) -> tuple[Pair, ...]:
    """Canonical pairs first, then any extra pairs in canonical mode order."""
    extra = sorted(
        (pr for pr in set(support) if pr not in CANONICAL_PAIRS),
        key=lambda pr: (pr[0].sort_key, pr[1].sort_key),
    )
    return CANONICAL_PAIRS + tuple(extra)


def density_from_state(state: TwoPhotonState, basis: Sequence[Pair] | None = None) -> DensityOperator:
    """|psi><psi| over the canonical pair basis (or a caller-supplied one)."""
    if basis is None:
        basis = _pair_basis_for(state.amplitudes.keys())
    else:
        basis = tuple(basis)
        missing = set(state.amplitudes.keys()) - set(basis)
        if missing:
            raise ValueError(f"state has support outside the requested basis: {missing}")
    vec = np.array([state.amplitude(*pair) for pair in basis], dtype=complex)
    return DensityOperator(np.outer(vec, vec.conj()), basis)


def branch_weights(
    state: TwoPhotonState,
    projectors: Sequence[Projector],
    post_filter: Projector | None = None,
) -> list[float]:
    """Born weight of each branch: |post_filter proj_i |state>|^2 (no renormalization)."""
    weights = []
    for proj in projectors:
        branch = apply_projector(state, proj)
        if post_filter is not None:
            branch = apply_projector(branch, post_filter)
        weights.append(branch.squared_norm())
    return weights


def conditional_mixture(
    state: TwoPhotonState,
    projectors: Sequence[Projector],
    post_filter: Projector | None = None,
    basis: Sequence[Pair] | None = None,
) -> DensityOperator:
    """Statistical mixture of the post-filtered branches of an incomplete measurement.

    Each projector is one measurement outcome; the branch state is
    post_filter(proj_i(state)), its weight the Born probability of the outcome
    surviving the filter, renormalized over the surviving branches. Branches
    that the filter annihilates drop out of the ensemble.
    """
    for i, a in enumerate(projectors):
        for b in projectors[i + 1:]:
            if not a.is_orthogonal_to(b):
                raise ValueError("conditioning projectors must be mutually orthogonal")
    if not state.is_normalized:
        raise ValueError("conditional_mixture expects a normalized state")

    branches: list[TwoPhotonState] = []
    weights: list[float] = []
    for proj in projectors:
        branch = apply_projector(state, proj)
        if post_filter is not None:
            branch = apply_projector(branch, post_filter)
        w = branch.squared_norm()
        if w > 0.0:
            branches.append(branch.normalized())
            weights.append(w)
    total = sum(weights)
    if total == 0.0:
        raise EmptyEnsembleError("every conditioning branch was annihilated by the filter")

    if basis is None:
        support: set[Pair] = set()
        for branch in branches:
            support |= set(branch.amplitudes.keys())
        basis = _pair_basis_for(support)

    n = len(basis)
    rho = np.zeros((n, n), dtype=complex)
    for w, branch in zip(weights, branches):
        rho += (w / total) * density_from_state(branch, basis).matrix
    return DensityOperator(rho, tuple(basis))


def partial_trace_signal(rho: DensityOperator) -> DensityOperator:
    """Trace out the signal photon; returns the idler-only reduced operator."""
    for label in rho.basis:
        if not (isinstance(label, tuple) and len(label) == 2):
            raise ValueError("partial_trace_signal expects a (signal, idler) pair basis")
    idler_basis = tuple(m for m in IDLER_MODES if any(pair[1] is m for pair in rho.basis))
    n = len(idler_basis)
    out = np.zeros((n, n), dtype=complex)
    for a, (sig_a, idl_a) in enumerate(rho.basis):
        for b, (sig_b, idl_b) in enumerate(rho.basis):
            if sig_a is sig_b:
                out[idler_basis.index(idl_a), idler_basis.index(idl_b)] += rho.matrix[a, b]
    return DensityOperator(out, idler_basis)


def trace_distance(rho_a: DensityOperator, rho_b: DensityOperator) -> float:
    """Half the absolute eigenvalue sum of rho_a - rho_b; in [0, 1] for states.

    Dimensions never exceed eight here, so a dense Hermitian solve is exact
    for all practical purposes.
    """
    if rho_a.basis != rho_b.basis:
        raise ValueError("trace_distance requires operators on the same ordered basis")
    eigenvalues = np.linalg.eigvalsh(rho_a.matrix - rho_b.matrix)
    return float(0.5 * np.abs(eigenvalues).sum())


def single_mode_probability(rho: DensityOperator, mode: Mode) -> float:
    """<mode| rho |mode> for an idler-side reduced operator; 0 if unsupported."""
    if mode not in rho.basis:
        return 0.0
    i = rho.index_of(mode)
    return float(rho.matrix[i, i].real)
