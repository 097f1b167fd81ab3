"""Generic finite-state stochastic hybrid system (SHS) engine.

A model couples a continuous-time jump process over a finite set of discrete
states with a deterministic age flow: in state ``q`` the age vector ``x``
grows at rate zero, at a constant slope, or proportionally to ``x`` itself
(exponential trajectories).  Each transition ``l`` fires at a constant rate
and applies a linear reset ``x+ = x @ A_l``.

The engine computes

* the stationary distribution of the discrete chain (global balance),
* the per-state expected age vectors ``v_q`` from one coupled linear system,
* the average monitor-side age as the sum of monitor components of ``v_q``.

Everything here is a pure function over immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ModelError(ValueError):
    """Invalid model construction input."""


class EmptyModel(ModelError):
    """Model has no discrete states."""


class BadDimension(ModelError):
    """Mismatched continuous dimension, state index, or matrix shape."""


class NonpositiveRate(ModelError):
    """Transition rate is not strictly positive."""


class NotIrreducible(ModelError):
    """Transition graph is not strongly connected."""


class NoOutgoingTransitions(ModelError):
    """Some state has no outgoing transition; the jump process would stall."""


class Singular(ArithmeticError):
    """A pivot fell below the singularity threshold during elimination."""


class SingularBalance(RuntimeError):
    """Global balance system is singular; indicates a model-construction bug."""


class Unstable(RuntimeError):
    """Expected-age system has no finite nonnegative solution."""


class UnstableParameters(Unstable):
    """Closed-form route rejected the parameters as outside the stable region."""


# Canonical two-component resets shared by the concrete channel models.
# Component 1 is the age the monitor would show if the update in service
# finished right now; component 2 is the monitor's current age.
def _reset(rows) -> "ResetMap":
    return ResetMap(np.array(rows, dtype=float))


@dataclass(frozen=True, eq=False)
class ResetMap:
    """Linear reset applied at a transition, as a row-vector product x @ A."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise BadDimension(f"reset map must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise BadDimension("reset map entries must be finite and nonnegative")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


ZERO = "zero"
CONSTANT = "constant"
LINEAR = "linear"


@dataclass(frozen=True)
class GrowthRate:
    """State-dependent derivative of the age vector.

    ``zero`` freezes the ages, ``constant`` grows every component at a fixed
    slope, and ``linear`` grows the vector as ``k * x`` so trajectories are
    exponential in time.
    """

    kind: str
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in (ZERO, CONSTANT, LINEAR):
            raise ModelError(f"unknown growth kind {self.kind!r}")
        if self.kind == ZERO and self.value != 0.0:
            raise ModelError("zero growth carries no parameter")
        if self.kind in (CONSTANT, LINEAR) and not self.value > 0:
            raise ModelError(f"{self.kind} growth requires a positive parameter")

    @classmethod
    def zero(cls) -> "GrowthRate":
        return cls(ZERO)

    @classmethod
    def constant(cls, slope: float) -> "GrowthRate":
        return cls(CONSTANT, float(slope))

    @classmethod
    def linear(cls, k: float) -> "GrowthRate":
        return cls(LINEAR, float(k))


# Successful delivery: both components cleared.
RESET_CLEAR = _reset([[0.0, 0.0], [0.0, 0.0]])
# A fresh update enters service: service component restarts at zero, the
# monitor component keeps ageing.
RESET_FRESH_SERVICE = _reset([[0.0, 0.0], [0.0, 1.0]])
# Nothing deliverable is in service: both components track the monitor age.
RESET_HOLD_MONITOR = _reset([[0.0, 0.0], [1.0, 1.0]])


@dataclass(frozen=True)
class Transition:
    """One jump of the discrete chain: fires at ``rate``, resets ``x @ reset``."""

    label: int
    source: int
    target: int
    rate: float
    reset: ResetMap


@dataclass(frozen=True, eq=False)
class ShsModel:
    """Validated finite-state model; build through :func:`build_model`."""

    state_labels: tuple[str, ...]
    growth: tuple[GrowthRate, ...]
    transitions: tuple[Transition, ...]
    dim: int

    @property
    def n_states(self) -> int:
        return len(self.state_labels)

    @property
    def monitor_component(self) -> int:
        """Index of the monitor-age component (second when it exists)."""
        return 1 if self.dim >= 2 else 0

    def outgoing_rate(self, state: int) -> float:
        """Total exit rate of ``state``, self-loops included."""
        return sum(t.rate for t in self.transitions if t.source == state)


@dataclass(frozen=True, eq=False)
class StationaryDistribution:
    """Long-run fraction of time spent in each discrete state."""

    pi: np.ndarray


@dataclass(frozen=True, eq=False)
class AgeVectorSet:
    """Per-state expected age vectors ``v_q``, one row per state."""

    v: np.ndarray  # shape (n_states, dim)

    @property
    def monitor_component(self) -> int:
        return 1 if self.v.shape[1] >= 2 else 0


@dataclass(frozen=True, eq=False)
class SystemMatrix:
    """Assembled expected-age linear system, one row per (state, component).

    ``index`` maps a (state, component) pair to its row/column; solving
    ``matrix @ w = rhs`` and reshaping ``w`` row-major recovers the age
    vectors.  The matrix is kept unnormalized: the diagonal carries the total
    exit rate (minus the growth constant for exponential states) so that the
    degenerate one-state model reads ``[total rate] w = [0]``.
    """

    matrix: np.ndarray
    rhs: np.ndarray
    index: dict[tuple[int, int], int]


def _strongly_connected(n_states: int, edges: list[tuple[int, int]]) -> bool:
    fwd: list[list[int]] = [[] for _ in range(n_states)]
    bwd: list[list[int]] = [[] for _ in range(n_states)]
    for s, t in edges:
        fwd[s].append(t)
        bwd[t].append(s)

    def reaches_all(adj: list[list[int]]) -> bool:
        seen = [False] * n_states
        seen[0] = True
        stack = [0]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
        return all(seen)

    return reaches_all(fwd) and reaches_all(bwd)


def build_model(
    state_labels,
    growth,
    transitions,
    dim: int = 2,
) -> ShsModel:
    """Validate and freeze a model.

    Raises EmptyModel, BadDimension, NonpositiveRate, or NotIrreducible when
    the inputs do not describe a well-formed, strongly connected chain.
    """
    labels = tuple(str(s) for s in state_labels)
    if not labels:
        raise EmptyModel("a model needs at least one state")
    if dim < 1:
        raise BadDimension(f"continuous dimension must be >= 1, got {dim}")
    growth = tuple(growth)
    if len(growth) != len(labels):
        raise BadDimension(
            f"{len(labels)} states but {len(growth)} growth specifications"
        )
    n = len(labels)
    trans = tuple(transitions)
    for t in trans:
        if not (0 <= t.source < n and 0 <= t.target < n):
            raise BadDimension(f"transition {t.label} references a missing state")
        if not t.rate > 0:
            raise NonpositiveRate(f"transition {t.label} has rate {t.rate}")
        if t.reset.dim != dim:
            raise BadDimension(
                f"transition {t.label} reset is {t.reset.dim}x{t.reset.dim}, "
                f"model dimension is {dim}"
            )
    edges = [(t.source, t.target) for t in trans if t.source != t.target]
    if not _strongly_connected(n, edges):
        raise NotIrreducible("every state must be reachable from every other")
    return ShsModel(labels, growth, trans, dim)


def prune_unreachable(state_labels, growth, transitions):
    """Drop states not reachable from state 0, reindexing the survivors.

    Concrete model builders use this after removing zero-rate transitions so
    that the irreducibility check applies to the effective chain.  Returns
    ``(labels, growth, transitions)`` with transition labels preserved.
    """
    n = len(state_labels)
    adj: list[list[int]] = [[] for _ in range(n)]
    for t in transitions:
        adj[t.source].append(t.target)
    seen = [False] * n
    seen[0] = True
    stack = [0]
    while stack:
        u = stack.pop()
        for w in adj[u]:
            if not seen[w]:
                seen[w] = True
                stack.append(w)
    keep = [i for i in range(n) if seen[i]]
    remap = {old: new for new, old in enumerate(keep)}
    labels = tuple(state_labels[i] for i in keep)
    grow = tuple(growth[i] for i in keep)
    trans = tuple(
        Transition(t.label, remap[t.source], remap[t.target], t.rate, t.reset)
        for t in transitions
        if seen[t.source] and seen[t.target]
    )
    return labels, grow, trans


# ---------------------------------------------------------------------------
# dense linear algebra: Gaussian elimination with partial pivoting
# ---------------------------------------------------------------------------

SINGULARITY_RTOL = 1e-12


def _lu_factor(a: np.ndarray):
    """LU-factor with partial pivoting; raises Singular on a collapsed pivot."""
    lu = np.array(a, dtype=float)
    n = lu.shape[0]
    if lu.ndim != 2 or lu.shape[1] != n:
        raise BadDimension(f"expected a square matrix, got shape {lu.shape}")
    tol = SINGULARITY_RTOL * float(np.abs(lu).max(initial=0.0))
    perm = np.arange(n)
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if abs(lu[p, k]) <= tol:
            raise Singular(f"pivot {lu[p, k]:g} in column {k} below threshold {tol:g}")
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        if k + 1 < n:
            lu[k + 1 :, k] /= lu[k, k]
            lu[k + 1 :, k + 1 :] -= np.outer(lu[k + 1 :, k], lu[k, k + 1 :])
    return lu, perm


def _lu_solve(lu: np.ndarray, perm: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = lu.shape[0]
    x = np.asarray(b, dtype=float)[perm].copy()
    for k in range(1, n):
        x[k] -= lu[k, :k] @ x[:k]
    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - lu[k, k + 1 :] @ x[k + 1 :]) / lu[k, k]
    return x


def solve_dense(a, b) -> np.ndarray:
    """Solve ``a @ x = b`` by Gaussian elimination with partial pivoting.

    Systems here are tiny (at most 16 unknowns), so no sparse machinery.
    Raises :class:`Singular` when a pivot magnitude falls below
    ``1e-12 * max|a|``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if b.shape != (a.shape[0],):
        raise BadDimension(f"rhs shape {b.shape} does not match matrix {a.shape}")
    lu, perm = _lu_factor(a)
    return _lu_solve(lu, perm, b)


def _solve_refined(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve with one step of iterative refinement."""
    lu, perm = _lu_factor(a)
    x = _lu_solve(lu, perm, b)
    residual = b - a @ x
    return x + _lu_solve(lu, perm, residual)


# ---------------------------------------------------------------------------
# stationary distribution and expected age vectors
# ---------------------------------------------------------------------------


def stationary_distribution(model: ShsModel) -> StationaryDistribution:
    """Solve the global balance equations of the discrete chain.

    Self-loops cancel identically in balance and are excluded.  One balance
    row is replaced by the normalization constraint; the replaced equation is
    implied by the others for an irreducible chain.
    """
    n = model.n_states
    if n == 1:
        return StationaryDistribution(np.array([1.0]))
    m = np.zeros((n, n))
    for t in model.transitions:
        if t.source == t.target:
            continue
        m[t.source, t.source] += t.rate
        m[t.target, t.source] -= t.rate
    m[n - 1, :] = 1.0
    b = np.zeros(n)
    b[n - 1] = 1.0
    try:
        pi = _solve_refined(m, b)
    except Singular as exc:
        raise SingularBalance(f"balance system is singular: {exc}") from exc
    return StationaryDistribution(pi)


def system_matrix(model: ShsModel, pi: StationaryDistribution) -> SystemMatrix:
    """Assemble the expected-age linear system over every (state, component).

    Row for component ``c`` of state ``q``: the total exit rate (self-loops
    included) times ``v_q[c]``, minus the growth constant for exponential
    states, equals the constant-slope source term plus the reset-weighted
    inflow.  Self-loops appear on both sides; where a self-loop reset
    preserves a component the two contributions cancel in the assembled
    coefficients, and where it zeroes a component only the exit side remains.
    Unknowns that must vanish are not special-cased; their zero values emerge
    from the solve.
    """
    n, d = model.n_states, model.dim
    size = n * d
    a = np.zeros((size, size))
    rhs = np.zeros(size)
    index = {(q, c): q * d + c for q in range(n) for c in range(d)}

    for q in range(n):
        g = model.growth[q]
        out = model.outgoing_rate(q)
        for c in range(d):
            row = index[(q, c)]
            a[row, row] += out
            if g.kind == LINEAR:
                a[row, row] -= g.value
            elif g.kind == CONSTANT:
                rhs[row] = g.value * float(pi.pi[q])
    for t in model.transitions:
        reset = t.reset.matrix
        for c in range(d):
            row = index[(t.target, c)]
            for i in range(d):
                w = reset[i, c]
                if w != 0.0:
                    a[row, index[(t.source, i)]] -= t.rate * w
    return SystemMatrix(a, rhs, index)


NEGATIVITY_TOL = -1e-9


def expected_age_vectors(model: ShsModel, pi: StationaryDistribution) -> AgeVectorSet:
    """Solve for the per-state expected age vectors.

    Raises :class:`Unstable` when the assembled system is singular or any
    solved component is negative beyond roundoff; both signal that no finite
    nonnegative steady state exists for these growth constants.
    """
    sm = system_matrix(model, pi)
    scale = float(np.abs(sm.matrix).max(initial=0.0))
    for q in range(model.n_states):
        if model.growth[q].kind != LINEAR:
            continue
        # A growth constant that exactly balances the exit rate leaves the
        # state's equation degenerate; refuse rather than guess.
        for c in range(model.dim):
            row = sm.index[(q, c)]
            if abs(sm.matrix[row, row]) <= SINGULARITY_RTOL * scale:
                raise Unstable(
                    f"growth constant balances the exit rate at state "
                    f"{model.state_labels[q]} component {c + 1}"
                )
    try:
        w = _solve_refined(sm.matrix, sm.rhs)
    except Singular as exc:
        raise Unstable(f"age system is singular: {exc}") from exc
    worst = int(np.argmin(w))
    if w[worst] < NEGATIVITY_TOL:
        q, c = divmod(worst, model.dim)
        raise Unstable(
            f"negative expected age {w[worst]:g} at state "
            f"{model.state_labels[q]} component {c + 1}"
        )
    np.clip(w, 0.0, None, out=w)
    return AgeVectorSet(w.reshape(model.n_states, model.dim))


def average_aoii(ages: AgeVectorSet) -> float:
    """Average monitor-side age: sum of monitor components over all states."""
    return float(ages.v[:, ages.monitor_component].sum())


def solve_average(model: ShsModel) -> float:
    """Convenience: stationary distribution, age solve, then the average."""
    pi = stationary_distribution(model)
    return average_aoii(expected_age_vectors(model, pi))
