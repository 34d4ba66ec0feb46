"""Brute-force Schroedinger propagation in atom x truncated-Fock space.

This is the independent check on the closed-form solution.  Atomic states
are ordered (|+>, |->, |3>) with |+-> = (|1> +- |2>)/sqrt(2); the two-level
basis keeps (|+>, |->) only.  Composite vectors use ``np.kron(atom, field)``
ordering, i.e. index = atom * dim + n.

Time-dependent Hamiltonians are integrated with one exactly unitary
exponential per step: the midpoint rule (second order) or the two-point
Gauss Magnus step (fourth order).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import mpmath
import numpy as np

from . import analytic, fock
from .analytic import Ordering, SystemParams
from .errors import ConvergenceError, DimensionMismatchError, InvalidDimensionError

UNITARITY_TOL = 1e-9
TAIL_TOL = 1e-8
STEPS_PER_FAST_PERIOD = 40
STEPS_PER_T0 = 200
_SQRT1_2 = 1.0 / math.sqrt(2.0)


class AtomBasis(str, enum.Enum):
    THREE_LEVEL = "three_level"
    TWO_LEVEL = "two_level"

    @property
    def size(self) -> int:
        return 3 if self is AtomBasis.THREE_LEVEL else 2


PLUS, MINUS, EXCITED = 0, 1, 2


@dataclass(frozen=True)
class AtomFieldState:
    """Pure atom-field state stored as an (atomic level, Fock level) amplitude table."""

    basis: AtomBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        basis = AtomBasis(self.basis)
        amp = np.array(self.amplitudes, dtype=complex)
        if amp.ndim != 2 or amp.shape[0] != basis.size or amp.shape[1] < 1:
            raise DimensionMismatchError(
                f"{basis.value} state needs shape ({basis.size}, dim), got {amp.shape}"
            )
        amp.setflags(write=False)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def from_vector(cls, basis, vector: np.ndarray) -> "AtomFieldState":
        basis = AtomBasis(basis)
        return cls(basis, np.asarray(vector).reshape(basis.size, -1))

    @classmethod
    def product(cls, basis, atom_weights, field_state: fock.FockVector) -> "AtomFieldState":
        basis = AtomBasis(basis)
        w = np.asarray(atom_weights, dtype=complex)
        return cls(basis, np.outer(w, field_state.coeffs))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[1]

    @property
    def vector(self) -> np.ndarray:
        return self.amplitudes.reshape(-1)

    @property
    def branches(self) -> tuple[fock.FockVector, ...]:
        return tuple(fock.FockVector(row) for row in self.amplitudes)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def atomic_populations(self) -> np.ndarray:
        return np.sum(np.abs(self.amplitudes) ** 2, axis=1)

    def excited_population(self) -> float:
        if self.basis is AtomBasis.TWO_LEVEL:
            return 0.0
        return float(np.sum(np.abs(self.amplitudes[EXCITED]) ** 2))

    def fock_tail(self, k: int = 2) -> float:
        """Weight in the top ``k`` Fock levels, summed over atomic states."""
        return float(np.sum(np.abs(self.amplitudes[:, -k:]) ** 2))

    def to_three_level(self) -> "AtomFieldState":
        if self.basis is AtomBasis.THREE_LEVEL:
            return self
        return AtomFieldState(
            AtomBasis.THREE_LEVEL, np.vstack([self.amplitudes, np.zeros((1, self.dim))])
        )

    def project_ground(self, level: int) -> fock.FockVector:
        """Unnormalized field state <level|Psi> for bare ground level 1 or 2."""
        s = {1: 1.0, 2: -1.0}[level]
        return fock.FockVector(_SQRT1_2 * (self.amplitudes[PLUS] + s * self.amplitudes[MINUS]))


def initial_state(dim: int, basis=AtomBasis.TWO_LEVEL, level: str = "1") -> AtomFieldState:
    """Atom in |1>, |+> or |-> with the cavity in vacuum."""
    basis = AtomBasis(basis)
    w = {"1": [_SQRT1_2, _SQRT1_2], "+": [1.0, 0.0], "-": [0.0, 1.0]}[level]
    w = w + [0.0] * (basis.size - 2)
    return AtomFieldState.product(basis, w, fock.vacuum(dim))


def fidelity(u: AtomFieldState, v: AtomFieldState) -> float:
    """|<u|v>|^2."""
    if u.basis is not v.basis or u.dim != v.dim:
        raise DimensionMismatchError(
            f"cannot compare {u.basis.value}/dim={u.dim} with {v.basis.value}/dim={v.dim}"
        )
    return abs(complex(np.vdot(u.vector, v.vector))) ** 2


# -- operators --------------------------------------------------------------


def _sigma(i: int, j: int, size: int) -> np.ndarray:
    s = np.zeros((size, size))
    s[i, j] = 1.0
    return s


def _field_ops(dim: int):
    a = fock.annihilation_matrix(dim).entries
    return a, a.conj().T, np.eye(dim), np.diag(np.arange(dim, dtype=float))


def hamiltonian_I(params: SystemParams, dim: int) -> np.ndarray:
    """First-interaction-picture Hamiltonian with classical drives (three-level)."""
    a, ad, one, _ = _field_ops(dim)
    sig = lambda i, j: _sigma(i, j, 3)  # noqa: E731
    h1 = params.omega12 * np.kron(sig(PLUS, PLUS) - sig(MINUS, MINUS), one)
    v = params.g * _SQRT1_2 * np.kron(sig(EXCITED, PLUS) + sig(EXCITED, MINUS), a)
    v = v + params.omega23 * _SQRT1_2 * np.kron(sig(EXCITED, PLUS) - sig(EXCITED, MINUS), one)
    return h1 + v + v.conj().T


def h_operator(params: SystemParams, dim: int) -> np.ndarray:
    """Positive-frequency part h of H_J(t) = h e^{-i Omega12 t} + h^dagger e^{i Omega12 t}."""
    a, ad, one, _ = _field_ops(dim)
    sig = lambda i, j: _sigma(i, j, 3)  # noqa: E731
    return _SQRT1_2 * (
        np.kron(sig(EXCITED, PLUS), params.g * a + params.omega23 * one)
        + np.kron(sig(MINUS, EXCITED), params.g * ad - params.omega23 * one)
    )


def hamiltonian_J(t: float, params: SystemParams, dim: int) -> np.ndarray:
    h = h_operator(params, dim)
    e = np.exp(-1j * params.omega12 * t)
    return h * e + h.conj().T * np.conj(e)


def effective_hamiltonian(params: SystemParams, dim: int) -> np.ndarray:
    """[h^dagger, h] / Omega12 on the three-level space (includes the |3> term)."""
    h = h_operator(params, dim)
    hd = h.conj().T
    return (hd @ h - h @ hd) / params.omega12


def effective_hamiltonian_parts(params: SystemParams, dim: int):
    """(H2, V2, V2') of the effective Hamiltonian, three-level space."""
    a, ad, one, num = _field_ops(dim)
    d, r = params.delta, params.r
    sig = lambda i, j: _sigma(i, j, 3)  # noqa: E731
    z = sig(PLUS, PLUS) - sig(MINUS, MINUS)
    h2 = np.kron(z, d * num + r * r * d * one)
    v2 = r * d * np.kron(sig(PLUS, PLUS) + sig(MINUS, MINUS), a + ad)
    v2p = -2.0 * r * d * np.kron(sig(EXCITED, EXCITED), a + ad)
    return h2, v2, v2p


def hamiltonian_K(t: float, params: SystemParams, dim: int) -> np.ndarray:
    """Third-interaction-picture Hamiltonian on the two-level ground space."""
    a, ad, _, _ = _field_ops(dim)
    rd = params.r * params.delta
    e = np.exp(-1j * params.delta * t)
    hp = rd * (a * e + ad * np.conj(e))
    hm = rd * (a * np.conj(e) + ad * e)
    return np.kron(_sigma(PLUS, PLUS, 2), hp) + np.kron(_sigma(MINUS, MINUS, 2), hm)


def nested_commutator_norm(
    t1: float, t2: float, t3: float, params: SystemParams, dim: int, interior: bool = True
) -> float:
    """Spectral norm of [H_K(t1), [H_K(t2), H_K(t3)]].

    With ``interior`` the top two Fock rows/columns of each atomic block are
    dropped; truncation breaks [a, a^dagger] = 1 only there.
    """
    if dim < 8:
        raise InvalidDimensionError("nested_commutator_norm needs dim >= 8")
    h1, h2, h3 = (hamiltonian_K(t, params, dim) for t in (t1, t2, t3))
    inner = h2 @ h3 - h3 @ h2
    c = h1 @ inner - inner @ h1
    if interior:
        keep = np.concatenate([np.arange(dim - 2), dim + np.arange(dim - 2)])
        c = c[np.ix_(keep, keep)]
    return float(np.linalg.norm(c, 2))


# -- frames -----------------------------------------------------------------


def _mp_phase(x) -> complex:
    ph = analytic.wrap_phase(x)
    return complex(math.cos(ph), math.sin(ph))


def apply_U1(state: AtomFieldState, t: float, params: SystemParams, inverse: bool = False):
    """exp(-i Omega12 t (sigma_++ - sigma_--)), or its inverse."""
    with mpmath.workdps(40):
        e = _mp_phase(-mpmath.mpf(params.omega12) * mpmath.mpf(t))
    if inverse:
        e = e.conjugate()
    factors = np.array([e, e.conjugate(), 1.0][: state.basis.size])
    return AtomFieldState(state.basis, factors[:, None] * state.amplitudes)


def apply_U2(state: AtomFieldState, t: float, params: SystemParams, inverse: bool = False):
    """exp(-i H2 t) with H2 = (delta n + r^2 delta)(sigma_++ - sigma_--), or its inverse."""
    n = np.arange(state.dim)
    ang = -(params.delta * t) * n
    with mpmath.workdps(40):
        g = mpmath.mpf(params.g)
        d = g * g / (2 * mpmath.mpf(params.omega12))
        r = mpmath.mpf(params.omega23) / g
        e0 = _mp_phase(-r * r * d * mpmath.mpf(t))
    plus = e0 * np.exp(1j * ang)
    if inverse:
        plus = plus.conj()
    rows = [plus * state.amplitudes[PLUS], plus.conj() * state.amplitudes[MINUS]]
    if state.basis is AtomBasis.THREE_LEVEL:
        rows.append(state.amplitudes[EXCITED])
    return AtomFieldState(state.basis, np.array(rows))


def magnus_UK(
    t: float, params: SystemParams, state: AtomFieldState, ordering=Ordering.WITH
) -> AtomFieldState:
    """Apply exp(Xi1 + Xi2), the exact third-picture propagator.

    Per atomic branch this is a displacement times a scalar phase.  With
    ``ordering='without'`` the second Magnus term is dropped, giving exp(Xi1).
    """
    if state.basis is not AtomBasis.TWO_LEVEL:
        raise DimensionMismatchError("magnus_UK acts on the two-level ground space")
    r, dt = params.r, params.delta * t
    beta_plus = r * (1.0 - np.exp(1j * dt))
    beta_minus = -r * (1.0 - np.exp(-1j * dt))
    dphi = analytic.ordering_correction(t, params) if Ordering(ordering) is Ordering.WITH else 0.0
    e = complex(math.cos(dphi), math.sin(dphi))
    plus, minus = state.branches
    rows = [
        e * fock.displace(plus, beta_plus, tol=TAIL_TOL).coeffs,
        e.conjugate() * fock.displace(minus, beta_minus, tol=TAIL_TOL).coeffs,
    ]
    return AtomFieldState(AtomBasis.TWO_LEVEL, np.array(rows))


def analytic_state(
    t: float,
    params: SystemParams,
    dim: int,
    ordering=Ordering.WITH,
    basis=AtomBasis.TWO_LEVEL,
    frame: str = "I",
    weights=None,
) -> AtomFieldState:
    """Closed-form atom-field state |Psi(t)>, expressed in frame I, J or K."""
    rows = []
    for c, alpha in analytic.branch_amplitudes(t, params, ordering, weights):
        v = fock.coherent_fock_vector(alpha, dim)
        lost = 1.0 - v.norm() ** 2
        if lost > 1e-10:
            raise ConvergenceError(
                f"coherent amplitude {abs(alpha):.3g} needs dim >= {fock.recommended_dim(alpha)}"
            )
        rows.append(c * v.coeffs)
    state = AtomFieldState(AtomBasis.TWO_LEVEL, np.array(rows))
    if AtomBasis(basis) is AtomBasis.THREE_LEVEL:
        state = state.to_three_level()
    if frame in ("J", "K"):
        state = apply_U1(state, t, params, inverse=True)
    if frame == "K":
        state = apply_U2(state, t, params, inverse=True)
    if frame not in ("I", "J", "K"):
        raise ValueError(f"unknown frame {frame!r}")
    return state


def branch_relative_phase(state: AtomFieldState, alpha_plus: complex, alpha_minus: complex) -> float:
    """phi in [0, pi) for a state ~ e^{-i phi}|+>|alpha_+> + e^{i phi}|->|alpha_->.

    The branch amplitudes are read off by projecting onto the coherent
    states, so only phi mod pi is defined.
    """
    zp = np.vdot(fock.coherent_fock_vector(alpha_plus, state.dim).coeffs, state.amplitudes[PLUS])
    zm = np.vdot(fock.coherent_fock_vector(alpha_minus, state.dim).coeffs, state.amplitudes[MINUS])
    if min(abs(zp), abs(zm)) < 1e-6:
        raise ValueError("state has no weight on one of the coherent branches")
    return float((-np.angle(zp / zm) / 2.0) % math.pi)


# -- stepping ---------------------------------------------------------------


@dataclass(frozen=True)
class ObservableRecord:
    t: float
    excited_population: float
    mean_photons: tuple[float, ...]
    fidelity: Optional[float] = None


@dataclass(frozen=True)
class PropagationResult:
    final_state: AtomFieldState
    times: tuple[float, ...]
    observables: tuple[ObservableRecord, ...]
    step_count: int
    max_norm_drift: float
    max_excited_population: float = 0.0
    method: str = "midpoint"


def _herm_exp(k: np.ndarray) -> np.ndarray:
    """exp(-i K) for Hermitian K via eigendecomposition (unitary to round-off)."""
    k = 0.5 * (k + k.conj().T)
    lam, vecs = np.linalg.eigh(k)
    return (vecs * np.exp(-1j * lam)) @ vecs.conj().T


_GAUSS = (0.5 - math.sqrt(3.0) / 6.0, 0.5 + math.sqrt(3.0) / 6.0)


def _step_unitary(ham: Callable[[float], np.ndarray], t: float, dt: float, method: str):
    if method == "midpoint":
        return _herm_exp(ham(t + 0.5 * dt) * dt)
    if method == "magnus4":
        h1 = ham(t + _GAUSS[0] * dt)
        h2 = ham(t + _GAUSS[1] * dt)
        comm = h2 @ h1 - h1 @ h2
        return _herm_exp(0.5 * dt * (h1 + h2) - 1j * (math.sqrt(3.0) / 12.0) * dt * dt * comm)
    raise ValueError(f"unknown integrator {method!r}; use 'midpoint' or 'magnus4'")


def _record(state: AtomFieldState, t: float, reference) -> ObservableRecord:
    n = np.arange(state.dim)
    pops = np.abs(state.amplitudes) ** 2
    fid = fidelity(reference(t), state) if reference is not None else None
    return ObservableRecord(
        t=t,
        excited_population=state.excited_population(),
        mean_photons=tuple(float(x) for x in pops @ n),
        fidelity=fid,
    )


def _stepper(ham, t_start: float, dt: float, method: str, period: Optional[float]):
    """Return k -> unitary of step k; steps repeat when dt divides ``period``."""
    cycle = None
    if period is not None and dt > 0 and t_start == 0:
        m = period / dt
        if round(m) >= 1 and abs(m - round(m)) < 1e-9 * m:
            cycle = int(round(m))
    cache: dict[int, np.ndarray] = {}

    def step(k: int) -> np.ndarray:
        key = k % cycle if cycle else None
        if key is not None and key in cache:
            return cache[key]
        u = _step_unitary(ham, t_start + k * dt, dt, method)
        if key is not None:
            cache[key] = u
        return u

    return step


def _run(
    step: Callable[[int], np.ndarray],
    initial: AtomFieldState,
    t: float,
    steps: int,
    method: str,
    samples: int,
    reference,
    tail_tol: float,
    t_start: float = 0.0,
) -> PropagationResult:
    psi = initial.vector.copy()
    norm0 = float(np.vdot(psi, psi).real)
    dt = t / steps if steps else 0.0
    sample_at = set(np.linspace(0, steps, max(samples, 2)).round().astype(int).tolist())
    records = [_record(initial, t_start, reference)]
    drift = 0.0
    max_exc = initial.excited_population()
    for k in range(steps):
        psi = step(k) @ psi
        drift = max(drift, abs(float(np.vdot(psi, psi).real) - norm0))
        state_k = AtomFieldState.from_vector(initial.basis, psi)
        max_exc = max(max_exc, state_k.excited_population())
        if k + 1 in sample_at:
            records.append(_record(state_k, t_start + (k + 1) * dt, reference))
    final = AtomFieldState.from_vector(initial.basis, psi)
    if drift > UNITARITY_TOL:
        raise ConvergenceError(f"norm drift {drift:.3g} exceeds {UNITARITY_TOL:g}")
    tail = final.fock_tail(2)
    if tail > tail_tol:
        raise ConvergenceError(
            f"Fock truncation dim={initial.dim} too small: top two levels hold {tail:.3g}; "
            "increase dim"
        )
    return PropagationResult(
        final_state=final,
        times=tuple(rec.t for rec in records),
        observables=tuple(records),
        step_count=steps,
        max_norm_drift=drift,
        max_excited_population=max_exc,
        method=method,
    )


def _check_inputs(state: AtomFieldState, basis: AtomBasis, dim: int, t: float, steps: int):
    if state.basis is not basis:
        raise DimensionMismatchError(f"expected a {basis.value} state, got {state.basis.value}")
    if state.dim != dim:
        raise DimensionMismatchError(f"state dim {state.dim} != requested dim {dim}")
    if t < 0:
        raise ValueError("t must be non-negative")
    if steps < 0 or (t > 0 and steps < 1):
        raise ValueError(f"need at least one step for t > 0, got steps={steps}")


def default_steps_J(t: float, params: SystemParams) -> int:
    """40 steps per fast period 2 pi / Omega12."""
    if t == 0:
        return 0
    return max(1, math.ceil(STEPS_PER_FAST_PERIOD * params.omega12 * t / (2 * math.pi) - 1e-9))


def default_steps_K(t: float, params: SystemParams) -> int:
    """200 steps per trajectory period t0."""
    if t == 0:
        return 0
    return max(1, math.ceil(STEPS_PER_T0 * t / params.t0 - 1e-9))


def propagate_HI(
    initial: AtomFieldState,
    t: float,
    params: SystemParams,
    dim: int,
    steps: Optional[int] = None,
    samples: int = 101,
    reference=None,
    tail_tol: float = TAIL_TOL,
) -> PropagationResult:
    """Evolve under the time-independent H_I (three-level basis).

    The propagator of each of the ``steps`` equal sub-intervals comes from
    one diagonalization, so stepping only sets the sampling density of the
    recorded observables and of the |3> population maximum.
    """
    h = hamiltonian_I(params, dim)
    lam, vecs = np.linalg.eigh(h)
    if steps is None:
        scale = float(np.max(np.abs(lam)))
        steps = max(default_steps_J(t, params), math.ceil(scale * t / 0.05 - 1e-9)) if t > 0 else 0
    _check_inputs(initial, AtomBasis.THREE_LEVEL, dim, t, steps)
    dt = t / steps if steps else 0.0
    u = (vecs * np.exp(-1j * lam * dt)) @ vecs.conj().T
    return _run(lambda k: u, initial, t, steps, "exact", samples, reference, tail_tol)


def propagate_HJ(
    initial: AtomFieldState,
    t: float,
    params: SystemParams,
    dim: int,
    steps: Optional[int] = None,
    method: str = "midpoint",
    samples: int = 101,
    reference=None,
    tail_tol: float = TAIL_TOL,
    t_start: float = 0.0,
) -> PropagationResult:
    """Time-ordered evolution under H_J over [t_start, t_start + t] (three-level basis).

    ``steps`` is the total number of steps; the default resolves the fast
    period 2 pi / Omega12 with 40 steps.
    """
    if steps is None:
        steps = default_steps_J(t, params)
    _check_inputs(initial, AtomBasis.THREE_LEVEL, dim, t, steps)
    dt = t / steps if steps else 0.0
    step = _stepper(
        lambda s: hamiltonian_J(s, params, dim), t_start, dt, method, 2 * math.pi / params.omega12
    )
    return _run(step, initial, t, steps, method, samples, reference, tail_tol, t_start)


def propagate_HK(
    initial: AtomFieldState,
    t: float,
    params: SystemParams,
    dim: int,
    steps: Optional[int] = None,
    method: str = "midpoint",
    samples: int = 101,
    reference=None,
    tail_tol: float = TAIL_TOL,
    t_start: float = 0.0,
) -> PropagationResult:
    """Time-ordered evolution under H_K over [t_start, t_start + t] on the ground-state space.

    V2' is absent: it only acts on |3>, which the effective dynamics never
    populates from a ground-state start.  Default: 200 steps per t0.
    """
    if steps is None:
        steps = default_steps_K(t, params)
    _check_inputs(initial, AtomBasis.TWO_LEVEL, dim, t, steps)
    dt = t / steps if steps else 0.0
    step = _stepper(lambda s: hamiltonian_K(s, params, dim), t_start, dt, method, params.t0)
    return _run(step, initial, t, steps, method, samples, reference, tail_tol, t_start)


def converge_steps(
    run: Callable[[int], PropagationResult],
    steps: int,
    tol: float = 1e-8,
    max_doublings: int = 8,
) -> PropagationResult:
    """Double ``steps`` until successive final states agree to infidelity ``tol``."""
    prev = run(steps)
    for _ in range(max_doublings):
        steps *= 2
        cur = run(steps)
        if 1.0 - fidelity(prev.final_state, cur.final_state) <= tol:
            return cur
        prev = cur
    raise ConvergenceError(f"no step convergence to {tol:g} after {steps} steps")
