"""Single-mode truncated Fock space: states, operators and overlaps.

States live in the number basis |0>, ..., |dim-1>.  Everything here is
dense numpy; the dimensions used by the package stay below a few hundred.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    ConvergenceError,
    DimensionMismatchError,
    InvalidDimensionError,
    NotNormalizedError,
)

NORM_TOL = 1e-10


def _check_dim(dim) -> int:
    if isinstance(dim, bool) or not isinstance(dim, (int, np.integer)) or dim < 1:
        raise InvalidDimensionError(f"Fock dimension must be a positive integer, got {dim!r}")
    return int(dim)


def recommended_dim(alpha: complex) -> int:
    """Truncation that leaves a Poisson tail below ~1e-12 for amplitude ``alpha``."""
    mod = abs(alpha)
    return math.ceil(mod * mod + 10.0 * mod + 20.0)


@dataclass(frozen=True)
class FockVector:
    """Immutable truncated state vector."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).reshape(-1)
        _check_dim(c.size)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def dim(self) -> int:
        return self.coeffs.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(float(np.vdot(self.coeffs, self.coeffs).real) - 1.0) <= tol

    def normalized(self) -> "FockVector":
        return FockVector(self.coeffs / self.norm())

    def populations(self) -> np.ndarray:
        return np.abs(self.coeffs) ** 2

    def __repr__(self):
        return f"FockVector(dim={self.dim}, norm={self.norm():.12g})"


@dataclass(frozen=True)
class ModeOperator:
    """Immutable dense operator on a single truncated mode."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidDimensionError(f"operator must be square, got shape {m.shape}")
        _check_dim(m.shape[0])
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def dag(self) -> "ModeOperator":
        return ModeOperator(self.entries.conj().T)

    def __matmul__(self, other):
        if isinstance(other, ModeOperator):
            _same_dim(self, other)
            return ModeOperator(self.entries @ other.entries)
        if isinstance(other, FockVector):
            _same_dim(self, other)
            return FockVector(self.entries @ other.coeffs)
        return NotImplemented

    def __repr__(self):
        return f"ModeOperator(dim={self.dim})"


def _same_dim(u, v):
    if u.dim != v.dim:
        raise DimensionMismatchError(f"dimension mismatch: {u.dim} vs {v.dim}")


def require_normalized(state: FockVector, tol: float = NORM_TOL) -> None:
    if not state.is_normalized(tol):
        raise NotNormalizedError(
            f"state norm^2 = {state.norm() ** 2:.15g} deviates from 1 by more than {tol:g}"
        )


# -- states -----------------------------------------------------------------


def coherent_fock_vector(alpha: complex, dim: int) -> FockVector:
    """Truncated coherent state |alpha>.

    The vector is *not* renormalized after truncation; use
    :func:`truncation_tail` to decide whether ``dim`` is large enough.
    """
    dim = _check_dim(dim)
    alpha = complex(alpha)
    c = np.empty(dim, dtype=complex)
    c[0] = math.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, dim):
        c[n] = c[n - 1] * alpha / math.sqrt(n)
    return FockVector(c)


def fock_state(n: int, dim: int) -> FockVector:
    dim = _check_dim(dim)
    if not 0 <= n < dim:
        raise InvalidDimensionError(f"number state |{n}> does not fit in dim={dim}")
    c = np.zeros(dim, dtype=complex)
    c[n] = 1.0
    return FockVector(c)


def vacuum(dim: int) -> FockVector:
    return fock_state(0, dim)


def superpose(weights, states) -> FockVector:
    """Normalized linear combination ``sum_k w_k |s_k>``."""
    states = list(states)
    for s in states[1:]:
        _same_dim(states[0], s)
    c = sum(complex(w) * s.coeffs for w, s in zip(weights, states))
    return FockVector(c).normalized()


def even_coherent(alpha: complex, dim: int) -> FockVector:
    return superpose([1, 1], [coherent_fock_vector(alpha, dim), coherent_fock_vector(-alpha, dim)])


def odd_coherent(alpha: complex, dim: int) -> FockVector:
    return superpose([1, -1], [coherent_fock_vector(alpha, dim), coherent_fock_vector(-alpha, dim)])


def yurke_stoler(alpha: complex, dim: int, sign: int = 1) -> FockVector:
    """(|alpha> + sign*i|-alpha>)/sqrt(2)."""
    return superpose(
        [1, sign * 1j], [coherent_fock_vector(alpha, dim), coherent_fock_vector(-alpha, dim)]
    )


# -- operators --------------------------------------------------------------


def annihilation_matrix(dim: int) -> ModeOperator:
    dim = _check_dim(dim)
    return ModeOperator(np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1))


def creation_matrix(dim: int) -> ModeOperator:
    return annihilation_matrix(dim).dag()


def number_matrix(dim: int) -> ModeOperator:
    dim = _check_dim(dim)
    return ModeOperator(np.diag(np.arange(dim, dtype=float)))


def parity_matrix(dim: int) -> ModeOperator:
    """(-1)^{a^dagger a}."""
    dim = _check_dim(dim)
    return ModeOperator(np.diag((-1.0) ** np.arange(dim)))


def inner_product(u: FockVector, v: FockVector) -> complex:
    """<u|v>, antilinear in the first argument."""
    _same_dim(u, v)
    return complex(np.vdot(u.coeffs, v.coeffs))


def expectation(op: ModeOperator, state: FockVector) -> complex:
    _same_dim(op, state)
    return complex(np.vdot(state.coeffs, op.entries @ state.coeffs))


def parity_expectation(state: FockVector) -> float:
    require_normalized(state)
    signs = (-1.0) ** np.arange(state.dim)
    return float(np.dot(signs, state.populations()))


def truncation_tail(state: FockVector, k: int) -> float:
    """Weight carried by the top ``k`` number states."""
    if not 1 <= k < state.dim:
        raise InvalidDimensionError(f"tail width k={k} must satisfy 1 <= k < dim={state.dim}")
    return float(np.sum(state.populations()[state.dim - k:]))


# -- displacement -----------------------------------------------------------


@lru_cache(maxsize=32)
def _momentum_eigensystem(dim: int):
    # P = i(a^dagger - a) is real symmetric up to a factor i; its eigensystem
    # gives exp(|beta|(a^dagger - a)) for any modulus without calling expm.
    a = annihilation_matrix(dim).entries
    lam, vecs = np.linalg.eigh(1j * (a.conj().T - a))
    lam.setflags(write=False)
    vecs.setflags(write=False)
    return lam, vecs


def displace(state: FockVector, beta: complex, tol: float = 1e-8) -> FockVector:
    """Apply D(beta) = exp(beta a^dagger - beta* a) and return a state of the same dim.

    The exponential is taken in an enlarged space so that the matrix
    elements inside the original truncation are exact to machine precision.
    Weight pushed beyond ``state.dim`` is measured; if it exceeds ``tol`` a
    :class:`ConvergenceError` is raised.
    """
    beta = complex(beta)
    if beta == 0:
        return state
    dim = state.dim
    big = dim + recommended_dim(beta)
    lam, vecs = _momentum_eigensystem(big)
    rot = np.exp(1j * np.angle(beta) * np.arange(big))
    psi = np.zeros(big, dtype=complex)
    psi[:dim] = state.coeffs
    # D = R exp(-i|beta| P) R^dagger with R = exp(i arg(beta) n)
    work = vecs.conj().T @ (rot.conj() * psi)
    work = vecs @ (np.exp(-1j * abs(beta) * lam) * work)
    out = rot * work
    lost = float(np.sum(np.abs(out[dim:]) ** 2))
    if lost > tol:
        raise ConvergenceError(
            f"displacement by |beta|={abs(beta):.4g} leaks {lost:.3g} of the norm "
            f"beyond dim={dim}; use dim >= {dim + recommended_dim(beta)}"
        )
    return FockVector(out[:dim])
