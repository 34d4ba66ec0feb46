"""Nonclassicality indicators for pure single-mode states."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fock
from .fock import FockVector, require_normalized


def _variance(op: fock.ModeOperator, state: FockVector) -> float:
    # <op^dagger op> - |<op>|^2, clipped at zero against round-off
    v = op.entries @ state.coeffs
    value = float(np.vdot(v, v).real) - abs(complex(np.vdot(state.coeffs, v))) ** 2
    return max(value, 0.0)


def mean_photon_number(state: FockVector) -> float:
    require_normalized(state)
    return float(np.dot(np.arange(state.dim), state.populations()))


def total_noise(state: FockVector) -> float:
    """<a^dagger a> - |<a>|^2; zero exactly on coherent states."""
    require_normalized(state)
    return _variance(fock.annihilation_matrix(state.dim), state)


def average_parity(state: FockVector) -> float:
    return fock.parity_expectation(state)


def modified_annihilation_matrix(dim: int) -> fock.ModeOperator:
    """A = exp(i pi a^dagger a) a, whose eigenstates are the Yurke-Stoler states."""
    phases = np.exp(1j * np.pi * np.arange(dim))
    return fock.ModeOperator(np.diag(phases)) @ fock.annihilation_matrix(dim)


def relative_total_noise(state: FockVector) -> float:
    """<A^dagger A> - |<A>|^2 with A the parity-twisted annihilation operator."""
    require_normalized(state)
    return _variance(modified_annihilation_matrix(state.dim), state)


def wigner_point(state: FockVector, alpha: complex) -> float:
    """W(alpha) = 2 <psi| D(alpha) Pi D(-alpha) |psi>, so a coherent state peaks at 2."""
    require_normalized(state)
    shifted = fock.displace(state, -complex(alpha), tol=1e-8)
    signs = (-1.0) ** np.arange(state.dim)
    return 2.0 * float(np.dot(signs, shifted.populations()))


@dataclass(frozen=True)
class WignerGrid:
    re_range: tuple[float, float]
    im_range: tuple[float, float]
    nx: int
    ny: int
    values: np.ndarray  # values[i, j] = W(re[i] + 1j * im[j])

    @property
    def re(self) -> np.ndarray:
        return np.linspace(*self.re_range, self.nx)

    @property
    def im(self) -> np.ndarray:
        return np.linspace(*self.im_range, self.ny)

    def normalization(self) -> float:
        """(1/pi) * integral of W over the grid (trapezoid rule); 1 for contained states."""
        inner = np.trapezoid(self.values, self.im, axis=1)
        return float(np.trapezoid(inner, self.re) / math.pi)


def wigner_grid(state: FockVector, re_range, im_range, nx: int, ny: int) -> WignerGrid:
    if nx < 1 or ny < 1:
        raise ValueError("grid sizes must be positive")
    re = np.linspace(*re_range, nx)
    im = np.linspace(*im_range, ny)
    values = np.empty((nx, ny))
    for i, x in enumerate(re):
        for j, y in enumerate(im):
            values[i, j] = wigner_point(state, complex(x, y))
    values.setflags(write=False)
    return WignerGrid(tuple(map(float, re_range)), tuple(map(float, im_range)), nx, ny, values)
