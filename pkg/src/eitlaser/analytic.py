"""Closed-form dynamics of the EIT one-atom laser in the strong ground-state coupling regime.

Conventions: hbar = 1, times in seconds (or units of 1/delta in the
dimensionless mode), the atom starts in |1> = (|+> + |->)/sqrt(2) and the
cavity in vacuum.  With

    alpha_pm(t) = -+ r (1 - exp(-+ i delta t))
    phi~(t)     = (Omega12 + r^2 delta) t          (time ordering ignored)
    dphi(t)     = r^2 (delta t - sin delta t)      (time-ordering correction)
    phi(t)      = phi~(t) - dphi(t)                (exact)

the field conditioned on detecting the atom in |1> (|2>) is
N/sqrt(2) (e^{-i phi}|alpha_+> +- e^{i phi}|alpha_->).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import wraps

import mpmath
import numpy as np

from . import fock
from .errors import ConvergenceError, ZeroProbabilityError

TWO_PI = 2.0 * math.pi
STRONG_COUPLING_FACTOR = 5.0
ZERO_PROBABILITY = 1e-14
_PHASE_DPS = 40


class Branch(str, enum.Enum):
    """Detection outcome: atom found in |1> (plus) or in |2> (minus)."""

    PLUS = "plus"
    MINUS = "minus"

    @property
    def sign(self) -> int:
        return 1 if self is Branch.PLUS else -1


class Ordering(str, enum.Enum):
    WITH = "with"
    WITHOUT = "without"


@dataclass(frozen=True)
class SystemParams:
    """Cavity coupling ``g`` and the two classical Rabi half-frequencies (rad/s)."""

    g: float
    omega12: float
    omega23: float

    def __post_init__(self):
        for name in ("g", "omega12", "omega23"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.g <= 0 or self.omega12 <= 0 or self.omega23 < 0:
            raise ValueError(
                f"need g > 0, omega12 > 0, omega23 >= 0; got "
                f"g={self.g}, omega12={self.omega12}, omega23={self.omega23}"
            )

    @classmethod
    def dimensionless(cls, r: float, ratio: float) -> "SystemParams":
        """Parameters with delta = 1, given r = Omega23/g and Omega12/delta."""
        if ratio <= 0:
            raise ValueError(f"Omega12/delta must be positive, got {ratio}")
        g = math.sqrt(2.0 * ratio)
        return cls(g=g, omega12=float(ratio), omega23=r * g)

    @property
    def delta(self) -> float:
        return self.g * self.g / (2.0 * self.omega12)

    @property
    def r(self) -> float:
        return self.omega23 / self.g

    @property
    def t0(self) -> float:
        return TWO_PI / self.delta

    @property
    def ratio(self) -> float:
        return self.omega12 / self.delta

    @property
    def strong_coupling(self) -> bool:
        return self.omega12 >= STRONG_COUPLING_FACTOR * max(self.g, self.omega23)


def _elementwise(func):
    @wraps(func)
    def wrapper(t, *args, **kwargs):
        if np.ndim(t) == 0:
            return func(float(t), *args, **kwargs)
        flat = [func(float(x), *args, **kwargs) for x in np.ravel(t)]
        return np.reshape(np.array(flat), np.shape(t))

    return wrapper


def _mp_shortcuts(params: SystemParams):
    g = mpmath.mpf(params.g)
    om12 = mpmath.mpf(params.omega12)
    delta = g * g / (2 * om12)
    r = mpmath.mpf(params.omega23) / g
    return om12, delta, r


def wrap_phase(x) -> float:
    """Reduce an mpmath or float angle to [0, 2pi) at 40 significant digits."""
    with mpmath.workdps(_PHASE_DPS):
        y = mpmath.fmod(mpmath.mpf(x), 2 * mpmath.pi)
        if y < 0:
            y += 2 * mpmath.pi
        out = float(y)
    return 0.0 if out == TWO_PI else out


def phase_distance(a, b):
    """Signed difference a - b mapped into [-pi, pi)."""
    return (np.asarray(a) - np.asarray(b) + math.pi) % TWO_PI - math.pi


# -- trajectories and phases ------------------------------------------------


def alpha_pm(t, params: SystemParams, sign) -> complex:
    """Coherent amplitude of the |+> (sign plus) or |-> (sign minus) branch."""
    s = Branch(sign).sign
    dt = params.delta * np.asarray(t, dtype=float)
    return -s * params.r * (1.0 - np.exp(-1j * s * dt))


@_elementwise
def phase_no_ordering(t: float, params: SystemParams) -> float:
    if t < 0:
        raise ValueError("t must be non-negative")
    with mpmath.workdps(_PHASE_DPS):
        om12, delta, r = _mp_shortcuts(params)
        return wrap_phase((om12 + r * r * delta) * mpmath.mpf(t))


def _x_minus_sin(x: float) -> float:
    # x - sin x without cancellation for small x
    if abs(x) < 1e-2:
        x2 = x * x
        return x * x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0)))
    return x - math.sin(x)


@_elementwise
def ordering_correction(t: float, params: SystemParams) -> float:
    """Phase dphi(t) >= 0 contributed by the second Magnus term (not reduced mod 2pi)."""
    if t < 0:
        raise ValueError("t must be non-negative")
    return params.r ** 2 * _x_minus_sin(params.delta * t)


@_elementwise
def phase_exact(t: float, params: SystemParams) -> float:
    if t < 0:
        raise ValueError("t must be non-negative")
    with mpmath.workdps(_PHASE_DPS):
        om12, delta, r = _mp_shortcuts(params)
        mt = mpmath.mpf(t)
        return wrap_phase(om12 * mt + r * r * mpmath.sin(delta * mt))


def phase(t, params: SystemParams, ordering) -> float:
    if Ordering(ordering) is Ordering.WITH:
        return phase_exact(t, params)
    return phase_no_ordering(t, params)


# -- cat states -------------------------------------------------------------


def coherent_overlap(alpha: complex, beta: complex) -> complex:
    """<alpha|beta> for untruncated coherent states."""
    return complex(np.exp(-0.5 * abs(alpha) ** 2 - 0.5 * abs(beta) ** 2 + np.conj(alpha) * beta))


def _q_parts(alpha_plus: complex, alpha_minus: complex, phi: float):
    # log q = x + i y with x = -|a+ - a-|^2/2 exactly
    x = -0.5 * abs(alpha_plus - alpha_minus) ** 2
    y = (np.conj(alpha_plus) * alpha_minus).imag + 2.0 * phi
    return x, y


def _branch_probability(x: float, y: float, sign: int) -> float:
    if sign > 0:
        return 0.5 * (1.0 + math.exp(x) * math.cos(y))
    # (1 - e^x cos y)/2 evaluated without cancellation near q = 1
    return 0.5 * (-math.expm1(x) * math.cos(y) + 2.0 * math.sin(0.5 * y) ** 2)


@dataclass(frozen=True)
class CatState:
    """Normalized two-component coherent superposition N/sqrt(2)(e^{-i phi}|a+> +- e^{i phi}|a->)."""

    alpha_plus: complex
    alpha_minus: complex
    phi: float
    branch: Branch
    ordering: Ordering
    norm: float
    prob: float
    t: float = float("nan")

    @classmethod
    def from_amplitudes(
        cls,
        alpha_plus: complex,
        alpha_minus: complex,
        phi: float,
        branch=Branch.PLUS,
        ordering=Ordering.WITH,
        t: float = float("nan"),
    ) -> "CatState":
        branch = Branch(branch)
        x, y = _q_parts(alpha_plus, alpha_minus, phi)
        prob = _branch_probability(x, y, branch.sign)
        if prob < ZERO_PROBABILITY:
            raise ZeroProbabilityError(
                f"detection probability {prob:.3g} for branch '{branch.value}' is zero; "
                "the conditional state does not exist"
            )
        return cls(
            alpha_plus=complex(alpha_plus),
            alpha_minus=complex(alpha_minus),
            phi=float(phi),
            branch=branch,
            ordering=Ordering(ordering),
            norm=1.0 / math.sqrt(2.0 * prob),
            prob=prob,
            t=float(t),
        )

    @property
    def q(self) -> complex:
        x, y = _q_parts(self.alpha_plus, self.alpha_minus, self.phi)
        return complex(math.exp(x) * complex(math.cos(y), math.sin(y)))

    @property
    def weights(self) -> tuple[complex, complex]:
        """Coefficients of |alpha_+> and |alpha_-> in the normalized state."""
        c = self.norm / math.sqrt(2.0)
        e = complex(math.cos(self.phi), math.sin(self.phi))
        return c * e.conjugate(), self.branch.sign * c * e


def overlap_q(t: float, params: SystemParams, ordering=Ordering.WITH) -> complex:
    """q = <alpha_+|alpha_-> exp(2 i phi)."""
    ap = complex(alpha_pm(t, params, Branch.PLUS))
    am = complex(alpha_pm(t, params, Branch.MINUS))
    x, y = _q_parts(ap, am, phase(t, params, ordering))
    return complex(math.exp(x) * complex(math.cos(y), math.sin(y)))


def conditional_state(t: float, params: SystemParams, branch, ordering=Ordering.WITH) -> CatState:
    """Field state after detecting the atom at time ``t`` (initial state |1>|vac>)."""
    if t < 0:
        raise ValueError("t must be non-negative")
    return CatState.from_amplitudes(
        complex(alpha_pm(t, params, Branch.PLUS)),
        complex(alpha_pm(t, params, Branch.MINUS)),
        phase(t, params, ordering),
        branch=branch,
        ordering=ordering,
        t=t,
    )


def branch_amplitudes(t: float, params: SystemParams, ordering=Ordering.WITH, weights=None):
    """Entangled atom-field state in the |+>, |-> basis.

    Returns ``[(c_+, alpha_+), (c_-, alpha_-)]`` meaning
    c_+ |+>|alpha_+> + c_- |->|alpha_->.  ``weights`` are the initial
    amplitudes on |+> and |->; the default (1, 1)/sqrt(2) is the atom in |1>.
    """
    if weights is None:
        weights = (1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0))
    wp, wm = (complex(w) for w in weights)
    ph = phase(t, params, ordering)
    e = complex(math.cos(ph), math.sin(ph))
    return [
        (wp * e.conjugate(), complex(alpha_pm(t, params, Branch.PLUS))),
        (wm * e, complex(alpha_pm(t, params, Branch.MINUS))),
    ]


def cat_to_fock(cat: CatState, dim: int | None = None) -> fock.FockVector:
    """Number-basis representation of ``cat``; raises ConvergenceError if ``dim`` is too small."""
    if dim is None:
        dim = fock.recommended_dim(max(abs(cat.alpha_plus), abs(cat.alpha_minus)))
    if dim < 2:
        raise ConvergenceError(f"dim={dim} cannot resolve a truncation tail")
    k = min(5, dim - 1)
    wp, wm = cat.weights
    vecs = [fock.coherent_fock_vector(a, dim) for a in (cat.alpha_plus, cat.alpha_minus)]
    for v in vecs:
        tail = fock.truncation_tail(v, k) + max(0.0, 1.0 - v.norm() ** 2)
        if tail >= 1e-10:
            raise ConvergenceError(
                f"coherent component truncated at dim={dim} loses {tail:.3g}; "
                f"use dim >= {fock.recommended_dim(max(abs(cat.alpha_plus), abs(cat.alpha_minus)))}"
            )
    psi = fock.FockVector(wp * vecs[0].coeffs + wm * vecs[1].coeffs)
    return psi.normalized()


def total_noise_closed_form(cat: CatState) -> float:
    """Total noise <n> - |<a>|^2 of a two-component cat, in closed form."""
    if cat.prob < ZERO_PROBABILITY:
        raise ZeroProbabilityError("degenerate cat state: detection probability is zero")
    d2 = abs(cat.alpha_plus - cat.alpha_minus) ** 2
    # [2 +- q +- q*] = 4 p
    return d2 * -math.expm1(-d2) / (16.0 * cat.prob ** 2)
