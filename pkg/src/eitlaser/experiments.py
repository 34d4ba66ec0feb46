"""Datasets, figure presets and feature extraction on top of the closed-form model."""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, minimize_scalar

from . import analytic, fock, measures, propagator
from .analytic import Branch, Ordering, SystemParams
from .config import ScenarioConfig
from .errors import ZeroProbabilityError

log = logging.getLogger(__name__)

SIG_DIGITS = 12


def warn_regime(params: SystemParams) -> None:
    if not params.strong_coupling:
        log.warning(
            "Omega12=%.4g is below %g x max(g, Omega23)=%.4g: outside the strong "
            "ground-state coupling regime",
            params.omega12,
            analytic.STRONG_COUPLING_FACTOR,
            max(params.g, params.omega23),
        )


# -- rows -------------------------------------------------------------------


@dataclass
class ResultRow:
    t_over_t0: float
    branch: str
    ordering: str
    alpha_plus_re: float
    alpha_plus_im: float
    alpha_minus_re: float
    alpha_minus_im: float
    phi_mod_2pi: float
    prob: float
    T: Optional[float] = None
    P: Optional[float] = None
    T_A: Optional[float] = None
    n_mean: Optional[float] = None
    q_re: Optional[float] = None
    q_im: Optional[float] = None
    W0: Optional[float] = None
    oracle_fidelity: Optional[float] = None


COLUMN_LEGEND = {
    "t_over_t0": "interaction time in units of t0 = 2 pi / delta",
    "branch": "detected ground level: plus = |1>, minus = |2>",
    "ordering": "with = exact solution, without = time ordering neglected",
    "alpha_plus_re": "Re alpha_+",
    "alpha_plus_im": "Im alpha_+",
    "alpha_minus_re": "Re alpha_-",
    "alpha_minus_im": "Im alpha_-",
    "phi_mod_2pi": "relative phase phi (or phi~ without ordering) reduced to [0, 2 pi)",
    "prob": "probability of detecting the atom in the branch's ground level",
    "T": "total noise <n> - |<a>|^2 of the conditional field state",
    "P": "average parity <(-1)^n>",
    "T_A": "relative total noise with A = exp(i pi n) a",
    "n_mean": "mean photon number",
    "q_re": "Re q, q = <alpha_+|alpha_-> exp(2 i phi)",
    "q_im": "Im q",
    "W0": "Wigner function at the origin (coherent-state peak = 2)",
    "oracle_fidelity": "fidelity of the closed-form state with brute-force H_K propagation",
    "separation": "|alpha_+ - alpha_-|",
    "cat_formed": "1 when the separation exceeds four Wigner standard deviations (2)",
}

_MEASURE_COLUMNS = {
    "T": ("T",),
    "P": ("P",),
    "T_A": ("T_A",),
    "n": ("n_mean",),
    "q": ("q_re", "q_im"),
    "wigner": ("W0",),
}
_BASE_COLUMNS = (
    "t_over_t0", "branch", "ordering", "alpha_plus_re", "alpha_plus_im",
    "alpha_minus_re", "alpha_minus_im", "phi_mod_2pi", "prob",
)


def columns_for(cfg: ScenarioConfig) -> list[str]:
    cols = list(_BASE_COLUMNS)
    for m in ("T", "P", "T_A", "n", "q", "wigner"):
        if m in cfg.measures:
            cols.extend(_MEASURE_COLUMNS[m])
    if cfg.oracle:
        cols.append("oracle_fidelity")
    return cols


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        if not math.isfinite(v):
            raise ValueError(f"non-finite value {v!r} in output row")
        return format(float(v) + 0.0, f".{SIG_DIGITS}g")  # + 0.0 folds -0 into 0
    return str(v)


def csv_text(rows: Iterable, columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        d = row if isinstance(row, dict) else asdict(row)
        w.writerow([_fmt(d[c]) for c in columns])
    return buf.getvalue()


def write_csv(rows: Iterable, columns: list[str], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(rows, columns))
    return path


def write_legend(columns: list[str], path, header: str = "") -> Path:
    path = Path(path)
    lines = [header] if header else []
    lines += [f"{c}: {COLUMN_LEGEND.get(c, '')}" for c in columns]
    path.write_text("\n".join(lines) + "\n")
    return path


def _conditional_field(state: propagator.AtomFieldState, branch: Branch) -> fock.FockVector:
    level = 1 if branch is Branch.PLUS else 2
    return state.project_ground(level).normalized()


def simulate(cfg: ScenarioConfig) -> list[ResultRow]:
    """One row per (t, branch, ordering); outcomes of zero probability are skipped."""
    params = cfg.params()
    warn_regime(params)
    taus = np.linspace(cfg.t_start, cfg.t_end, cfg.points)
    dim = cfg.dim or fock.recommended_dim(2.0 * params.r)
    oracle_states = _oracle_trajectory(params, taus, dim, cfg.oracle_steps) if cfg.oracle else None

    rows = []
    for i, tau in enumerate(taus):
        t = float(tau) * params.t0
        for b in cfg.branches:
            for o in cfg.orderings:
                try:
                    cat = analytic.conditional_state(t, params, b, o)
                except ZeroProbabilityError:
                    log.debug("skipping t/t0=%g branch=%s: zero probability", tau, b)
                    continue
                rows.append(_row(float(tau), cat, cfg, dim, oracle_states[i] if cfg.oracle else None))
    return rows


def _row(tau: float, cat: analytic.CatState, cfg: ScenarioConfig, dim: int, oracle_state) -> ResultRow:
    row = ResultRow(
        t_over_t0=tau,
        branch=cat.branch.value,
        ordering=cat.ordering.value,
        alpha_plus_re=cat.alpha_plus.real,
        alpha_plus_im=cat.alpha_plus.imag,
        alpha_minus_re=cat.alpha_minus.real,
        alpha_minus_im=cat.alpha_minus.imag,
        phi_mod_2pi=cat.phi % analytic.TWO_PI,
        prob=cat.prob,
    )
    ms = cfg.measures
    psi = analytic.cat_to_fock(cat, dim) if {"P", "T_A", "n", "wigner"} & set(ms) or cfg.oracle else None
    if "T" in ms:
        row.T = analytic.total_noise_closed_form(cat)
    if "P" in ms:
        row.P = measures.average_parity(psi)
    if "T_A" in ms:
        row.T_A = measures.relative_total_noise(psi)
    if "n" in ms:
        row.n_mean = measures.mean_photon_number(psi)
    if "q" in ms:
        q = cat.q
        row.q_re, row.q_im = q.real, q.imag
    if "wigner" in ms:
        row.W0 = measures.wigner_point(psi, 0.0)
    if oracle_state is not None:
        num = _conditional_field(oracle_state, cat.branch)
        row.oracle_fidelity = abs(fock.inner_product(psi, num)) ** 2
    return row


def _oracle_trajectory(params: SystemParams, taus, dim: int, steps_per_t0: Optional[int]):
    """Brute-force first-picture states at every grid time (H_K stepping, then U2, U1)."""
    steps_per_t0 = steps_per_t0 or propagator.STEPS_PER_T0
    state = propagator.initial_state(dim)
    t_prev = 0.0
    out = []
    for tau in taus:
        t = float(tau) * params.t0
        if t > t_prev:
            n = max(1, math.ceil(steps_per_t0 * (t - t_prev) / params.t0 - 1e-9))
            state = propagator.propagate_HK(
                state, t - t_prev, params, dim, steps=n, samples=2, t_start=t_prev
            ).final_state
            t_prev = t
        lab = propagator.apply_U1(propagator.apply_U2(state, t, params), t, params)
        out.append(lab)
    return out


# -- extremum / zero finding ------------------------------------------------


@dataclass(frozen=True)
class Extremum:
    t: float
    value: float
    kind: str  # "max" or "min"


def local_extrema(f: Callable[[float], float], t_lo: float, t_hi: float, n: int, kind: str):
    """Grid scan plus bounded refinement of the interior local extrema of ``f``."""
    s = 1.0 if kind == "max" else -1.0
    ts = np.linspace(t_lo, t_hi, n)
    v = s * np.array([f(t) for t in ts])
    out = []
    for i in range(1, n - 1):
        if v[i] > v[i - 1] and v[i] >= v[i + 1]:
            res = minimize_scalar(
                lambda x: -s * f(x), bounds=(ts[i - 1], ts[i + 1]), method="bounded",
                options={"xatol": 1e-13 * max(1.0, abs(t_hi))},
            )
            out.append(Extremum(float(res.x), float(s * -res.fun), kind))
    return out


def _family(ph: float, base: float) -> int:
    """0 or 1: which of the two sub-lattices base + k pi/2 the phase is closest to (mod pi)."""
    k = round(((ph - base) % math.pi) / (math.pi / 2)) % 2
    return int(k)


def phase_offset_at(
    with_pts: list[float],
    without_pts: list[float],
    phase_with: Callable[[float], float],
    phase_without: Callable[[float], float],
    base: float,
    t_ref: float,
):
    """Phase lag of the with-ordering features behind the without-ordering ones at ``t_ref``.

    Features (extrema or zeros) of each curve fall on two families spaced
    by pi in phase; each family of the without-ordering curve is used as a
    phase ruler (feature j <-> j pi) and read at the with-ordering feature
    times.  The per-feature offsets are interpolated linearly to ``t_ref``.
    Returns (offset at t_ref, [(t, offset), ...]).
    """
    offsets = []
    for fam in (0, 1):
        ruler_t = np.array(sorted(t for t in without_pts if _family(phase_without(t), base) == fam))
        if ruler_t.size < 3:
            continue
        spline = CubicSpline(ruler_t, np.arange(ruler_t.size) * math.pi)
        for t in with_pts:
            if _family(phase_with(t), base) != fam or not ruler_t[0] <= t <= ruler_t[-1]:
                continue
            j = int(np.searchsorted(ruler_t, t, side="right")) - 1
            offsets.append((t, float(spline(t)) - j * math.pi))
    offsets.sort()
    ts = np.array([o[0] for o in offsets])
    vs = np.array([o[1] for o in offsets])
    k = int(np.searchsorted(ts, t_ref))
    if k == 0 or k == ts.size:
        raise ValueError("features do not bracket the reference time")
    return float(np.interp(t_ref, ts[k - 1:k + 1], vs[k - 1:k + 1])), offsets


def _plus_cat(t: float, params: SystemParams, ordering, dim: int) -> fock.FockVector:
    return analytic.cat_to_fock(analytic.conditional_state(t, params, Branch.PLUS, ordering), dim)


def parity_curve(params: SystemParams, ordering, dim: Optional[int] = None):
    dim = dim or fock.recommended_dim(2.0 * params.r)
    return lambda t: measures.average_parity(_plus_cat(t, params, ordering, dim))


def relative_noise_curve(params: SystemParams, ordering, dim: Optional[int] = None):
    dim = dim or fock.recommended_dim(2.0 * params.r)
    return lambda t: measures.relative_total_noise(_plus_cat(t, params, ordering, dim))


def _grid_size(params: SystemParams, window) -> int:
    # ~40 samples per parity period (pi in phi) of the fast oscillation
    span = (window[1] - window[0]) * params.t0
    return max(401, int(40 * params.omega12 * span / math.pi) + 1)


@dataclass
class OffsetReport:
    r: float
    ratio: float
    measured: float
    expected: float
    per_feature: list = field(default_factory=list)
    max_curve_gap: float = 0.0


def parity_ordering_offset(r: float, ratio: float, window=(0.45, 0.55)) -> OffsetReport:
    """Phase shift between with/without-ordering parity curves of psi_+ near t0/2."""
    params = SystemParams.dimensionless(r, ratio)
    lo, hi = (w * params.t0 for w in window)
    n = _grid_size(params, window)
    pts = {}
    for o in Ordering:
        f = parity_curve(params, o)
        pts[o] = [e.t for kind in ("max", "min") for e in local_extrema(f, lo, hi, n, kind)]
    measured, per = phase_offset_at(
        pts[Ordering.WITH], pts[Ordering.WITHOUT],
        lambda t: analytic.phase_exact(t, params), lambda t: analytic.phase_no_ordering(t, params),
        base=0.0, t_ref=params.t0 / 2,
    )
    fw, fo = parity_curve(params, Ordering.WITH), parity_curve(params, Ordering.WITHOUT)
    grid = np.linspace(lo, hi, n)
    gap = max(abs(fw(t) - fo(t)) for t in grid)
    return OffsetReport(r, ratio, measured, analytic.ordering_correction(params.t0 / 2, params), per, gap)


@dataclass
class YurkeStolerReport:
    r: float
    ratio: float
    zeros: dict  # ordering -> list[Extremum]
    phase_deviation: dict  # ordering -> list[(t/t0, deviation from pi/4 or 3pi/4)]
    periods_without_zero: dict  # ordering -> count of phase periods lacking a zero
    offset: OffsetReport


def yurke_stoler_zeros(r: float, ratio: float, window=(0.45, 0.55)) -> YurkeStolerReport:
    """Locate the minima of T_A(psi_+) (Yurke-Stoler instants) for both orderings."""
    params = SystemParams.dimensionless(r, ratio)
    lo, hi = (w * params.t0 for w in window)
    n = _grid_size(params, window)
    zeros, devs, missing = {}, {}, {}
    for o in Ordering:
        mins = local_extrema(relative_noise_curve(params, o), lo, hi, n, "min")
        zeros[o.value] = mins
        ph = [analytic.phase(e.t, params, o) % math.pi for e in mins]
        devs[o.value] = [
            (e.t / params.t0, min(abs(p - math.pi / 4), abs(p - 3 * math.pi / 4)))
            for e, p in zip(mins, ph)
        ]
        # complete phase periods inside the window, delimited by phi = k pi
        phases = np.unwrap([analytic.phase(t, params, o) for t in np.linspace(lo, hi, n)])
        k0, k1 = math.ceil(phases[0] / math.pi), math.floor(phases[-1] / math.pi)
        unwrapped = np.interp([e.t for e in mins], np.linspace(lo, hi, n), phases)
        counts = [int(np.sum((unwrapped >= k * math.pi) & (unwrapped < (k + 1) * math.pi)))
                  for k in range(k0, k1)]
        missing[o.value] = sum(1 for c in counts if c == 0)
    measured, per = phase_offset_at(
        [e.t for e in zeros["with"]], [e.t for e in zeros["without"]],
        lambda t: analytic.phase_exact(t, params), lambda t: analytic.phase_no_ordering(t, params),
        base=math.pi / 4, t_ref=params.t0 / 2,
    )
    offset = OffsetReport(r, ratio, measured, analytic.ordering_correction(params.t0 / 2, params), per)
    return YurkeStolerReport(r, ratio, zeros, devs, missing, offset)


# -- total-noise features ---------------------------------------------------


@dataclass
class NoiseMaximum:
    branch: str
    t_over_t0: float
    value: float
    phi_mod_pi: float
    branch_phase_mod_pi: float  # phi for plus, phi + pi/2 for minus


def _noise(t: float, params: SystemParams, branch, ordering=Ordering.WITH) -> float:
    try:
        return analytic.total_noise_closed_form(analytic.conditional_state(t, params, branch, ordering))
    except ZeroProbabilityError:
        return 0.0


def total_noise_maxima(r: float = 0.25, ratio: float = 8.0, n: int = 2001) -> list[NoiseMaximum]:
    """Global maximum of T(psi_+-) over one period t0, refined off the grid."""
    params = SystemParams.dimensionless(r, ratio)
    out = []
    for b in Branch:
        ts = np.linspace(0.0, params.t0, n)
        v = np.array([_noise(t, params, b) for t in ts])
        i = int(np.argmax(v))
        res = minimize_scalar(
            lambda x: -_noise(x, params, b),
            bounds=(ts[max(i - 1, 0)], ts[min(i + 1, n - 1)]), method="bounded",
            options={"xatol": 1e-12},
        )
        ph = analytic.phase_exact(float(res.x), params)
        shift = 0.0 if b is Branch.PLUS else math.pi / 2
        out.append(NoiseMaximum(b.value, float(res.x) / params.t0, float(-res.fun),
                                ph % math.pi, (ph + shift) % math.pi))
    return out


@dataclass
class PlateauReport:
    t_min: float
    t_max: float
    min_T: float
    max_relative_oscillation: float


def cat_plateau(r: float = 1.0, ratio: float = 8.0, window=(0.45, 0.55), n: int = 501) -> PlateauReport:
    """Size of the phase-driven part of T near t0/2.

    The phase-averaged noise replaces the denominator [2 +- q +- q*]^2 by 4;
    the reported oscillation is max |T - T_avg| / T_avg over both branches.
    """
    params = SystemParams.dimensionless(r, ratio)
    ts = np.linspace(window[0], window[1], n) * params.t0
    worst, lowest = 0.0, math.inf
    for b in Branch:
        for t in ts:
            cat = analytic.conditional_state(t, params, b)
            d2 = abs(cat.alpha_plus - cat.alpha_minus) ** 2
            avg = d2 * -math.expm1(-d2) / 4.0
            val = analytic.total_noise_closed_form(cat)
            worst = max(worst, abs(val - avg) / avg)
            lowest = min(lowest, val)
    return PlateauReport(window[0], window[1], lowest, worst)


# -- critical radius --------------------------------------------------------


@dataclass
class CriticalReport:
    fraction: float
    r_c: float
    amplitude: float
    n_odd: float
    n_even: float
    n_ys: float
    n_odd_fock: float
    n_even_fock: float
    n_ys_fock: float

    def lines(self) -> list[str]:
        return [
            f"period fraction       : {self.fraction:g}",
            f"critical radius r_c   : {self.r_c:.6f}",
            f"cat amplitude 2 r_c   : {self.amplitude:.6f}",
            f"<n> odd coherent      : {self.n_odd:.6f} (Fock: {self.n_odd_fock:.6f})",
            f"<n> even coherent     : {self.n_even:.6f} (Fock: {self.n_even_fock:.6f})",
            f"<n> Yurke-Stoler      : {self.n_ys:.6f} (Fock: {self.n_ys_fock:.6f})",
        ]


def critical_report(fraction: float = 0.1, ratio: float = 50.0) -> CriticalReport:
    """Radius at which the ordering phase at t0/2 reaches ``fraction`` of the parity period pi."""
    if not 0 < fraction < 1:
        raise ValueError("fraction must lie in (0, 1)")

    def excess(r):
        p = SystemParams.dimensionless(r, ratio)
        return analytic.ordering_correction(p.t0 / 2, p) - fraction * math.pi

    r_c = brentq(excess, 1e-6, 10.0, xtol=1e-15, rtol=1e-15)
    a = 2.0 * r_c
    x = a * a
    # closed forms: odd |a|^2 coth|a|^2, even |a|^2 tanh|a|^2, Yurke-Stoler |a|^2
    n_odd, n_even, n_ys = x / math.tanh(x), x * math.tanh(x), x
    dim = fock.recommended_dim(a)
    return CriticalReport(
        fraction, r_c, a, n_odd, n_even, n_ys,
        measures.mean_photon_number(fock.odd_coherent(a, dim)),
        measures.mean_photon_number(fock.even_coherent(a, dim)),
        measures.mean_photon_number(fock.yurke_stoler(a, dim)),
    )


# -- figures ----------------------------------------------------------------

FIGURE_PRESETS = {
    "fig2": {"ratio": 50.0, "r": (1.8,)},
    "fig3": {"ratio": 8.0, "r": (0.25, 0.5, 1.0)},
    "fig4": {"ratio": 50.0, "r": (0.25, 0.5)},
    "fig5": {"ratio": 50.0, "r": (0.25, 0.5)},
}


def figure_configs(which: str) -> list[tuple[str, ScenarioConfig]]:
    preset = FIGURE_PRESETS[which]
    out = []
    for r in preset["r"]:
        name = f"{which}_r{r:g}"
        if which == "fig3":
            cfg = ScenarioConfig(r=r, ratio=preset["ratio"], ordering="with", branch="both",
                                 measures=("T",))
        elif which == "fig4":
            cfg = ScenarioConfig(r=r, ratio=preset["ratio"], t_start=0.45, t_end=0.55,
                                 ordering="both", branch="plus", measures=("P",))
        elif which == "fig5":
            cfg = ScenarioConfig(r=r, ratio=preset["ratio"], t_start=0.45, t_end=0.55,
                                 ordering="both", branch="plus", measures=("T_A",))
        else:
            cfg = ScenarioConfig(r=r, ratio=preset["ratio"], ordering="with", branch="plus",
                                 measures=())
        out.append((name, cfg))
    return out


FIG2_COLUMNS = ["t_over_t0", "alpha_plus_re", "alpha_plus_im", "alpha_minus_re",
                "alpha_minus_im", "separation", "cat_formed"]


def trajectory_rows(cfg: ScenarioConfig) -> list[dict]:
    params = cfg.params()
    rows = []
    for tau in np.linspace(cfg.t_start, cfg.t_end, cfg.points):
        t = float(tau) * params.t0
        ap = complex(analytic.alpha_pm(t, params, Branch.PLUS))
        am = complex(analytic.alpha_pm(t, params, Branch.MINUS))
        sep = abs(ap - am)
        rows.append({
            "t_over_t0": float(tau), "alpha_plus_re": ap.real, "alpha_plus_im": ap.imag,
            "alpha_minus_re": am.real, "alpha_minus_im": am.imag,
            "separation": sep, "cat_formed": int(sep > 4 * 0.5),
        })
    return rows


def write_figure(which: str, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    written = []
    for name, cfg in figure_configs(which):
        if which == "fig2":
            rows, cols = trajectory_rows(cfg), FIG2_COLUMNS
        else:
            rows, cols = simulate(cfg), columns_for(cfg)
        header = f"# {name}: r={cfg.r:g}, Omega12/delta={cfg.ratio:g}, delta=1"
        written.append(write_csv(rows, cols, out_dir / f"{name}.csv"))
        written.append(write_legend(cols, out_dir / f"{name}.columns.txt", header))
    return written


# -- sweep ------------------------------------------------------------------

SWEEP_COLUMNS = ["r", "ratio", "strong_coupling", "ordering_phase_half_period",
                 "max_T_plus", "max_T_minus", "max_separation"]


def _sweep_point(point) -> dict:
    r, ratio, n = point
    params = SystemParams.dimensionless(r, ratio)
    ts = np.linspace(0.0, params.t0, n)
    return {
        "r": float(r), "ratio": float(ratio),
        "strong_coupling": int(params.strong_coupling),
        "ordering_phase_half_period": analytic.ordering_correction(params.t0 / 2, params),
        "max_T_plus": max(_noise(t, params, Branch.PLUS) for t in ts),
        "max_T_minus": max(_noise(t, params, Branch.MINUS) for t in ts),
        "max_separation": 4.0 * params.r,
    }


def sweep_rows(r_values, ratio_values, n: int = 2001, jobs: int = 1) -> list[dict]:
    """Summary row per (ratio, r); with ``jobs`` > 1 points run in worker processes, order kept."""
    points = [(float(r), float(ratio), n) for ratio in ratio_values for r in r_values]
    if jobs <= 1:
        return [_sweep_point(p) for p in points]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sweep_point, points))


# -- validation -------------------------------------------------------------


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def magnus_exactness(r: float, frac: float, dim: Optional[int] = None, steps: Optional[int] = None,
                     ratio: float = 50.0):
    """(1 - fidelity, drift) between brute-force H_K stepping and exp(Xi1 + Xi2)."""
    params = SystemParams.dimensionless(r, ratio)
    dim = dim or fock.recommended_dim(2.0 * r)
    t = frac * params.t0
    s0 = propagator.initial_state(dim)
    exact = propagator.magnus_UK(t, params, s0)
    if steps is None:
        res = propagator.converge_steps(
            lambda n: propagator.propagate_HK(s0, t, params, dim, steps=n, samples=2),
            propagator.default_steps_K(t, params), tol=1e-8,
        )
    else:
        res = propagator.propagate_HK(s0, t, params, dim, steps=steps, samples=2)
    return 1.0 - propagator.fidelity(res.final_state, exact), res.max_norm_drift, res.step_count


def effective_regime_sweep(r: float = 0.5, ratios=(8.0, 50.0, 200.0), dim: int = 40,
                           frac: float = 0.5, method: str = "midpoint"):
    """Fidelity with |Psi(t)> and max |3> population from H_J propagation, per ratio."""
    out = []
    for ratio in ratios:
        params = SystemParams.dimensionless(r, ratio)
        t = frac * params.t0
        s0 = propagator.initial_state(dim, propagator.AtomBasis.THREE_LEVEL)
        res = propagator.propagate_HJ(s0, t, params, dim, method=method, samples=2)
        ref = propagator.analytic_state(t, params, dim, basis=propagator.AtomBasis.THREE_LEVEL)
        f = propagator.fidelity(propagator.apply_U1(res.final_state, t, params), ref)
        out.append((ratio, f, res.max_excited_population, res.max_norm_drift))
    return out


def run_validation(dim: Optional[int] = None, steps: Optional[int] = None, r_values=None,
                   seed: int = 2021) -> list[Check]:
    checks = []
    r_values = tuple(r_values or (0.25, 0.5, 1.0, 1.8))
    worst, drift = 0.0, 0.0
    for r in r_values:
        for frac in (0.25, 0.5, 1.0):
            d, dr, _ = magnus_exactness(r, frac, dim, steps)
            worst, drift = max(worst, d), max(drift, dr)
    checks.append(Check("magnus exactness", worst <= 1e-6,
                        f"max 1-F = {worst:.2e} over r={list(r_values)}, t/t0 in (1/4, 1/2, 1)"))

    p = SystemParams.dimensionless(0.5, 8.0)
    d = dim or 30
    t = p.t0 / 8
    s0 = propagator.initial_state(d, propagator.AtomBasis.THREE_LEVEL)
    ri = propagator.propagate_HI(s0, t, p, d, samples=2)
    rj = propagator.propagate_HJ(s0, t, p, d, method="magnus4", samples=2,
                                 steps=None if steps is None else steps)
    f = propagator.fidelity(propagator.apply_U1(rj.final_state, t, p), ri.final_state)
    drift = max(drift, ri.max_norm_drift, rj.max_norm_drift)
    checks.append(Check("frame equivalence H_J vs H_I", 1 - f <= 1e-6, f"1-F = {1 - f:.2e}"))

    rng = np.random.default_rng(seed)
    worst_rel = 0.0
    for _ in range(20):
        pr = SystemParams.dimensionless(rng.uniform(0.1, 2.0), rng.uniform(5.0, 200.0))
        ts = rng.uniform(0.0, pr.t0, 3)
        val = propagator.nested_commutator_norm(*ts, pr, dim or 24)
        worst_rel = max(worst_rel, val / (pr.r * pr.delta) ** 3)
    checks.append(Check("third Magnus term vanishes", worst_rel <= 1e-10,
                        f"max ||[H,[H,H]]|| / (r delta)^3 = {worst_rel:.2e} (20 draws)"))

    sweep = effective_regime_sweep(dim=dim or 40)
    fids = [s[1] for s in sweep]
    pops = [s[2] for s in sweep]
    drift = max([drift] + [s[3] for s in sweep])
    report = ", ".join(f"{s[0]:g}: F={s[1]:.5f} P3={s[2]:.2e}" for s in sweep)
    checks.append(Check("effective Hamiltonian improves with Omega12/delta",
                        all(a < b for a, b in zip(fids, fids[1:]))
                        and all(a > b for a, b in zip(pops, pops[1:])), report))
    checks.append(Check("unitarity", drift <= propagator.UNITARITY_TOL, f"max drift {drift:.2e}"))
    return checks
