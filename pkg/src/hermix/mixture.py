"""Interval-Gaussian mixture models.

A component density is a unit-variance Gaussian convolved with a mixing
density supported on a bounded interval,

    f_i(x) = integral nu_i(mu) g_mu(x) dmu,

and the observed mixture is f = w1 f1 + w2 f2 with w1 + w2 = 1 and the
two intervals disjoint.  Two mixing families are supported — finite
atom lists and piecewise-uniform densities — because both have exact
inverse CDFs (sampling), exact Gaussian-smoothed pdfs/cdfs (difference
of normal CDFs), and exact Hermite projections (Gaussian moments and an
erf-based moment recurrence respectively).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from mpmath import mp
from scipy.special import ndtr

from .errors import NonFiniteDensity, OrderTooLarge
from .hermite import MAX_L1_ORDER, inner_with_gaussian
from .numerics import BigReal
from .quadrature import integrate_abs_vec, integrate_vec
from .serialize import canonical_json, sha256_of_text

_SQRT_2PI = math.sqrt(2.0 * math.pi)
MASS_TOL = 1e-12
SUPPORT_PAD = 12.0


def _phi(x):
    return np.exp(-0.5 * np.square(x)) / _SQRT_2PI


def _big_phi_antideriv(x):
    # antiderivative of the standard normal CDF: t Phi(t) + phi(t)
    return x * ndtr(x) + _phi(x)


@dataclass(frozen=True)
class MixingDensity:
    """Mixing density nu: either atoms or a piecewise-uniform density.

    ``atoms`` is a tuple of (location, mass) with masses summing to 1;
    ``pieces`` is a tuple of (lo, hi, density) with total mass
    sum(density * (hi - lo)) = 1.  Exactly one of them is populated,
    selected by ``kind``.
    """

    kind: str
    atoms: tuple = field(default=())
    pieces: tuple = field(default=())

    def __post_init__(self):
        if self.kind == "atoms":
            if not self.atoms:
                raise ValueError("atoms mixing density needs at least one atom")
            total = math.fsum(m for _, m in self.atoms)
            if any(m <= 0 for _, m in self.atoms):
                raise ValueError("atom masses must be positive")
            if abs(total - 1.0) > MASS_TOL:
                raise ValueError(f"atom masses sum to {total!r}, expected 1")
        elif self.kind == "piecewise_uniform":
            if not self.pieces:
                raise ValueError("piecewise mixing density needs pieces")
            for lo, hi, d in self.pieces:
                if not lo < hi:
                    raise ValueError(f"piece [{lo}, {hi}] is empty")
                if d < 0:
                    raise ValueError("piece density must be nonnegative")
            total = math.fsum(d * (hi - lo) for lo, hi, d in self.pieces)
            if abs(total - 1.0) > MASS_TOL:
                raise ValueError(f"piece masses sum to {total!r}, expected 1")
        else:
            raise ValueError(f"unknown mixing kind {self.kind!r}")

    @classmethod
    def from_atoms(cls, atoms):
        return cls(kind="atoms", atoms=tuple((float(a), float(m))
                                             for a, m in atoms))

    @classmethod
    def from_pieces(cls, pieces):
        return cls(kind="piecewise_uniform",
                   pieces=tuple((float(a), float(b), float(d))
                                for a, b, d in pieces))

    @classmethod
    def point_mass(cls, location):
        return cls.from_atoms([(location, 1.0)])

    @classmethod
    def uniform(cls, lo, hi):
        return cls.from_pieces([(lo, hi, 1.0 / (hi - lo))])

    def support(self):
        if self.kind == "atoms":
            locs = [a for a, _ in self.atoms]
            return min(locs), max(locs)
        return min(p[0] for p in self.pieces), max(p[1] for p in self.pieces)


@dataclass(frozen=True)
class IntervalGaussian:
    """One mixture component: nu * g0 with nu supported inside interval."""

    interval: tuple
    nu: MixingDensity

    def __post_init__(self):
        lo, hi = self.interval
        if not lo < hi:
            raise ValueError(f"interval [{lo}, {hi}] is empty")
        slo, shi = self.nu.support()
        if slo < lo - MASS_TOL or shi > hi + MASS_TOL:
            raise ValueError(
                f"mixing support [{slo}, {shi}] escapes interval [{lo}, {hi}]")

    def midpoint(self):
        return 0.5 * (self.interval[0] + self.interval[1])


@dataclass(frozen=True)
class TwoComponentMixture:
    """f = w1 f1 + w2 f2 with disjoint component intervals, comp1 left."""

    w1: float
    w2: float
    comp1: IntervalGaussian
    comp2: IntervalGaussian

    def __post_init__(self):
        if self.w1 <= 0 or self.w2 <= 0:
            raise ValueError("weights must be positive")
        if abs(self.w1 + self.w2 - 1.0) > MASS_TOL:
            raise ValueError(f"weights sum to {self.w1 + self.w2!r}, expected 1")
        if self.comp1.interval[1] >= self.comp2.interval[0]:
            raise ValueError("component intervals must be disjoint, "
                             "left component first")

    def intervals(self):
        return self.comp1.interval, self.comp2.interval


@dataclass
class SampleSet:
    """Samples plus the provenance needed to reproduce them."""

    values: np.ndarray
    seed: int | None = None
    model_digest: str | None = None

    def __len__(self):
        return self.values.size


# ---------------------------------------------------------------------------
# evaluation


def _component_pdf(comp, x):
    nu = comp.nu
    out = np.zeros_like(x, dtype=float)
    if nu.kind == "atoms":
        for loc, mass in nu.atoms:
            out += mass * _phi(x - loc)
    else:
        for lo, hi, d in nu.pieces:
            if d > 0:
                out += d * (ndtr(x - lo) - ndtr(x - hi))
    return out


def _component_cdf(comp, x):
    nu = comp.nu
    out = np.zeros_like(x, dtype=float)
    if nu.kind == "atoms":
        for loc, mass in nu.atoms:
            out += mass * ndtr(x - loc)
    else:
        for lo, hi, d in nu.pieces:
            if d > 0:
                out += d * (_big_phi_antideriv(x - lo) - _big_phi_antideriv(x - hi))
    return out


def pdf_eval(model, x):
    """Density of a mixture or single component at x (scalar or array).

    Atoms give a finite Gaussian sum; pieces a difference of Gaussian
    CDFs per piece — both exact, no quadrature involved.
    """
    xv = np.atleast_1d(np.asarray(x, dtype=float))
    if isinstance(model, TwoComponentMixture):
        out = (model.w1 * _component_pdf(model.comp1, xv)
               + model.w2 * _component_pdf(model.comp2, xv))
    elif isinstance(model, IntervalGaussian):
        out = _component_pdf(model, xv)
    else:
        raise TypeError(f"cannot evaluate {type(model)}")
    return out if np.ndim(x) else float(out[0])


def cdf_eval(model, x):
    """Exact CDF of a mixture or component (used by the sampling tests)."""
    xv = np.atleast_1d(np.asarray(x, dtype=float))
    if isinstance(model, TwoComponentMixture):
        out = (model.w1 * _component_cdf(model.comp1, xv)
               + model.w2 * _component_cdf(model.comp2, xv))
    elif isinstance(model, IntervalGaussian):
        out = _component_cdf(model, xv)
    else:
        raise TypeError(f"cannot evaluate {type(model)}")
    return out if np.ndim(x) else float(out[0])


def support_interval(model, pad=SUPPORT_PAD):
    """Interval outside which the density is negligible (Gaussian tails)."""
    if isinstance(model, TwoComponentMixture):
        (lo1, hi1), (lo2, hi2) = model.intervals()
        return min(lo1, lo2) - pad, max(hi1, hi2) + pad
    if isinstance(model, IntervalGaussian):
        lo, hi = model.interval
        return lo - pad, hi + pad
    raise TypeError(f"no support for {type(model)}")


# ---------------------------------------------------------------------------
# sampling


def _inverse_cdf_mixing(nu, u):
    """Map uniforms u in [0,1) through the inverse CDF of nu (vectorized)."""
    if nu.kind == "atoms":
        cum = np.cumsum([m for _, m in nu.atoms])
        cum[-1] = max(cum[-1], 1.0)
        idx = np.searchsorted(cum, u, side="right")
        idx = np.minimum(idx, len(nu.atoms) - 1)
        locs = np.array([a for a, _ in nu.atoms])
        return locs[idx]
    masses = np.array([d * (hi - lo) for lo, hi, d in nu.pieces])
    cum = np.cumsum(masses)
    cum[-1] = max(cum[-1], 1.0)
    idx = np.searchsorted(cum, u, side="right")
    idx = np.minimum(idx, len(nu.pieces) - 1)
    lo = np.array([p[0] for p in nu.pieces])[idx]
    d = np.array([p[2] for p in nu.pieces])[idx]
    prev = np.concatenate([[0.0], cum[:-1]])[idx]
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(d > 0, (u - prev) / d, 0.0)
    return lo + frac


def sample(model, n, seed):
    """Draw n i.i.d. samples from the mixture, reproducibly.

    Per draw: component by Bernoulli(w1), then mu from nu_i by inverse
    CDF, plus an independent standard normal.  The generator is
    counter-based (Philox keyed by the seed), so the three vectorized
    draws are identical for a given (model, n, seed) regardless of
    platform threading.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    pick = rng.random(n)
    u = rng.random(n)
    z = rng.standard_normal(n)
    mu = np.where(pick < model.w1,
                  _inverse_cdf_mixing(model.comp1.nu, u),
                  _inverse_cdf_mixing(model.comp2.nu, u))
    return SampleSet(values=mu + z, seed=int(seed),
                     model_digest=model_digest(model))


# ---------------------------------------------------------------------------
# distances


def _as_density(obj, support):
    if isinstance(obj, (TwoComponentMixture, IntervalGaussian)):
        return (lambda x: pdf_eval(obj, x)), support_interval(obj)
    if callable(obj):
        if support is None:
            raise ValueError("callable densities need an explicit support")
        return obj, (support[0] - SUPPORT_PAD, support[1] + SUPPORT_PAD)
    raise TypeError(f"not a density: {type(obj)}")


def distance(f, g, norm="L1", support=None, tol=1e-10):
    """L1 or L2 distance between two densities by adaptive quadrature.

    ``f``/``g`` are model objects or vectorized callables (callables
    need ``support=(lo, hi)``).  Integration runs over the union of the
    supports padded by 12; absolute tolerance 1e-10.
    """
    fd, sf = _as_density(f, support)
    gd, sg = _as_density(g, support)
    lo, hi = min(sf[0], sg[0]), max(sf[1], sg[1])

    def diff(x):
        return fd(x) - gd(x)

    probe = diff(np.linspace(lo, hi, 257))
    if not np.all(np.isfinite(probe)):
        raise NonFiniteDensity("density evaluated to a non-finite value")

    norm = norm.upper()
    try:
        if norm == "L1":
            return integrate_abs_vec(diff, lo, hi, tol=tol, scan_step=0.01)
        if norm == "L2":
            val = integrate_vec(lambda x: np.square(diff(x)), lo, hi, tol=tol)
            return math.sqrt(max(val, 0.0))
    except ValueError as exc:
        raise NonFiniteDensity(str(exc)) from exc
    raise ValueError(f"unknown norm {norm!r}")


# ---------------------------------------------------------------------------
# Hermite projection of components


def _moment_integrals_float(a, b, j_max):
    """I_j = integral_a^b u^j e^(-u^2/4) du for j = 0..j_max.

    Upward recurrence I_j = -2(b^(j-1) e^(-b^2/4) - a^(j-1) e^(-a^2/4))
    + 2(j-1) I_(j-2); stable upward since the terms grow.
    """
    ea = math.exp(-a * a / 4.0)
    eb = math.exp(-b * b / 4.0)
    out = np.empty(j_max + 1)
    out[0] = math.sqrt(math.pi) * (math.erf(b / 2.0) - math.erf(a / 2.0))
    if j_max >= 1:
        out[1] = -2.0 * (eb - ea)
    for j in range(2, j_max + 1):
        out[j] = (-2.0 * (b ** (j - 1) * eb - a ** (j - 1) * ea)
                  + 2.0 * (j - 1) * out[j - 2])
    return out


def _moment_integrals_mp(a, b, j_max):
    av, bv = mp.mpf(a), mp.mpf(b)
    ea = mp.exp(-av * av / 4)
    eb = mp.exp(-bv * bv / 4)
    out = [mp.sqrt(mp.pi) * (mp.erf(bv / 2) - mp.erf(av / 2))]
    if j_max >= 1:
        out.append(-2 * (eb - ea))
    for j in range(2, j_max + 1):
        out.append(-2 * (bv ** (j - 1) * eb - av ** (j - 1) * ea)
                   + 2 * (j - 1) * out[j - 2])
    return out


def hermite_coefficient(component, center, j, precision_bits=None):
    """alpha_j = <f_component, psi_{j,center}>.

    Atoms reduce to Gaussian moments (inner_with_gaussian at the
    shifted locations).  Pieces reduce to the exact erf-based moment
    recurrence above — no quadrature, so the analytic right-hand sides
    fed to the solver are good to the working precision.
    """
    j = int(j)
    if j > MAX_L1_ORDER:
        raise OrderTooLarge(f"coefficient order {j} exceeds {MAX_L1_ORDER}")
    if j < 0:
        raise ValueError("order must be nonnegative")
    nu = component.nu
    if precision_bits is None:
        if nu.kind == "atoms":
            return math.fsum(mass * inner_with_gaussian(j, loc - center)
                             for loc, mass in nu.atoms)
        total = 0.0
        scale = ((-1.0) ** j) * math.exp(
            -0.5 * ((j + 1) * math.log(2.0) + math.lgamma(j + 1)
                    + 0.5 * math.log(math.pi)))
        for lo, hi, d in nu.pieces:
            if d > 0:
                mom = _moment_integrals_float(lo - center, hi - center, j)
                total += d * scale * mom[j]
        return total

    bits = int(precision_bits)
    with mp.workprec(bits + 16):
        if nu.kind == "atoms":
            acc = mp.mpf(0)
            for loc, mass in nu.atoms:
                acc += mp.mpf(mass) * inner_with_gaussian(
                    j, loc - center, precision_bits=bits + 16)._v
        else:
            denom = mp.sqrt(mp.mpf(2 ** (j + 1) * math.factorial(j))
                            * mp.sqrt(mp.pi))
            acc = mp.mpf(0)
            for lo, hi, d in nu.pieces:
                if d > 0:
                    mom = _moment_integrals_mp(mp.mpf(lo) - mp.mpf(center),
                                               mp.mpf(hi) - mp.mpf(center), j)
                    acc += mp.mpf(d) * mom[j] / denom
            if j % 2:
                acc = -acc
    return BigReal(acc, bits)


# ---------------------------------------------------------------------------
# serialization


def _mixing_to_dict(nu):
    if nu.kind == "atoms":
        return {"type": "atoms",
                "locations": [a for a, _ in nu.atoms],
                "masses": [m for _, m in nu.atoms]}
    return {"type": "piecewise",
            "pieces": [[lo, hi, d] for lo, hi, d in nu.pieces]}


def _mixing_from_dict(d):
    try:
        kind = d["type"]
    except (TypeError, KeyError):
        raise ValueError("mixing entry missing 'type'")
    if kind == "atoms":
        locs = d.get("locations")
        masses = d.get("masses")
        if (not isinstance(locs, list) or not isinstance(masses, list)
                or len(locs) != len(masses)):
            raise ValueError("atoms mixing needs matching locations/masses lists")
        return MixingDensity.from_atoms(zip(locs, masses))
    if kind == "piecewise":
        pieces = d.get("pieces")
        if not isinstance(pieces, list) or not all(
                isinstance(p, list) and len(p) == 3 for p in pieces):
            raise ValueError("piecewise mixing needs [lo, hi, density] triples")
        return MixingDensity.from_pieces(pieces)
    raise ValueError(f"unknown mixing type {kind!r}")


def model_to_dict(model):
    """Exact model JSON schema (weights, then components in order)."""
    comps = []
    for comp in (model.comp1, model.comp2):
        comps.append({"interval": [comp.interval[0], comp.interval[1]],
                      "mixing": _mixing_to_dict(comp.nu)})
    return {"weights": [model.w1, model.w2], "components": comps}


def model_from_dict(d):
    if not isinstance(d, dict):
        raise ValueError("model JSON must be an object")
    weights = d.get("weights")
    comps = d.get("components")
    if (not isinstance(weights, list) or len(weights) != 2
            or not isinstance(comps, list) or len(comps) != 2):
        raise ValueError("model needs 2 weights and 2 components")
    built = []
    for entry in comps:
        if not isinstance(entry, dict) or "interval" not in entry \
                or "mixing" not in entry:
            raise ValueError("component needs 'interval' and 'mixing'")
        iv = entry["interval"]
        if not isinstance(iv, list) or len(iv) != 2:
            raise ValueError("interval must be [lo, hi]")
        built.append(IntervalGaussian(interval=(float(iv[0]), float(iv[1])),
                                      nu=_mixing_from_dict(entry["mixing"])))
    return TwoComponentMixture(w1=float(weights[0]), w2=float(weights[1]),
                               comp1=built[0], comp2=built[1])


def model_to_json(model, indent=2):
    return canonical_json(model_to_dict(model), indent=indent) + "\n"


def model_digest(model):
    """SHA-256 of the canonical (compact) model JSON."""
    return sha256_of_text(canonical_json(model_to_dict(model)))


def write_samples_csv(sample_set, path):
    from .serialize import atomic_write_text, format_float

    values = sample_set.values if isinstance(sample_set, SampleSet) else sample_set
    lines = ["x"]
    lines.extend(format_float(float(v)) for v in values)
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_samples_csv(path):
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "x":
            raise ValueError(f"samples CSV must start with 'x', got {header!r}")
        values = np.loadtxt(fh, dtype=float, ndmin=1)
    if values.size == 0:
        from .errors import EmptySample
        raise EmptySample("samples CSV contains no values")
    return SampleSet(values=values)
