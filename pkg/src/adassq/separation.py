"""Time-varying window-width selection and scale-zone geometry.

For a multicomponent signal the analysis window must be wide enough in time
(narrow in frequency) that neighboring components do not bleed into each
other's scale zone, but no wider, since a wide window smears chirps.  Two
selectors are provided:

* sigma1 -- the smallest width keeping the *first-order* zones
  { a : |sigma*(mu - a*phi_k')| <= alpha } of adjacent components disjoint;
  adequate when chirp rates are mild.
* sigma2 -- the smallest width keeping the *chirp-corrected* zones disjoint.
  Each pair contributes the lower root of a quadratic in sigma; at that root
  the adjacent corrected zones touch exactly (tangency), so the maximum over
  pairs is the minimal admissible width.

Both return a SigmaProfile carrying sigma(b) and its derivative, which the
transform stack needs for its time-derivative lattice.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .signals import SignalSpec
from .windows import WindowModel

Array = np.ndarray


@dataclass(frozen=True)
class SigmaProfile:
    """Window width sigma(b) and its time derivative on a time grid."""

    b: Array
    sigma: Array
    dsigma: Array
    kind: str = "custom"

    def __post_init__(self):
        if not (self.b.shape == self.sigma.shape == self.dsigma.shape):
            raise ValueError("b, sigma, dsigma must have matching shapes")
        if np.any(self.sigma <= 0.0):
            raise ValueError("sigma must be positive everywhere")


def constant_profile(b, sigma: float) -> SigmaProfile:
    b = np.asarray(b, dtype=float)
    if sigma <= 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return SigmaProfile(b=b, sigma=np.full_like(b, float(sigma)),
                        dsigma=np.zeros_like(b), kind="const")


def _frequencies(spec: SignalSpec, b: Array):
    return [comp.dphase(b) for comp in spec.components]


def _chirp_rates(spec: SignalSpec, b: Array):
    return [comp.d2phase(b) for comp in spec.components]


def sigma1(spec: SignalSpec, wm: WindowModel, b=None) -> SigmaProfile:
    """First-order minimal window width.

    sigma1(b) = (alpha/mu) * max_k (f_k + f_{k-1}) / (f_k - f_{k-1})
    over adjacent pairs of instantaneous frequencies; at this width the
    first-order zones of the tightest pair touch.  The derivative is the
    analytic derivative of the active branch (a.e. correct; at branch
    switches the left branch is used).
    """
    if len(spec.components) < 2:
        raise ValueError("sigma1 needs at least two components; use "
                         "constant_profile for single-component signals")
    b = spec.times() if b is None else np.asarray(b, dtype=float)
    freqs = _frequencies(spec, b)
    rates = _chirp_rates(spec, b)
    scale = wm.alpha / wm.mu

    ratios = []
    dratios = []
    for (flo, fhi), (clo, chi) in zip(zip(freqs[:-1], freqs[1:]),
                                      zip(rates[:-1], rates[1:])):
        diff = fhi - flo
        if np.any(diff <= 0.0):
            raise ValueError("components must be ordered with strictly "
                             "increasing instantaneous frequency")
        ratios.append((fhi + flo) / diff)
        # d/db [(f2+f1)/(f2-f1)] = 2 (c1 f2 - c2 f1) / (f2-f1)^2
        dratios.append(2.0 * (clo * fhi - chi * flo) / diff ** 2)
    ratios = np.stack(ratios)
    dratios = np.stack(dratios)
    active = np.argmax(ratios, axis=0)
    cols = np.arange(len(b))
    return SigmaProfile(
        b=b,
        sigma=scale * ratios[active, cols],
        dsigma=scale * dratios[active, cols],
        kind="sigma1",
    )


def sigma2_coefficients(flo, clo, fhi, chi, alpha: float, mu: float):
    """Quadratic a*sigma**2 - b*sigma + c = 0 for one adjacent pair.

    Returns (a, b, c, disc) where disc is the discriminant b**2 - 4*a*c in
    the numerically stable factored form; the identity with the expanded
    form is part of the test suite.
    """
    flo, clo = np.asarray(flo, float), np.abs(np.asarray(clo, float))
    fhi, chi = np.asarray(fhi, float), np.abs(np.asarray(chi, float))
    s = fhi * clo + flo * chi
    qa = 2.0 * math.pi * alpha * mu * (chi + clo) ** 2
    qb = s * (fhi - flo) + 4.0 * math.pi * alpha ** 2 * (chi ** 2 - clo ** 2)
    qc = (alpha / mu) * (s * (fhi + flo)
                         + 2.0 * math.pi * alpha ** 2 * (chi - clo) ** 2)
    disc = s ** 2 * ((fhi - flo) ** 2
                     - 16.0 * math.pi * alpha ** 2 * (chi + clo))
    return qa, qb, qc, disc


def separation_condition(flo, clo, fhi, chi, alpha: float):
    """Adjacent-pair separability: 4*alpha*sqrt(pi*(|c_hi|+|c_lo|)) <= f gap.

    Equivalent to a nonnegative discriminant in sigma2_coefficients.
    """
    gap = np.asarray(fhi, float) - np.asarray(flo, float)
    need = 4.0 * alpha * np.sqrt(
        math.pi * (np.abs(np.asarray(chi, float))
                   + np.abs(np.asarray(clo, float))))
    return need <= gap


def sigma2(spec: SignalSpec, wm: WindowModel, b=None) -> SigmaProfile:
    """Chirp-corrected minimal window width.

    Per adjacent pair: the lower root of the separation quadratic (at which
    the chirp-corrected zones are exactly tangent), falling back to the
    first-order pair value when both chirp rates vanish.  The profile is the
    maximum over pairs, floored at alpha/mu.  The derivative is a 5-point
    finite difference of the closed form (exact branches are smooth; at
    branch switches this yields an intermediate a.e.-valid slope).
    """
    if len(spec.components) < 2:
        raise ValueError("sigma2 needs at least two components; use "
                         "constant_profile for single-component signals")
    b = spec.times() if b is None else np.asarray(b, dtype=float)

    def value(bv: Array) -> Array:
        freqs = _frequencies(spec, bv)
        rates = _chirp_rates(spec, bv)
        best = np.full_like(bv, wm.alpha / wm.mu)
        for (flo, fhi), (clo, chi) in zip(zip(freqs[:-1], freqs[1:]),
                                          zip(rates[:-1], rates[1:])):
            if np.any(fhi <= flo):
                raise ValueError("components must be ordered with strictly "
                                 "increasing instantaneous frequency")
            qa, qb, qc, disc = sigma2_coefficients(
                flo, clo, fhi, chi, wm.alpha, wm.mu)
            if np.any(disc < 0.0):
                worst = bv[np.argmin(disc)]
                raise ValueError(
                    "components are too close for their chirp rates near "
                    f"b={worst:.6g}; no window width separates the "
                    "chirp-corrected zones")
            chirped = qa > 0.0
            pair = np.empty_like(bv)
            with np.errstate(divide="ignore", invalid="ignore"):
                pair = np.where(
                    chirped,
                    (qb - np.sqrt(disc)) / np.where(chirped, 2.0 * qa, 1.0),
                    (wm.alpha / wm.mu) * (fhi + flo)
                    / np.maximum(fhi - flo, 1e-300),
                )
            best = np.maximum(best, pair)
        return best

    h = 1e-4 * max(spec.duration, 1.0 / spec.fs)
    dsig = (-value(b + 2 * h) + 8 * value(b + h)
            - 8 * value(b - h) + value(b - 2 * h)) / (12.0 * h)
    return SigmaProfile(b=b, sigma=value(b), dsigma=dsig, kind="sigma2")


@dataclass(frozen=True)
class ZoneSet:
    """Per-component scale intervals on a time grid.

    order=1: plain window-support zones; order=2: chirp-corrected zones.
    lower/upper have shape (K, len(b)); valid marks cells where the zone
    formula is defined (square-root argument nonnegative, admissible sigma).
    """

    b: Array
    order: int
    lower: Array
    upper: Array
    valid: Array
    labels: tuple[str, ...]


def zones(spec: SignalSpec, wm: WindowModel, profile: SigmaProfile,
          order: int = 1) -> ZoneSet:
    """Scale zones of each component at the given window profile."""
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    b = profile.b
    sig = profile.sigma
    alpha, mu = wm.alpha, wm.mu
    lo_edge = mu - alpha / sig
    hi_edge = mu + alpha / sig
    admissible = lo_edge > 0.0

    lowers, uppers, valids = [], [], []
    for comp in spec.components:
        f = comp.dphase(b)
        if order == 1:
            lowers.append(lo_edge / f)
            uppers.append(hi_edge / f)
            valids.append(admissible & (f > 0.0))
        else:
            c = np.abs(comp.d2phase(b))
            arg_u = f ** 2 - 8.0 * math.pi * alpha * (alpha + mu * sig) * c
            arg_l = f ** 2 + 8.0 * math.pi * alpha * (mu * sig - alpha) * c
            ok = admissible & (arg_u >= 0.0) & (arg_l >= 0.0) & (f > 0.0)
            with np.errstate(invalid="ignore"):
                uppers.append(2.0 * hi_edge / (f + np.sqrt(arg_u)))
                lowers.append(2.0 * lo_edge / (f + np.sqrt(arg_l)))
            valids.append(ok)
    return ZoneSet(
        b=b, order=order,
        lower=np.stack(lowers), upper=np.stack(uppers),
        valid=np.stack(valids),
        labels=tuple(c.label for c in spec.components),
    )


def zone_margins(zs: ZoneSet) -> Array:
    """Gap upper_{k+1} ... lower_k between adjacent zones, shape (K-1, n).

    Component k+1 lives at higher frequency, hence smaller scale; the margin
    is lower_k - upper_{k+1} and separation means margin >= 0.
    """
    return zs.lower[:-1] - zs.upper[1:]


def spectral_distance(spec: SignalSpec, wm: WindowModel,
                      profile: SigmaProfile) -> Array:
    """Off-component spectral argument rho_{l,k}(b), shape (K, K, n).

    Entry (l, k) is the smallest |sigma*(mu - a*phi_l')| over a in component
    k's first-order zone: how far component l's ridge sits outside k's zone,
    in window-argument units.  Diagonal entries are 0.
    """
    b = profile.b
    sig = profile.sigma
    alpha, mu = wm.alpha, wm.mu
    freqs = _frequencies(spec, b)
    K = len(freqs)
    out = np.zeros((K, K, len(b)))
    for k in range(K):
        for l in range(K):
            if l == k:
                continue
            ratio = freqs[l] / freqs[k]
            if l < k:      # lower frequency seen at k's (smaller) scales
                out[l, k] = sig * mu - (sig * mu + alpha) * ratio
            else:          # higher frequency seen at k's (larger) scales
                out[l, k] = (sig * mu - alpha) * ratio - sig * mu
    return out


@dataclass(frozen=True)
class SeparationReport:
    """Admissibility and separation diagnostics for a (signal, profile) pair."""

    sigma_admissible: bool      # sigma*mu - alpha > 0 everywhere
    freq_order_ok: bool         # strictly increasing component frequencies
    pair_condition_ok: bool     # chirp-separability of each adjacent pair
    zones_disjoint: bool        # zone margins >= 0 (order per request)
    rho_min: float              # min off-diagonal spectral distance
    rho_ok: bool                # rho_min >= alpha
    bad_times: Array            # times where any check fails

    def ok(self) -> bool:
        return (self.sigma_admissible and self.freq_order_ok
                and self.pair_condition_ok and self.zones_disjoint
                and self.rho_ok)


def separation_report(spec: SignalSpec, wm: WindowModel,
                      profile: SigmaProfile, order: int = 1,
                      margin_tol: float = 1e-12) -> SeparationReport:
    b = profile.b
    sig = profile.sigma
    admissible = sig * wm.mu - wm.alpha > 0.0

    freqs = _frequencies(spec, b)
    rates = _chirp_rates(spec, b)
    order_ok = np.ones(len(b), dtype=bool)
    cond_ok = np.ones(len(b), dtype=bool)
    for (flo, fhi), (clo, chi) in zip(zip(freqs[:-1], freqs[1:]),
                                      zip(rates[:-1], rates[1:])):
        order_ok &= fhi > flo
        cond_ok &= separation_condition(flo, clo, fhi, chi, wm.alpha)

    zs = zones(spec, wm, profile, order=order)
    if len(spec.components) > 1:
        disjoint = np.all(zone_margins(zs) >= -margin_tol, axis=0) \
            & np.all(zs.valid, axis=0)
    else:
        disjoint = zs.valid[0]

    rho = spectral_distance(spec, wm, profile)
    K = len(spec.components)
    if K > 1:
        off = np.array([rho[l, k] for k in range(K) for l in range(K)
                        if l != k])
        rho_min = float(np.min(off))
    else:
        rho_min = math.inf

    good = admissible & order_ok & cond_ok & disjoint
    return SeparationReport(
        sigma_admissible=bool(np.all(admissible)),
        freq_order_ok=bool(np.all(order_ok)),
        pair_condition_ok=bool(np.all(cond_ok)),
        zones_disjoint=bool(np.all(disjoint)),
        rho_min=rho_min,
        # minimal-width profiles achieve rho = alpha exactly; allow rounding
        rho_ok=bool(rho_min >= wm.alpha - margin_tol),
        bad_times=b[~good],
    )


# ------------------------------------------------------------------ CSV I/O

def profile_to_csv(profile: SigmaProfile, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["b", "sigma", "dsigma"])
        for bi, si, di in zip(profile.b, profile.sigma, profile.dsigma):
            w.writerow([f"{bi:.17g}", f"{si:.17g}", f"{di:.17g}"])


def zones_to_csv(zs: ZoneSet, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["b", "k", "lower", "upper", "valid"])
        for k in range(zs.lower.shape[0]):
            for i, bi in enumerate(zs.b):
                w.writerow([f"{bi:.17g}", k + 1,
                            f"{zs.lower[k, i]:.17g}",
                            f"{zs.upper[k, i]:.17g}",
                            int(zs.valid[k, i])])
