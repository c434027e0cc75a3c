"""Closed-form reference spectra and special functions.

Covers the Laplace-Beltrami spectrum of the sphere and of its two-sheeted
azimuthal cover (half-integer degrees), real eigenfunctions for both, lune
ground states, and spherical-cap characteristic constants obtained by root
finding on Legendre functions of non-integer degree.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import special

# First zero of the order-0 Bessel function, 16 significant digits.
J0 = 2.404825557695773

LEGENDRE_SERIES_TOL = 1e-15
CAP_ALPHA_TOL = 1e-10
_CAP_SCAN_STEP = 0.25


@dataclass(frozen=True)
class HarmonicIndex:
    """Degree/order pair; both are half-integers with ell - m integral."""

    ell: float
    m: float

    def __post_init__(self):
        if self.ell < 0:
            raise ValueError("degree must be non-negative")
        two_ell, two_m = 2 * self.ell, 2 * self.m
        if abs(two_ell - round(two_ell)) > 1e-12 or abs(two_m - round(two_m)) > 1e-12:
            raise ValueError("degree and order must be half-integers")
        if abs(self.m) > self.ell:
            raise ValueError("|m| must not exceed ell")
        diff = self.ell - self.m
        if abs(diff - round(diff)) > 1e-12:
            raise ValueError("ell - m must be an integer")

    @property
    def is_half_integer(self):
        return round(2 * self.ell) % 2 == 1

    @property
    def eigenvalue(self):
        return self.ell * (self.ell + 1.0)


@dataclass(frozen=True)
class CapSpec:
    """Spherical cap of area fraction S; polar angle fixed by cos(theta0) = 1 - 2S."""

    area_fraction: float
    polar_angle: float

    def __post_init__(self):
        if not 0.0 < self.area_fraction < 1.0:
            raise ValueError("area fraction must lie in (0, 1)")
        if abs(np.cos(self.polar_angle) - (1.0 - 2.0 * self.area_fraction)) > 1e-14:
            raise ValueError("polar angle inconsistent with area fraction")

    @classmethod
    def from_area_fraction(cls, s: float) -> "CapSpec":
        if not 0.0 < s < 1.0:
            raise ValueError("area fraction must lie in (0, 1)")
        return cls(s, float(np.arccos(1.0 - 2.0 * s)))


def sphere_spectrum(count: int):
    """First `count` distinct eigenvalues l(l+1) with multiplicities 2l+1."""
    if count < 1:
        raise ValueError("count must be positive")
    return [(float(l * (l + 1)), 2 * l + 1) for l in range(count)]


def covering_spectrum(count: int):
    """First `count` distinct eigenvalues of the two-sheeted cover.

    Degrees run over half-integers l = 0, 1/2, 1, ...; multiplicity 2l+1.
    Class 'A' marks the antiperiodic (sign-flipping) eigenfunctions, which are
    exactly the non-integral degrees; class 'S' descends to the sphere.
    """
    if count < 1:
        raise ValueError("count must be positive")
    out = []
    for n in range(count):  # l = n / 2
        ell = 0.5 * n
        out.append((ell * (ell + 1.0), int(round(2 * ell + 1)), "A" if n % 2 else "S"))
    return out


def flat_spectrum(pairs, n: int):
    """Expand (eigenvalue, multiplicity, ...) tuples into the first n eigenvalues."""
    out = []
    for entry in pairs:
        lam, mult = entry[0], entry[1]
        out.extend([float(lam)] * int(mult))
        if len(out) >= n:
            return out[:n]
    raise ValueError("not enough eigenvalues supplied")


@lru_cache(maxsize=None)
def _theta_polynomial(two_ell: int, two_m: int):
    """Coefficients p (ascending in t = cos theta) of the colatitude profile.

    The profile is g(theta) = sin(theta)**m * p(cos theta), obtained by
    differentiating (1-t^2)**ell a total of (ell - m) times; each step maps
    (1-t^2)**a * q to (1-t^2)**(a-1) * [(1-t^2) q' - 2 a t q].
    """
    ell, m = 0.5 * two_ell, 0.5 * two_m
    a = ell
    p = np.array([1.0])
    for _ in range(int(round(ell - m))):
        p = npoly.polysub(npoly.polymul((1.0, 0.0, -1.0), npoly.polyder(p)),
                          npoly.polymul((0.0, 2.0 * a), p))
        a -= 1.0
    return npoly.polytrim(p, tol=0.0)


@lru_cache(maxsize=None)
def _normalization(two_ell: int, two_m: int, parity: str):
    """Unit-L2 constant on the relevant (single or double) sphere.

    Sign convention: the colatitude polynomial's lowest-order nonzero
    coefficient is made positive, so values just north of the equator on the
    phi -> 0+ side are positive.
    """
    ell, m = 0.5 * two_ell, 0.5 * two_m
    p = _theta_polynomial(two_ell, two_m)
    q = npoly.polymul(p, p)
    integral = 0.0
    for j in range(0, len(q), 2):
        integral += q[j] * special.beta(0.5 * (j + 1), m + 1.0)
    span = 4.0 * np.pi if round(two_ell) % 2 else 2.0 * np.pi
    phi_factor = span if (m == 0 and parity == "cos") else 0.5 * span
    c = 1.0 / np.sqrt(integral * phi_factor)
    lead = next(coef for coef in p if coef != 0.0)
    return c if lead > 0 else -c


def eval_real_harmonic(idx: HarmonicIndex, parity: str, theta, phi):
    """Real Laplace-Beltrami eigenfunction value(s) for eigenvalue ell(ell+1).

    parity selects cos(m*phi) or sin(m*phi); the colatitude factor is
    sin(theta)**m times a degree-(ell-m) polynomial in cos(theta).  phi is used
    as given (no wrapping), so half-integer degrees flip sign under
    phi -> phi + 2*pi.  At the poles the value is the limit 0 whenever m > 0.
    """
    if parity not in ("cos", "sin"):
        raise ValueError("parity must be 'cos' or 'sin'")
    if idx.m < 0:
        raise ValueError("use parity to select the +/- m combination; m must be >= 0")
    if parity == "sin" and idx.m == 0:
        raise ValueError("sin parity with m = 0 is identically zero")
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    two_ell, two_m = int(round(2 * idx.ell)), int(round(2 * idx.m))
    p = _theta_polynomial(two_ell, two_m)
    c = _normalization(two_ell, two_m, parity)
    g = np.sin(theta) ** idx.m * npoly.polyval(np.cos(theta), p)
    az = np.cos(idx.m * phi) if parity == "cos" else np.sin(idx.m * phi)
    return c * g * az


def harmonic_basis(ell: float):
    """All 2*ell+1 real (index, parity) pairs spanning the eigenspace of ell."""
    two_ell = int(round(2 * ell))
    out = []
    for two_m in range(two_ell % 2, two_ell + 1, 2):
        m = 0.5 * two_m
        if m == 0:
            out.append((HarmonicIndex(ell, 0.0), "cos"))
        else:
            out.append((HarmonicIndex(ell, m), "cos"))
            out.append((HarmonicIndex(ell, m), "sin"))
    return out


def lune_ground_state(beta: float):
    """Ground state of the wedge 0 < phi < beta with Dirichlet walls.

    Returns (eigenvalue, exponent nu) with nu = pi/beta; the eigenfunction is
    sin(nu*phi) * sin(theta)**nu.
    """
    if not 0.0 < beta <= 2.0 * np.pi:
        raise ValueError("opening angle must lie in (0, 2*pi]")
    nu = np.pi / beta
    return nu * (nu + 1.0), nu


def legendre_P(nu: float, x):
    """Legendre function of the first kind, real degree nu, regular at x = 1.

    Evaluated as the Gauss hypergeometric series 2F1(-nu, nu+1; 1; (1-x)/2);
    requires x > -1 so the series argument stays below 1.
    """
    if nu < 0:
        raise ValueError("degree must be non-negative")
    x = np.asarray(x, dtype=float)
    if np.any(x <= -1.0) or np.any(x > 1.0):
        raise ValueError("argument must lie in (-1, 1]")
    return special.hyp2f1(-nu, nu + 1.0, 1.0, 0.5 * (1.0 - x))


def cap_alpha(s: float) -> float:
    """Characteristic exponent of the spherical cap with area fraction s.

    Smallest alpha >= 0 with P_alpha(cos theta0) = 0, cos theta0 = 1 - 2s;
    located by a coarse bracket scan followed by bisection to 1e-10.
    """
    if not 0.0 < s < 1.0:
        raise ValueError("area fraction must lie in (0, 1)")
    x = 1.0 - 2.0 * s
    theta0 = np.arccos(x)
    upper = 2.0 * J0 / theta0

    def f(a):
        return float(legendre_P(a, x))

    lo, flo = 0.0, f(0.0)
    hi = None
    a = _CAP_SCAN_STEP
    while a <= upper + _CAP_SCAN_STEP:
        fa = f(a)
        if flo * fa <= 0.0:
            hi, fhi = a, fa
            break
        lo, flo = a, fa
        a += _CAP_SCAN_STEP
    if hi is None:
        raise RuntimeError("no sign change found for the cap exponent")
    while hi - lo > CAP_ALPHA_TOL:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if flo * fm <= 0.0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def alpha_to_lambda(alpha: float, m: int = 3) -> float:
    """Ground-state energy alpha*(alpha + m - 2) on the (m-1)-sphere."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if m < 2:
        raise ValueError("dimension must be at least 2")
    return alpha * (alpha + m - 2.0)
