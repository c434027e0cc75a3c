"""Convexity-based lower bounds for the energies of sphere partitions.

The cap exponent alpha(S) of a domain of area fraction S is bounded below by
two explicit convex decreasing functions: a logarithmic/linear branch
(phi_infty) and a Bessel-zero branch (phi_hat3); their maximum is phi3.
Composing with alpha*(alpha+1) under an equal-split of area yields the
per-domain constants gamma_k and delta_k, a linear-in-k bound for large k,
and a spectral-sum bound obtained from the antisymmetrized k-particle ground
state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from scipy import special

# First zero of the order-0 Bessel function, 16 significant digits.
J0 = 2.404825557695773
J0_SQ = J0 * J0

# Ground-state energy of the unit-area planar disk; the large-k slope of the
# per-domain bound, times the sphere area.
FABER_KRAHN_DISK = math.pi * J0_SQ

# Literature value of the third convex bound at S = 1/3 (Wendel's tabulation);
# the defining table is not reproduced here, only this reference constant.
WENDEL_PHI_THIRD = 1.41167


def _check_fraction(s: float):
    if not 0.0 < s < 1.0:
        raise ValueError("area fraction must lie in (0, 1)")


def phi_infty(s: float) -> float:
    """Log/linear lower-bound branch: (1/2)log(1/(4S)) + 3/2 on (0, 1/4], 2(1-S) after."""
    _check_fraction(s)
    if s <= 0.25:
        return 0.5 * math.log(1.0 / (4.0 * s)) + 1.5
    return 2.0 * (1.0 - s)


def phi_hat3(s: float) -> float:
    """Bessel-zero lower-bound branch: (j0/2)(1/S - 1/2)^(1/2) - 1/2 below S = 1/2."""
    _check_fraction(s)
    if s >= 0.5:
        return 2.0 * (1.0 - s)
    return 0.5 * J0 * math.sqrt(1.0 / s - 0.5) - 0.5


def phi3(s: float) -> float:
    """Combined convex decreasing lower bound for the cap exponent."""
    return max(phi_hat3(s), phi_infty(s))


def gamma_k(k: int):
    """Equal-split bound phi_infty(1/k) * (1 + phi_infty(1/k)).

    Exact rational for k <= 4 (the linear branch 2(k-1)/k applies), float
    otherwise.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    if k <= 4:
        phi = Fraction(2 * (k - 1), k)
        return phi * (1 + phi)
    phi = phi_infty(1.0 / k)
    return phi * (1.0 + phi)


def _delta_closed_form(k) -> float:
    # also the large-k linear bound; shared so the two agree bitwise
    return 0.25 * J0_SQ * (k - 0.5) - 0.25


def delta_k(k: int) -> float:
    """Equal-split bound phi_hat3(1/k) * (1 + phi_hat3(1/k)).

    For k >= 3 this collapses to (j0^2/4)(k - 1/2) - 1/4 identically.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    if k >= 3:
        return _delta_closed_form(k)
    phi = phi_hat3(1.0 / k)
    return phi * (1.0 + phi)


def large_k_bound(k: int) -> float:
    """Linear-in-k bound (j0^2/4) k - (j0^2/8) - 1/4; equals delta_k for k >= 3."""
    if k < 3:
        raise ValueError("k must be at least 3")
    return _delta_closed_form(k)


def easy_lemma_min(k: int, rho: float) -> float:
    """Minimum of (1/k) sum alpha_j (alpha_j + 1) over nonnegative alphas summing to >= rho."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if rho <= 0:
        raise ValueError("rho must be positive")
    r = rho / k
    return r * (r + 1.0)


def fermionic_bound(spectrum, k: int) -> float:
    """Mean of the k smallest Dirichlet eigenvalues; a lower bound for the
    best mean per-domain energy over k-partitions."""
    if k < 1:
        raise ValueError("k must be at least 1")
    spectrum = list(spectrum)
    if len(spectrum) < k:
        raise ValueError("need at least k eigenvalues")
    return float(sum(spectrum[:k]) / k)


def nodal_count_bounds(ell: int):
    """Upper bounds for the nodal count of a degree-ell eigenfunction.

    Returns (courant, improved, karpushkin, leydold):
      courant     = ell^2 + 1
      improved    = ell(ell-1) + 2          (inversion-symmetry refinement)
      karpushkin  = (ell-1)^2 + 2 or + 1    (odd / even)
      leydold     = (ell+1)^2 / 2 or ell(ell+2)/2   (odd / even; conjectural)
    """
    if ell < 1:
        raise ValueError("degree must be at least 1")
    courant = ell * ell + 1
    improved = ell * (ell - 1) + 2
    if ell % 2:
        karpushkin = (ell - 1) ** 2 + 2
        leydold = (ell + 1) ** 2 // 2
    else:
        karpushkin = (ell - 1) ** 2 + 1
        leydold = ell * (ell + 2) // 2
    return courant, improved, karpushkin, leydold


def verify_j0(tol: float = 1e-13) -> float:
    """Newton refinement of the stored Bessel zero; raises if it drifts."""
    x = 2.4
    for _ in range(8):
        x = x + special.j0(x) / special.j1(x)  # j0' = -j1
    if abs(x - J0) > tol:
        raise AssertionError(f"refined zero {x!r} disagrees with stored constant")
    return x


@dataclass
class BoundReport:
    """Evaluated lower-bound constants for one k, with formula provenance."""

    k: int
    phi_infty: float
    phi_hat3: float
    phi3: float
    gamma: object  # Fraction for k <= 4, float otherwise
    delta: float
    large_k: float | None
    fermionic: float | None
    formulas: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.formulas:
            self.formulas = {
                "phi_infty": "(1/2)log(1/(4S)) + 3/2 for S <= 1/4, else 2(1-S)",
                "phi_hat3": "(j0/2)sqrt(1/S - 1/2) - 1/2 for S < 1/2, else 2(1-S)",
                "phi3": "max(phi_hat3, phi_infty)",
                "gamma": "phi_infty(1/k)(1 + phi_infty(1/k))",
                "delta": "phi_hat3(1/k)(1 + phi_hat3(1/k)) = (j0^2/4)(k - 1/2) - 1/4 for k >= 3",
                "large_k": "(j0^2/4)k - (j0^2/8) - 1/4",
                "fermionic": "(1/k) sum of the k smallest eigenvalues",
            }


def bound_report(k: int, spectrum=None) -> BoundReport:
    """Bundle all bound constants for one k; spectrum enables the fermionic entry."""
    s = 1.0 / k
    return BoundReport(
        k=k,
        phi_infty=phi_infty(s),
        phi_hat3=phi_hat3(s),
        phi3=phi3(s),
        gamma=gamma_k(k),
        delta=delta_k(k),
        large_k=large_k_bound(k) if k >= 3 else None,
        fermionic=None if spectrum is None else fermionic_bound(spectrum, k),
    )
