"""Moebius maps, cross-ratios, hypergeometric crossing weights and the
closed-form limit formulas, together with their covariance verifier.

The hypergeometric function is fixed at parameters (2/3, 1/3; 4/3): direct
series on [0, 1/2], analytic continuation in 1 - z on (1/2, 1), and Gauss
summation at z = 1.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateInput, DomainError, PoleError

_G = math.gamma
H1 = _G(4.0 / 3.0) * _G(1.0 / 3.0) / _G(2.0 / 3.0)  # H(1), Gauss summation


def _series_2f1(a, b, c, z, tol=1e-16, max_terms=400):
    term = 1.0
    total = 1.0
    for n in range(max_terms):
        term *= (a + n) * (b + n) / ((c + n) * (1.0 + n)) * z
        total += term
        if abs(term) < tol * abs(total):
            return total
    return total


def hyp2f1_weight(z):
    """H(z) = 2F1(2/3, 1/3; 4/3; z) on [0, 1], to ~1e-12 absolute."""
    if z < 0.0 or z > 1.0:
        raise DomainError("H(z) evaluated for z in [0, 1] only")
    if z == 1.0:
        return H1
    if z <= 0.5:
        return _series_2f1(2.0 / 3.0, 1.0 / 3.0, 4.0 / 3.0, z)
    # connection formula at 1 - z; the first block collapses by
    # 2F1(a, b; a+b-c+1; w) = 2F1(2/3, 1/3; 2/3; w) = (1-w)^{-1/3}
    w = 1.0 - z
    A = _G(4.0 / 3.0) * _G(1.0 / 3.0) / _G(2.0 / 3.0)
    B = _G(4.0 / 3.0) * _G(-1.0 / 3.0) / (_G(2.0 / 3.0) * _G(1.0 / 3.0))
    return A * z ** (-1.0 / 3.0) + B * w ** (1.0 / 3.0) * \
        _series_2f1(2.0 / 3.0, 1.0, 4.0 / 3.0, w)


def cardy_weights(chi):
    """Link-pattern weights (Z_a1, Z_a2) at cross-ratio chi in (0, 1).

    Z_a1 is the probability of a crossing between the first pair of
    boundary arcs; Z_a1 + Z_a2 = 1 identically.
    """
    if not (0.0 < chi < 1.0):
        raise DomainError("cardy_weights needs chi in (0, 1)")
    z1 = chi ** (1.0 / 3.0) * hyp2f1_weight(chi) / H1
    z2 = (1.0 - chi) ** (1.0 / 3.0) * hyp2f1_weight(1.0 - chi) / H1
    return z1, z2


def cross_ratio(x1, x2, x3, x4):
    """chi = (x2-x1)(x4-x3) / ((x4-x2)(x3-x1)); in (0,1) for ordered reals."""
    d42 = x4 - x2
    d31 = x3 - x1
    if x1 == x2 or x2 == x3 or x3 == x4 or d42 == 0 or d31 == 0 or x1 == x4:
        raise DegenerateInput("cross_ratio needs pairwise distinct points")
    return ((x2 - x1) * (x4 - x3)) / (d42 * d31)


def cross_ratio_points(z1, z2, z3, z4):
    """Complex cross-ratio of four points (same combination as cross_ratio)."""
    den = (z4 - z2) * (z3 - z1)
    if den == 0:
        raise DegenerateInput("coincident points")
    return ((z2 - z1) * (z4 - z3)) / den


def angles_for_chi(chi):
    """Four angles 0 < t1 < ... < t4 < pi whose circle points exp(2*i*t)
    realize the given cross-ratio (symmetric family: chi = cos^2 c)."""
    if not (0.0 < chi < 1.0):
        raise DomainError("chi must lie in (0, 1)")
    c = math.acos(math.sqrt(chi))
    return (0.5 * c, 0.5 * (math.pi - c), 0.5 * (math.pi + c),
            0.5 * (2.0 * math.pi - c))


@dataclass(frozen=True)
class MobiusMap:
    """z -> (a z + b) / (c z + d) with ad - bc != 0."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        if self.a * self.d - self.b * self.c == 0:
            raise DegenerateInput("singular Moebius coefficients")

    def __call__(self, z):
        den = self.c * z + self.d
        if den == 0:
            raise PoleError(f"Moebius map evaluated at its pole {z}")
        return (self.a * z + self.b) / den

    def deriv_mod(self, z):
        """|phi'(z)| = |ad - bc| / |cz + d|^2."""
        den = self.c * z + self.d
        if den == 0:
            raise PoleError(f"derivative at the pole {z}")
        return abs(self.a * self.d - self.b * self.c) / abs(den) ** 2

    def compose(self, other):
        """self o other."""
        return MobiusMap(self.a * other.a + self.b * other.c,
                         self.a * other.b + self.b * other.d,
                         self.c * other.a + self.d * other.c,
                         self.c * other.b + self.d * other.d)

    def inverse(self):
        return MobiusMap(self.d, -self.b, -self.c, self.a)

    @staticmethod
    def identity():
        return MobiusMap(1.0, 0.0, 0.0, 1.0)

    @staticmethod
    def half_plane(a, b, c, d):
        """Upper-half-plane preserving map: real coefficients, ad - bc > 0."""
        if a * d - b * c <= 0:
            raise DegenerateInput("need real coefficients with ad - bc > 0")
        return MobiusMap(float(a), float(b), float(c), float(d))

    @staticmethod
    def disk_automorphism(beta, alpha=0.0):
        """w -> e^{i alpha} (w + beta) / (1 + conj(beta) w), |beta| < 1."""
        if abs(beta) >= 1:
            raise DegenerateInput("|beta| must be < 1")
        rot = cmath.exp(1j * alpha)
        return MobiusMap(rot, rot * beta, beta.conjugate(), 1.0)


def mobius_apply(m: MobiusMap, z):
    return m(z)


def mobius_deriv(m: MobiusMap, z):
    return m.deriv_mod(z)


def disk_map_from_origin(z):
    """The disk automorphism phi_z with phi_z(0) = z and phi_z'(0) > 0."""
    return MobiusMap.disk_automorphism(complex(z), 0.0)


def pivotal_weight(thetas):
    """prod_{j<k} |sin(t_k - t_j)|^{1/3} for four angles in (0, pi)."""
    t = list(thetas)
    if len(t) != 4 or any(t[i] >= t[i + 1] for i in range(3)) \
            or t[0] <= 0 or t[3] >= math.pi:
        raise DomainError("need 0 < t1 < t2 < t3 < t4 < pi")
    out = 1.0
    for j in range(4):
        for k in range(j + 1, 4):
            out *= abs(math.sin(t[k] - t[j])) ** (1.0 / 3.0)
    return out


def _angles_from_circle_points(points):
    """Half-angles t in [0, pi) with exp(2 i t) = point, sorted ascending.

    The sin-product is invariant under a common rotation and under the
    branch wrap t -> t +/- pi, so any branch works."""
    ts = sorted((cmath.phase(p) % (2.0 * math.pi)) / 2.0 for p in points)
    return ts


def _pairwise_sin_product(ts):
    out = 1.0
    for j in range(4):
        for k in range(j + 1, 4):
            out *= abs(math.sin(ts[k] - ts[j])) ** (1.0 / 3.0)
    return out


def pivotal_domain_value(z, boundary_points, constant=1.0):
    """Rescaled pivotal density at z in the unit disk with four marked
    boundary points: constant * sin-product(angles of phi_z^{-1}(x_j))
    * |phi_z'(0)|^{-5/4}."""
    z = complex(z)
    if abs(z) >= 1:
        raise DomainError("z must lie inside the unit disk")
    phi = disk_map_from_origin(z)
    inv = phi.inverse()
    pre = [inv(complex(x)) for x in boundary_points]
    ts = _angles_from_circle_points(pre)
    return constant * _pairwise_sin_product(ts) * phi.deriv_mod(0.0) ** (-1.25)


# --- closed-form registry ---------------------------------------------------


def _require_ordered(args):
    if any(args[i] >= args[i + 1] for i in range(len(args) - 1)):
        raise DomainError("arguments must be strictly increasing reals")


def _l_log_factor(x1, x2, x3, x4):
    return math.log(((x4 - x2) * (x3 - x1)) / ((x3 - x2) * (x4 - x1)))


def _eval_bulk_two_point(args, constant):
    z1, z2 = (complex(a) for a in args)
    if z1 == z2:
        raise DegenerateInput("coincident points")
    return constant * abs(z2 - z1) ** (-5.0 / 24.0)


def _eval_r3(args, constant):
    z = [complex(a) for a in args]
    out = constant
    for j in range(3):
        for k in range(j + 1, 3):
            d = abs(z[k] - z[j])
            if d == 0:
                raise DegenerateInput("coincident points")
            out *= d ** (-1.25)
    return out


def _eval_l_log(args, constant):
    _require_ordered(args)
    x1, x2, x3, x4 = args
    return constant / (x2 - x1) ** 2 * _l_log_factor(x1, x2, x3, x4)


def _eval_mhat(args, constant):
    _require_ordered(args)
    x1, x2, y = args
    return constant / ((y - x1) * (y - x2) * (x2 - x1))


def _eval_k_fusion(args, constant):
    _require_ordered(args)
    x1, x, x4 = args
    return constant * (x - x1) ** (-2.0) * (x4 - x) ** (-2.0)


def _eval_bulk_kernel(args, constant):
    x, x3, x4 = (complex(a) for a in args)
    if x == x3 or x == x4 or x3 == x4:
        raise DegenerateInput("coincident points")
    return constant * abs(x - x3) ** (-1.25) * abs(x - x4) ** (-1.25) * \
        abs(x3 - x4) ** (25.0 / 24.0)


def _eval_boundary_kernel(args, constant):
    _require_ordered(args)
    x, x3, x4 = args
    return constant * (x3 - x) ** (-2.0) * (x4 - x) ** (-2.0) * \
        (x4 - x3) ** (4.0 / 3.0)


def _eval_pivotal_disk(args, constant):
    return constant * pivotal_weight(args)


# formula id -> (evaluator, per-point covariance exponents, map family)
CLOSED_FORMS = {
    "bulk_two_point": (_eval_bulk_two_point, (5 / 48, 5 / 48), "plane"),
    "r3": (_eval_r3, (5 / 4, 5 / 4, 5 / 4), "plane"),
    "l_log": (_eval_l_log, (1.0, 1.0, 0.0, 0.0), "half_plane"),
    "mhat_three_point": (_eval_mhat, (1.0, 1.0, 1.0), "half_plane"),
    "k_fusion": (_eval_k_fusion, (1.0, 2.0, 1.0), "half_plane"),
    "bulk_ope_kernel": (_eval_bulk_kernel, (5 / 4, 5 / 48, 5 / 48), "plane"),
    "boundary_ope_kernel": (_eval_boundary_kernel, (2.0, 1 / 3, 1 / 3),
                            "half_plane"),
    "pivotal_disk": (_eval_pivotal_disk, None, "disk_angles"),
    "pivotal_domain": (None, None, "disk"),
}


def closed_form_eval(formula, args, constant=1.0):
    """Evaluate a registered limit formula with a caller-supplied constant."""
    if formula == "pivotal_domain":
        z, pts = args[0], args[1:]
        return pivotal_domain_value(z, pts, constant)
    try:
        fn, _, _ = CLOSED_FORMS[formula]
    except KeyError:
        raise DomainError(f"unknown formula {formula!r}")
    if fn is None:
        raise DomainError(f"{formula} needs its dedicated evaluator")
    return fn(args, constant)


def _random_plane_map(rng, points):
    for _ in range(200):
        coef = rng.normal(size=8)
        m = MobiusMap(complex(coef[0], coef[1]), complex(coef[2], coef[3]),
                      complex(coef[4], coef[5]), complex(coef[6], coef[7]))
        det = m.a * m.d - m.b * m.c
        if abs(det) < 1e-3:
            continue
        if all(abs(m.c * complex(p) + m.d) > 0.15 for p in points):
            return m
    raise RuntimeError("could not sample an admissible plane map")


def _random_half_plane_map(rng, points):
    xs = [float(p) for p in points]
    for _ in range(500):
        a, b, c, d = rng.normal(size=4)
        if a * d - b * c <= 1e-3:
            continue
        if c != 0:
            pole = -d / c
            if min(xs) - 0.5 <= pole <= max(xs) + 0.5:
                continue
        m = MobiusMap(float(a), float(b), float(c), float(d))
        imgs = [m(x).real if isinstance(m(x), complex) else m(x) for x in xs]
        imgs = [float(np.real(m(x))) for x in xs]
        if all(imgs[i] < imgs[i + 1] for i in range(len(imgs) - 1)):
            return m
    raise RuntimeError("could not sample an admissible half-plane map")


def _random_disk_map(rng):
    r = math.sqrt(rng.uniform(0.0, 0.64))
    ang = rng.uniform(0.0, 2.0 * math.pi)
    alpha = rng.uniform(0.0, 2.0 * math.pi)
    return MobiusMap.disk_automorphism(r * cmath.exp(1j * ang), alpha)


def verify_covariance(formula, args, n_maps=100, tol=1e-10, seed=1234,
                      constant=1.0):
    """Check the Moebius covariance identity of a closed form on random
    admissible maps; returns the worst relative error (raises on failure).

    The identity is  f(phi(x)) = f(x) * prod_j |phi'(x_j)|^{-alpha_j}
    (for the pivotal formula, with the single factor |phi'(z)|^{-5/4}).
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    if formula == "pivotal_domain":
        z, pts = complex(args[0]), [complex(p) for p in args[1:]]
        base = pivotal_domain_value(z, pts, constant)
        for _ in range(n_maps):
            m = _random_disk_map(rng)
            lhs = pivotal_domain_value(m(z), [m(p) for p in pts], constant)
            rhs = base * m.deriv_mod(z) ** (-1.25)
            err = abs(lhs - rhs) / abs(rhs)
            worst = max(worst, err)
            if err > tol:
                raise AssertionError(
                    f"covariance violated for pivotal_domain: {err:.2e}")
        return worst
    fn, exps, family = CLOSED_FORMS[formula]
    base = fn(args, constant)
    for _ in range(n_maps):
        if family == "plane":
            m = _random_plane_map(rng, args)
            imgs = [m(complex(p)) for p in args]
            derivs = [m.deriv_mod(complex(p)) for p in args]
        else:
            m = _random_half_plane_map(rng, args)
            imgs = [float(np.real(m(float(p)))) for p in args]
            derivs = [m.deriv_mod(float(p)) for p in args]
        lhs = fn(imgs, constant)
        rhs = base
        for d, a in zip(derivs, exps):
            rhs *= d ** (-a)
        err = abs(lhs - rhs) / abs(rhs)
        worst = max(worst, err)
        if err > tol:
            raise AssertionError(f"covariance violated for {formula}: {err:.2e}")
    return worst
