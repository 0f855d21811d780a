"""Verified test geometry on genus-2 Jacobians.

Genus 2 is the one place where the classical trisecant family is available
at desk scale without any curve integration: every indecomposable
principally polarized abelian surface is a Jacobian, and its theta divisor
IS the embedded curve, so root finding on theta = 0 stands in for
Abel-Jacobi integration.

Construction used throughout: four divisor points z_a, z_b, z_c, z_d give
three collinear Kummer points at the half-points of

    z_a + z_b - z_c - z_d,   z_a - z_b + z_c - z_d,   z_a - z_b - z_c + z_d

(each combination has two plus and two minus signs, so the Riemann-constant
translation cancels).  The halvings carry a half-period ambiguity; only the
relative lifts matter, and the consistent choice is found by exhaustive
search.  The confluent limit z_d -> z_c of the same construction supplies
the tangency datum that seeds the elimination hierarchy.

Decomposable period matrices (products of elliptic curves) would break all
of this; the sampler screens candidates by requiring every even theta
constant to stay away from zero.  Indecomposability is otherwise assumed,
never verified.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, IllPosedError, ValidationError
from .kummer import all_half_periods, basis_for, second_order_derivative, second_order_values
from .secant import SecantConfiguration, secant_residual
from .theta import DEFAULT_EPS, lattice_reduce, make_period_matrix, theta, torus_distance
from .util import rng

_SEPARATION = 1e-3


@dataclass
class ThetaDivisorPoint:
    """A numerically located point of the theta divisor."""

    z: np.ndarray
    residual: float


@dataclass
class FayResult:
    config: SecantConfiguration
    lifts: tuple  # relative lift bits applied to the second and third point
    residual: float
    table: list  # ((bits2, bits3), residual) for every searched pair


@dataclass
class TangencyDatum:
    """Seed for the hierarchy: line through K(b) tangent to the Kummer variety at K(u)."""

    u: np.ndarray
    b: np.ndarray
    direction: np.ndarray
    lift: tuple
    residual: float
    table: list


def _require_genus2(pm):
    if pm.g != 2:
        raise ValidationError("scenario construction is implemented for g = 2 only")


def find_theta_divisor_point(pm, seed, eps=DEFAULT_EPS, tol=1e-11, max_iter=100, max_restarts=20):
    """Damped Newton on Re theta = Im theta = 0 along a seeded affine slice.

    The seed fixes which coordinate is pinned (two real coordinates) and
    the starting value of the free one; distinct seeds therefore land on
    well-separated divisor points with high probability.
    """
    _require_genus2(pm)
    gen = rng(seed, 0xD1)
    trace = []
    eye = np.eye(2)
    eps_eval = min(eps, 1e-3 * tol)

    def newton(z0, free, budget):
        # damped Newton in the free coordinate, boxed near the fundamental cell
        z = z0.copy()
        f = theta(pm, z, eps=eps_eval)
        it = 0
        for it in range(budget):
            if abs(f) < tol:
                return z, abs(f), it
            fp = theta(pm, z, deriv=(eye[free],), eps=eps_eval)
            if abs(fp) < 1e-12:
                break
            step = -f / fp
            lam = 1.0
            while lam > 2**-9:
                w2 = z[free] + lam * step
                if abs(w2.real) < 2.5 and abs(w2.imag) < 1.5:
                    z2 = z.copy()
                    z2[free] = w2
                    f2 = theta(pm, z2, eps=eps_eval)
                    if abs(f2) < (1.0 - 0.25 * lam) * abs(f):
                        break
                lam *= 0.5
            else:
                break
            z, f = z2, f2
        return z, abs(f), it

    for restart in range(max_restarts):
        free = int(gen.integers(0, 2))
        z0 = np.empty(2, dtype=complex)
        z0[free] = gen.uniform(-0.4, 0.4) + 1j * gen.uniform(-0.3, 0.3)
        z0[1 - free] = gen.uniform(-0.4, 0.4) + 1j * gen.uniform(-0.3, 0.3)
        z, res, it = newton(z0, free, max_iter)
        if res < tol:
            reduced = lattice_reduce(pm, z)
            res_red = abs(theta(pm, reduced, eps=eps_eval))
            if res_red >= tol:
                # the quasi-periodicity factor inflated the defect; polish
                reduced, res_red, _ = newton(reduced, free, 20)
            if res_red < tol:
                z, res = reduced, res_red
            return ThetaDivisorPoint(z, res)
        trace.append((restart, it, float(res)))
    raise ConvergenceFailure(
        f"theta divisor root finding failed after {max_restarts} restarts", trace=trace
    )


def project_to_divisor(pm, z0, tol=1e-12, max_iter=40):
    """Newton-project z0 onto theta = 0 along the gradient direction (g = 2).

    Moves z only in the direction of grad(theta), so the projection of a
    point already near the divisor barely disturbs its curve parameter;
    used to step along the divisor curve.
    """
    _require_genus2(pm)
    z = np.asarray(z0, dtype=complex).copy()
    eye = np.eye(2)
    f = theta(pm, z, eps=1e-14)
    for _ in range(max_iter):
        if abs(f) < tol:
            return z
        grad = np.array([theta(pm, z, deriv=(eye[i],), eps=1e-14) for i in range(2)])
        slope = grad @ grad
        if abs(slope) == 0.0:
            break
        step = -(f / slope) * grad
        lam = 1.0
        while lam > 2**-9:
            z2 = z + lam * step
            f2 = theta(pm, z2, eps=1e-14)
            if abs(f2) < (1.0 - 0.25 * lam) * abs(f):
                break
            lam *= 0.5
        else:
            break
        z, f = z2, f2
    if abs(f) >= tol:
        raise ConvergenceFailure(f"divisor projection stalled at |theta| = {abs(f):.3e}")
    return z


def theta_tangent_direction(pm, point, eps=DEFAULT_EPS):
    """Unit tangent to the divisor curve at a point of theta = 0 (g = 2)."""
    _require_genus2(pm)
    eye = np.eye(2)
    grad = np.array([theta(pm, point, deriv=(eye[i],), eps=eps) for i in range(2)])
    if np.abs(grad).max() == 0.0:
        raise IllPosedError("gradient vanishes; singular divisor point")
    v = np.array([-grad[1], grad[0]])
    return v / np.linalg.norm(v)


def _check_separation(pm, pts):
    for i in range(len(pts)):
        for k in range(i + 1, len(pts)):
            d = torus_distance(pm, pts[i], pts[k])
            if d < _SEPARATION:
                raise ValidationError(
                    f"divisor points {i} and {k} are only {d:.2e} apart "
                    f"(need >= {_SEPARATION:.0e})"
                )


def fay_configuration(pm, divisor_points, eps=DEFAULT_EPS, tol=1e-7):
    """Trisecant candidate from four divisor points, best relative lifts.

    Returns the m = 1 configuration (zeta = 0, the lifts baked into the
    stored points).  Raises with the full lift-residual table when no lift
    reaches the tolerance.
    """
    _require_genus2(pm)
    if len(divisor_points) != 4:
        raise ValidationError("need exactly four divisor points")
    pts = [p.z if isinstance(p, ThetaDivisorPoint) else np.asarray(p, complex) for p in divisor_points]
    _check_separation(pm, pts)
    za, zb, zc, zd = pts
    # reducing by full lattice vectors changes nothing projectively but
    # keeps the second-order columns comparably scaled
    p1 = lattice_reduce(pm, 0.5 * (za + zb - zc - zd))
    p2 = lattice_reduce(pm, 0.5 * (za - zb + zc - zd))
    p3 = lattice_reduce(pm, 0.5 * (za - zb - zc + zd))

    basis = basis_for(pm)
    hp = all_half_periods(pm)
    v1 = second_order_values(basis, p1, eps=eps)
    v2 = {bits: second_order_values(basis, p2 + h, eps=eps) for bits, h in hp}
    v3 = {bits: second_order_values(basis, p3 + h, eps=eps) for bits, h in hp}

    table = []
    best = None
    for b2, h2 in hp:
        for b3, h3 in hp:
            mat = np.stack([v1, v2[b2], v3[b3]], axis=1)
            s = np.linalg.svd(mat, compute_uv=False)
            r = float(s[-1] / s[0])
            table.append(((b2, b3), r))
            if best is None or r < best[2]:
                best = (b2, b3, r)
    b2, b3, r = best
    lift_map = dict(hp)
    points = [p1, p2 + lift_map[b2], p3 + lift_map[b3]]
    cfg = SecantConfiguration(pm, 1, points, np.zeros(2, dtype=complex))
    secant_residual(cfg, eps=eps)
    if cfg.residual > tol:
        err = IllPosedError(
            f"no consistent lift found: best residual {cfg.residual:.3e} exceeds {tol:.1e}"
        )
        err.table = table
        raise err
    return FayResult(cfg, (b2, b3), cfg.residual, table)


def degenerate_fay_configuration(pm, divisor_points, eps=DEFAULT_EPS, tol=1e-6):
    """Confluent limit z_d -> z_c: tangency datum (u, b_1, direction).

    The two colliding Kummer arguments merge at u = (z_a - z_b)/2 and
    approach it along the divisor tangent at z_c, so the secant line
    degenerates to the tangent line at K(u) through K(b_1) with
    b_1 = (z_a + z_b)/2 - z_c.  Only the lift of b_1 relative to u
    matters; it is found by exhaustive search over the 16 half-periods.
    """
    _require_genus2(pm)
    if len(divisor_points) != 3:
        raise ValidationError("need exactly three divisor points")
    pts = [p.z if isinstance(p, ThetaDivisorPoint) else np.asarray(p, complex) for p in divisor_points]
    _check_separation(pm, pts)
    za, zb, zc = pts
    u = lattice_reduce(pm, 0.5 * (za - zb))
    b1 = lattice_reduce(pm, 0.5 * (za + zb) - zc)
    direction = theta_tangent_direction(pm, zc, eps=eps)

    basis = basis_for(pm)
    ku = second_order_values(basis, u, eps=eps)
    dku = second_order_derivative(basis, u, direction, eps=eps)
    cu = ku / np.linalg.norm(ku)
    cd = dku / np.linalg.norm(dku)
    table = []
    best = None
    for bits, h in all_half_periods(pm):
        kb = second_order_values(basis, b1 + h, eps=eps)
        mat = np.stack([cu, kb / np.linalg.norm(kb), cd], axis=1)
        s = np.linalg.svd(mat, compute_uv=False)
        r = float(s[-1] / s[0])
        table.append((bits, r))
        if best is None or r < best[1]:
            best = (bits, r)
    bits, r = best
    lift_map = dict(all_half_periods(pm))
    if r > tol:
        err = IllPosedError(f"tangency residual {r:.3e} exceeds {tol:.1e} for every lift")
        err.table = table
        raise err
    return TangencyDatum(u, b1 + lift_map[bits], direction, bits, r, table)


def even_theta_constants(pm, eps=DEFAULT_EPS):
    """Values of the ten even-characteristic theta constants (g = 2)."""
    _require_genus2(pm)
    vals = []
    for a in itertools.product((0.0, 0.5), repeat=2):
        for b in itertools.product((0.0, 0.5), repeat=2):
            av, bv = np.array(a), np.array(b)
            if int(round(4.0 * av @ bv)) % 2 == 1:
                continue
            pref = np.exp(1j * np.pi * (av @ pm.tau @ av) + 2j * np.pi * (av @ bv))
            vals.append(pref * theta(pm, pm.tau @ av + bv, eps=eps))
    return np.array(vals)


def sample_genus2_period_matrix(seed, max_tries=64):
    """Random indecomposable-looking genus-2 period matrix, deterministically.

    Screens candidates: moderate eigenvalue range for Im(tau) and every
    even theta constant of modulus > 1e-6 (a vanishing even constant marks
    a decomposable surface).
    """
    gen = rng(seed, 0x7A)
    for _ in range(max_tries):
        a = gen.normal(size=(2, 2)) * 0.6
        y = a @ a.T + 0.5 * np.eye(2)
        eigs = np.linalg.eigvalsh(y)
        if eigs[0] < 0.35 or eigs[-1] > 2.5:
            continue
        x = gen.uniform(-0.45, 0.45, size=(2, 2))
        x = 0.5 * (x + x.T)
        pm = make_period_matrix(2, x + 1j * y)
        if np.abs(even_theta_constants(pm)).min() > 1e-6:
            return pm
    raise ConvergenceFailure(f"no acceptable period matrix in {max_tries} draws")
