"""Riemann theta evaluation by truncated lattice sums.

Convention used everywhere in this package (zero characteristic):

    theta(z) = sum over n in Z^g of exp(i pi n.tau.n + 2 pi i n.z)

for tau symmetric with positive-definite imaginary part Y = Im(tau).
This function is even and quasi-periodic,

    theta(z + tau n + m) = exp(-i pi n.tau.n - 2 pi i n.z) theta(z),

and the evaluator always reduces the argument by the period lattice first,
tracking the exponential prefactor exactly, so the summed series stays
numerically small no matter how large the input is.

Directional derivatives are exact: each direction W contributes the
per-term factor 2 pi i (n.W).  Finite differences never appear here.

Truncation: terms are summed over integer points inside an ellipsoid
||T(n + q)|| <= R where T is the Cholesky factor of Y (so ||T x||^2 =
x.Y.x) and q = Y^{-1} Im(z) after reduction.  The radius R comes from a
provable Gaussian-tail bound: each excluded lattice point owns a disjoint
ball of radius rho/2 (rho a lower bound on the shortest vector of T Z^g),
so the excluded mass is at most an explicit incomplete-gamma integral,
with the polynomial derivative factors bounded by (2 pi)^N (r/s + c)^N.
Larger derivative order or smaller eps never shrinks the radius.

The only shared state is a read-mostly cache of enumerated lattice points
(with their z-independent Gaussian phases), keyed by period-matrix digest
and enumeration radius.  Inserts are idempotent, so concurrent use is safe.
"""

import hashlib
import math

import numpy as np
from scipy.special import gammaincc

from .errors import ValidationError
from .util import as_point

DEFAULT_EPS = 1e-12
MAX_DERIV_ORDER = 12

_TWO_PI_I = 2j * np.pi
_RADIUS_STEP = 0.25
_RADIUS_MAX = 48.0

# (digest, radius) -> _LatticePoints; module-wide so equal matrices share work
_LATTICE_STORE = {}


class _LatticePoints:
    """Integer points with ||T n|| <= radius plus their Gaussian phases exp(i pi n.tau.n)."""

    __slots__ = ("radius", "points", "gauss")

    def __init__(self, radius, points, gauss):
        self.radius = radius
        self.points = points
        self.gauss = gauss


class PeriodMatrix:
    """A symmetric g x g complex matrix with positive-definite imaginary part.

    Derived quantities used by the evaluator are computed once here:
    the Cholesky factor T of Im(tau), the extreme eigenvalues of Im(tau)
    (lam_min is recorded for validation and error bounds), and a content
    digest for cache keying.  Instances are treated as immutable.
    """

    def __init__(self, tau):
        tau = np.asarray(tau, dtype=complex)
        if tau.ndim != 2 or tau.shape[0] != tau.shape[1] or tau.shape[0] < 1:
            raise ValidationError(f"period matrix must be square, got shape {tau.shape}")
        if not np.all(np.isfinite(tau)):
            raise ValidationError("period matrix entries must be finite")
        scale = max(np.abs(tau).max(), 1.0)
        asym = np.abs(tau - tau.T).max()
        if asym > 1e-14 * scale:
            raise ValidationError(
                f"period matrix is not symmetric: max |tau_ij - tau_ji| = {asym:.3e} "
                f"exceeds 1e-14 * max|tau| = {1e-14 * scale:.3e}"
            )
        tau = 0.5 * (tau + tau.T)
        y = tau.imag.copy()
        eigs = np.linalg.eigvalsh(y)
        if eigs[0] <= 0.0:
            raise ValidationError(
                f"imaginary part is not positive definite: smallest eigenvalue {eigs[0]:.3e}"
            )
        self.g = tau.shape[0]
        self.tau = tau
        self.im = y
        self.re = tau.real.copy()
        self.im_inv = np.linalg.inv(y)
        self.lam_min = float(eigs[0])
        self.lam_max = float(eigs[-1])
        self.s_min = math.sqrt(self.lam_min)
        self.s_max = math.sqrt(self.lam_max)
        # T with ||T x||^2 = x.Y.x; numpy cholesky returns L with L L^T = Y
        self.chol = np.linalg.cholesky(y).T
        # worst-case ||T q|| over the reduced cube |q_i| <= 1/2
        self.half_diag = 0.5 * math.sqrt(self.g) * self.s_max
        self.digest = hashlib.sha256(tau.tobytes()).hexdigest()
        self._radius_cache = {}

    def __repr__(self):
        return f"PeriodMatrix(g={self.g}, lam_min={self.lam_min:.4g})"


def make_period_matrix(g, entries):
    """Validate and build a PeriodMatrix of dimension g."""
    if int(g) != g or g < 1:
        raise ValidationError(f"dimension must be a positive integer, got {g!r}")
    entries = np.asarray(entries, dtype=complex)
    if entries.shape != (g, g):
        raise ValidationError(f"expected a {g}x{g} matrix, got shape {entries.shape}")
    return PeriodMatrix(entries)


def reduce_argument(pm, z):
    """Split z = z_red + tau n0 + m0 with z_red in the reduced cell.

    Returns (z_red, n0, m0, w) where exp(w) is the exact quasi-periodicity
    prefactor: theta(z) = exp(w) * theta(z_red).
    """
    q = pm.im_inv @ z.imag
    n0 = np.rint(q).astype(np.int64)
    z1 = z - pm.tau @ n0
    m0 = np.rint(z1.real).astype(np.int64)
    z_red = z1 - m0
    w = -1j * np.pi * (n0 @ pm.tau @ n0) - _TWO_PI_I * (n0 @ z_red)
    return z_red, n0, m0, w


def lattice_reduce(pm, v):
    """Representative of v modulo Z^g + tau Z^g with near-minimal coordinates."""
    v = np.asarray(v, dtype=complex)
    q = pm.im_inv @ v.imag
    n = np.rint(q)
    v1 = v - pm.tau @ n
    return v1 - np.rint(v1.real)


def torus_distance(pm, p, q):
    """Euclidean norm of the lattice-reduced difference p - q."""
    return float(np.linalg.norm(lattice_reduce(pm, np.asarray(p) - np.asarray(q))))


def _validate_deriv(pm, deriv):
    dirs = []
    for k, w in enumerate(deriv):
        dirs.append(as_point(w, pm.g, name=f"derivative direction {k}"))
    if len(dirs) > MAX_DERIV_ORDER:
        raise ValidationError(f"derivative order {len(dirs)} exceeds maximum {MAX_DERIV_ORDER}")
    return dirs


def _tail_bound(g, s_min, order, c0, radius):
    """Upper bound on the lattice-sum mass outside the ellipsoid of the given radius.

    Bound for unit-norm derivative directions and with the exp(pi q.Y.q)
    scale factored out by the caller.  Every excluded point n owns a
    disjoint ball of radius rho/2 around v = T(n+q); on that ball the
    integrand (2 pi)^N (||x||/s + c)^N exp(-pi ||x||^2) dominates the term,
    which gives the incomplete-gamma expression below.
    """
    rho = s_min  # ||T n|| >= s_min ||n|| >= s_min for n != 0
    r0 = radius - 0.5 * rho
    if r0 <= 0.0:
        return math.inf
    beta = 1.0 / s_min
    gamma = c0 + 0.5 * rho / s_min
    count_factor = g / (0.5 * rho) ** g
    x = math.pi * r0 * r0
    total = 0.0
    for j in range(order + 1):
        a = 0.5 * (g + j)
        integral = math.gamma(a) * float(gammaincc(a, x)) / (2.0 * math.pi ** a)
        total += math.comb(order, j) * beta**j * gamma ** (order - j) * integral
    return (2.0 * math.pi) ** order * count_factor * total


def _solve_radius(pm, order, c0, eps):
    """Smallest radius on a fixed grid whose tail bound is below eps.

    Cached per (order, quantized c0, decade of eps); quantization always
    rounds toward the safe side, so the cached radius stays valid.
    """
    c0_q = math.ceil(c0 * 4.0) / 4.0
    if eps <= 0.0 or not math.isfinite(eps):
        eps_q = 1e-300
    else:
        eps_q = 10.0 ** math.floor(math.log10(eps))
    key = (order, c0_q, eps_q)
    hit = pm._radius_cache.get(key)
    if hit is not None:
        return hit
    r = max(1.0, 0.5 * pm.s_min + _RADIUS_STEP)
    while r < _RADIUS_MAX and _tail_bound(pm.g, pm.s_min, order, c0_q, r) > eps_q:
        r += _RADIUS_STEP
    pm._radius_cache[key] = r
    return r


def truncation_radius(pm, z, order=0, eps=DEFAULT_EPS):
    """Radius R such that the series tail outside ||T(n+q)|| <= R is below eps.

    Monotone by construction: the result is the running maximum of the
    solved radii over derivative orders 0..order, and the underlying
    solver never shrinks with decreasing eps.
    """
    if eps <= 0:
        raise ValidationError("eps must be positive")
    if order < 0 or order > MAX_DERIV_ORDER:
        raise ValidationError(f"order must lie in 0..{MAX_DERIV_ORDER}")
    z = as_point(z, pm.g, name="z")
    z_red, n0, _, _ = reduce_argument(pm, z)
    q = pm.im_inv @ z_red.imag
    qq = float(q @ pm.im @ q)
    c0 = float(np.linalg.norm(q + n0))
    eps_solver = eps * math.exp(-math.pi * qq)
    return max(_solve_radius(pm, n, c0, eps_solver) for n in range(order + 1))


def lattice_points(pm, radius):
    """All integer points with ||T n|| <= radius, with cached Gaussian phases.

    Enumeration is a box scan |n_i| <= ceil(radius / s_min) filtered by the
    ellipsoid norm, in a fixed deterministic order.
    """
    key = (pm.digest, radius)
    hit = _LATTICE_STORE.get(key)
    if hit is not None:
        return hit
    g = pm.g
    bound = int(math.ceil(radius / pm.s_min))
    axes = [np.arange(-bound, bound + 1)] * g
    grid = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([a.ravel() for a in grid], axis=1).astype(np.int64)
    norms = np.linalg.norm(pts @ pm.chol.T, axis=1)
    pts = pts[norms <= radius]
    quad = np.einsum("ij,jk,ik->i", pts, pm.tau, pts)
    gauss = np.exp(1j * np.pi * quad)
    entry = _LatticePoints(radius, pts, gauss)
    _LATTICE_STORE[key] = entry
    return entry


def _bucket(radius):
    return math.ceil(radius * 2.0) / 2.0


def theta(pm, z, deriv=(), eps=DEFAULT_EPS):
    """Evaluate theta (or a mixed directional derivative) to absolute accuracy eps.

    ``deriv`` is a sequence of direction vectors; each contributes a factor
    2 pi i (n.W) per lattice term.  A zero direction makes the derivative
    vanish identically and returns 0 at once.  Identical inputs give
    bit-identical results within one process.
    """
    if eps <= 0:
        raise ValidationError("eps must be positive")
    z = as_point(z, pm.g, name="z")
    dirs = _validate_deriv(pm, deriv)
    norms = [float(np.linalg.norm(w)) for w in dirs]
    if any(n == 0.0 for n in norms):
        return 0.0 + 0.0j
    dir_scale = math.prod(norms) if norms else 1.0
    units = [w / n for w, n in zip(dirs, norms)]

    z_red, n0, _, w = reduce_argument(pm, z)
    pmag = math.exp(min(w.real, 700.0))
    q = pm.im_inv @ z_red.imag
    qq = float(q @ pm.im @ q)
    c0 = float(np.linalg.norm(q + n0))
    order = len(units)

    eps_eff = eps / max(1.0, pmag * dir_scale)
    radius = _solve_radius(pm, order, c0, eps_eff * math.exp(-math.pi * qq))
    pts = lattice_points(pm, _bucket(radius + pm.half_diag))

    terms = pts.gauss * np.exp(_TWO_PI_I * (pts.points @ z_red))
    if units:
        shifted = pts.points - n0
        for u in units:
            terms = terms * (_TWO_PI_I * (shifted @ u))
    # the prefactor may exceed double range for extreme arguments; the
    # reduced sum itself is always tame, so inf here is an honest answer
    with np.errstate(over="ignore", invalid="ignore"):
        return complex(np.exp(w) * dir_scale * terms.sum())


def theta_translate(pm, z, x, deriv=(), eps=DEFAULT_EPS):
    """The translated section z -> theta(z - x), with the same derivative semantics."""
    z = as_point(z, pm.g, name="z")
    x = as_point(x, pm.g, name="x")
    return theta(pm, z - x, deriv=deriv, eps=eps)
