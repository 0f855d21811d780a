"""Secant-plane detection and verification on the Kummer variety.

A configuration is the data (Y = {a_1, ..., a_{m+2}}, zeta): the m+2
Kummer points K(zeta + a_i) are asked to lie on a common m-plane of
P^(2^g - 1).  The numerical criterion is the ratio of extreme singular
values of the matrix whose columns are the second-order theta vectors at
zeta + a_i; it is zero exactly on secant configurations, scale-free, and
smooth enough to minimize.

Two independent checks cross-validate each other: the singular-value
criterion and the bilinear identity

    sum_i alpha_i theta(z + 2 zeta + a_i) theta(z - a_i) = 0  for all z,

where alpha spans the null space of the secant matrix.  The identity is
a consequence of the addition formula, so it exercises a different code
path than the SVD.

Half-period bookkeeping: a point of the torus has 2^(2g) halvings; every
operation consuming a halved point takes an explicit lift in {0,1}^(2g)
(first g bits the integer part, last g bits the tau part), and the
verification operations enumerate all lifts rather than guessing one.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateSecantError,
    IllPosedError,
    ValidationError,
)
from .kummer import basis_for, half_period, second_order_values
from .simplex import nelder_mead
from .theta import DEFAULT_EPS, lattice_reduce, theta, torus_distance
from .util import as_point, complex_box, rng

SECANT_TOL = 1e-8


@dataclass
class SecantConfiguration:
    """Candidate (m+2)-secant: points a_1..a_{m+2}, offset zeta, fitted data."""

    pm: object
    m: int
    points: list
    zeta: np.ndarray
    residual: float | None = None
    alpha: np.ndarray | None = None
    search_info: dict | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        g = self.pm.g
        if self.m < 0:
            raise ValidationError("m must be nonnegative")
        if len(self.points) != self.m + 2:
            raise ValidationError(f"expected {self.m + 2} points, got {len(self.points)}")
        self.points = [as_point(p, g, name=f"points[{i}]") for i, p in enumerate(self.points)]
        self.zeta = as_point(self.zeta, g, name="zeta")


@dataclass
class PropagationResult:
    """The derived point set b_1..b_{m+2} for a shifted secant, plus the lift used."""

    zeta_prime: np.ndarray
    b_points: list
    lift: tuple


@dataclass
class PropagationCheck:
    best_lift: tuple
    best_residual: float
    table: list  # (lift bits, residual), all 2^(2g) rows


def secant_matrix(cfg, eps=DEFAULT_EPS):
    """2^g x (m+2) matrix of second-order values at zeta + a_i (columns unnormalized).

    An m-plane through m+2 points of P^(2^g - 1) needs m + 2 <= 2^g; the
    dimension check lives here because the pure-arithmetic operations
    (propagation, the involution identity) are meaningful for any m.
    """
    if cfg.m + 2 > 2**cfg.pm.g:
        raise ValidationError(
            f"m+2 = {cfg.m + 2} points exceed 2^g = {2**cfg.pm.g} coordinates"
        )
    basis = basis_for(cfg.pm)
    cols = [second_order_values(basis, cfg.zeta + a, eps=eps) for a in cfg.points]
    return np.stack(cols, axis=1)


def secant_residual(cfg, eps=DEFAULT_EPS):
    """sigma_{m+2} / sigma_1 of the secant matrix; near zero iff the plane exists.

    The value is stored back into ``cfg.residual``.
    """
    m = secant_matrix(cfg, eps=eps)
    if not np.all(np.isfinite(m)):
        raise IllPosedError("second-order values overflowed; arguments too far from the cell")
    s = np.linalg.svd(m, compute_uv=False)
    if s[0] < 1e3 * eps:
        raise IllPosedError(
            f"largest singular value {s[0]:.3e} is below the accuracy floor; "
            "the rank comparison is meaningless"
        )
    cfg.residual = float(s[-1] / s[0])
    return cfg.residual


def secant_coefficients(cfg, eps=DEFAULT_EPS, tol=SECANT_TOL):
    """Null vector alpha with sum_i alpha_i theta_j(zeta + a_i) = 0 for all j.

    Requires a verified secant (residual <= tol).  Refuses when the null
    direction is not unique (second-smallest singular value within 10x of
    the smallest).  Normalized so the largest-modulus entry is 1.
    """
    m = secant_matrix(cfg, eps=eps)
    _, s, vh = np.linalg.svd(m)
    if s[0] < 1e3 * eps:
        raise IllPosedError("secant matrix has no usable scale")
    ratio = float(s[-1] / s[0])
    cfg.residual = ratio
    if ratio > tol:
        raise ValidationError(
            f"not a secant configuration: residual {ratio:.3e} exceeds tolerance {tol:.1e}"
        )
    if s[-2] < 10.0 * s[-1] or s[-2] / s[0] <= tol:
        raise DegenerateSecantError(
            f"null space not one-dimensional (sigma ratios {s[-2] / s[0]:.3e} vs {ratio:.3e}); "
            "coefficients are not unique"
        )
    alpha = np.conj(vh[-1])
    pivot = int(np.argmax(np.abs(alpha)))
    alpha = alpha / alpha[pivot]
    cfg.alpha = alpha
    return alpha


def bilinear_residual(cfg, alpha, sample_count=50, seed=0, eps=DEFAULT_EPS):
    """Worst normalized defect of the bilinear identity over sampled z.

    Sample points come from a dedicated stream of the given seed; the
    result is max over samples of |sum_i t_i| / max_i |t_i| with
    t_i = alpha_i theta(z + 2 zeta + a_i) theta(z - a_i).
    """
    alpha = np.asarray(alpha, dtype=complex)
    if alpha.shape != (cfg.m + 2,):
        raise ValidationError(f"alpha must have length {cfg.m + 2}")
    if not np.all(np.isfinite(alpha)) or np.abs(alpha).max() == 0.0:
        raise ValidationError("alpha must be finite and nonzero")
    if sample_count < 1:
        raise ValidationError("sample_count must be positive")
    gen = rng(seed, 0xB1)
    pm = cfg.pm
    worst = 0.0
    for _ in range(sample_count):
        z = complex_box(gen, pm.g)
        terms = np.array(
            [
                alpha[i] * theta(pm, z + 2.0 * cfg.zeta + a, eps=eps) * theta(pm, z - a, eps=eps)
                for i, a in enumerate(cfg.points)
            ]
        )
        denom = np.abs(terms).max()
        if denom == 0.0:
            raise IllPosedError("all bilinear terms vanished at a sample point")
        worst = max(worst, abs(terms.sum()) / denom)
    return worst


def propagate(cfg, zeta_prime, lift):
    """Derived points of the shifted secant family.

    b_1 = zeta' + a_3 + (a_1 + a_2)/2 + half-period(lift),
    b_j = b_1 - a_3 + a_{j+2}      for 2 <= j <= m,
    b_{m+1} = a_2 + a_3 - b_1,
    b_{m+2} = a_1 + a_3 - b_1.

    Pure coordinate arithmetic; the linear identities among the b's hold
    to rounding.
    """
    if cfg.m < 1:
        raise ValidationError("propagation needs m >= 1")
    pm = cfg.pm
    zeta_prime = as_point(zeta_prime, pm.g, name="zeta_prime")
    h = half_period(pm, lift)
    a = cfg.points
    b1 = zeta_prime + a[2] + 0.5 * (a[0] + a[1]) + h
    bs = [b1]
    for j in range(2, cfg.m + 1):
        bs.append(b1 - a[2] + a[j + 1])
    bs.append(a[1] + a[2] - b1)
    bs.append(a[0] + a[2] - b1)
    return PropagationResult(zeta_prime, bs, tuple(int(x) for x in np.asarray(lift)))


def propagation_secant_check(cfg, zeta_prime, eps=DEFAULT_EPS, tol=1e-7):
    """Try every half-period lift of b_1 and rank the derived configurations.

    ``cfg`` must already be a verified secant (its residual is computed if
    absent).  Raises with the full residual table when no lift passes.
    """
    if cfg.m < 1:
        raise ValidationError("propagation check needs m >= 1")
    if cfg.residual is None:
        secant_residual(cfg, eps=eps)
    if cfg.residual > 10.0 * tol:
        raise ValidationError(
            f"input configuration is not a verified secant (residual {cfg.residual:.3e})"
        )
    pm = cfg.pm
    table = []
    best = None
    for bits in itertools.product((0, 1), repeat=2 * pm.g):
        res = propagate(cfg, zeta_prime, np.array(bits))
        derived = SecantConfiguration(pm, cfg.m, res.b_points, cfg.zeta)
        r = secant_residual(derived, eps=eps)
        table.append((bits, r))
        if best is None or r < best[1]:
            best = (bits, r)
    if best[1] > tol:
        err = IllPosedError(
            f"no lift reached residual {tol:.1e}; best {best[1]:.3e} at lift {best[0]}"
        )
        err.table = table
        raise err
    return PropagationCheck(best[0], best[1], table)


def involution_identity(pm, a_points, zeta_prime, lift):
    """Lattice-reduced distance between -b_1 - b_2 and -2 zeta' - sum(a_i).

    Quadrisecant case (m = 2); the identity is exact linear algebra modulo
    the period lattice, so the result is rounding-level for any input.
    """
    if len(a_points) != 4:
        raise ValidationError("the involution identity needs exactly 4 points")
    a = [as_point(p, pm.g, name=f"a[{i}]") for i, p in enumerate(a_points)]
    zeta_prime = as_point(zeta_prime, pm.g, name="zeta_prime")
    h = half_period(pm, lift)
    b1 = zeta_prime + a[2] + 0.5 * (a[0] + a[1]) + h
    b2 = b1 - a[2] + a[3]
    s = a[0] + a[1] + a[2] + a[3]
    diff = (-b1 - b2) - (-2.0 * zeta_prime - s)
    return float(np.linalg.norm(lattice_reduce(pm, diff)))


@dataclass
class SearchOptions:
    max_iter: int = 500
    tol: float = 1e-9
    step: float = 0.05
    seed: int = 0
    eps: float = DEFAULT_EPS
    collision_margin: float = 0.05


def secant_search(pm, m, points, zeta_seed, options=None):
    """Minimize the secant residual over zeta by Nelder-Mead (2g real unknowns).

    The search metric is the singular-value ratio of the column-normalized
    secant matrix, evaluated at the lattice-reduced zeta: the raw ratio is
    lattice-invariant but can be driven down by inflating one column's
    scale, and reduction plus normalization close that route.  Collisions
    (some zeta + a_i within ``collision_margin`` of +-(zeta + a_k) on the
    torus) sit on a plateau: there the rank condition is vacuous, and
    every point set has such trivial zeros at 2 zeta = -a_i - a_k.

    Deterministic given seed and options; the returned configuration
    carries the lattice-reduced best zeta, its residual, and the iteration
    trace in ``search_info``.  max_iter = 0 just scores the seed.
    """
    opts = options or SearchOptions()
    g = pm.g
    zeta_seed = as_point(zeta_seed, g, name="zeta_seed")

    def unpack(x):
        return lattice_reduce(pm, x[:g] + 1j * x[g:])

    def collided(zeta):
        args = [zeta + a for a in points]
        for i in range(len(args)):
            for k in range(i + 1, len(args)):
                if (
                    torus_distance(pm, args[i], args[k]) < opts.collision_margin
                    or torus_distance(pm, args[i], -args[k]) < opts.collision_margin
                ):
                    return True
        return False

    def objective(x):
        zeta = unpack(x)
        if collided(zeta):
            return 1.0
        cand = SecantConfiguration(pm, m, points, zeta)
        try:
            mat = secant_matrix(cand, eps=opts.eps)
        except IllPosedError:
            return 1.0
        if not np.all(np.isfinite(mat)):
            return 1.0
        norms = np.linalg.norm(mat, axis=0)
        if norms.min() == 0.0:
            return 1.0
        s = np.linalg.svd(mat / norms, compute_uv=False)
        return float(s[-1] / s[0])

    x0 = np.concatenate([zeta_seed.real, zeta_seed.imag])
    if opts.max_iter == 0:
        cfg = SecantConfiguration(pm, m, points, zeta_seed)
        secant_residual(cfg, eps=opts.eps)
        cfg.search_info = {"iterations": 0, "converged": False, "trace": []}
        return cfg
    gen = rng(opts.seed, 0x5E)
    steps = opts.step * (1.0 + 0.1 * gen.uniform(-1.0, 1.0, size=2 * g))
    result = nelder_mead(objective, x0, steps=steps, max_iter=opts.max_iter, tol=opts.tol)
    cfg = SecantConfiguration(pm, m, points, unpack(result.x))
    secant_residual(cfg, eps=opts.eps)
    cfg.search_info = {
        "iterations": result.iterations,
        "converged": result.converged,
        "trace": result.trace,
    }
    return cfg
