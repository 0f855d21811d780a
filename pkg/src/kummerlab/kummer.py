"""Level-2 theta basis, the Kummer map, and the addition-formula oracle.

The basis of the 2^g-dimensional space of second-order theta functions is

    theta_j(z) = theta[sigma_j, 0](2z; 2tau),

indexed by the half-integer characteristics sigma_j in {0, 1/2}^g in
lexicographic order.  With the zero-characteristic convention of
:mod:`kummerlab.theta` this basis satisfies the Riemann addition formula
with unit coefficients,

    theta(z+w) theta(z-w) = sum_j theta_j(z) theta_j(w),

which :func:`addition_residual` checks numerically; that residual is the
cross-module oracle tying the scalar engine and this basis together.
Each theta_j reduces to the scalar engine through the characteristic
shift  theta[s,0](v; O) = exp(i pi s.O.s + 2 pi i s.v) theta(v + O s; O).
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneratePointError, ValidationError
from .theta import DEFAULT_EPS, PeriodMatrix, theta
from .util import as_point

_BASIS_ATTR = "_second_order_basis"


def characteristics(g):
    """The 2^g half-integer characteristic vectors, lexicographic."""
    return np.array(list(itertools.product((0.0, 0.5), repeat=g)))


@dataclass
class SecondOrderBasis:
    """The basis {theta_0, ..., theta_{2^g - 1}} attached to one period matrix.

    Holds the doubled period matrix so its lattice cache stays warm across
    evaluations.
    """

    pm: PeriodMatrix
    pm2: PeriodMatrix = field(init=False)
    labels: np.ndarray = field(init=False)
    dim: int = field(init=False)

    def __post_init__(self):
        self.pm2 = PeriodMatrix(2.0 * self.pm.tau)
        self.labels = characteristics(self.pm.g)
        self.dim = 2 ** self.pm.g


def basis_for(pm):
    """Memoized basis for a period matrix (idempotent attach)."""
    basis = getattr(pm, _BASIS_ATTR, None)
    if basis is None:
        basis = SecondOrderBasis(pm)
        setattr(pm, _BASIS_ATTR, basis)
    return basis


def _prefactors(basis, z):
    # exp(2 pi i s.tau.s + 4 pi i s.z) for every characteristic s
    sig = basis.labels
    quad = np.einsum("ij,jk,ik->i", sig, basis.pm.tau, sig)
    return np.exp(2j * np.pi * quad + 4j * np.pi * (sig @ z))


def second_order_values(basis, z, eps=DEFAULT_EPS):
    """The vector (theta_0(z), ..., theta_{N}(z)), each to absolute accuracy eps."""
    z = as_point(z, basis.pm.g, name="z")
    pref = _prefactors(basis, z)
    shifts = 2.0 * (basis.labels @ basis.pm.tau)
    out = np.empty(basis.dim, dtype=complex)
    for j in range(basis.dim):
        eps_j = eps / max(1.0, abs(pref[j]))
        out[j] = pref[j] * theta(basis.pm2, 2.0 * z + shifts[j], eps=eps_j)
    return out


def second_order_derivative(basis, z, direction, eps=DEFAULT_EPS):
    """Directional derivative of every basis value at z along ``direction``."""
    z = as_point(z, basis.pm.g, name="z")
    direction = as_point(direction, basis.pm.g, name="direction")
    pref = _prefactors(basis, z)
    shifts = 2.0 * (basis.labels @ basis.pm.tau)
    lin = 4j * np.pi * (basis.labels @ direction)
    out = np.empty(basis.dim, dtype=complex)
    for j in range(basis.dim):
        eps_j = eps / max(1.0, abs(pref[j]))
        arg = 2.0 * z + shifts[j]
        plain = theta(basis.pm2, arg, eps=eps_j)
        slope = theta(basis.pm2, arg, deriv=(direction,), eps=eps_j)
        out[j] = pref[j] * (lin[j] * plain + 2.0 * slope)
    return out


@dataclass
class ProjectivePoint:
    """A point of P^(2^g - 1), normalized so the largest-modulus entry is 1."""

    coords: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=complex)
        if coords.ndim != 1 or coords.size == 0:
            raise ValidationError("projective point needs a nonempty coordinate vector")
        if not np.all(np.isfinite(coords)):
            raise ValidationError("projective coordinates must be finite")
        mags = np.abs(coords)
        pivot = int(np.argmax(mags))
        if mags[pivot] == 0.0:
            raise ValidationError("projective point cannot be the zero vector")
        self.coords = coords / coords[pivot]


def kummer(basis, z, eps=DEFAULT_EPS):
    """The Kummer image [theta_0(z) : ... : theta_N(z)] as a normalized point."""
    vals = second_order_values(basis, z, eps=eps)
    if np.abs(vals).max() < 1e3 * eps:
        raise DegeneratePointError(
            "all second-order values below the accuracy floor; "
            "the linear system is base-point-free, so this signals an accuracy failure"
        )
    return ProjectivePoint(vals)


def projective_distance(p, q):
    """sin of the angle between coordinate vectors: 0 iff projectively equal.

    Mathematically sqrt(1 - |<p,q>|^2 / (|p|^2 |q|^2)); evaluated through
    the orthogonal residual q - p <p,q>/|p|^2, which stays accurate down to
    rounding for nearly parallel vectors where the direct formula loses
    half the digits to cancellation.
    """
    a = p.coords
    b = q.coords
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValidationError("projective distance undefined for zero vectors")
    b_perp = b - a * (np.vdot(a, b) / (na * na))
    return float(min(1.0, np.linalg.norm(b_perp) / nb))


def addition_residual(basis, z, w, eps=DEFAULT_EPS):
    """Relative defect of theta(z+w) theta(z-w) = sum_j theta_j(z) theta_j(w).

    This is the module's self-test: it must stay at the accuracy floor for
    every valid input, and it is sensitive to any mis-scaled basis member.
    """
    z = as_point(z, basis.pm.g, name="z")
    w = as_point(w, basis.pm.g, name="w")
    lhs = theta(basis.pm, z + w, eps=eps) * theta(basis.pm, z - w, eps=eps)
    rhs = second_order_values(basis, z, eps=eps) @ second_order_values(basis, w, eps=eps)
    return float(abs(lhs - rhs) / max(1.0, abs(lhs)))


def half_period(pm, bits):
    """The half-period (p + tau q)/2 from 2g bits: p = bits[:g], q = bits[g:]."""
    bits = np.asarray(bits, dtype=np.int64)
    if bits.shape != (2 * pm.g,) or not np.all((bits == 0) | (bits == 1)):
        raise ValidationError(f"lift must be a vector of 2g = {2 * pm.g} bits")
    p = bits[: pm.g].astype(float)
    q = bits[pm.g :].astype(float)
    return 0.5 * (p + pm.tau @ q)


def all_half_periods(pm):
    """All 2^(2g) (bits, half-period) pairs in deterministic order."""
    out = []
    for bits in itertools.product((0, 1), repeat=2 * pm.g):
        arr = np.array(bits, dtype=np.int64)
        out.append((bits, half_period(pm, arr)))
    return out
