"""Order-by-order secant hierarchy: truncated series, elimination, identities.

Setup.  A degenerate secant is marked by the point pair (u, -u) together
with b_1..b_m; a formal curve C(eps) = sum_j W^(j) eps^j deforms it.  The
deformation is encoded by the generating section

    P(z, eps) = a_1(eps) theta(z+u+C/2) theta(z-u-C/2)
              - theta(z-u+C/2) theta(z+u-C/2)
              + sum_j a_{j+2}(eps) theta(z+b_j+C/2) theta(z-b_j-C/2)

with the normalizations a_1(0) = 1, a_2 = -1, a_j(0) = 0 for j >= 3 and
a_{m+2}(eps) = eps, which pin the parametrization (they make P_0 vanish
identically and fix the scale of eps).  The curve exists through the
marked point iff every coefficient P_s can be made to vanish; P_s is
affine in the order-s unknowns (a_{1,s}, a_{j+2,s} for j <= m-1, and the
g components of W^(s)), so each order is one complex least-squares solve
over sampled z.

Expansion bookkeeping.  For directions W^(1..s), the weighted operator

    Delta_s = sum over i_1 + 2 i_2 + ... + s i_s = s of
              (1/(i_1! ... i_s!)) D_1^{i_1} ... D_s^{i_s}

gives f(c + C(eps)) = sum_s Delta_s(f)(c) eps^s.  Delta is treated as a
pure constant-coefficient operator; evaluation points are always explicit.
apply_delta exposes sign and scale so the same machinery serves the C/2
factors of P, the full-scale shifts of the restriction identities, and
their sign-flipped variants (every D_j negated).

Restriction identities (checked, not assumed): on the common zero set
G = {theta_u = theta_{-u} = theta_{b_1} = ... = theta_{b_{m-1}} = 0},

    R_s|_G = Delta_{s-1} theta_{-b_m} . theta_{b_m},
    T_s|_G = Delta^-_{s-1} theta_{b_m} . theta_{-b_m}
             + sum_{j<=m-1} sum_{l=1..s} a_{j+2,l} theta_{-b_j} . Delta^-_{s-l} theta_{b_j},

where R, T are P with argument shifted by +C/2, -C/2.  The inner
derivative order is s - l (the eps-degree count); the variant with s - j
is also evaluated and reported for comparison.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConvergenceFailure, HierarchyAbort, IllPosedError, ValidationError
from .kummer import basis_for, second_order_derivative, second_order_values
from .theta import DEFAULT_EPS, theta, theta_translate, torus_distance
from .util import as_point, complex_box, rng

MAX_ORDER = 12


@dataclass(frozen=True)
class OperatorWord:
    """One term of Delta_s: exponents (i_1..i_s) with sum k i_k = s, weight 1/prod(i_k!)."""

    exponents: tuple
    weight: float


def weighted_partitions(s):
    """All operator words of order s; the count is the partition number p(s)."""
    if s < 1 or s > MAX_ORDER:
        raise ValidationError(f"order must lie in 1..{MAX_ORDER}")
    words = []

    def descend(k, remaining, exps):
        if k == 0:
            if remaining == 0:
                weight = 1.0
                for e in exps:
                    weight /= _factorial(e)
                words.append(OperatorWord(tuple(reversed(exps)), weight))
            return
        for i in range(remaining // k + 1):
            descend(k - 1, remaining - k * i, exps + [i])

    descend(s, s, [])
    return words


def _factorial(n):
    out = 1
    for i in range(2, n + 1):
        out *= i
    return out


@dataclass
class HierarchyState:
    """Truncated series data for one marked degenerate secant.

    The fixed normalizations a_2 = -1 and a_{m+2}(eps) = eps are implied,
    never stored.  W rows, alpha1 and alphaj entries for orders beyond
    ``solved_through`` are zeros awaiting their solve.
    """

    pm: object
    m: int
    u: np.ndarray
    b: list
    order: int
    W: np.ndarray  # (order, g)
    alpha1: np.ndarray  # alpha_{1,s}, s = 1..order
    alphaj: np.ndarray  # (m-1, order): alpha_{j+2,s}
    residuals: list = field(default_factory=list)
    ranks: list = field(default_factory=list)
    solved_through: int = 0


def make_state(pm, m, u, b_list, order, w1=None):
    """Validated hierarchy state; w1 seeds the first direction (any scale)."""
    if m < 1:
        raise ValidationError("m must be a positive integer")
    if order < 1 or order > MAX_ORDER:
        raise ValidationError(f"order must lie in 1..{MAX_ORDER}")
    g = pm.g
    u = as_point(u, g, name="u")
    b_list = [as_point(b, g, name=f"b[{j}]") for j, b in enumerate(b_list)]
    if len(b_list) != m:
        raise ValidationError(f"expected {m} base points, got {len(b_list)}")
    if torus_distance(pm, 2.0 * u, np.zeros(g)) < 1e-8:
        raise ValidationError("2u vanishes on the torus; the marked pair is degenerate")
    W = np.zeros((order, g), dtype=complex)
    if w1 is not None:
        w1 = as_point(w1, g, name="w1")
        if np.linalg.norm(w1) == 0.0:
            raise ValidationError("the first direction W^(1) must be nonzero")
        W[0] = w1
    return HierarchyState(
        pm=pm,
        m=m,
        u=u,
        b=b_list,
        order=order,
        W=W,
        alpha1=np.zeros(order, dtype=complex),
        alphaj=np.zeros((max(m - 1, 0), order), dtype=complex),
    )


def _clone_with_order_zeroed(state, s):
    W = state.W.copy()
    alpha1 = state.alpha1.copy()
    alphaj = state.alphaj.copy()
    W[s - 1] = 0.0
    alpha1[s - 1] = 0.0
    if alphaj.size:
        alphaj[:, s - 1] = 0.0
    return replace(state, W=W, alpha1=alpha1, alphaj=alphaj)


def _alpha_poly(state, label, upto):
    """Coefficient array of a_label(eps) through eps^upto (labels 1..m+2)."""
    arr = np.zeros(upto + 1, dtype=complex)
    n = min(upto, state.order)
    if label == 1:
        arr[0] = 1.0
        arr[1 : n + 1] = state.alpha1[:n]
    elif label == 2:
        arr[0] = -1.0
    elif label == state.m + 2:
        if upto >= 1:
            arr[1] = 1.0
    else:
        arr[1 : n + 1] = state.alphaj[label - 3, :n]
    return arr


def apply_delta(state, s, sign, scale, x, z, eps=DEFAULT_EPS):
    """Delta_s applied to the translate theta_x, with directions sign*scale*W^(j), at z.

    s = 0 is the plain value.  Words touching an all-zero direction are
    skipped; they contribute nothing.
    """
    if s == 0:
        return theta_translate(state.pm, z, x, eps=eps)
    if s > state.order:
        raise ValidationError(f"order {s} exceeds the state's truncation order {state.order}")
    total = 0.0 + 0.0j
    for word in weighted_partitions(s):
        dirs = []
        dead = False
        for k, count in enumerate(word.exponents):
            if count == 0:
                continue
            w = state.W[k]
            if np.linalg.norm(w) == 0.0:
                dead = True
                break
            dirs.extend([sign * scale * w] * count)
        if dead:
            continue
        total += word.weight * theta_translate(state.pm, z, x, deriv=dirs, eps=eps)
    return total


def _translate_series(state, x, sign, scale, z, upto, eps):
    """[eps^k] of theta(z - x + sign*scale*C(eps)) for k = 0..upto."""
    return np.array(
        [apply_delta(state, k, sign, scale, x, z, eps=eps) for k in range(upto + 1)]
    )


def factor_series(state, base, sign, z, upto, eps=DEFAULT_EPS):
    """Series of theta(z + sign*(base + C(eps)/2)) through eps^upto."""
    base = as_point(base, state.pm.g, name="base")
    z = as_point(z, state.pm.g, name="z")
    if upto < 0 or upto > state.order:
        raise ValidationError("series order out of range")
    return _translate_series(state, -sign * base, sign, 0.5, z, upto, eps)


def _mul(a, b, upto):
    return np.convolve(a, b)[: upto + 1]


def _assemble_series(state, z, upto, eps):
    u = state.u
    g1 = _translate_series(state, -u, +1, 0.5, z, upto, eps)  # theta(z+u+C/2)
    g2 = _translate_series(state, +u, -1, 0.5, z, upto, eps)  # theta(z-u-C/2)
    g3 = _translate_series(state, +u, +1, 0.5, z, upto, eps)  # theta(z-u+C/2)
    g4 = _translate_series(state, -u, -1, 0.5, z, upto, eps)  # theta(z+u-C/2)
    total = _mul(_mul(_alpha_poly(state, 1, upto), g1, upto), g2, upto)
    total = total - _mul(g3, g4, upto)
    for j, b in enumerate(state.b):
        g5 = _translate_series(state, -b, +1, 0.5, z, upto, eps)
        g6 = _translate_series(state, +b, -1, 0.5, z, upto, eps)
        total = total + _mul(_mul(_alpha_poly(state, j + 3, upto), g5, upto), g6, upto)
    return total


def assemble_P(state, s, z, eps=DEFAULT_EPS):
    """Coefficient P_s(z) of the generating section, using the stored data.

    Order-s unknowns not yet solved sit at zero in the state; callers who
    want them included install them first.
    """
    z = as_point(z, state.pm.g, name="z")
    if s < 0 or s > state.order:
        raise ValidationError("order out of range")
    return complex(_assemble_series(state, z, s, eps)[s])


def assemble_Q(state, s, z, eps=DEFAULT_EPS):
    """P_s with the order-s unknowns zeroed; independent of them by construction."""
    if s < 1 or s > state.order:
        raise ValidationError("order out of range")
    return assemble_P(_clone_with_order_zeroed(state, s), s, z, eps=eps)


def order_columns(state, z, eps=DEFAULT_EPS):
    """Affine coefficients of P_s in the order-s unknowns, evaluated at z.

    Columns: theta_u theta_{-u}; theta_{b_j} theta_{-b_j} for j <= m-1;
    and per coordinate direction e_i the commutator-like combination
    d_i theta(z+u) theta(z-u) - d_i theta(z-u) theta(z+u).
    """
    pm = state.pm
    u = state.u
    tp = theta(pm, z + u, eps=eps)
    tm = theta(pm, z - u, eps=eps)
    cols = [tp * tm]
    for j in range(state.m - 1):
        b = state.b[j]
        cols.append(theta(pm, z + b, eps=eps) * theta(pm, z - b, eps=eps))
    eye = np.eye(pm.g)
    for i in range(pm.g):
        dp = theta(pm, z + u, deriv=(eye[i],), eps=eps)
        dm = theta(pm, z - u, deriv=(eye[i],), eps=eps)
        cols.append(dp * tm - dm * tp)
    return np.array(cols)


@dataclass
class OrderSolution:
    order: int
    alpha1: complex
    alphaj: np.ndarray
    direction: np.ndarray
    residual: float
    rank: int


def solve_order(state, s, samples, eps=DEFAULT_EPS):
    """Least-squares elimination of the order-s unknowns over the sample set.

    Minimizes sum_k |P_s(z_k)|^2 in the m+g unknowns, installs the
    solution into the state, and records the post-solve RMS residual
    normalized by the RMS of the column (basis-section) values.
    """
    if s != state.solved_through + 1:
        raise ValidationError(
            f"orders must be solved consecutively; next is {state.solved_through + 1}"
        )
    if s > state.order:
        raise ValidationError("order exceeds the state's truncation order")
    n_unknowns = state.m + state.pm.g
    samples = [as_point(z, state.pm.g, name="sample") for z in samples]
    if len(samples) < 2 * n_unknowns:
        raise ValidationError(f"need at least {2 * n_unknowns} samples, got {len(samples)}")
    a_rows = np.stack([order_columns(state, z, eps=eps) for z in samples])
    rhs = -np.array([assemble_Q(state, s, z, eps=eps) for z in samples])
    # normalize by the section-product columns (the first m), not by the
    # derivative combinations whose 2 pi factors would deflate the residual
    scale = float(np.sqrt(np.mean(np.abs(a_rows[:, : state.m]) ** 2)))
    if scale == 0.0:
        raise IllPosedError("all basis sections vanish on the sample set")
    x, _, rank, _ = np.linalg.lstsq(a_rows, rhs, rcond=None)
    if rank < n_unknowns:
        raise IllPosedError(
            f"normal system rank {rank} < {n_unknowns}: sections are linearly dependent "
            "at the sample set; resample with more points"
        )
    state.alpha1[s - 1] = x[0]
    if state.m > 1:
        state.alphaj[:, s - 1] = x[1 : state.m]
    state.W[s - 1] = x[state.m :]
    residual = float(np.sqrt(np.mean(np.abs(a_rows @ x - rhs) ** 2)) / scale)
    state.residuals.append(residual)
    state.ranks.append(int(rank))
    state.solved_through = s
    return OrderSolution(s, complex(x[0]), x[1 : state.m].copy(), x[state.m :].copy(), residual, int(rank))


def run_hierarchy(state, upto, samples, eps=DEFAULT_EPS, abort_tol=1e-4):
    """Solve orders 1..upto in sequence; abort on the first large residual.

    The seed direction W^(1) only gates validation (it must be nonzero);
    the order-1 solve replaces it with the scale-pinned direction, which
    for a true tangency datum is parallel to the seeded one.
    """
    if upto < 1 or upto > state.order:
        raise ValidationError("target order out of range")
    if state.solved_through == 0 and np.linalg.norm(state.W[0]) == 0.0:
        raise ValidationError("seed state must carry a nonzero first direction")
    for s in range(state.solved_through + 1, upto + 1):
        sol = solve_order(state, s, samples, eps=eps)
        if sol.residual > abort_tol:
            raise HierarchyAbort(
                f"elimination stalled at order {s}: residual {sol.residual:.3e} "
                f"exceeds {abort_tol:.1e}",
                order=s,
                residual=sol.residual,
                state=state,
            )
    return state


def default_samples(pm, count, seed):
    """Deterministic sample points for the least-squares orders."""
    gen = rng(seed, 0xA5)
    return [complex_box(gen, pm.g, re_half=0.5, im_half=0.3) for _ in range(count)]


@dataclass
class PremiseReport:
    tangency_residual: float
    shifted_residuals: list
    passed: bool
    tol: float


def premise_check(pm, m, u, b_list, eps=DEFAULT_EPS, direction=None, tol=1e-6):
    """Rank tests for the two geometric premises of the finite-secants setup.

    (i) K(u), K(b_1), ..., K(b_m) lie on an m-plane tangent at K(u): the
    matrix of those columns plus the directional-derivative column of the
    Kummer coordinates at u must have rank <= m+1.  With no direction
    supplied, all g coordinate derivatives are adjoined and rank <= m+g is
    required (the existential form).

    (ii) for mu in {-b_1, ..., -b_{m-1}}: the tuple {u, -u, b_1..b_m}
    shifted by -(b_m + mu)/2 spans an m-plane.  The halving lift is a
    common shift of all arguments, so it cannot change the rank; the
    principal halving is used.

    Report-only: residuals are sigma ratios of column-normalized matrices.
    """
    g = pm.g
    u = as_point(u, g, name="u")
    b_list = [as_point(b, g, name=f"b[{j}]") for j, b in enumerate(b_list)]
    if len(b_list) != m:
        raise ValidationError(f"expected {m} base points")
    basis = basis_for(pm)

    def unit(v):
        n = np.linalg.norm(v)
        if n == 0.0:
            raise IllPosedError("zero column in premise matrix")
        return v / n

    cols = [unit(second_order_values(basis, u, eps=eps))]
    cols += [unit(second_order_values(basis, b, eps=eps)) for b in b_list]
    if direction is not None:
        direction = as_point(direction, g, name="direction")
        cols.append(unit(second_order_derivative(basis, u, direction, eps=eps)))
        rank_target = m + 1
    else:
        eye = np.eye(g)
        cols += [unit(second_order_derivative(basis, u, eye[i], eps=eps)) for i in range(g)]
        rank_target = m + g
    mat = np.stack(cols, axis=1)
    s = np.linalg.svd(mat, compute_uv=False)
    if mat.shape[1] > rank_target:
        tangency = float(s[rank_target] / s[0])
    else:
        tangency = 0.0

    shifted = []
    bm = b_list[-1]
    for j in range(m - 1):
        mu = -b_list[j]
        shift = -0.5 * (bm + mu)
        args = [u + shift, -u + shift] + [b + shift for b in b_list]
        cols = [unit(second_order_values(basis, a, eps=eps)) for a in args]
        mat = np.stack(cols, axis=1)
        sv = np.linalg.svd(mat, compute_uv=False)
        shifted.append(float(sv[-1] / sv[0]))

    worst = max([tangency] + shifted)
    return PremiseReport(tangency, shifted, worst <= tol, tol)


@dataclass
class RestrictionReport:
    discrepancy: float
    r_values: list
    rhs_values: list
    t_direct: list
    t_formula: list
    t_formula_alt: list


def _validate_g_point(state, z, g_tol, eps):
    pm = state.pm
    checks = [abs(theta(pm, z - state.u, eps=eps)), abs(theta(pm, z + state.u, eps=eps))]
    checks += [abs(theta(pm, z - state.b[j], eps=eps)) for j in range(state.m - 1)]
    worst = max(checks)
    if worst > g_tol:
        raise ValidationError(
            f"point is not on the common zero set: max |section| = {worst:.3e} > {g_tol:.1e}"
        )


def restriction_identity_check(state, s, g_points, eps=DEFAULT_EPS, g_tol=1e-8, full=False):
    """Check R_s|_G = Delta_{s-1} theta_{-b_m} . theta_{b_m} at supplied points of G.

    R_s is assembled honestly as the order-s coefficient of the shifted
    generating section; the right side uses the full-scale Delta stack.
    The T_s expression (shift by -C/2, every direction negated) is also
    evaluated three ways: directly, by the eps-degree formula (inner
    order s - l), and by the alternate inner order s - j, so the two
    readings can be compared.  Returns the max normalized R-discrepancy,
    or the full report when ``full`` is set.
    """
    if s < 1 or s > state.order:
        raise ValidationError("order out of range")
    if not g_points:
        raise ValidationError("need at least one point of G")
    pm = state.pm
    u = state.u
    bm = state.b[-1]
    disc = 0.0
    r_vals, rhs_vals, t_dir, t_frm, t_alt = [], [], [], [], []
    for z in g_points:
        z = as_point(z, pm.g, name="G point")
        _validate_g_point(state, z, g_tol, eps)

        # R_s: coefficient of the +C/2-shifted section; second factors constant
        r_series = _mul(
            _alpha_poly(state, 1, s),
            _translate_series(state, -u, +1, 1.0, z, s, eps) * theta(pm, z - u, eps=eps),
            s,
        )
        r_series = r_series - _translate_series(state, +u, +1, 1.0, z, s, eps) * theta(
            pm, z + u, eps=eps
        )
        for j, b in enumerate(state.b):
            r_series = r_series + _mul(
                _alpha_poly(state, j + 3, s),
                _translate_series(state, -b, +1, 1.0, z, s, eps) * theta(pm, z - b, eps=eps),
                s,
            )
        r_s = complex(r_series[s])
        rhs = apply_delta(state, s - 1, +1, 1.0, -bm, z, eps=eps) * theta(pm, z - bm, eps=eps)
        r_vals.append(r_s)
        rhs_vals.append(rhs)
        disc = max(disc, abs(r_s - rhs) / max(1.0, abs(rhs)))

        # T_s three ways
        t_series = _mul(
            _alpha_poly(state, 1, s),
            _translate_series(state, +u, -1, 1.0, z, s, eps) * theta(pm, z + u, eps=eps),
            s,
        )
        t_series = t_series - _translate_series(state, -u, -1, 1.0, z, s, eps) * theta(
            pm, z - u, eps=eps
        )
        for j, b in enumerate(state.b):
            t_series = t_series + _mul(
                _alpha_poly(state, j + 3, s),
                _translate_series(state, +b, -1, 1.0, z, s, eps) * theta(pm, z + b, eps=eps),
                s,
            )
        t_dir.append(complex(t_series[s]))

        base = apply_delta(state, s - 1, -1, 1.0, bm, z, eps=eps) * theta(pm, z + bm, eps=eps)
        t_main = base
        t_other = base
        for j in range(state.m - 1):
            b = state.b[j]
            tb = theta(pm, z + b, eps=eps)
            for ell in range(1, s + 1):
                coeff = state.alphaj[j, ell - 1] if ell <= state.order else 0.0
                if coeff == 0.0:
                    continue
                t_main += coeff * tb * apply_delta(state, s - ell, -1, 1.0, b, z, eps=eps)
            inner = s - (j + 1)
            if 0 <= inner:
                for ell in range(1, s + 1):
                    coeff = state.alphaj[j, ell - 1] if ell <= state.order else 0.0
                    if coeff == 0.0:
                        continue
                    t_other += coeff * tb * apply_delta(state, inner, -1, 1.0, b, z, eps=eps)
        t_frm.append(t_main)
        t_alt.append(t_other)

    if full:
        return RestrictionReport(disc, r_vals, rhs_vals, t_dir, t_frm, t_alt)
    return disc


def find_section_intersection(pm, offsets, seed, eps=1e-14, tol=1e-11, max_iter=80, restarts=16):
    """Damped Newton for a common zero of theta(z - x_i) over the given offsets.

    Square when g equals the number of sections; extra coordinates (g
    larger) are pinned to seeded constants.  Feasible only for g >= the
    number of sections.
    """
    g = pm.g
    offsets = [as_point(x, g, name="offset") for x in offsets]
    k = len(offsets)
    if k > g:
        raise ValidationError(f"{k} sections in dimension g={g}: overdetermined")
    gen = rng(seed, 0x61)
    eye = np.eye(g)
    trace = []
    for attempt in range(restarts):
        pin = complex_box(gen, g, re_half=0.4, im_half=0.3)
        free_idx = list(range(k))

        def embed(w):
            z = pin.copy()
            z[free_idx] = w
            return z

        w = complex_box(gen, k, re_half=0.4, im_half=0.3)
        fvec = np.array([theta(pm, embed(w) - x, eps=eps) for x in offsets])
        it = 0
        for it in range(max_iter):
            nrm = np.abs(fvec).max()
            if nrm < tol:
                return embed(w)
            jac = np.array(
                [
                    [theta(pm, embed(w) - x, deriv=(eye[i],), eps=eps) for i in free_idx]
                    for x in offsets
                ]
            )
            try:
                step = np.linalg.solve(jac, -fvec)
            except np.linalg.LinAlgError:
                break
            lam = 1.0
            while lam > 2**-9:
                w2 = w + lam * step
                f2 = np.array([theta(pm, embed(w2) - x, eps=eps) for x in offsets])
                if np.abs(f2).max() < (1.0 - 0.25 * lam) * nrm:
                    break
                lam *= 0.5
            else:
                break
            w, fvec = w2, f2
        if np.abs(fvec).max() < tol:
            return embed(w)
        trace.append((attempt, it, float(np.abs(fvec).max())))
    raise ConvergenceFailure(f"no common zero found after {restarts} restarts", trace=trace)
