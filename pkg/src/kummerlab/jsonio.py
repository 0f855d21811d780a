"""JSON and CSV wire formats.

Schemas (all numbers IEEE doubles):
  period matrix   {"g": int, "tau_re": [[...]], "tau_im": [[...]]}
  complex point   {"re": [...], "im": [...]}
  complex scalar  {"re": x, "im": y}
  projective pt   {"coords_re": [...], "coords_im": [...]}
  secant config   {"m": int, "points": [point...], "zeta": point,
                   "residual": number|null, "alpha": point|null}
  hierarchy seed  {"m": int, "u": point, "b": [point...], "W1": point|null}
CSV residual tables use a comma separator, '.' decimal point, header row;
lift columns are bit strings.
"""

import json

import numpy as np

from .errors import ValidationError
from .kummer import ProjectivePoint
from .secant import SecantConfiguration
from .theta import make_period_matrix


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"{path}: file not found")
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}")


def _field(obj, name, path):
    if not isinstance(obj, dict) or name not in obj:
        raise ValidationError(f"{path}: missing field '{name}'")
    return obj[name]


def period_matrix_from_json(obj, path="<input>"):
    g = _field(obj, "g", path)
    re = np.asarray(_field(obj, "tau_re", path), dtype=float)
    im = np.asarray(_field(obj, "tau_im", path), dtype=float)
    if re.shape != (g, g) or im.shape != (g, g):
        raise ValidationError(f"{path}: tau_re/tau_im must be {g}x{g}")
    return make_period_matrix(g, re + 1j * im)


def period_matrix_to_json(pm):
    return {"g": pm.g, "tau_re": pm.re.tolist(), "tau_im": pm.im.tolist()}


def load_period_matrix(path):
    return period_matrix_from_json(load_json(path), path=path)


def point_from_json(obj, g, path="<input>", name="point"):
    re = np.asarray(_field(obj, "re", f"{path}:{name}"), dtype=float)
    im = np.asarray(_field(obj, "im", f"{path}:{name}"), dtype=float)
    if re.shape != (g,) or im.shape != (g,):
        raise ValidationError(f"{path}: {name} must have length {g}")
    return re + 1j * im


def point_to_json(vec):
    vec = np.asarray(vec, dtype=complex)
    return {"re": vec.real.tolist(), "im": vec.imag.tolist()}


def scalar_to_json(value):
    value = complex(value)
    return {"re": value.real, "im": value.imag}


def projective_point_to_json(pt: ProjectivePoint):
    return {"coords_re": pt.coords.real.tolist(), "coords_im": pt.coords.imag.tolist()}


def config_from_json(obj, pm, path="<input>"):
    m = _field(obj, "m", path)
    pts = _field(obj, "points", path)
    points = [point_from_json(p, pm.g, path, f"points[{i}]") for i, p in enumerate(pts)]
    zeta = point_from_json(_field(obj, "zeta", path), pm.g, path, "zeta")
    cfg = SecantConfiguration(pm, m, points, zeta)
    residual = obj.get("residual")
    if residual is not None:
        cfg.residual = float(residual)
    alpha = obj.get("alpha")
    if alpha is not None:
        cfg.alpha = point_from_json(alpha, m + 2, path, "alpha")
    return cfg


def config_to_json(cfg: SecantConfiguration):
    return {
        "m": cfg.m,
        "points": [point_to_json(p) for p in cfg.points],
        "zeta": point_to_json(cfg.zeta),
        "residual": cfg.residual,
        "alpha": point_to_json(cfg.alpha) if cfg.alpha is not None else None,
    }


def hierarchy_seed_from_json(obj, pm, path="<input>"):
    m = _field(obj, "m", path)
    u = point_from_json(_field(obj, "u", path), pm.g, path, "u")
    b = [point_from_json(p, pm.g, path, f"b[{i}]") for i, p in enumerate(_field(obj, "b", path))]
    w1 = obj.get("W1")
    if w1 is not None:
        w1 = point_from_json(w1, pm.g, path, "W1")
    return m, u, b, w1


def hierarchy_seed_to_json(m, u, b_list, w1, extra=None):
    out = {
        "m": m,
        "u": point_to_json(u),
        "b": [point_to_json(p) for p in b_list],
        "W1": point_to_json(w1) if w1 is not None else None,
    }
    if extra:
        out.update(extra)
    return out


def hierarchy_state_to_json(state):
    return {
        "m": state.m,
        "u": point_to_json(state.u),
        "b": [point_to_json(p) for p in state.b],
        "order": state.order,
        "solved_through": state.solved_through,
        "W": [point_to_json(w) for w in state.W],
        "alpha1": point_to_json(state.alpha1),
        "alphaj": [point_to_json(row) for row in state.alphaj],
        "residuals": list(state.residuals),
        "ranks": list(state.ranks),
    }


def bits_to_str(bits):
    return "".join(str(int(b)) for b in bits)


def str_to_bits(text, n):
    text = text.strip()
    if len(text) != n or any(c not in "01" for c in text):
        raise ValidationError(f"lift must be {n} bits of 0/1, got {text!r}")
    return np.array([int(c) for c in text], dtype=np.int64)


def residual_table_csv(table):
    lines = ["lift,residual"]
    for bits, residual in table:
        lines.append(f"{bits_to_str(bits)},{residual!r}")
    return "\n".join(lines) + "\n"


def fay_table_csv(table):
    lines = ["lift,residual"]
    for (b2, b3), residual in table:
        lines.append(f"{bits_to_str(b2)}|{bits_to_str(b3)},{residual!r}")
    return "\n".join(lines) + "\n"


def hierarchy_csv(state):
    lines = ["order,residual,solve_rank"]
    for i, (res, rank) in enumerate(zip(state.residuals, state.ranks), start=1):
        lines.append(f"{i},{res!r},{rank}")
    return "\n".join(lines) + "\n"


def dump(obj, stream):
    json.dump(obj, stream, indent=2)
    stream.write("\n")
