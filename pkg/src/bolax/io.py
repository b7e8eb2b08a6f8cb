"""File formats: potential JSON, result tables as CSV (17 significant digits) and JSON."""

import csv
import io as _io
import json
import math

import numpy as np

from .errors import PotentialFormatError
from .fourier import Potential


def potential_to_dict(u):
    return {
        "band": u.band,
        "hermitian": u.hermitian,
        "coeffs": [{"k": k, "re": c.real, "im": c.imag} for k, c in u.coeffs.items()],
    }


def dumps_potential(u):
    """Canonical JSON text; floats are written with ``repr`` so reloading is bit exact."""
    return json.dumps(potential_to_dict(u), indent=2) + "\n"


def save_potential(u, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_potential(u))


def _fail(where, msg):
    raise PotentialFormatError(f"{where}: {msg}")


def potential_from_dict(doc, source="<potential>"):
    if not isinstance(doc, dict):
        _fail(source, "top level must be an object")
    for key in ("band", "hermitian", "coeffs"):
        if key not in doc:
            _fail(source, f"missing field '{key}'")
    band, herm, rows = doc["band"], doc["hermitian"], doc["coeffs"]
    if isinstance(band, bool) or not isinstance(band, int) or band < 0:
        _fail(f"{source}: field 'band'", f"expected a nonnegative integer, got {band!r}")
    if not isinstance(herm, bool):
        _fail(f"{source}: field 'hermitian'", f"expected true/false, got {herm!r}")
    if not isinstance(rows, list):
        _fail(f"{source}: field 'coeffs'", "expected a list")
    coeffs = {}
    for i, row in enumerate(rows):
        where = f"{source}: coeffs[{i}]"
        if not isinstance(row, dict):
            _fail(where, "expected an object with k, re, im")
        k = row.get("k")
        if isinstance(k, bool) or not isinstance(k, int):
            _fail(f"{where}.k", f"expected an integer, got {k!r}")
        if k == 0:
            _fail(f"{where}.k", "k=0 violates the mean-zero condition")
        if abs(k) > band:
            _fail(f"{where}.k", f"|k|={abs(k)} exceeds band {band}")
        if herm and k < 0:
            _fail(f"{where}.k", f"hermitian potentials store k >= 1 only, got {k}")
        if k in coeffs:
            _fail(f"{where}.k", f"duplicate mode k={k}")
        parts = []
        for f in ("re", "im"):
            v = row.get(f, 0.0)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                _fail(f"{where}.{f}", f"expected a finite number, got {v!r}")
            parts.append(float(v))
        coeffs[k] = complex(*parts)
    return Potential(band, coeffs, hermitian=herm)


def loads_potential(text, source="<potential>"):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PotentialFormatError(
            f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None
    return potential_from_dict(doc, source)


def load_potential(path):
    with open(path, encoding="utf-8") as fh:
        return loads_potential(fh.read(), str(path))


# -- tables ------------------------------------------------------------------

def fmt(x):
    """17 significant digits; NaN/None become an empty field."""
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return ""
    return f"{x:.17g}"


def _jnum(x):
    if x is None:
        return None
    x = float(x)
    if math.isnan(x):
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(fmt(x))


def csv_text(header, rows):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) if not isinstance(v, (int, np.integer)) else str(v) for v in r])
    return buf.getvalue()


def json_text(header, rows, meta):
    recs = [
        {h: (int(v) if isinstance(v, (int, np.integer)) else _jnum(v)) for h, v in zip(header, r)}
        for r in rows
    ]
    return json.dumps({"meta": meta, "rows": recs}, indent=2) + "\n"


def emit(header, rows, meta, fmt_name="json"):
    if fmt_name == "csv":
        return csv_text(header, rows)
    return json_text(header, rows, meta)


SPECTRUM_HEADER = ["n", "re_lambda", "im_lambda", "re_gamma", "im_gamma", "residual"]


def spectrum_rows(spec):
    ev = spec.eigenvalues
    g = spec.gaps()
    rows = []
    for n, lam in enumerate(ev):
        gam = g[n - 1] if n >= 1 else complex("nan+nanj")
        rows.append([n, lam.real, lam.imag, gam.real, gam.imag, spec.residuals[n]])
    return rows


def spectrum_meta(spec, extra=None):
    meta = {
        "K": spec.K,
        "M": spec.nodes,
        "method": spec.method,
        "potential_hash": spec.potential_digest,
    }
    meta.update(extra or {})
    return meta


FUNCTIONALS_HEADER = [
    "n", "re_F", "im_F", "re_kappa", "im_kappa", "re_mu", "im_mu",
    "disc_F", "disc_kappa", "disc_mu",
]


def functional_rows(sf):
    F, kap, mu = sf.best("F"), sf.best("kappa"), sf.best("mu")
    rows = []
    for j, n in enumerate(sf.n):
        rows.append([
            int(n), F[j].real, F[j].imag, kap[j].real, kap[j].imag, mu[j].real, mu[j].imag,
            sf.discrepancy["F"][j], sf.discrepancy["kappa"][j], sf.discrepancy["mu"][j],
        ])
    return rows


H_GRID_HEADER = ["re_lambda", "im_lambda", "re_H", "im_H"]

CONVERGENCE_HEADER = ["n", "dist_g_inf", "step", "sqrt_one_minus_mu", "step_ok"]


def convergence_rows(tb):
    return [
        [int(n), d, s, r, int(ok)]
        for n, d, s, r, ok in zip(tb.n, tb.dist_inf, tb.step, tb.sqrt_one_minus_mu, tb.step_ok)
    ]
