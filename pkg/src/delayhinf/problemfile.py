"""Line-oriented problem files and CSV export.

A problem file has bracketed section headers and one term per line.  Plant
sections list quasipolynomial terms as ``delay coeff0 coeff1 ...``
(ascending powers, delays as decimals or fractions); alternatively a delay
state-space model is given row-major in ``[statespace.*]`` sections.
Weight sections carry ``num``/``den`` coefficient lines, and ``[options]``
holds ``key value`` pairs.  All writes are atomic (temp file then rename).
"""
from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .delaysum import (
    DelayStateSpace,
    TimeDelayPlant,
    from_delay_state_space,
    normalize_plant,
)
from .errors import IOFormatError
from .rational import Polynomial, RationalFunction
from .synthesis import Weights

PLANT_SECTIONS = ("plant.numerator", "plant.denominator")
SS_SECTIONS = ("statespace.A", "statespace.b", "statespace.c", "statespace.d")
WEIGHT_SECTIONS = ("weight.W1", "weight.W2")

#: recognized [options] keys with parsers
OPTION_KEYS = {
    "grid-lo": float,
    "grid-hi": float,
    "grid-n": int,
    "pade-order": int,
    "tol": float,
    "t-end": float,
    "dt": float,
}


@dataclass(frozen=True)
class ProblemFile:
    plant: TimeDelayPlant
    weights: Weights
    options: dict = field(default_factory=dict)

    def grid(self):
        lo = self.options.get("grid-lo", 1e-3)
        hi = self.options.get("grid-hi", 1e4)
        n = self.options.get("grid-n", 1000)
        if not (0 < lo < hi) or n < 2:
            raise IOFormatError(f"invalid grid options ({lo}, {hi}, {n})")
        return np.logspace(math.log10(lo), math.log10(hi), n)


def _tokenize(text):
    """[(lineno, section, tokens)] with comments and blanks stripped."""
    out = []
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise IOFormatError(f"line {lineno}: malformed section header")
            section = line[1:-1].strip()
            known = PLANT_SECTIONS + SS_SECTIONS + WEIGHT_SECTIONS + ("options",)
            if section not in known:
                raise IOFormatError(f"line {lineno}: unknown section "
                                    f"[{section}]")
            out.append((lineno, section, None))
            continue
        if section is None:
            raise IOFormatError(f"line {lineno}: data before any section")
        out.append((lineno, section, line.split()))
    return out


def _floats(tokens, lineno):
    try:
        vals = [float(t) for t in tokens]
    except ValueError as exc:
        raise IOFormatError(f"line {lineno}: {exc}") from None
    if not all(math.isfinite(v) for v in vals):
        raise IOFormatError(f"line {lineno}: non-finite number")
    return vals


def _qp_terms(lines):
    terms = []
    for lineno, tokens in lines:
        if len(tokens) < 2:
            raise IOFormatError(
                f"line {lineno}: expected 'delay coeff0 coeff1 ...'")
        terms.append((tokens[0], _floats(tokens[1:], lineno)))
    return terms


def _weight(lines, name):
    num = den = None
    for lineno, tokens in lines:
        if len(tokens) < 2 or tokens[0] not in ("num", "den"):
            raise IOFormatError(
                f"line {lineno}: expected 'num ...' or 'den ...' in {name}")
        vals = _floats(tokens[1:], lineno)
        if tokens[0] == "num":
            num = vals
        else:
            den = vals
    if num is None:
        raise IOFormatError(f"{name}: missing 'num' line")
    if den is None:
        den = [1.0]
    return RationalFunction(Polynomial(num), Polynomial(den))


def _statespace(sections):
    def rows(name, lines):
        out = []
        for lineno, tokens in lines:
            if len(tokens) < 2:
                raise IOFormatError(
                    f"line {lineno}: expected 'delay entries...' in [{name}]")
            out.append((tokens[0], _floats(tokens[1:], lineno)))
        return out

    a = rows("statespace.A", sections.get("statespace.A", []))
    b = rows("statespace.b", sections.get("statespace.b", []))
    c = rows("statespace.c", sections.get("statespace.c", []))
    d = rows("statespace.d", sections.get("statespace.d", []))
    if not a or not b or not c:
        raise IOFormatError("state-space input needs A, b and c sections")
    n = len(b[0][1])
    try:
        sys = DelayStateSpace(
            a_terms=tuple((h, np.asarray(v).reshape(n, n)) for h, v in a),
            b_terms=tuple((h, np.asarray(v)) for h, v in b),
            c_terms=tuple((h, np.asarray(v)) for h, v in c),
            d_terms=tuple((h, v[0]) for h, v in d),
        )
    except ValueError as exc:
        raise IOFormatError(f"state-space shape error: {exc}") from None
    return sys


def parse_problem(text) -> ProblemFile:
    """Parse problem-file text into plant, weights and options."""
    sections = {}
    for lineno, section, tokens in _tokenize(text):
        if tokens is None:
            sections.setdefault(section, [])
        else:
            sections.setdefault(section, []).append((lineno, tokens))

    has_qp = any(s in sections for s in PLANT_SECTIONS)
    has_ss = any(s in sections for s in SS_SECTIONS)
    if has_qp and has_ss:
        raise IOFormatError(
            "give either plant.* quasipolynomial sections or statespace.* "
            "sections, not both")
    if has_qp:
        for s in PLANT_SECTIONS:
            if not sections.get(s):
                raise IOFormatError(f"missing or empty section [{s}]")
        plant = normalize_plant(_qp_terms(sections["plant.numerator"]),
                                _qp_terms(sections["plant.denominator"]))
    elif has_ss:
        plant = from_delay_state_space(_statespace(sections))
    else:
        raise IOFormatError("no plant sections found")

    if "weight.W1" not in sections:
        raise IOFormatError("missing section [weight.W1]")
    w1 = _weight(sections["weight.W1"], "weight.W1")
    if "weight.W2" in sections:
        w2 = _weight(sections["weight.W2"], "weight.W2")
    else:
        w2 = RationalFunction.zero()
    weights = Weights(w1, w2)

    options = {}
    for lineno, tokens in sections.get("options", []):
        if len(tokens) != 2 or tokens[0] not in OPTION_KEYS:
            raise IOFormatError(
                f"line {lineno}: expected '<key> <value>' with key in "
                f"{sorted(OPTION_KEYS)}")
        try:
            options[tokens[0]] = OPTION_KEYS[tokens[0]](tokens[1])
        except ValueError as exc:
            raise IOFormatError(f"line {lineno}: {exc}") from None
    return ProblemFile(plant, weights, options)


def load_problem(path) -> ProblemFile:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise IOFormatError(f"cannot read {path}: {exc}") from None
    return parse_problem(text)


# ---------------------------------------------------------------------------
# atomic CSV export
# ---------------------------------------------------------------------------

def write_atomic(path, text):
    """Write text to path via a temp file in the same directory + rename."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, columns):
    """Atomic CSV export; header is a tuple of column names."""
    columns = [np.asarray(c) for c in columns]
    if len({len(c) for c in columns}) != 1 or len(columns) != len(header):
        raise IOFormatError("CSV columns must match the header and lengths")
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(f"{v:.16e}" for v in row))
    write_atomic(path, "\n".join(lines) + "\n")


def read_csv(path):
    """(header tuple, column arrays) from a CSV written by write_csv."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise IOFormatError(f"cannot read {path}: {exc}") from None
    if not lines:
        raise IOFormatError(f"{path} is empty")
    header = tuple(lines[0].split(","))
    try:
        data = np.array([[float(v) for v in ln.split(",")]
                         for ln in lines[1:]])
    except ValueError as exc:
        raise IOFormatError(f"{path}: {exc}") from None
    if data.ndim != 2 or data.shape[1] != len(header):
        raise IOFormatError(f"{path}: ragged CSV")
    return header, [data[:, k] for k in range(len(header))]
