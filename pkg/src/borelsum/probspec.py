"""Problem-spec files: a structured text format for `PDEProblem`.

A spec file is a sequence of sections.  Blank lines and `#` comments are
ignored.  Section order is free except that repeated `[forcing]`,
`[initial]` and `[symbol-row]`-style data are matched to components in
order of appearance.

Sections and their contents::

    [dims]          key = value lines: d, n, m (integers), horizon,
                    epsilon (floats, optional), name (optional),
                    ramification (comma list of integers, optional)
    [symbol]        m data lines, one per component: the ascending
                    coefficients of P_l, each written as `re,im` or a
                    plain rational
    [sector]        key = value lines: phi, rho (floats),
                    directions (comma list of floats, optional)
    [term]          one section per nonlinear term; keys component
                    (integer), q (semicolon list of l:j:mult triples,
                    empty allowed), k (comma list of integers); the
                    remaining data lines are the coefficient series
    [forcing]       data lines: series terms; one section per component
    [initial]       data lines: series terms; one section per component
    [scales]        optional small-time scale data: omegas, betas,
                    gammas (comma lists of rationals), beta (rational)

Series term lines carry one monomial  c * t^j * exp(-mu t) * x^e  as

    coeff_re coeff_im exponent [t-degree] [mu]

where `exponent` and `mu` are exact rationals (`a/b`), `t-degree` is a
nonnegative integer (default 0), and `mu` defaults to 0.  Coefficients
written with `/` stay exact rationals; decimal notation yields floats.

All parse errors carry the offending line number.
"""

from __future__ import annotations

from fractions import Fraction

from ._tpoly import ExpPoly
from .problem import (NonlinearTerm, PDEProblem, SectorSpec, SmallTimeScales,
                      SymbolPolynomial)
from .series import RamifiedSeries

__all__ = ["ParseError", "parse_problem", "parse_problem_text",
           "parse_raw_problem", "parse_raw_text",
           "write_problem", "problem_text"]


class ParseError(ValueError):
    """Schema violation in a problem-spec file, with the line number."""

    def __init__(self, message, line=None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")


# ---------------------------------------------------------------------------
# scalar token parsing

def _number(tok, line):
    """Exact rational when written as a ratio or integer, float otherwise."""
    try:
        if "/" in tok:
            return Fraction(tok)
        if any(ch in tok for ch in ".eE") and not tok.lstrip("+-").isdigit():
            return float(tok)
        return int(tok)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"bad number {tok!r}", line) from None


def _complex_or_real(tok, line):
    if "," in tok:
        re_s, im_s = tok.split(",", 1)
        re_v = _number(re_s, line)
        im_v = _number(im_s, line)
        if im_v == 0:
            return re_v
        return complex(re_v, im_v)
    return _number(tok, line)


def _fraction(tok, line):
    try:
        return Fraction(tok)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"exponent {tok!r} is not an exact rational",
                         line) from None


def _int(tok, line, what="value"):
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"{what} {tok!r} is not an integer", line) from None


def _comma_list(value, line, conv):
    return tuple(conv(tok.strip(), line) for tok in value.split(",")
                 if tok.strip())


# ---------------------------------------------------------------------------
# sectioning

def _split_sections(text):
    """Yield (name, header_line, [(line_no, line), ...]) per section."""
    sections = []
    current = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError("unterminated section header", no)
            current = (line[1:-1].strip().lower(), no, [])
            sections.append(current)
        else:
            if current is None:
                raise ParseError("data before first section header", no)
            current[2].append((no, line))
    return sections


def _key_values(lines):
    """Split section lines into a key = value dict and leftover data lines."""
    kv = {}
    data = []
    for no, line in lines:
        if "=" in line:
            key, value = line.split("=", 1)
            key = key.strip().lower()
            if key in kv:
                raise ParseError(f"duplicate key {key!r}", no)
            kv[key] = (value.strip(), no)
        else:
            data.append((no, line))
    return kv, data


def _series_from_lines(lines, var="x"):
    """Build a RamifiedSeries from term lines (may be empty -> zero)."""
    terms = {}
    for no, line in lines:
        toks = line.split()
        if len(toks) < 3 or len(toks) > 5:
            raise ParseError(
                "series term needs 3-5 fields: coeff_re coeff_im exponent "
                "[t-degree] [mu]", no)
        re_v = _number(toks[0], no)
        im_v = _number(toks[1], no)
        coeff = complex(re_v, im_v) if im_v != 0 else re_v
        e = _fraction(toks[2], no)
        degree = _int(toks[3], no, "t-degree") if len(toks) >= 4 else 0
        if degree < 0:
            raise ParseError("t-degree must be >= 0", no)
        mu = _fraction(toks[4], no) if len(toks) == 5 else Fraction(0)
        mono = ExpPoly.monomial(coeff, degree=degree, mu=mu)
        terms[e] = terms[e] + mono if e in terms else mono
    return RamifiedSeries(terms, var=var)


def _parse_q(value, line):
    entries = []
    for part in value.split(";"):
        part = part.strip()
        if not part:
            continue
        bits = part.split(":")
        if len(bits) != 3:
            raise ParseError(f"q entry {part!r} is not l:j:mult", line)
        entries.append(tuple(_int(b, line, "q entry") for b in bits))
    return tuple(entries)


# ---------------------------------------------------------------------------
# public API

def parse_problem_text(text):
    """Parse problem-spec text into a PDEProblem (see module docstring)."""
    sections = _split_sections(text)
    by_name = {}
    for name, no, lines in sections:
        by_name.setdefault(name, []).append((no, lines))

    def single(name, required=True):
        got = by_name.get(name, [])
        if len(got) > 1:
            raise ParseError(f"section [{name}] appears more than once",
                             got[1][0])
        if not got:
            if required:
                raise ParseError(f"missing required section [{name}]")
            return None
        return got[0]

    # [dims]
    no, lines = single("dims")
    kv, extra = _key_values(lines)
    if extra:
        raise ParseError("unexpected data line in [dims]", extra[0][0])

    def dim_key(key, conv, default=None, required=False):
        if key not in kv:
            if required:
                raise ParseError(f"[dims] is missing key {key!r}", no)
            return default
        value, kno = kv.pop(key)
        return conv(value, kno)

    d = dim_key("d", _int, required=True)
    n = dim_key("n", _int, required=True)
    m = dim_key("m", _int, required=True)
    horizon = dim_key("horizon", lambda v, _: float(v), default=1.0)
    epsilon = dim_key("epsilon", lambda v, _: float(v), default=1.0)
    name = dim_key("name", lambda v, _: v, default="")
    ramification = dim_key(
        "ramification", lambda v, ln: _comma_list(v, ln, _int), default=(1,))
    if kv:
        key, (_, kno) = next(iter(kv.items()))
        raise ParseError(f"unknown key {key!r} in [dims]", kno)

    # [symbol]
    sno, lines = single("symbol")
    kv, data = _key_values(lines)
    if kv:
        key, (_, kno) = next(iter(kv.items()))
        raise ParseError(f"unknown key {key!r} in [symbol]", kno)
    if len(data) != m:
        raise ParseError(f"[symbol] needs {m} coefficient rows, got "
                         f"{len(data)}", sno)
    rows = tuple(tuple(_complex_or_real(tok, lno) for tok in line.split())
                 for lno, line in data)
    symbol = SymbolPolynomial(rows, n)

    # [sector]
    sno, lines = single("sector")
    kv, data = _key_values(lines)
    if data:
        raise ParseError("unexpected data line in [sector]", data[0][0])

    def sector_key(key, default=None, required=False):
        if key not in kv:
            if required:
                raise ParseError(f"[sector] is missing key {key!r}", sno)
            return default
        value, kno = kv.pop(key)
        return value, kno

    phi, _ = sector_key("phi", required=True)
    rho = sector_key("rho", default=("0", sno))[0]
    directions = sector_key("directions")
    if directions is not None:
        directions = _comma_list(directions[0], directions[1],
                                 lambda t, ln: float(t))
    else:
        directions = (0.0,)
    if kv:
        key, (_, kno) = next(iter(kv.items()))
        raise ParseError(f"unknown key {key!r} in [sector]", kno)
    sector = SectorSpec(phi=float(phi), rho=float(rho),
                        directions=directions, d=d)

    # [forcing] / [initial] : one section per component, in order
    def component_series(name):
        got = by_name.get(name, [])
        if len(got) != m:
            where = got[0][0] if got else None
            raise ParseError(
                f"need {m} [{name}] sections (one per component), got "
                f"{len(got)}", where)
        out = []
        for sec_no, lines in got:
            kv, data = _key_values(lines)
            if kv:
                key, (_, kno) = next(iter(kv.items()))
                raise ParseError(f"unknown key {key!r} in [{name}]", kno)
            out.append(_series_from_lines(data))
        return tuple(out)

    forcing = component_series("forcing")
    initial = component_series("initial")

    # [term] sections
    terms = []
    for sec_no, lines in by_name.get("term", []):
        kv, data = _key_values(lines)
        if "component" not in kv:
            raise ParseError("[term] is missing key 'component'", sec_no)
        comp = _int(*kv.pop("component"), what="component")
        q_val = kv.pop("q", ("", sec_no))
        q = _parse_q(q_val[0], q_val[1])
        if "k" not in kv:
            raise ParseError("[term] is missing key 'k'", sec_no)
        k_val, k_no = kv.pop("k")
        k = _comma_list(k_val, k_no, _int)
        if kv:
            key, (_, kno) = next(iter(kv.items()))
            raise ParseError(f"unknown key {key!r} in [term]", kno)
        if not (0 <= comp < m):
            raise ParseError(f"term component {comp} out of range", sec_no)
        if len(k) != m:
            raise ParseError(f"k needs {m} entries, got {len(k)}", sec_no)
        coeff = _series_from_lines(data)
        try:
            terms.append(NonlinearTerm(comp, q, k, coeff))
        except ValueError as exc:
            raise ParseError(str(exc), sec_no) from None

    # [scales] (optional)
    small_time = None
    scales = single("scales", required=False)
    if scales is not None:
        sno, lines = scales
        kv, data = _key_values(lines)
        if data:
            raise ParseError("unexpected data line in [scales]", data[0][0])
        try:
            omegas = _comma_list(*kv.pop("omegas"), conv=_fraction)
            betas = _comma_list(*kv.pop("betas"), conv=_fraction)
            gammas = _comma_list(*kv.pop("gammas"), conv=_fraction)
            beta = _fraction(*kv.pop("beta"))
        except KeyError as exc:
            raise ParseError(f"[scales] is missing key {exc.args[0]!r}",
                             sno) from None
        if kv:
            key, (_, kno) = next(iter(kv.items()))
            raise ParseError(f"unknown key {key!r} in [scales]", kno)
        small_time = SmallTimeScales(omegas=omegas, betas=betas,
                                     gammas=gammas, beta=beta,
                                     alpha_leading={})

    try:
        problem = PDEProblem(
            d=d, n=n, m=m, symbol=symbol, terms=tuple(terms),
            forcing=forcing, initial=initial, sector=sector,
            horizon=horizon, epsilon=epsilon,
            ramification=tuple(ramification), small_time=small_time,
            name=name)
    except ValueError as exc:
        raise ParseError(str(exc)) from None

    if small_time is not None:
        alpha = {q: alphas[0]
                 for q, alphas in problem.scaled_alpha_sets().items()}
        small_time = SmallTimeScales(
            omegas=small_time.omegas, betas=small_time.betas,
            gammas=small_time.gammas, beta=small_time.beta,
            alpha_leading=alpha)
        problem = PDEProblem(
            d=d, n=n, m=m, symbol=symbol, terms=tuple(terms),
            forcing=forcing, initial=initial, sector=sector,
            horizon=horizon, epsilon=epsilon,
            ramification=tuple(ramification), small_time=small_time,
            name=name)
    return problem


def parse_problem(path):
    """Parse the problem-spec file at `path` into a PDEProblem."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        return parse_problem_text(text)
    except ParseError as exc:
        raise ParseError(f"{path}: {exc.args[0]}", exc.line) from None


# ---------------------------------------------------------------------------
# raw scalar equations (input to the normalizer)

def parse_raw_text(text):
    """Parse a raw-equation spec into a RawEquation.

    The raw format shares the section machinery of problem specs::

        [raw]       keys n (integer), horizon (float, optional),
                    plus a single [symbol] row, [sector], [initial]
        [g1-term]   one section per monomial of g1: optional key
                    `factors = l:power; ...` (l the derivative order of u,
                    l < n; omitted = constant term), then series lines for
                    the exact rational coefficient
        [g2-term]   same, for the coefficient of the top derivative

    The equation read is  u_t + P(d/dx) u + g2 * d^n u = g1.
    """
    from .problem import DerivExpr, RawEquation

    sections = _split_sections(text)
    by_name = {}
    for name, no, lines in sections:
        by_name.setdefault(name, []).append((no, lines))

    def single(name, required=True):
        got = by_name.get(name, [])
        if len(got) > 1:
            raise ParseError(f"section [{name}] appears more than once",
                             got[1][0])
        if not got:
            if required:
                raise ParseError(f"missing required section [{name}]")
            return None
        return got[0]

    rno, lines = single("raw")
    kv, extra = _key_values(lines)
    if extra:
        raise ParseError("unexpected data line in [raw]", extra[0][0])
    if "n" not in kv:
        raise ParseError("[raw] is missing key 'n'", rno)
    n = _int(*kv.pop("n"), what="n")
    horizon = float(kv.pop("horizon", ("1.0", rno))[0])
    if kv:
        key, (_, kno) = next(iter(kv.items()))
        raise ParseError(f"unknown key {key!r} in [raw]", kno)

    sno, lines = single("symbol")
    kv, data = _key_values(lines)
    if kv or len(data) != 1:
        raise ParseError("[symbol] needs exactly one coefficient row", sno)
    lno, line = data[0]
    symbol_coeffs = tuple(_complex_or_real(tok, lno) for tok in line.split())

    sno, lines = single("sector")
    kv, data = _key_values(lines)
    if data:
        raise ParseError("unexpected data line in [sector]", data[0][0])
    phi = float(kv.pop("phi", (None, sno))[0] or 0)
    if phi == 0:
        raise ParseError("[sector] is missing key 'phi'", sno)
    rho = float(kv.pop("rho", ("0", sno))[0])
    sector = SectorSpec(phi=phi, rho=rho)

    ino, lines = single("initial")
    kv, data = _key_values(lines)
    initial = _series_from_lines(data)

    def build_expr(section_name):
        expr = DerivExpr({}, n)
        for sec_no, lines in by_name.get(section_name, []):
            kv, data = _key_values(lines)
            factors = ()
            if "factors" in kv:
                value, kno = kv.pop("factors")
                for part in value.split(";"):
                    part = part.strip()
                    if not part:
                        continue
                    bits = part.split(":")
                    if len(bits) != 2:
                        raise ParseError(
                            f"factor {part!r} is not l:power", kno)
                    factors += ((_int(bits[0], kno, "factor order"),
                                 _int(bits[1], kno, "factor power")),)
            if kv:
                key, (_, kno) = next(iter(kv.items()))
                raise ParseError(f"unknown key {key!r} in "
                                 f"[{section_name}]", kno)
            series = _series_from_lines(data)
            try:
                piece = DerivExpr.coefficient(series, n)
                for l, power in factors:
                    v = DerivExpr.variable(l, n)
                    for _ in range(power):
                        piece = piece * v
            except (TypeError, ValueError) as exc:
                raise ParseError(str(exc), sec_no) from None
            expr = expr + piece
        return expr

    try:
        return RawEquation(n=n, symbol_coeffs=symbol_coeffs,
                           g1=build_expr("g1-term"), g2=build_expr("g2-term"),
                           initial=initial, sector=sector, horizon=horizon)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def parse_raw_problem(path):
    """Parse the raw-equation spec file at `path` into a RawEquation."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        return parse_raw_text(text)
    except ParseError as exc:
        raise ParseError(f"{path}: {exc.args[0]}", exc.line) from None


# ---------------------------------------------------------------------------
# writing

def _fmt_number(v):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else str(v.numerator)
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def _fmt_coeff_pair(c):
    if isinstance(c, complex):
        return f"{_fmt_number(c.real)} {_fmt_number(c.imag)}"
    return f"{_fmt_number(c)} 0"


def _series_lines(series):
    lines = []
    for e in sorted(series.terms, reverse=True):
        c = ExpPoly.coerce(series.terms[e])
        for mu in sorted(c.terms, key=lambda v: (getattr(v, "real", v),)):
            for degree, coeff in enumerate(c.terms[mu]):
                if coeff == 0:
                    continue
                line = f"{_fmt_coeff_pair(coeff)} {e}"
                if degree or mu != 0:
                    line += f" {degree}"
                if mu != 0:
                    line += f" {Fraction(mu)}"
                lines.append(line)
    return lines


def _fmt_symbol_entry(c):
    if isinstance(c, complex):
        return f"{_fmt_number(c.real)},{_fmt_number(c.imag)}"
    return _fmt_number(c)


def problem_text(problem):
    """Serialize a PDEProblem to problem-spec text (parse round-trips)."""
    out = ["[dims]",
           f"d = {problem.d}",
           f"n = {problem.n}",
           f"m = {problem.m}",
           f"horizon = {_fmt_number(problem.horizon)}",
           f"epsilon = {_fmt_number(problem.epsilon)}"]
    if problem.name:
        out.append(f"name = {problem.name}")
    if tuple(problem.ramification) != (1,):
        out.append("ramification = "
                   + ", ".join(str(v) for v in problem.ramification))

    out += ["", "[symbol]"]
    for row in problem.symbol.coeffs:
        out.append(" ".join(_fmt_symbol_entry(c) for c in row))

    sec = problem.sector
    out += ["", "[sector]",
            f"phi = {_fmt_number(sec.phi)}",
            f"rho = {_fmt_number(sec.rho)}"]
    if tuple(sec.directions) != (0.0,):
        out.append("directions = "
                   + ", ".join(_fmt_number(v) for v in sec.directions))

    for term in problem.terms:
        out += ["", "[term]", f"component = {term.component}"]
        if term.q:
            out.append("q = " + "; ".join(f"{l}:{j}:{mult}"
                                          for l, j, mult in term.q))
        out.append("k = " + ", ".join(str(kk) for kk in term.k))
        out += _series_lines(term.coeff)

    for series in problem.forcing:
        out += ["", "[forcing]"] + _series_lines(series)
    for series in problem.initial:
        out += ["", "[initial]"] + _series_lines(series)

    st = problem.small_time
    if st is not None:
        out += ["", "[scales]",
                "omegas = " + ", ".join(str(Fraction(v)) for v in st.omegas),
                "betas = " + ", ".join(str(Fraction(v)) for v in st.betas),
                "gammas = " + ", ".join(str(Fraction(v)) for v in st.gammas),
                f"beta = {Fraction(st.beta)}"]
    return "\n".join(out) + "\n"


def write_problem(problem, path):
    """Write `problem` as a problem-spec file at `path`."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(problem_text(problem))
