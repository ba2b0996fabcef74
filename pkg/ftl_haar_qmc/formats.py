"""Text and binary file formats for point sets, generator matrices and coefficients.

The command line reads and writes point sets and generator matrices only.
Coefficient maps (`write_coefficients` / `read_coefficients`) and piecewise
constant functions (`write_pc` / `read_pc`) are library API for saving and
reloading exact frame data between sessions.
"""

from fractions import Fraction
from logging import getLogger
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from .errors import FormatError
from .haar import CoeffMap, PiecewiseConstant, SpaceParams, Surd, WaveletIndex
from .nets import GeneratorMatrices, PointSet

logger = getLogger(__name__)

PathLike = Union[str, Path]

MAX_TEXT_BASE = 36
PC_MAGIC = b"HQPC"
PC_DTYPES = {b"i": np.dtype("<i8"), b"f": np.dtype("<f8")}
PC_NATIVE = {b"i": np.int64, b"f": np.float64}


def _lines(text: str) -> List[tuple]:
    """(line number, stripped line) for every non-blank, non-comment line."""
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if line:
            out.append((lineno, line))
    return out


def _ints(line: str, lineno: int, source: str, count: int, what: str) -> List[int]:
    tokens = line.split()
    if len(tokens) != count:
        raise FormatError(f"{source}:{lineno}: expected {count} {what}, got {len(tokens)}")
    try:
        return [int(tok) for tok in tokens]
    except ValueError:
        raise FormatError(f"{source}:{lineno}: {what} must be integers") from None


def _check_text_base(b: int, source: str):
    if b < 2 or b > MAX_TEXT_BASE:
        raise FormatError(f"{source}: text formats support bases 2..{MAX_TEXT_BASE}, got {b}")


def _digits(n: int, b: int, m: int) -> str:
    return np.base_repr(n, b).rjust(m, "0") if m else "0"


def format_points(P: PointSet) -> str:
    b, m = P.base, P.precision
    _check_text_base(b, "point set")
    lines = [f"{b} {m} {P.dim} {P.size}"]
    for row in P.numerators.tolist():
        lines.append(" ".join(_digits(n, b, m) for n in row))
    return "\n".join(lines) + "\n"


def parse_points(text: str, source: str = "<points>") -> PointSet:
    """Read the `b m s N` header and N lines of s digit strings, most significant first."""
    lines = _lines(text)
    if not lines:
        raise FormatError(f"{source}: empty point-set file")
    lineno, header = lines[0]
    b, m, s, N = _ints(header, lineno, source, 4, "header fields (b m s N)")
    _check_text_base(b, source)
    body = lines[1:]
    if len(body) != N:
        raise FormatError(f"{source}: header announces {N} points, file has {len(body)}")
    nums = np.empty((N, s), dtype=np.int64)
    for row, (lineno, line) in enumerate(body):
        tokens = line.split()
        if len(tokens) != s:
            raise FormatError(f"{source}:{lineno}: expected {s} coordinates, got {len(tokens)}")
        for ell, tok in enumerate(tokens):
            if len(tok) != max(m, 1) or (m == 0 and tok != "0"):
                raise FormatError(f"{source}:{lineno}: digit string {tok!r} does not have {m} digits")
            try:
                nums[row, ell] = int(tok, b) if m else 0
            except ValueError:
                raise FormatError(f"{source}:{lineno}: {tok!r} is not a base-{b} digit string") from None
    return PointSet(b, m, nums)


def format_matrices(G: GeneratorMatrices) -> str:
    b, m, s = G.base, G.m, G.s
    _check_text_base(b, "generator matrices")
    blocks = [f"{b} {m} {s}"]
    for mat in G.matrices:
        blocks.append("\n".join(" ".join(np.base_repr(int(v), b) for v in row) for row in mat))
    return "\n\n".join(blocks) + "\n"


def parse_matrices(text: str, source: str = "<matrices>") -> GeneratorMatrices:
    """Read a `b m s` header and s blocks of m rows of m base-b digits."""
    lines = _lines(text)
    if not lines:
        raise FormatError(f"{source}: empty matrices file")
    lineno, header = lines[0]
    b, m, s = _ints(header, lineno, source, 3, "header fields (b m s)")
    _check_text_base(b, source)
    rows = lines[1:]
    if len(rows) != s * m:
        raise FormatError(f"{source}: expected {s} blocks of {m} rows, got {len(rows)} rows")
    mats = np.zeros((s, m, m), dtype=np.int64)
    for r, (lineno, line) in enumerate(rows):
        tokens = line.split()
        if len(tokens) != m:
            raise FormatError(f"{source}:{lineno}: expected {m} digits, got {len(tokens)}")
        try:
            values = [int(tok, b) for tok in tokens]
        except ValueError:
            raise FormatError(f"{source}:{lineno}: entries must be base-{b} digits") from None
        if any(v >= b for v in values):
            raise FormatError(f"{source}:{lineno}: entries must be base-{b} digits")
        mats[r // m, r % m] = values
    return GeneratorMatrices(b, mats)


def _format_value(v) -> str:
    if isinstance(v, Surd):
        return f"{v.rational}+{v.radical}*sqrt"
    if isinstance(v, (int, np.integer, Fraction)):
        return str(Fraction(v))
    return repr(float(v))


def _parse_value(tok: str, b: int):
    if tok.endswith("*sqrt"):
        # a leading sign belongs to the rational part, so split at the last '+'
        rational, _, radical = tok[: -len("*sqrt")].rpartition("+")
        return Surd(Fraction(rational), Fraction(radical), b)
    if "/" in tok or tok.lstrip("-").isdigit():
        return Fraction(tok)
    return float(tok)


def format_coefficients(c: CoeffMap) -> str:
    """Header `b s`, then `j_1..j_s k_1..k_s i_1..i_s value` per entry."""
    lines = [f"{c.params.b} {c.params.s}"]
    for idx, v in c.items():
        fields = [*idx.j, *idx.k, *idx.i]
        lines.append(" ".join(str(f) for f in fields) + " " + _format_value(v))
    return "\n".join(lines) + "\n"


def parse_coefficients(text: str, params: Optional[SpaceParams] = None, source: str = "<coefficients>") -> CoeffMap:
    lines = _lines(text)
    if not lines:
        raise FormatError(f"{source}: empty coefficient file")
    lineno, header = lines[0]
    b, s = _ints(header, lineno, source, 2, "header fields (b s)")
    params = params or SpaceParams(b, s, 1.0)
    if (params.b, params.s) != (b, s):
        raise FormatError(f"{source}: file is for b={b}, s={s}, expected b={params.b}, s={params.s}")
    entries = {}
    for lineno, line in lines[1:]:
        tokens = line.split()
        if len(tokens) != 3 * s + 1:
            raise FormatError(f"{source}:{lineno}: expected {3 * s + 1} fields, got {len(tokens)}")
        try:
            fields = [int(tok) for tok in tokens[:-1]]
            value = _parse_value(tokens[-1], b)
        except ValueError:
            raise FormatError(f"{source}:{lineno}: malformed entry {line!r}") from None
        idx = WaveletIndex(b, tuple(fields[:s]), tuple(fields[s:2 * s]), tuple(fields[2 * s:]))
        if idx in entries:
            raise FormatError(f"{source}:{lineno}: duplicate index {idx}")
        entries[idx] = value
    return CoeffMap(params, entries)


def pc_to_bytes(f: PiecewiseConstant) -> bytes:
    """Magic, dtype code, int64 header (b, m, s), then row-major little-endian cells."""
    kind = f.values.dtype.kind
    if kind in "iu":
        code = b"i"
    elif kind == "f":
        code = b"f"
    else:
        raise FormatError("only integer or float cells have a binary form")
    header = np.array([f.base, f.level, f.s], dtype="<i8").tobytes()
    return PC_MAGIC + code + header + np.ascontiguousarray(f.values, dtype=PC_DTYPES[code]).tobytes()


def pc_from_bytes(data: bytes, source: str = "<binary>") -> PiecewiseConstant:
    head = len(PC_MAGIC) + 1 + 24
    if len(data) < head or data[: len(PC_MAGIC)] != PC_MAGIC:
        raise FormatError(f"{source}: not a piecewise-constant file")
    code = data[len(PC_MAGIC):len(PC_MAGIC) + 1]
    if code not in PC_DTYPES:
        raise FormatError(f"{source}: unknown cell type {code!r}")
    b, m, s = (int(v) for v in np.frombuffer(data, dtype="<i8", count=3, offset=len(PC_MAGIC) + 1))
    if b < 2 or m < 0 or s < 1:
        raise FormatError(f"{source}: invalid header b={b}, m={m}, s={s}")
    dtype = PC_DTYPES[code]
    count = (b**m) ** s
    if len(data) != head + count * dtype.itemsize:
        raise FormatError(f"{source}: expected {count} cells after the header")
    values = np.frombuffer(data, dtype=dtype, offset=head).astype(PC_NATIVE[code]).reshape((b**m,) * s)
    return PiecewiseConstant(b, m, values)


def read_points(path: PathLike) -> PointSet:
    return parse_points(Path(path).read_text(), str(path))


def write_points(P: PointSet, path: PathLike):
    Path(path).write_text(format_points(P))
    logger.info("wrote %d points to %s", P.size, path)


def read_matrices(path: PathLike) -> GeneratorMatrices:
    return parse_matrices(Path(path).read_text(), str(path))


def write_matrices(G: GeneratorMatrices, path: PathLike):
    Path(path).write_text(format_matrices(G))


def read_coefficients(path: PathLike, params: Optional[SpaceParams] = None) -> CoeffMap:
    return parse_coefficients(Path(path).read_text(), params, str(path))


def write_coefficients(c: CoeffMap, path: PathLike):
    Path(path).write_text(format_coefficients(c))


def read_pc(path: PathLike) -> PiecewiseConstant:
    return pc_from_bytes(Path(path).read_bytes(), str(path))


def write_pc(f: PiecewiseConstant, path: PathLike):
    Path(path).write_bytes(pc_to_bytes(f))
