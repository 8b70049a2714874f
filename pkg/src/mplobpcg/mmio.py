"""Matrix Market coordinate I/O for Hermitian matrices."""
from __future__ import annotations

import numpy as np

from .errors import NotSquare, NotSymmetricHeader, ParseError
from .sparse import CsrMatrix

_BANNER = "%%matrixmarket"


def read_matrix_market(path) -> CsrMatrix:
    """Read a symmetric/hermitian coordinate file into a full-pattern CSR.

    Only the stored triangle is read; mirrored entries are conjugated.
    Duplicate entries are summed.  A ``general`` qualifier is rejected.
    """
    with open(path, "r") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError(1, "empty file")
    head = lines[0].split()
    if len(head) != 5 or head[0].lower() != _BANNER:
        raise ParseError(1, "missing %%MatrixMarket banner")
    obj, fmt, field, sym = (h.lower() for h in head[1:])
    if obj != "matrix" or fmt != "coordinate":
        raise ParseError(1, f"unsupported format '{obj} {fmt}'")
    if field not in ("real", "complex", "integer"):
        raise ParseError(1, f"unsupported field '{field}'")
    if sym not in ("symmetric", "hermitian"):
        raise NotSymmetricHeader(f"symmetry qualifier '{sym}' is not symmetric/hermitian")
    is_complex = field == "complex"
    if sym == "hermitian" and not is_complex:
        sym = "symmetric"

    lineno = 1
    size = None
    for lineno in range(2, len(lines) + 1):
        text = lines[lineno - 1].strip()
        if text and not text.startswith("%"):
            size = text.split()
            break
    if size is None:
        raise ParseError(lineno + 1, "missing size line")
    try:
        nrows, ncols, nnz = (int(t) for t in size)
    except ValueError:
        raise ParseError(lineno, "size line must hold three integers") from None
    if nrows != ncols:
        raise NotSquare(f"matrix is {nrows}x{ncols}")
    n = nrows

    want = 4 if is_complex else 3
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=np.complex128 if is_complex else np.float64)
    count = 0
    for ln in range(lineno + 1, len(lines) + 1):
        text = lines[ln - 1].strip()
        if not text or text.startswith("%"):
            continue
        parts = text.split()
        if len(parts) != want:
            raise ParseError(ln, f"expected {want} fields, got {len(parts)}")
        if count >= nnz:
            raise ParseError(ln, f"more than {nnz} entries")
        try:
            i, j = int(parts[0]) - 1, int(parts[1]) - 1
            v = complex(float(parts[2]), float(parts[3])) if is_complex else float(parts[2])
        except ValueError:
            raise ParseError(ln, "malformed entry") from None
        if not (0 <= i < n and 0 <= j < n):
            raise ParseError(ln, f"index ({i + 1}, {j + 1}) out of range")
        rows[count], cols[count], vals[count] = i, j, v
        count += 1
    if count != nnz:
        raise ParseError(len(lines) + 1, f"expected {nnz} entries, found {count}")

    off = rows != cols
    if sym == "hermitian" and np.any(vals[~off].imag != 0):
        raise ParseError(lineno, "hermitian diagonal must be real")
    r = np.concatenate((rows, cols[off]))
    c = np.concatenate((cols, rows[off]))
    # adding 0.0 turns the -0.0 imaginary parts produced by conj into +0.0
    v = np.concatenate((vals, np.conj(vals[off]) + 0.0 if is_complex else vals[off]))
    return CsrMatrix.from_coo(r, c, v, n, dtype=vals.dtype)


def write_matrix_market(path, A: CsrMatrix, comment: str | None = None):
    """Write the lower triangle with a symmetric/hermitian header."""
    is_complex = A.is_complex
    rows = A.row_ids()
    low = rows >= A.indices
    r, c, v = rows[low], A.indices[low], A.data[low].astype(np.complex128 if is_complex else np.float64)
    with open(path, "w") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate {'complex hermitian' if is_complex else 'real symmetric'}\n")
        if comment:
            for line in comment.splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{A.n} {A.n} {len(r)}\n")
        for i, j, x in zip(r.tolist(), c.tolist(), v.tolist()):
            if is_complex:
                fh.write(f"{i + 1} {j + 1} {x.real!r} {x.imag!r}\n")
            else:
                fh.write(f"{i + 1} {j + 1} {x!r}\n")
