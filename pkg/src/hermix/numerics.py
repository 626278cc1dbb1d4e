"""Extended-precision scalars and dense linear algebra.

Double precision underflows the cancellation scales that show up in the
grid-projection computations: the interesting residuals reach
2^(-Omega(m log m)) while the coefficients they come from grow like
2^(O(m)).  Everything here therefore runs on an arbitrary-precision
backend (mpmath) wrapped in a small value type, :class:`BigReal`, that
carries its own precision so mixed-precision expressions round the way
the caller asked for rather than the way a global context happens to be
set.

The linear solver is a plain LU factorization with partial pivoting
performed at the working precision.  Cramer's rule is deliberately not
used here (it is kept as a test oracle for tiny systems only).
"""

from __future__ import annotations

import math

import mpmath
from mpmath import mp

from .errors import DimensionMismatch, SingularMatrix

MIN_PRECISION_BITS = 64


def _coerce_mpf(value, bits):
    """Convert ``value`` to an mpf, rounding at ``bits`` of precision."""
    if isinstance(value, BigReal):
        value = value._v
    with mp.workprec(bits):
        return mp.mpf(value)


class BigReal:
    """An arbitrary-precision real that remembers its precision.

    Parameters
    ----------
    value : int, float, str, mpf or BigReal
        Initial value; strings are parsed as decimal literals.
    precision_bits : int
        Mantissa precision carried by this value.  Must be >= 64.

    Arithmetic between two BigReals rounds at the larger of the two
    precisions; plain ints/floats are absorbed at the other operand's
    precision.  No operation ever touches mpmath's global precision
    outside a ``workprec`` block, so instances are safe to share across
    threads.
    """

    __slots__ = ("_v", "precision_bits")

    def __init__(self, value=0, precision_bits=MIN_PRECISION_BITS):
        precision_bits = int(precision_bits)
        if precision_bits < MIN_PRECISION_BITS:
            raise ValueError(
                f"precision_bits must be >= {MIN_PRECISION_BITS}, got {precision_bits}"
            )
        self.precision_bits = precision_bits
        self._v = _coerce_mpf(value, precision_bits)

    # -- constructors -------------------------------------------------

    @classmethod
    def pi(cls, precision_bits):
        with mp.workprec(int(precision_bits)):
            return cls(+mp.pi, precision_bits)

    @classmethod
    def exp_of(cls, value, precision_bits):
        """e**value evaluated directly at the target precision."""
        return cls(value, precision_bits).exp()

    @classmethod
    def factorial(cls, n, precision_bits):
        """n! computed in exact integer arithmetic, then rounded once."""
        if n < 0:
            raise ValueError("factorial of negative integer")
        return cls(math.factorial(int(n)), precision_bits)

    @classmethod
    def binomial(cls, n, k, precision_bits):
        return cls(math.comb(int(n), int(k)), precision_bits)

    # -- helpers ------------------------------------------------------

    def _result_bits(self, other):
        if isinstance(other, BigReal):
            return max(self.precision_bits, other.precision_bits)
        return self.precision_bits

    def _other_value(self, other):
        if isinstance(other, BigReal):
            return other._v
        if isinstance(other, (int, float)) and not isinstance(other, bool):
            return other
        if isinstance(other, mpmath.mpf):
            return other
        return NotImplemented

    def _wrap(self, raw, bits):
        out = object.__new__(BigReal)
        out.precision_bits = bits
        out._v = raw
        return out

    def _binop(self, other, fn):
        ov = self._other_value(other)
        if ov is NotImplemented:
            return NotImplemented
        bits = self._result_bits(other)
        with mp.workprec(bits):
            raw = fn(self._v, mp.mpf(ov))
        return self._wrap(raw, bits)

    # -- arithmetic ---------------------------------------------------

    def __add__(self, other):
        return self._binop(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binop(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binop(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binop(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binop(other, lambda a, b: a / b)

    def __rtruediv__(self, other):
        return self._binop(other, lambda a, b: b / a)

    def __pow__(self, other):
        return self._binop(other, lambda a, b: a ** b)

    def __neg__(self):
        # mpf unary minus rounds at the *global* context precision, so it
        # must run under workprec or high-precision values get truncated.
        with mp.workprec(self.precision_bits):
            raw = -self._v
        return self._wrap(raw, self.precision_bits)

    def __abs__(self):
        with mp.workprec(self.precision_bits):
            raw = abs(self._v)
        return self._wrap(raw, self.precision_bits)

    def exp(self):
        with mp.workprec(self.precision_bits):
            raw = mp.exp(self._v)
        return self._wrap(raw, self.precision_bits)

    def sqrt(self):
        with mp.workprec(self.precision_bits):
            raw = mp.sqrt(self._v)
        return self._wrap(raw, self.precision_bits)

    def ln(self):
        with mp.workprec(self.precision_bits):
            raw = mp.log(self._v)
        return self._wrap(raw, self.precision_bits)

    def log2(self):
        with mp.workprec(self.precision_bits):
            raw = mp.log(self._v) / mp.log(2)
        return self._wrap(raw, self.precision_bits)

    # -- comparisons (exact on the stored values) --------------------

    def _cmp_value(self, other):
        ov = self._other_value(other)
        if ov is NotImplemented:
            return None
        if isinstance(ov, mpmath.mpf):
            return ov
        bits = self.precision_bits
        if isinstance(ov, int):
            bits = max(bits, ov.bit_length() + 8)
        with mp.workprec(bits):
            return mpmath.mpf(ov)

    def __eq__(self, other):
        ov = self._cmp_value(other)
        return NotImplemented if ov is None else self._v == ov

    def __lt__(self, other):
        ov = self._cmp_value(other)
        return NotImplemented if ov is None else self._v < ov

    def __le__(self, other):
        ov = self._cmp_value(other)
        return NotImplemented if ov is None else self._v <= ov

    def __gt__(self, other):
        ov = self._cmp_value(other)
        return NotImplemented if ov is None else self._v > ov

    def __ge__(self, other):
        ov = self._cmp_value(other)
        return NotImplemented if ov is None else self._v >= ov

    def __hash__(self):
        return hash(self._v)

    # -- conversions --------------------------------------------------

    def __float__(self):
        return float(self._v)

    def is_finite(self):
        return mpmath.isfinite(self._v)

    def to_decimal_string(self):
        """Full-precision decimal rendering (round-trips at this precision)."""
        digits = int(self.precision_bits * 0.30103) + 3
        with mp.workprec(self.precision_bits + 8):
            return mp.nstr(self._v, digits, strip_zeros=True)

    def with_precision(self, precision_bits):
        return BigReal(self._v, precision_bits)

    def __repr__(self):
        with mp.workprec(self.precision_bits):
            s = mp.nstr(self._v, 12)
        return f"BigReal({s}, bits={self.precision_bits})"


def as_bigreal(value, precision_bits):
    if isinstance(value, BigReal):
        if value.precision_bits == precision_bits:
            return value
        return value.with_precision(precision_bits)
    return BigReal(value, precision_bits)


class DenseMatrix:
    """Immutable rectangular grid of :class:`BigReal` entries.

    Entry access is bounds-checked; ``m[i, j]`` raises ``IndexError``
    outside the declared shape (negative indices are not interpreted
    Python-style — they are out of bounds).
    """

    __slots__ = ("rows", "cols", "_e")

    def __init__(self, entries, precision_bits=None):
        if not entries or not entries[0]:
            raise DimensionMismatch("matrix must have at least one entry")
        ncols = len(entries[0])
        rows = []
        for r in entries:
            if len(r) != ncols:
                raise DimensionMismatch("ragged rows in matrix constructor")
            if precision_bits is None:
                rows.append(tuple(v if isinstance(v, BigReal) else BigReal(v)
                                  for v in r))
            else:
                rows.append(tuple(as_bigreal(v, precision_bits) for v in r))
        self.rows = len(rows)
        self.cols = ncols
        self._e = tuple(rows)

    @classmethod
    def identity(cls, n, precision_bits=MIN_PRECISION_BITS):
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)],
                   precision_bits)

    def __getitem__(self, key):
        i, j = key
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(f"index ({i}, {j}) outside {self.rows}x{self.cols}")
        return self._e[i][j]

    def row(self, i):
        if not 0 <= i < self.rows:
            raise IndexError(f"row {i} outside {self.rows}x{self.cols}")
        return list(self._e[i])

    def matvec(self, vec, precision_bits=None):
        """Matrix-vector product, accumulated at the working precision."""
        if len(vec) != self.cols:
            raise DimensionMismatch(
                f"vector length {len(vec)} != cols {self.cols}")
        bits = precision_bits or max(
            [e.precision_bits for row in self._e for e in row]
            + [v.precision_bits for v in vec if isinstance(v, BigReal)]
        )
        out = []
        with mp.workprec(bits):
            for i in range(self.rows):
                acc = mp.mpf(0)
                for j in range(self.cols):
                    acc += self._e[i][j]._v * _coerce_mpf(vec[j], bits)
                out.append(BigReal(acc, bits))
        return out

    def transpose(self):
        return DenseMatrix([[self._e[i][j] for i in range(self.rows)]
                            for j in range(self.cols)])

    def __repr__(self):
        return f"DenseMatrix({self.rows}x{self.cols})"


def required_precision(m):
    """Working precision (bits) for grid computations at m = 1/Delta.

    The cancellation scale is (m+1)! — see the residual bound
    sqrt(1/(m+1)!) — so the policy max(256, ceil(16 m log2(m+2))) keeps
    roughly 4x headroom over log2((m+1)!).  Monotone in m.
    """
    m = int(m)
    if m < 1:
        raise ValueError("m must be >= 1")
    return max(256, math.ceil(16 * m * math.log2(m + 2)))


def solve_linear(A, b, precision_bits):
    """Solve A x = b by LU with partial pivoting at ``precision_bits``.

    Parameters
    ----------
    A : DenseMatrix
        Square system matrix.
    b : sequence of BigReal (or convertible)
        Right-hand side, length ``A.rows``.
    precision_bits : int
        Target precision; the factorization runs with guard bits on top
        so the returned solution satisfies
        ``||Ax - b||_inf <= 2**(-precision_bits/2) * (1 + ||b||_inf)``.

    Raises
    ------
    SingularMatrix
        If a pivot magnitude falls below ``2**(-precision_bits + 8)``.
    DimensionMismatch
        If shapes disagree.
    """
    if A.rows != A.cols:
        raise DimensionMismatch(f"matrix is {A.rows}x{A.cols}, not square")
    n = A.rows
    if len(b) != n:
        raise DimensionMismatch(f"rhs length {len(b)} != {n}")
    precision_bits = int(precision_bits)
    if precision_bits < MIN_PRECISION_BITS:
        raise ValueError(f"precision_bits must be >= {MIN_PRECISION_BITS}")
    work = precision_bits + max(32, precision_bits // 4)
    pivot_floor = mpmath.mpf(2) ** (-precision_bits + 8)

    with mp.workprec(work):
        M = [[mp.mpf(A[i, j]._v) for j in range(n)] for i in range(n)]
        x = [_coerce_mpf(v, work) for v in b]
        perm = list(range(n))
        for k in range(n):
            # partial pivoting: largest magnitude in column k
            p = max(range(k, n), key=lambda r: abs(M[r][k]))
            if abs(M[p][k]) < pivot_floor:
                raise SingularMatrix(
                    f"pivot {float(abs(M[p][k]))!r} below 2^{-precision_bits + 8} "
                    f"at column {k}")
            if p != k:
                M[k], M[p] = M[p], M[k]
                x[k], x[p] = x[p], x[k]
                perm[k], perm[p] = perm[p], perm[k]
            inv_piv = 1 / M[k][k]
            for i in range(k + 1, n):
                f = M[i][k] * inv_piv
                if f:
                    Mi, Mk = M[i], M[k]
                    for j in range(k + 1, n):
                        Mi[j] -= f * Mk[j]
                    x[i] -= f * x[k]
                M[i][k] = f
        # back substitution
        for i in range(n - 1, -1, -1):
            acc = x[i]
            Mi = M[i]
            for j in range(i + 1, n):
                acc -= Mi[j] * x[j]
            x[i] = acc / Mi[i]
    return [BigReal(v, precision_bits) for v in x]


def residual_inf(A, x, b, precision_bits=None):
    """||A x - b||_inf recomputed at (by default) doubled precision."""
    bits = precision_bits or 2 * max(v.precision_bits for v in x)
    Ax = A.matvec(x, precision_bits=bits)
    worst = BigReal(0, bits)
    for ax, bv in zip(Ax, b):
        r = abs(ax - as_bigreal(bv, bits))
        if r > worst:
            worst = r
    return worst


def smallest_eigenvalue_sym(A, precision_bits, iterations=60):
    """Smallest eigenvalue of a symmetric positive-definite matrix.

    Plain inverse power iteration (each step one ``solve_linear``),
    deterministic all-ones start.  Diagnostic quality only — enough to
    watch the Gram spectrum collapse as the basis order grows.
    """
    n = A.rows
    v = [BigReal(1, precision_bits) for _ in range(n)]
    lam = BigReal(1, precision_bits)
    for _ in range(int(iterations)):
        w = solve_linear(A, v, precision_bits)
        # Rayleigh quotient for A^{-1}: (v.w)/(v.v), so min eig of A = 1/that
        with mp.workprec(precision_bits):
            num = mp.mpf(0)
            den = mp.mpf(0)
            for vi, wi in zip(v, w):
                num += vi._v * wi._v
                den += vi._v * vi._v
            lam = BigReal(den / num, precision_bits)
            norm = max(abs(wi._v) for wi in w)
            v = [BigReal(wi._v / norm, precision_bits) for wi in w]
    return lam
