"""Polynomial-coded distributed matrix multiplication over a prime field.

The master wants ``C = A.T @ B`` with ``A`` of shape (s, r) and ``B`` of
shape (s, t). ``A`` is split into ``m`` column blocks and ``B`` into ``n``
column blocks. Worker ``i`` receives

    A~_i = sum_j A_j x_i**j            (j = 0..m-1)
    B~_i = sum_k B_k x_i**(k*m)        (k = 0..n-1)

and returns ``A~_i.T @ B~_i``, an evaluation of a matrix polynomial of
degree ``m*n - 1`` whose coefficient of ``x**(j + k*m)`` is ``A_j.T @ B_k``.
Any ``m*n`` distinct evaluations determine the product exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .finite_field import DEFAULT_MODULUS, FieldElement, FieldMismatchError, PrimeField


class NotDecodableError(ValueError):
    """Fewer than K = m*n distinct results reached the master."""


class FieldMatrix:
    """Dense matrix of residues modulo a prime, stored as Python ints."""

    __slots__ = ("field", "data")

    def __init__(self, data, field: PrimeField):
        arr = np.array(data, dtype=object)
        if arr.ndim != 2:
            raise ValueError(f"FieldMatrix needs 2-D data, got ndim={arr.ndim}")
        q = field.q
        self.data = np.vectorize(lambda x: int(x) % q, otypes=[object])(arr) if arr.size else arr
        self.field = field

    @classmethod
    def _raw(cls, data: np.ndarray, field: PrimeField) -> "FieldMatrix":
        # data already reduced
        obj = cls.__new__(cls)
        obj.data = data
        obj.field = field
        return obj

    @classmethod
    def zeros(cls, rows: int, cols: int, field: PrimeField) -> "FieldMatrix":
        return cls._raw(np.full((rows, cols), 0, dtype=object), field)

    @classmethod
    def random(cls, rows: int, cols: int, field: PrimeField, rng=None) -> "FieldMatrix":
        rng = np.random.default_rng(rng)
        vals = rng.integers(0, field.q, size=(rows, cols), dtype=np.uint64)
        return cls._raw(np.vectorize(int, otypes=[object])(vals) if vals.size else
                        np.empty((rows, cols), dtype=object), field)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def T(self) -> "FieldMatrix":
        return FieldMatrix._raw(self.data.T.copy(), self.field)

    def _check(self, other: "FieldMatrix"):
        if not isinstance(other, FieldMatrix):
            raise TypeError(f"expected FieldMatrix, got {type(other).__name__}")
        if other.field != self.field:
            raise FieldMismatchError(
                f"matrices live in F_{self.field.q} and F_{other.field.q}"
            )

    def __add__(self, other: "FieldMatrix") -> "FieldMatrix":
        self._check(other)
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        return FieldMatrix._raw((self.data + other.data) % self.field.q, self.field)

    def scale(self, c) -> "FieldMatrix":
        if isinstance(c, FieldElement):
            if c.field != self.field:
                raise FieldMismatchError("scalar from a different field")
            c = c.value
        return FieldMatrix._raw((self.data * (int(c) % self.field.q)) % self.field.q, self.field)

    def __matmul__(self, other: "FieldMatrix") -> "FieldMatrix":
        self._check(other)
        if self.cols != other.rows:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        if self.cols == 0:
            return FieldMatrix.zeros(self.rows, other.cols, self.field)
        return FieldMatrix._raw(np.dot(self.data, other.data) % self.field.q, self.field)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FieldMatrix):
            return NotImplemented
        return (
            self.field == other.field
            and self.shape == other.shape
            and bool(np.all(self.data == other.data))
        )

    def __getitem__(self, idx):
        return FieldMatrix._raw(np.atleast_2d(self.data[idx]), self.field)

    def tolist(self) -> list[list[int]]:
        return [[int(x) for x in row] for row in self.data]

    def __repr__(self):
        return f"FieldMatrix({self.tolist()}, q={self.field.q})"


def as_field_matrix(x, field: PrimeField) -> FieldMatrix:
    if isinstance(x, FieldMatrix):
        if x.field != field:
            raise FieldMismatchError(f"matrix is over F_{x.field.q}, expected F_{field.q}")
        return x
    return FieldMatrix(x, field)


@dataclass(frozen=True)
class PartitionSpec:
    """Column-block counts: ``m`` for A, ``n`` for B."""

    m: int
    n: int

    def __post_init__(self):
        for name in ("m", "n"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")


@dataclass(frozen=True)
class EncodedTask:
    worker_id: int
    eval_point: FieldElement
    a_tilde: FieldMatrix
    b_tilde: FieldMatrix


@dataclass(frozen=True)
class ComputedBlock:
    worker_id: int
    eval_point: FieldElement
    c_tilde: FieldMatrix


def recovery_threshold(spec: PartitionSpec) -> int:
    """Minimum number of worker results needed to rebuild the product."""
    return spec.m * spec.n


def _split_columns(M: FieldMatrix, parts: int, label: str) -> list[FieldMatrix]:
    if M.cols % parts:
        raise ValueError(f"{parts} does not divide the {M.cols} columns of {label}")
    w = M.cols // parts
    return [FieldMatrix._raw(M.data[:, j * w:(j + 1) * w].copy(), M.field) for j in range(parts)]


def partition(A: FieldMatrix, B: FieldMatrix, spec: PartitionSpec):
    """Split A into ``m`` and B into ``n`` contiguous column blocks."""
    if A.field != B.field:
        raise FieldMismatchError("A and B are over different fields")
    if A.rows != B.rows:
        raise ValueError(f"A has {A.rows} rows but B has {B.rows}")
    return _split_columns(A, spec.m, "A"), _split_columns(B, spec.n, "B")


def default_eval_points(n_workers: int, field: PrimeField) -> list[FieldElement]:
    """Worker ``i`` (1-based) evaluates at ``x_i = i``."""
    if n_workers >= field.q:
        raise ValueError(f"need fewer than q={field.q} workers, got {n_workers}")
    return [field(i) for i in range(1, n_workers + 1)]


def _check_points(points: Sequence[FieldElement], field: PrimeField):
    values = []
    for x in points:
        if x.field != field:
            raise FieldMismatchError("evaluation point from a different field")
        values.append(x.value)
    if 0 in values:
        raise ValueError("evaluation points must be nonzero")
    if len(set(values)) != len(values):
        raise ValueError("evaluation points must be pairwise distinct")


def _combine(blocks: Sequence[FieldMatrix], x: int, stride: int) -> FieldMatrix:
    field = blocks[0].field
    q = field.q
    acc = np.zeros(blocks[0].shape, dtype=object)
    step = pow(x, stride, q)
    coeff = 1
    for blk in blocks:
        acc = (acc + blk.data * coeff) % q
        coeff = coeff * step % q
    return FieldMatrix._raw(acc, field)


def encode(blocks_a: Sequence[FieldMatrix], blocks_b: Sequence[FieldMatrix],
           eval_points: Sequence[FieldElement]) -> list[EncodedTask]:
    """Build one coded task per evaluation point (worker ids are 1-based)."""
    if not blocks_a or not blocks_b:
        raise ValueError("need at least one block of each input")
    field = blocks_a[0].field
    m, n = len(blocks_a), len(blocks_b)
    n_workers = len(eval_points)
    if n_workers < m * n:
        raise ValueError(f"{n_workers} workers cannot meet the recovery threshold {m * n}")
    if n_workers >= field.q:
        raise ValueError(f"{n_workers} workers need more than q-1={field.q - 1} distinct points")
    _check_points(eval_points, field)
    tasks = []
    for i, x in enumerate(eval_points, start=1):
        tasks.append(EncodedTask(
            worker_id=i,
            eval_point=x,
            a_tilde=_combine(blocks_a, x.value, 1),
            b_tilde=_combine(blocks_b, x.value, m),
        ))
    return tasks


def worker_multiply(task: EncodedTask) -> ComputedBlock:
    if task.a_tilde.rows != task.b_tilde.rows:
        raise ValueError(
            f"coded blocks disagree on row count: {task.a_tilde.shape} vs {task.b_tilde.shape}"
        )
    return ComputedBlock(task.worker_id, task.eval_point, task.a_tilde.T @ task.b_tilde)


def _poly_mul_linear(coeffs: list[int], root: int, q: int) -> list[int]:
    # (c_0 + c_1 x + ...) * (x - root)
    out = [0] * (len(coeffs) + 1)
    for d, c in enumerate(coeffs):
        out[d + 1] = (out[d + 1] + c) % q
        out[d] = (out[d] - c * root) % q
    return out


def lagrange_basis(xs: Sequence[int], q: int) -> list[list[int]]:
    """Monomial coefficients of each Lagrange basis polynomial.

    Row ``i`` holds the coefficients (lowest degree first) of the polynomial
    that is 1 at ``xs[i]`` and 0 at every other point.
    """
    basis = []
    for i, xi in enumerate(xs):
        num = [1]
        denom = 1
        for j, xj in enumerate(xs):
            if j == i:
                continue
            num = _poly_mul_linear(num, xj, q)
            denom = denom * (xi - xj) % q
        if denom == 0:
            raise ValueError("interpolation points must be distinct")
        inv = pow(denom, -1, q)
        basis.append([c * inv % q for c in num])
    return basis


def interpolate(xs: Sequence[int], ys: Sequence[int], q: int) -> list[int]:
    """Coefficients of the unique degree < len(xs) polynomial through the points."""
    basis = lagrange_basis(xs, q)
    coeffs = [0] * len(xs)
    for row, y in zip(basis, ys):
        for d, c in enumerate(row):
            coeffs[d] = (coeffs[d] + c * y) % q
    return coeffs


def evaluate_poly(coeffs: Sequence[int], x: int, q: int) -> int:
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % q
    return acc


def decode(results: Iterable[ComputedBlock], spec: PartitionSpec) -> FieldMatrix:
    """Rebuild ``A.T @ B`` from any ``m*n`` results.

    Results beyond the threshold are dropped, keeping the lowest worker ids.
    """
    results = sorted(results, key=lambda r: r.worker_id)
    K = recovery_threshold(spec)
    points = [r.eval_point.value for r in results]
    if len(set(points)) != len(points):
        raise ValueError("duplicate evaluation points among results")
    if len(results) < K:
        raise NotDecodableError(
            f"not decodable: straggler threshold unmet ({len(results)} of {K} results)"
        )
    used = results[:K]
    field = used[0].c_tilde.field
    q = field.q
    if any(r.c_tilde.field != field for r in used):
        raise FieldMismatchError("results span several fields")
    basis = lagrange_basis([r.eval_point.value for r in used], q)

    bh, bw = used[0].c_tilde.shape
    out = np.empty((bh * spec.m, bw * spec.n), dtype=object)
    for j in range(spec.m):
        for k in range(spec.n):
            d = j + k * spec.m
            blk = np.zeros((bh, bw), dtype=object)
            for row, r in zip(basis, used):
                blk = (blk + r.c_tilde.data * row[d]) % q
            out[j * bh:(j + 1) * bh, k * bw:(k + 1) * bw] = blk
    return FieldMatrix._raw(out, field)


def end_to_end(A, B, spec: PartitionSpec, n_workers: int, q: int = DEFAULT_MODULUS,
               straggler_set: Iterable[int] = ()) -> FieldMatrix:
    """Partition, encode, compute, drop stragglers, and decode."""
    field = PrimeField(q)
    A = as_field_matrix(A, field)
    B = as_field_matrix(B, field)
    stragglers = set(straggler_set)
    unknown = stragglers - set(range(1, n_workers + 1))
    if unknown:
        raise ValueError(f"straggler ids {sorted(unknown)} are not workers 1..{n_workers}")
    blocks_a, blocks_b = partition(A, B, spec)
    tasks = encode(blocks_a, blocks_b, default_eval_points(n_workers, field))
    results = [worker_multiply(t) for t in tasks if t.worker_id not in stragglers]
    return decode(results, spec)
