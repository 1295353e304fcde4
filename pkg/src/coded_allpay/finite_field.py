"""Arithmetic in a prime field F_q.

Elements are plain Python integers under the hood, so products never
overflow regardless of the modulus size.
"""
from __future__ import annotations

from dataclasses import dataclass

DEFAULT_MODULUS = 65537


class FieldMismatchError(ValueError):
    """Raised when elements from two different fields are combined."""


def _is_prime(q: int) -> bool:
    if q < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
    for p in small:
        if q % p == 0:
            return q == p
    # deterministic Miller-Rabin for q < 3.3e24
    d, s = q - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in small:
        x = pow(a, d, q)
        if x in (1, q - 1):
            continue
        for _ in range(s - 1):
            x = x * x % q
            if x == q - 1:
                break
        else:
            return False
    return True


def egcd(a: int, b: int) -> tuple[int, int, int]:
    """Extended Euclid: returns (g, x, y) with a*x + b*y == g == gcd(a, b)."""
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        quot, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - quot * x1
        y0, y1 = y1, y0 - quot * y1
    return a, x0, y0


@dataclass(frozen=True)
class PrimeField:
    """The field of residues modulo a prime ``q``."""

    q: int = DEFAULT_MODULUS

    def __post_init__(self):
        if not isinstance(self.q, int) or self.q <= 2:
            raise ValueError(f"modulus must be an integer > 2, got {self.q!r}")
        if self.q >= 2**64:
            raise ValueError("modulus must fit in 64 bits")
        if not _is_prime(self.q):
            raise ValueError(f"modulus {self.q} is not prime")

    def __call__(self, value: int) -> "FieldElement":
        return FieldElement(int(value) % self.q, self)

    def reduce(self, value: int) -> int:
        return int(value) % self.q

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.q

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.q

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.q

    def inv(self, a: int) -> int:
        a %= self.q
        if a == 0:
            raise ZeroDivisionError("zero has no multiplicative inverse")
        _, x, _ = egcd(a, self.q)
        return x % self.q

    def pow(self, a: int, e: int) -> int:
        if e < 0:
            raise ValueError("exponent must be nonnegative")
        return pow(a % self.q, e, self.q)


@dataclass(frozen=True)
class FieldElement:
    """A residue bound to its field; supports the usual operators."""

    value: int
    field: PrimeField

    def __post_init__(self):
        if not 0 <= self.value < self.field.q:
            raise ValueError(f"{self.value} is not a residue modulo {self.field.q}")

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise FieldMismatchError(
                    f"cannot combine elements of F_{self.field.q} and F_{other.field.q}"
                )
            return other.value
        if isinstance(other, int):
            return other % self.field.q
        return NotImplemented

    def _wrap(self, value: int) -> "FieldElement":
        return FieldElement(value, self.field)

    def __add__(self, other):
        b = self._coerce(other)
        if b is NotImplemented:
            return b
        return self._wrap(self.field.add(self.value, b))

    __radd__ = __add__

    def __sub__(self, other):
        b = self._coerce(other)
        if b is NotImplemented:
            return b
        return self._wrap(self.field.sub(self.value, b))

    def __rsub__(self, other):
        b = self._coerce(other)
        if b is NotImplemented:
            return b
        return self._wrap(self.field.sub(b, self.value))

    def __neg__(self):
        return self._wrap(-self.value % self.field.q)

    def __mul__(self, other):
        b = self._coerce(other)
        if b is NotImplemented:
            return b
        return self._wrap(self.field.mul(self.value, b))

    __rmul__ = __mul__

    def __truediv__(self, other):
        b = self._coerce(other)
        if b is NotImplemented:
            return b
        return self._wrap(self.field.mul(self.value, self.field.inv(b)))

    def __pow__(self, e: int):
        return self._wrap(self.field.pow(self.value, e))

    def inverse(self) -> "FieldElement":
        return self._wrap(self.field.inv(self.value))

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"FieldElement({self.value} mod {self.field.q})"


def field_add(a: FieldElement, b: FieldElement) -> FieldElement:
    return a + b


def field_mul(a: FieldElement, b: FieldElement) -> FieldElement:
    return a * b


def field_inv(a: FieldElement) -> FieldElement:
    return a.inverse()


def field_pow(a: FieldElement, e: int) -> FieldElement:
    return a**e
