"""Gaudin algebra parametrizations and pseudo-deformation bookkeeping.

The two realizations used here are the rational one, X_ij = Z_ij = 1/(u_i - u_j),
and the trigonometric one,

    X_ij = sqrt((1 + u_i^2)(1 + u_j^2)) / (u_i - u_j),
    Z_ij = (1 + u_i u_j) / (u_i - u_j),

which satisfy X^2 - Z^2 = c with c = 0 and c = 1 respectively, together with
the compatibility condition X_ij X_jk - X_ik (Z_ij + Z_jk) = 0.  Complex
coordinates are allowed; the square root is taken per coordinate so the
compatibility condition survives analytic continuation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractionLimitError, DegenerateLevelError, DomainError

# Coordinates closer than this are treated as colliding: denominators below
# this scale destroy Newton conditioning at double precision.
COLLISION_TOL = 1e-10

RATIONAL = "rational"
TRIGONOMETRIC = "trigonometric"
KINDS = (RATIONAL, TRIGONOMETRIC)


def _check_kind(kind):
    if kind not in KINDS:
        raise DomainError(f"unknown Gaudin kind {kind!r}; expected one of {KINDS}")


def _is_half_integer(x, tol=1e-12):
    return abs(2 * x - round(2 * x)) < tol


@dataclass(frozen=True)
class LevelSet:
    """The m spin levels: coordinates eta_i, spins s_i, degeneracies 2 s_i + 1."""

    etas: tuple
    spins: tuple
    degeneracies: tuple

    def __post_init__(self):
        etas = tuple(float(e) for e in self.etas)
        spins = tuple(float(s) for s in self.spins)
        degeneracies = tuple(int(o) for o in self.degeneracies)
        object.__setattr__(self, "etas", etas)
        object.__setattr__(self, "spins", spins)
        object.__setattr__(self, "degeneracies", degeneracies)
        m = len(etas)
        if m < 1:
            raise DegenerateLevelError("need at least one level")
        if len(spins) != m or len(degeneracies) != m:
            raise DegenerateLevelError("etas, spins, degeneracies must have equal length")
        for s, omega in zip(spins, degeneracies):
            if s <= 0 or not _is_half_integer(s):
                raise DegenerateLevelError(f"spin {s} is not a positive half-integer")
            if omega != round(2 * s + 1):
                raise DegenerateLevelError(f"degeneracy {omega} != 2*{s} + 1")
        arr = np.asarray(etas)
        for i in range(m):
            for j in range(i + 1, m):
                if abs(arr[i] - arr[j]) < COLLISION_TOL:
                    raise DegenerateLevelError(
                        f"levels {i} and {j} coincide: eta = {arr[i]}, {arr[j]}"
                    )

    @classmethod
    def from_spins(cls, etas, spins):
        spins = tuple(float(s) for s in spins)
        return cls(tuple(etas), spins, tuple(int(round(2 * s + 1)) for s in spins))

    @classmethod
    def from_degeneracies(cls, etas, degeneracies):
        degeneracies = tuple(int(o) for o in degeneracies)
        return cls(tuple(etas), tuple((o - 1) / 2 for o in degeneracies), degeneracies)

    @property
    def m(self):
        return len(self.etas)


@dataclass(frozen=True)
class GaudinMatrices:
    """Antisymmetric X, Z coupling matrices over levels (optionally + rapidities)."""

    kind: str
    dim: int
    x: np.ndarray
    z: np.ndarray

    @property
    def c(self):
        return 0.0 if self.kind == RATIONAL else 1.0


def pair_x(kind, u, v):
    """X entry for a coordinate pair (complex-safe)."""
    _check_kind(kind)
    d = u - v
    if kind == RATIONAL:
        return 1.0 / d
    return np.sqrt(1.0 + u * u + 0j) * np.sqrt(1.0 + v * v + 0j) / d


def pair_z(kind, u, v):
    """Z entry for a coordinate pair (complex-safe)."""
    _check_kind(kind)
    d = u - v
    if kind == RATIONAL:
        return 1.0 / d
    return (1.0 + u * v) / d


def dz_dv(kind, u, v):
    """Derivative of pair_z(kind, u, v) with respect to the second coordinate."""
    _check_kind(kind)
    d = u - v
    if kind == RATIONAL:
        return 1.0 / (d * d)
    return (1.0 + u * u) / (d * d)


def dz_du(kind, u, v):
    """Derivative of pair_z(kind, u, v) with respect to the first coordinate."""
    _check_kind(kind)
    d = u - v
    if kind == RATIONAL:
        return -1.0 / (d * d)
    return -(1.0 + v * v) / (d * d)


def _fill_pairwise(kind, coords):
    n = len(coords)
    complex_entries = kind == TRIGONOMETRIC or np.iscomplexobj(coords)
    dtype = complex if complex_entries else float
    x = np.zeros((n, n), dtype=dtype)
    z = np.zeros((n, n), dtype=dtype)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            x[i, j] = pair_x(kind, coords[i], coords[j])
            z[i, j] = pair_z(kind, coords[i], coords[j])
    if not np.iscomplexobj(coords) and complex_entries:
        # real coordinates give real matrices even in the trigonometric case
        x = x.real.astype(float) if np.max(np.abs(x.imag)) == 0.0 else x
        z = z.real.astype(float) if np.max(np.abs(z.imag)) == 0.0 else z
    return x, z


def build_gaudin(kind, levels):
    """Construct the m x m X, Z matrices for a level set."""
    coords = np.asarray(levels.etas)
    x, z = _fill_pairwise(kind, coords)
    return GaudinMatrices(kind=kind, dim=levels.m, x=x, z=z)


def extend_with_rapidities(matrices, levels, rapidities):
    """Extend to the (m + N)-dimensional matrices over levels and rapidities."""
    from .errors import CollisionError

    values = np.asarray(list(rapidities.values), dtype=complex)
    etas = np.asarray(levels.etas)
    for a, w in enumerate(values):
        for i, e in enumerate(etas):
            if abs(w - e) < COLLISION_TOL:
                raise CollisionError(
                    f"rapidity {a} collides with level {i} at {e}", pair=("level", i, a)
                )
        for b in range(a + 1, len(values)):
            if abs(w - values[b]) < COLLISION_TOL:
                raise CollisionError(
                    f"rapidities {a} and {b} collide at {w}", pair=("rapidity", a, b)
                )
    coords = np.concatenate([etas.astype(complex), values])
    x, z = _fill_pairwise(matrices.kind, coords)
    # keep the original m x m block bit-identical
    x[: levels.m, : levels.m] = matrices.x
    z[: levels.m, : levels.m] = matrices.z
    return GaudinMatrices(kind=matrices.kind, dim=len(coords), x=x, z=z)


def eta0_infinity_row(levels):
    """Trigonometric X_{0k}, Z_{0k} rows in the eta_0 -> infinity limit.

    X_{0k} = sqrt(1 + eta_k^2), Z_{0k} = eta_k; together with the finite block
    these still satisfy the compatibility condition.
    """
    etas = np.asarray(levels.etas)
    return np.sqrt(1.0 + etas * etas), etas.copy()


def unitary_xi(omega, n):
    """The discrete deformation value xi_n = 2*omega / (n + 2*omega)."""
    if n < 0 or int(n) != n:
        raise DomainError(f"grid index must be a nonnegative integer, got {n}")
    return 2.0 * omega / (n + 2.0 * omega)


def grid_index(omega, xi, tol=1e-9):
    """Inverse of unitary_xi; returns the integer n, or None if xi is off-grid."""
    if xi <= 0.0 or xi > 1.0:
        return None
    n = 2.0 * omega * (1.0 / xi - 1.0)
    return int(round(n)) if abs(n - round(n)) < tol else None


@dataclass(frozen=True)
class DeformationPoint:
    """A deformation value xi together with the degeneracy of the deformed copy."""

    xi: float
    omega: int

    def __post_init__(self):
        if not 0.0 <= self.xi <= 1.0:
            raise DomainError(f"xi = {self.xi} outside [0, 1]")
        if self.omega < 1 or int(self.omega) != self.omega:
            raise DomainError(f"omega must be a positive integer, got {self.omega}")

    def s(self, s1):
        """Deformed irrep label s(xi) = s(1) + (1/xi - 1) * omega; diverges at xi=0."""
        if self.xi == 0.0:
            raise ContractionLimitError("s(xi) diverges at xi = 0; use xi_s instead")
        return s1 + (1.0 / self.xi - 1.0) * self.omega

    def xi_s(self, s1):
        """xi * s(xi) = xi*s(1) + (1 - xi)*omega; finite on all of [0, 1]."""
        return self.xi * s1 + (1.0 - self.xi) * self.omega


def deformed_spin(point, s1):
    """Return (s(xi), xi*s(xi)) for the given deformation point."""
    return point.s(s1), point.xi_s(s1)


def gaudin_residual(matrices):
    """Max |X_ij X_jk - X_ik (Z_ij + Z_jk)| over all distinct triples."""
    n = matrices.dim
    x, z = matrices.x, matrices.z
    worst = 0.0
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if i == j or j == k or i == k:
                    continue
                r = abs(x[i, j] * x[j, k] - x[i, k] * (z[i, j] + z[j, k]))
                worst = max(worst, r)
    return worst
