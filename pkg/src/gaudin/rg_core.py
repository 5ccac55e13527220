"""Residual systems: RG, pseudo-deformed RG, decoupled TDA, and Dicke equations.

All residual evaluators return a ResidualReport carrying the residual vector,
its max modulus, and the analytic Jacobian with respect to the rapidities
(holomorphic derivative matrix; the residuals are holomorphic in the complex
rapidities for fixed model parameters).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import algebra
from .algebra import COLLISION_TOL, LevelSet, dz_du, dz_dv, pair_z
from .errors import (
    CollisionError,
    ContractionLimitError,
    DomainError,
    ValidationError,
)

RG_ETA = "rg_eta"
DICKE_X = "dicke_x"


@dataclass(frozen=True)
class ModelSpec:
    """A Richardson-Gaudin model: levels, Gaudin kind, excitation number, coupling."""

    levels: LevelSet
    kind: str
    n_excitations: int
    coupling_g: float

    def __post_init__(self):
        if self.kind not in algebra.KINDS:
            raise ValidationError(f"unknown kind {self.kind!r}")
        if self.n_excitations < 1:
            raise ValidationError("n_excitations must be >= 1")
        if not np.isfinite(self.coupling_g):
            raise ValidationError("coupling g must be finite")


@dataclass(frozen=True)
class DickeSpec:
    """A Dicke model: spin splittings, spins, coupling G, photon energy, N."""

    epsilons: tuple
    spins: tuple
    coupling_G: float
    hbar_omega: float
    n_excitations: int

    def __post_init__(self):
        epsilons = tuple(float(e) for e in self.epsilons)
        spins = tuple(float(s) for s in self.spins)
        object.__setattr__(self, "epsilons", epsilons)
        object.__setattr__(self, "spins", spins)
        if len(epsilons) < 1 or len(epsilons) != len(spins):
            raise ValidationError("epsilons and spins must be nonempty, equal length")
        for i in range(len(epsilons)):
            for j in range(i + 1, len(epsilons)):
                if abs(epsilons[i] - epsilons[j]) < COLLISION_TOL:
                    raise ValidationError("levels must be distinct")
        for s in spins:
            if s <= 0 or abs(2 * s - round(2 * s)) > 1e-12:
                raise ValidationError(f"spin {s} is not a positive half-integer")
        if self.hbar_omega <= 0:
            raise ValidationError("hbar_omega must be positive")
        if not np.isfinite(self.coupling_G):
            raise ValidationError("coupling G must be finite")
        if self.n_excitations < 1:
            raise ValidationError("n_excitations must be >= 1")

    @property
    def m(self):
        return len(self.epsilons)

    def vacuum_energy(self):
        """Reference energy of |theta>: -sum_k eps_k s_k."""
        return -float(np.dot(self.epsilons, self.spins))


@dataclass(frozen=True)
class RapiditySet:
    """N complex rapidities, tagged by coordinate frame (RG eta or Dicke x)."""

    values: tuple
    frame: str

    def __post_init__(self):
        values = tuple(complex(v) for v in self.values)
        object.__setattr__(self, "values", values)
        if self.frame not in (RG_ETA, DICKE_X):
            raise ValidationError(f"unknown frame {self.frame!r}")
        if len(values) < 1:
            raise ValidationError("need at least one rapidity")

    @property
    def n(self):
        return len(self.values)

    def as_array(self):
        return np.asarray(self.values, dtype=complex)


@dataclass
class ResidualReport:
    """Residual vector, its max modulus, and (optionally) the analytic Jacobian."""

    residuals: np.ndarray
    max_abs: float
    jacobian: np.ndarray | None = None
    decoupled: bool = False


def _require_frame(r, frame):
    if r.frame != frame:
        raise ValidationError(f"expected rapidities in frame {frame!r}, got {r.frame!r}")


def _check_collisions(site_coords, w):
    for a, wa in enumerate(w):
        for i, e in enumerate(site_coords):
            if abs(wa - e) < COLLISION_TOL:
                raise CollisionError(
                    f"rapidity {a} collides with level {i}", pair=("level", i, a)
                )
        for b in range(a + 1, len(w)):
            if abs(wa - w[b]) < COLLISION_TOL:
                raise CollisionError(
                    f"rapidities {a} and {b} collide", pair=("rapidity", a, b)
                )


def _rg_like(kind, etas, weights, g_site, g_pair, w, jacobian=True):
    """Shared kernel: residual_a = 1 + g_site*sum_i Z(eta_i, w_a)*weights_i
    - g_pair*sum_{b != a} Z(w_b, w_a), plus its holomorphic Jacobian."""
    etas = np.asarray(etas, dtype=float)
    w = np.asarray(w, dtype=complex)
    _check_collisions(etas, w)
    n = len(w)
    res = np.ones(n, dtype=complex)
    jac = np.zeros((n, n), dtype=complex) if jacobian else None
    for a in range(n):
        for i in range(len(etas)):
            res[a] += g_site * weights[i] * pair_z(kind, etas[i], w[a])
            if jacobian:
                jac[a, a] += g_site * weights[i] * dz_dv(kind, etas[i], w[a])
        for b in range(n):
            if b == a:
                continue
            res[a] -= g_pair * pair_z(kind, w[b], w[a])
            if jacobian:
                jac[a, a] -= g_pair * dz_dv(kind, w[b], w[a])
                jac[a, b] -= g_pair * dz_du(kind, w[b], w[a])
    return res, jac


def rg_residual(spec, r, jacobian=True):
    """Bethe equations 1 + g sum_i Z_{ia} s_i - g sum_{b!=a} Z_{ba} = 0."""
    _require_frame(r, RG_ETA)
    g = spec.coupling_g
    res, jac = _rg_like(
        spec.kind, spec.levels.etas, spec.levels.spins, g, g, r.as_array(), jacobian
    )
    return ResidualReport(res, float(np.max(np.abs(res))), jac)


def deformed_rg_residual(spec, xi, r, jacobian=True):
    """Pseudo-deformed equations 1 + g sum_i Z_{ia} xi*s_i(xi) - g xi sum Z_{ba} = 0.

    Reduces to rg_residual at xi = 1 and to tda_residual at xi = 0 exactly
    (same code path, identical arithmetic).
    """
    if not 0.0 <= xi <= 1.0:
        raise DomainError(f"xi = {xi} outside [0, 1]")
    _require_frame(r, RG_ETA)
    g = spec.coupling_g
    weights = [
        xi * s + (1.0 - xi) * omega
        for s, omega in zip(spec.levels.spins, spec.levels.degeneracies)
    ]
    res, jac = _rg_like(
        spec.kind, spec.levels.etas, weights, g, g * xi, r.as_array(), jacobian
    )
    return ResidualReport(res, float(np.max(np.abs(res))), jac, decoupled=(xi == 0.0))


def tda_residual(spec, r, jacobian=True):
    """Decoupled secular equations 1 + g sum_i Z_{ia} Omega_i = 0."""
    _require_frame(r, RG_ETA)
    g = spec.coupling_g
    res, jac = _rg_like(
        spec.kind, spec.levels.etas, spec.levels.degeneracies, g, 0.0, r.as_array(),
        jacobian,
    )
    return ResidualReport(res, float(np.max(np.abs(res))), jac, decoupled=True)


def dicke_rg_residual(spec, r, jacobian=True):
    """Dicke equations (hw - x_a) - 2G^2 sum_k s_k/(eps_k - x_a)
    + 2G^2 sum_{b!=a} 1/(x_b - x_a) = 0, in energy units."""
    _require_frame(r, DICKE_X)
    x = r.as_array()
    eps = np.asarray(spec.epsilons)
    s = np.asarray(spec.spins)
    _check_collisions(eps, x)
    n = len(x)
    gg2 = 2.0 * spec.coupling_G**2
    res = np.empty(n, dtype=complex)
    jac = np.zeros((n, n), dtype=complex) if jacobian else None
    for a in range(n):
        res[a] = spec.hbar_omega - x[a] - gg2 * np.sum(s / (eps - x[a]))
        if jacobian:
            jac[a, a] = -1.0 - gg2 * np.sum(s / (eps - x[a]) ** 2)
        for b in range(n):
            if b == a:
                continue
            res[a] += gg2 / (x[b] - x[a])
            if jacobian:
                jac[a, a] += gg2 / (x[b] - x[a]) ** 2
                jac[a, b] -= gg2 / (x[b] - x[a]) ** 2
    return ResidualReport(res, float(np.max(np.abs(res))), jac)


def contraction_scales(spec, xi, omega0):
    """xi-dependent rescalings of the single-copy contraction construction.

    Returns (lam, g, s0) with lam = sqrt(2 xi / (omega0 G^2)), the renormalized
    dimensionless coupling g = sqrt(8 xi / (omega0 G^2)) G^2 / (hbar omega), and
    the deformed-copy label s0(xi) = omega0 / (4 xi), for which xi*s0(xi) is
    exactly omega0/4 at every xi (the value the contraction limit requires).
    """
    if xi <= 0.0 or xi > 1.0:
        raise DomainError(f"xi = {xi} outside (0, 1]")
    if omega0 <= 0:
        raise DomainError("omega0 must be positive")
    if spec.coupling_G == 0.0:
        raise DomainError("contraction rescalings are undefined at G = 0")
    lam = np.sqrt(2.0 * xi / (omega0 * spec.coupling_G**2))
    g = 2.0 * lam * spec.coupling_G**2 / spec.hbar_omega
    s0 = omega0 / (4.0 * xi)
    return lam, g, s0


def deformed_dicke_residual(spec, xi, r, omega0=2.0, jacobian=True):
    """Single-copy deformed equations in the physical x frame.

    residual_a = 1 + g Z_{0a} s0(xi) + g sum_k Z_{ka} s_k - g sum_{b!=a} Z_{ba},
    with Z entries from the trigonometric parametrization at the rescaled
    coordinates eta = -lam * energy and Z_{0a} = eta_a (eta_0 -> infinity row).
    hbar_omega * residual converges to dicke_rg_residual as xi -> 0.
    """
    _require_frame(r, DICKE_X)
    if xi == 0.0:
        raise ContractionLimitError(
            "xi = 0 is the exact contraction limit; use dicke_rg_residual"
        )
    lam, g, s0 = contraction_scales(spec, xi, omega0)
    x = r.as_array()
    eps = np.asarray(spec.epsilons)
    _check_collisions(eps, x)
    eta_k = -lam * eps
    eta_a = -lam * x
    kind = algebra.TRIGONOMETRIC
    n = len(x)
    res = np.empty(n, dtype=complex)
    jac = np.zeros((n, n), dtype=complex) if jacobian else None
    spins = spec.spins
    for a in range(n):
        res[a] = 1.0 + g * eta_a[a] * s0
        if jacobian:
            jac[a, a] = -lam * g * s0
        for k in range(len(eps)):
            res[a] += g * spins[k] * pair_z(kind, eta_k[k], eta_a[a])
            if jacobian:
                jac[a, a] += -lam * g * spins[k] * dz_dv(kind, eta_k[k], eta_a[a])
        for b in range(n):
            if b == a:
                continue
            res[a] -= g * pair_z(kind, eta_a[b], eta_a[a])
            if jacobian:
                jac[a, a] -= -lam * g * dz_dv(kind, eta_a[b], eta_a[a])
                jac[a, b] -= -lam * g * dz_du(kind, eta_a[b], eta_a[a])
    return ResidualReport(res, float(np.max(np.abs(res))), jac)


def extended_dicke_residual(spec, tau, r, omega0=2.0, xi=1.0, jacobian=True):
    """Homotopy family used to seed a starting point of the Dicke construction.

    At tau = 1 this equals deformed_dicke_residual(spec, xi, ...); at tau = 0
    the rapidity coupling vanishes and the level weights are promoted to their
    degeneracies, leaving one decoupled secular equation per rapidity.  The
    default xi = 1 seeds the top of the deformation family; branches whose
    rapidities escape to infinity there (the deformed copy is too small to hold
    them) are seeded at a smaller xi instead.
    """
    _require_frame(r, DICKE_X)
    if not 0.0 <= tau <= 1.0:
        raise DomainError(f"tau = {tau} outside [0, 1]")
    lam, g, s0 = contraction_scales(spec, xi, omega0)
    x = r.as_array()
    eps = np.asarray(spec.epsilons)
    _check_collisions(eps, x)
    eta_k = -lam * eps
    eta_a = -lam * x
    kind = algebra.TRIGONOMETRIC
    w0 = tau * s0 + (1.0 - tau) * (2.0 * s0 + 1.0)
    weights = [tau * s + (1.0 - tau) * (2.0 * s + 1.0) for s in spec.spins]
    n = len(x)
    res = np.empty(n, dtype=complex)
    jac = np.zeros((n, n), dtype=complex) if jacobian else None
    for a in range(n):
        res[a] = 1.0 + g * eta_a[a] * w0
        if jacobian:
            jac[a, a] = -lam * g * w0
        for k in range(len(eps)):
            res[a] += g * weights[k] * pair_z(kind, eta_k[k], eta_a[a])
            if jacobian:
                jac[a, a] += -lam * g * weights[k] * dz_dv(kind, eta_k[k], eta_a[a])
        if tau != 0.0:
            for b in range(n):
                if b == a:
                    continue
                res[a] -= g * tau * pair_z(kind, eta_a[b], eta_a[a])
                if jacobian:
                    jac[a, a] -= -lam * g * tau * dz_dv(kind, eta_a[b], eta_a[a])
                    jac[a, b] -= -lam * g * tau * dz_du(kind, eta_a[b], eta_a[a])
    return ResidualReport(res, float(np.max(np.abs(res))), jac, decoupled=(tau == 0.0))
