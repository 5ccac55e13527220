"""Exact-diagonalization oracle on truncated tensor-product Hilbert spaces.

Every operator expression is realized as a dense complex matrix; spectra,
commutator norms, and eigenvector residuals anchor the numerical claims made
by the solver.  Dense matrices only: this is a correctness oracle at desk
scale, not a performance component.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import algebra
from .algebra import grid_index
from .errors import (
    BasisMismatchError,
    DomainError,
    RepresentationError,
    ValidationError,
)

BOSON = "boson"
SPIN = "spin"
TRUNC_SPIN = "trunc_spin"  # lowest weights of a (possibly large) spin irrep


@dataclass(frozen=True)
class Factor:
    """One tensor factor: a truncated Fock mode or a spin-s irrep."""

    kind: str
    dim: int
    spin: float = 0.0  # irrep label for SPIN / TRUNC_SPIN factors

    def excitation_weights(self):
        # boson: n; spin: mu + s; trunc_spin: weight index above lowest
        return np.arange(self.dim)


def _boson_ops(dim):
    n = np.arange(dim)
    bdag = np.zeros((dim, dim))
    bdag[1:, :-1] = np.diag(np.sqrt(n[1:]))
    return {"bdag": bdag, "b": bdag.T.copy(), "n": np.diag(n.astype(float))}


def _spin_ops(s, dim):
    # weights mu = -s + i, i = 0 .. dim-1, truncated from above when dim < 2s+1
    mu = -s + np.arange(dim)
    sp = np.zeros((dim, dim))
    amp = np.sqrt(s * (s + 1.0) - mu[:-1] * (mu[:-1] + 1.0))
    sp[1:, :-1] = np.diag(amp)
    return {"sp": sp, "sm": sp.T.copy(), "sz": np.diag(mu)}


def _local_ops(factor):
    if factor.kind == BOSON:
        return _boson_ops(factor.dim)
    ops = _spin_ops(factor.spin, factor.dim)
    if factor.kind == TRUNC_SPIN:
        # canonical su(2) triple of the deformed copy, exposed as A-operators
        return {"Adag": ops["sp"], "A": ops["sm"], "A0": ops["sz"]}
    return ops


_BOSON_SYMBOLS = {"bdag", "b", "n", "Adag", "A", "A0"}
_SPIN_SYMBOLS = {"sp", "sm", "sz"}


class HilbertBasis:
    """Truncated tensor-product basis with optional excitation-number sectors."""

    def __init__(self, factors):
        self.factors = tuple(factors)
        if not self.factors:
            raise ValidationError("basis needs at least one factor")
        self.total_dim = int(np.prod([f.dim for f in self.factors]))

    @classmethod
    def dicke(cls, spec, boson_cutoff):
        """Fock mode (cutoff + 1 states) tensored with the spin levels."""
        if boson_cutoff < 0:
            raise DomainError("boson cutoff must be >= 0")
        factors = [Factor(BOSON, boson_cutoff + 1)]
        factors += [Factor(SPIN, int(round(2 * s + 1)), s) for s in spec.spins]
        return cls(factors)

    @classmethod
    def spins(cls, spins):
        return cls([Factor(SPIN, int(round(2 * s + 1)), s) for s in spins])

    @classmethod
    def bosons(cls, cutoffs):
        return cls([Factor(BOSON, c + 1) for c in cutoffs])

    @classmethod
    def deformed_dicke(cls, spec, boson_cutoff, deformed_label):
        """Deformed copy (lowest cutoff+1 weights of spin-s(xi)) + spin levels."""
        if 2 * deformed_label + 1 < boson_cutoff + 1:
            raise RepresentationError(
                f"irrep of label {deformed_label} has fewer than {boson_cutoff + 1} weights"
            )
        factors = [Factor(TRUNC_SPIN, boson_cutoff + 1, deformed_label)]
        factors += [Factor(SPIN, int(round(2 * s + 1)), s) for s in spec.spins]
        return cls(factors)

    def excitation_numbers(self):
        """Excitation count (boson n plus spin weight above lowest) per basis state."""
        total = np.zeros(1)
        for f in self.factors:
            total = (total[:, None] + f.excitation_weights()[None, :]).ravel()
        return total.astype(int)

    def sector_indices(self, m_value):
        return np.nonzero(self.excitation_numbers() == m_value)[0]


class RestrictedBasis:
    """Subspace of a HilbertBasis spanned by a fixed index set."""

    def __init__(self, parent, indices):
        self.parent = parent
        self.indices = np.asarray(indices, dtype=int)
        self.factors = parent.factors
        self.total_dim = len(self.indices)

    def excitation_numbers(self):
        return self.parent.excitation_numbers()[self.indices]

    def sector_indices(self, m_value):
        return np.nonzero(self.excitation_numbers() == m_value)[0]


@dataclass
class MatrixOperator:
    """Dense complex matrix over a HilbertBasis."""

    matrix: np.ndarray
    basis: HilbertBasis
    hermitian: bool = False

    def __post_init__(self):
        if self.matrix.shape != (self.basis.total_dim, self.basis.total_dim):
            raise BasisMismatchError("matrix dimension does not match basis")
        if self.hermitian:
            dev = np.max(np.abs(self.matrix - self.matrix.conj().T))
            if dev > 1e-12 * max(1.0, np.max(np.abs(self.matrix))):
                raise ValidationError(f"hermitian flag set but deviation is {dev:.3e}")

    def restrict(self, indices):
        """Sector sub-matrix; callers diagonalize it directly."""
        return self.matrix[np.ix_(indices, indices)]


def _factor_index(basis, symbol, level):
    has_mode = basis.factors[0].kind in (BOSON, TRUNC_SPIN)
    if symbol in _BOSON_SYMBOLS:
        f = basis.factors[0]
        if symbol in ("bdag", "b", "n") and f.kind != BOSON:
            raise BasisMismatchError(f"symbol {symbol} needs a boson factor")
        if symbol in ("Adag", "A", "A0") and f.kind != TRUNC_SPIN:
            raise BasisMismatchError(f"symbol {symbol} needs a deformed-copy factor")
        return 0
    idx = (1 if has_mode else 0) + level
    if level is None or idx >= len(basis.factors):
        raise BasisMismatchError(f"level {level} absent from basis")
    return idx


def realize(expr, basis, hermitian=None):
    """Realize an OperatorExpression as a dense matrix on the given basis."""
    dims = [f.dim for f in basis.factors]
    local = [_local_ops(f) for f in basis.factors]
    total = np.zeros((basis.total_dim, basis.total_dim), dtype=complex)
    for coeff, factors in expr.terms:
        per_site = [None] * len(dims)
        for symbol, level in factors:
            idx = _factor_index(basis, symbol, level)
            if symbol not in local[idx]:
                raise BasisMismatchError(
                    f"symbol {symbol} undefined on factor {idx} ({basis.factors[idx].kind})"
                )
            op = local[idx][symbol]
            per_site[idx] = op if per_site[idx] is None else per_site[idx] @ op
        term = np.array([[1.0 + 0j]])
        for idx, d in enumerate(dims):
            site = per_site[idx] if per_site[idx] is not None else np.eye(d)
            term = np.kron(term, site)
        total += coeff * term
    flag = expr.hermitian if hermitian is None else hermitian
    return MatrixOperator(total, basis, hermitian=flag)


def spectrum(op):
    """Sorted real eigenvalues of a hermitian operator."""
    if not op.hermitian:
        raise ValidationError("spectrum requires a hermitian operator")
    return np.sort(np.linalg.eigvalsh(op.matrix))


def eigensystem(op):
    if not op.hermitian:
        raise ValidationError("eigensystem requires a hermitian operator")
    return np.linalg.eigh(op.matrix)


def sector_spectrum(op, m_value):
    """Eigenvalues of the restriction to the excitation-number-M sector."""
    if not op.hermitian:
        raise ValidationError("sector_spectrum requires a hermitian operator")
    idx = op.basis.sector_indices(m_value)
    if len(idx) == 0:
        return np.array([])
    return np.sort(np.linalg.eigvalsh(op.matrix[np.ix_(idx, idx)]))


def restrict_to_closed_sectors(op):
    """Sub-operator on excitation sectors unaffected by mode truncation.

    Number-conserving operators act exactly on sectors whose total
    excitation count fits under every truncated mode; above that, the
    clipped ladder leaks at the top row and commutation identities fail
    as a pure cutoff artifact.  Bases with no truncated mode pass through.
    """
    basis = op.basis
    caps = [f.dim - 1 for f in basis.factors if f.kind in (BOSON, TRUNC_SPIN)]
    if not caps:
        return op
    keep = np.nonzero(basis.excitation_numbers() <= min(caps))[0]
    sub = RestrictedBasis(basis, keep)
    return MatrixOperator(op.matrix[np.ix_(keep, keep)], sub, hermitian=op.hermitian)


def commutator_norm(a, b):
    """Frobenius norm of AB - BA."""
    if a.matrix.shape != b.matrix.shape:
        raise BasisMismatchError("operators live on different bases")
    c = a.matrix @ b.matrix - b.matrix @ a.matrix
    return float(np.linalg.norm(c))


def eigencheck(op, v):
    """Rayleigh quotient and relative eigen-residual of a trial vector."""
    v = np.asarray(v, dtype=complex).ravel()
    nv = np.linalg.norm(v)
    if nv == 0.0:
        raise ValidationError("eigencheck needs a nonzero vector")
    ov = op.matrix @ v
    rayleigh = np.vdot(v, ov) / (nv * nv)
    if op.hermitian:
        rayleigh = rayleigh.real
    rel = np.linalg.norm(ov - rayleigh * v) / max(np.linalg.norm(ov), 1e-300)
    return rayleigh, float(rel)


def realize_rg_charges(spec, xi, boson_cutoffs=None):
    """The m conserved charges as matrices: xi = 1 (spin irreps), xi on the
    unitary grid (enlarged irreps of the canonical triple, coupling g*xi), or
    xi = 0 (purely bosonic quadratic forms on truncated Fock modes)."""
    levels = spec.levels
    g = spec.coupling_g
    mats = algebra.build_gaudin(spec.kind, levels)
    x, z = mats.x, mats.z
    m = levels.m
    if xi == 0.0:
        if boson_cutoffs is None:
            raise DomainError("xi = 0 charges need boson cutoffs per level")
        basis = HilbertBasis.bosons(list(boson_cutoffs))
        local = [_local_ops(f) for f in basis.factors]
        dims = [f.dim for f in basis.factors]

        def site(idx, name):
            term = np.array([[1.0 + 0j]])
            for j, d in enumerate(dims):
                term = np.kron(term, local[j][name] if j == idx else np.eye(d))
            return term

        omegas = levels.degeneracies
        # the quadratic forms conserve total occupation; sectors with total
        # occupation <= min cutoff are exactly closed under every hop, so the
        # truncation edge never leaks into them.  Restricting there makes the
        # charges exact (and exactly commuting); outside, [b, b'] != 1 at the
        # cutoff row and commutation fails as a pure truncation artifact.
        keep = np.nonzero(basis.excitation_numbers() <= min(boson_cutoffs))[0]
        sub = RestrictedBasis(basis, keep)
        charges = []
        for i in range(m):
            mat = site(i, "n").astype(complex)
            for k in range(m):
                if k == i:
                    continue
                hop = site(i, "bdag") @ site(k, "b") + site(k, "bdag") @ site(i, "b")
                mat += g * 0.25 * x[i, k] * np.sqrt(omegas[i] * omegas[k]) * hop
                mat -= g * 0.25 * z[i, k] * (
                    omegas[i] * site(k, "n") + omegas[k] * site(i, "n")
                )
            charges.append(
                MatrixOperator(mat[np.ix_(keep, keep)], sub, hermitian=True)
            )
        return charges

    # xi = 1 or a unitary grid point: spin irreps of the canonical triple
    if xi == 1.0:
        eff_spins = list(levels.spins)
        g_eff = g
    else:
        ns = [grid_index(omega, xi) for omega in levels.degeneracies]
        if any(n is None for n in ns):
            raise RepresentationError(
                f"xi = {xi} is not on the unitary grid of every level"
            )
        eff_spins = [s + n / 2.0 for s, n in zip(levels.spins, ns)]
        g_eff = g * xi
    basis = HilbertBasis.spins(eff_spins)
    local = [_local_ops(f) for f in basis.factors]
    dims = [f.dim for f in basis.factors]

    def site(idx, name):
        term = np.array([[1.0 + 0j]])
        for j, d in enumerate(dims):
            term = np.kron(term, local[j][name] if j == idx else np.eye(d))
        return term

    charges = []
    for i in range(m):
        mat = site(i, "sz").astype(complex)
        for k in range(m):
            if k == i:
                continue
            mix = site(k, "sp") @ site(i, "sm") + site(i, "sp") @ site(k, "sm")
            mat += g_eff * (0.5 * x[i, k] * mix + z[i, k] * site(i, "sz") @ site(k, "sz"))
        charges.append(MatrixOperator(mat, basis, hermitian=True))
    return charges
