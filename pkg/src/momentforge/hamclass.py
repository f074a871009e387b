"""Period matrices, the Hamiltonian / non-Hamiltonian splitting of the
acting torus, and the perturb-to-integral algorithm for the symplectic form.

A generator is Hamiltonian exactly when its row of loop periods vanishes; in
this universe that happens iff its combined translation direction is zero
(the torus block is nondegenerate), so the Hamiltonian directions act purely
by sphere rotations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import geom, ratlin
from .geom import ActionSpec, ProductForm, ProductManifold


class RoundingBrokeNondegeneracy(Exception):
    """The rational rounding produced a degenerate form; retry with a larger
    denominator bound."""


class RoundingBrokeConditionB(Exception):
    """The rational rounding killed a non-Hamiltonian period; retry with a
    larger denominator bound."""


@dataclass(frozen=True)
class PeriodMatrix:
    """Rows indexed by generators, columns by the H_1 coordinate loops;
    entry (j, k) is the period of i_{X_j} omega over loop k."""

    entries: tuple  # r_total x b1

    def __post_init__(self):
        object.__setattr__(self, "entries",
                           tuple(tuple(row) for row in self.entries))

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0]) if self.entries else 0

    def exact(self) -> list:
        return [[Fraction(x) for x in row] for row in self.entries]

    def row_is_zero(self, j: int) -> bool:
        return all(Fraction(x) == 0 for x in self.entries[j])


@dataclass(frozen=True)
class ActionClassification:
    """Splitting of the acting torus into its Hamiltonian part (kernel of
    the period pairing) and an integer complement subtorus."""

    hamiltonian_basis: tuple    # c integer vectors, saturated lattice basis
    complement_generators: tuple  # r integer vectors, HNF-canonical
    r_total: int

    def __post_init__(self):
        object.__setattr__(self, "hamiltonian_basis",
                           tuple(tuple(v) for v in self.hamiltonian_basis))
        object.__setattr__(self, "complement_generators",
                           tuple(tuple(v) for v in self.complement_generators))

    @property
    def c(self) -> int:
        return len(self.hamiltonian_basis)

    @property
    def r(self) -> int:
        return len(self.complement_generators)


def period_matrix(manifold: ProductManifold, action: ActionSpec,
                  form: ProductForm) -> PeriodMatrix:
    loops, _ = geom.homology_bases(manifold)
    rows = []
    for j in range(action.r_total):
        fld = geom.fundamental_field(manifold, action, j)
        cov = geom.contraction_covector(manifold, form, fld)
        rows.append(tuple(cov[k] for k in range(manifold.torus_dim)))
    assert len(loops) == manifold.torus_dim
    return PeriodMatrix(tuple(rows))


def classify_action(p: PeriodMatrix) -> ActionClassification:
    exact = p.exact()
    n = p.rows
    if p.cols == 0:
        kernel = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    else:
        kernel = ratlin.rat_kernel_basis(ratlin.transpose(exact))
    b = [ratlin.clear_denominators(v) for v in kernel]
    ham, comp = ratlin.saturate_and_complement(b, n)
    if ham:
        ham, _ = ratlin.hermite_normal_form(ham)
    if comp:
        comp, _ = ratlin.hermite_normal_form(comp)
    cls = ActionClassification(tuple(map(tuple, ham)),
                               tuple(map(tuple, comp)), n)
    assert cls.c + cls.r == n
    return cls


# ---------------------------------------------------------------------------
# integralization

@dataclass(frozen=True)
class IntegralizationResult:
    omega_prime: ProductForm     # integral invariant form (integer periods)
    k: int                       # integer scale applied to the rational form
    q: tuple                     # rational class coefficients of the
                                 # intermediate form, in the H^2 basis order
    max_deviation: float         # sup-norm coefficient distance to omega
    classification: ActionClassification


def h2_class_labels(manifold: ProductManifold) -> list:
    """Order of the invariant integral H^2 basis: torus coordinate classes
    dx_i ^ dx_j (i < j) then unit-area sphere classes."""
    m = manifold.torus_dim
    labels = [("torus", i, j) for i in range(m) for j in range(i + 1, m)]
    labels += [("sphere", f) for f in range(manifold.n_spheres)]
    return labels


def form_class_coefficients(manifold: ProductManifold,
                            form: ProductForm) -> list:
    """Coefficients of a form in the H^2 basis (these are exactly its
    periods over the canonical 2-cycles)."""
    coeffs = []
    for label in h2_class_labels(manifold):
        if label[0] == "torus":
            coeffs.append(form.torus_omega[label[1]][label[2]])
        else:
            coeffs.append(2 * form.sphere_coeffs[label[1]])
    return coeffs


def form_from_class_coefficients(manifold: ProductManifold,
                                 coeffs) -> ProductForm:
    m = manifold.torus_dim
    om = [[0] * m for _ in range(m)] if m else None
    sph = [0] * manifold.n_spheres
    for label, q in zip(h2_class_labels(manifold), coeffs):
        if label[0] == "torus":
            om[label[1]][label[2]] = q
            om[label[2]][label[1]] = -q
        else:
            sph[label[1]] = Fraction(q) / 2
    return ProductForm(om, sph)


def _constraint_matrix(manifold: ProductManifold, action: ActionSpec,
                       classification: ActionClassification) -> list:
    """Integer matrix of the exactness constraints: one row per (loop,
    Hamiltonian generator) pair, one column per H^2 basis class; the entry
    is the period of the contraction of the class by the generator's field
    over the loop.  Sphere classes never meet torus loops."""
    m = manifold.torus_dim
    labels = h2_class_labels(manifold)
    rows = []
    for xi in classification.hamiltonian_basis:
        fld = geom.combination_field(manifold, action, xi)
        for i in range(m):
            row = []
            for label in labels:
                if label[0] == "torus":
                    a, b = label[1], label[2]
                    # i_X (dx_a ^ dx_b) paired with loop e_i
                    row.append(fld.translation[a] * int(b == i)
                               - fld.translation[b] * int(a == i))
                else:
                    row.append(0)
            rows.append(row)
    return rows


def integralize_form(manifold: ProductManifold, action: ActionSpec,
                     form: ProductForm,
                     max_denominator: int) -> IntegralizationResult:
    """Perturb the form within the invariant integral classes to a rational
    class with the same exactness pattern and nondegeneracy, then scale it
    integral.

    Raises RoundingBrokeNondegeneracy / RoundingBrokeConditionB when the
    denominator bound is too coarse; see integralize_with_retry.
    """
    if not form.is_nondegenerate():
        raise ValueError("input form is degenerate")
    base_cls = classify_action(period_matrix(manifold, action, form))
    a = [float(x) for x in form_class_coefficients(manifold, form)]
    constraints = _constraint_matrix(manifold, action, base_cls)
    ncls = len(a)
    if constraints:
        kernel = ratlin.rat_kernel_basis(constraints)
    else:
        kernel = [[Fraction(int(i == j)) for j in range(ncls)]
                  for i in range(ncls)]
    kmat = np.array([[float(x) for x in vec] for vec in kernel]).T
    t, residual, _, _ = np.linalg.lstsq(kmat, np.array(a), rcond=None)
    if not np.allclose(kmat @ t, a, atol=1e-9):
        raise ValueError("form violates the exactness constraints of its "
                         "own classification")
    q_coords = [ratlin.rational_round(tv, max_denominator) for tv in t]
    q = [sum(qc * vec[i] for qc, vec in zip(q_coords, kernel))
         for i in range(ncls)]
    candidate = form_from_class_coefficients(manifold, q)
    if not candidate.is_nondegenerate():
        raise RoundingBrokeNondegeneracy(
            f"max_denominator={max_denominator}")
    new_cls = classify_action(period_matrix(manifold, action, candidate))
    if new_cls != base_cls:
        raise RoundingBrokeConditionB(f"max_denominator={max_denominator}")
    k = math.lcm(*[Fraction(x).denominator for x in q]) if q else 1
    omega_prime = form_from_class_coefficients(
        manifold, [int(Fraction(x) * k) for x in q])
    max_dev = max((abs(float(x) - av) for x, av in zip(q, a)), default=0.0)
    return IntegralizationResult(omega_prime, k, tuple(q), max_dev, base_cls)


def integralize_with_retry(manifold: ProductManifold, action: ActionSpec,
                           form: ProductForm,
                           max_denominator: int) -> IntegralizationResult:
    """Retry policy for the open conditions: double the denominator bound
    until 2**16, then give up."""
    bound = max_denominator
    while True:
        try:
            return integralize_form(manifold, action, form, bound)
        except (RoundingBrokeNondegeneracy, RoundingBrokeConditionB):
            if bound >= 2 ** 16:
                raise
            bound = min(2 * bound, 2 ** 16)
