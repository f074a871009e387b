"""Structural Marsden-Weinstein reduction at regular interior values.

Reducing a circle that rotates a single sphere deletes that sphere factor:
the level set of its height coordinate is the rotation orbit times the rest,
and the quotient by the free circle is again a member of the universe.  This
keeps every downstream check exact and sidesteps orbifold quotients, which
are deliberately out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geom, hamclass, moment as moment_mod
from .geom import ActionSpec, ProductForm, ProductManifold
from .moment import CIRCLE_TOL, GeneralizedMoment


class NotRegular(Exception):
    pass


class NotFree(Exception):
    pass


class NotInvariantOnOrbits(Exception):
    pass


@dataclass(frozen=True)
class ReductionProblem:
    """Reduce by the subtorus spanned by the given generator indices (which
    must act only on sphere factors) at the given mu1 levels, one per
    reduced generator."""

    manifold: ProductManifold
    action: ActionSpec
    moment: GeneralizedMoment
    reduce_indices: tuple
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "reduce_indices",
                           tuple(int(i) for i in self.reduce_indices))
        object.__setattr__(self, "values",
                           tuple(float(v) for v in self.values))
        if len(self.reduce_indices) != len(self.values):
            raise ValueError("one level value per reduced generator")
        for i in self.reduce_indices:
            if any(self.action.translations[i]):
                raise ValueError(
                    "reduced subtorus must act only on sphere factors")


@dataclass(frozen=True)
class RegularValueVerdict:
    regular: bool
    in_image: bool
    witnesses: tuple   # per reduced generator: (sphere index, height)


def _reduced_sphere(problem: ReductionProblem, gen_idx: int) -> int:
    """The single sphere a reduced generator rotates; structural reduction
    supports exactly one."""
    speeds = problem.action.rotations[gen_idx]
    rotated = [f for f, s in enumerate(speeds) if s]
    if len(rotated) != 1:
        raise NotFree("structural reduction needs a generator rotating "
                      "exactly one sphere")
    return rotated[0]


def _level_height(problem: ReductionProblem, gen_idx: int,
                  value: float) -> float:
    """Invert the mu1 coordinate of the reduced generator on its sphere.

    The generator's component is sign * s * c * h."""
    f = _reduced_sphere(problem, gen_idx)
    s = problem.action.rotations[gen_idx][f]
    c = float(problem.moment.omega_prime.sphere_coeffs[f])
    slope = problem.action.sign * s * c
    return value / slope


def regular_value_check(problem: ReductionProblem) -> RegularValueVerdict:
    """A level is regular iff every reduced sphere height is interior; the
    poles are exactly the critical values (the differential of the height
    vanishes there)."""
    witnesses = []
    regular = True
    in_image = True
    for idx, val in zip(problem.reduce_indices, problem.values):
        f = _reduced_sphere(problem, idx)
        h = _level_height(problem, idx, val)
        witnesses.append((f, h))
        if not -1.0 <= h <= 1.0:
            in_image = False
            regular = False
        elif abs(abs(h) - 1.0) < 1e-12:
            regular = False
    return RegularValueVerdict(regular, in_image, tuple(witnesses))


@dataclass(frozen=True)
class ReducedSpace:
    manifold: ProductManifold
    action: ActionSpec
    form: ProductForm
    moment: GeneralizedMoment
    reduced_spheres: tuple
    level_heights: tuple
    parent: ReductionProblem


def reduce_at(problem: ReductionProblem) -> ReducedSpace:
    """Delete each reduced sphere factor and restrict everything else."""
    verdict = regular_value_check(problem)
    if not verdict.regular:
        raise NotRegular(f"witnesses: {verdict.witnesses}")
    manifold = problem.manifold
    action = problem.action
    reduced_spheres = []
    for idx in problem.reduce_indices:
        f = _reduced_sphere(problem, idx)
        s = problem.action.rotations[idx][f]
        if abs(s) != 1:
            raise NotFree(f"speed {s} circle has Z/{abs(s)} stabilizers "
                          "on the level set")
        if f in reduced_spheres:
            raise NotFree("two reduced generators rotate the same sphere")
        reduced_spheres.append(f)
    if not reduced_spheres:
        return ReducedSpace(manifold, action, problem.moment.omega_prime,
                            problem.moment, (), (), problem)
    keep = [f for f in range(manifold.n_spheres)
            if f not in reduced_spheres]
    residual_idx = [j for j in range(action.r_total)
                    if j not in problem.reduce_indices]
    for j in residual_idx:
        if any(action.rotations[j][f] for f in reduced_spheres):
            raise NotFree("a residual generator moves a reduced sphere")

    new_manifold = ProductManifold(
        manifold.torus,
        tuple(manifold.spheres[f] for f in keep))
    new_action = ActionSpec(
        tuple(action.translations[j] for j in residual_idx),
        tuple(tuple(action.rotations[j][f] for f in keep)
              for j in residual_idx),
        action.sign)
    old_form = problem.moment.omega_prime
    new_form = ProductForm(old_form.torus_omega,
                           tuple(old_form.sphere_coeffs[f] for f in keep))
    assert new_form.is_nondegenerate()
    cls = hamclass.classify_action(
        hamclass.period_matrix(new_manifold, new_action, new_form))
    new_moment = moment_mod.generalized_moment(new_manifold, new_action,
                                               new_form, cls)
    heights = tuple(h for _, h in verdict.witnesses)
    return ReducedSpace(new_manifold, new_action, new_form, new_moment,
                        tuple(reduced_spheres), heights, problem)


def induced_moment(reduced: ReducedSpace, n_samples: int = 1000,
                   seed: int = 0) -> GeneralizedMoment:
    """The reduced moment, checked to be well defined: the surviving
    components of the parent moment must be constant on the collapsed
    orbits of the level set."""
    problem = reduced.parent
    manifold = problem.manifold
    if reduced.reduced_spheres:
        pts = geom.sample_points(manifold, n_samples, seed)
        for f, h in zip(reduced.reduced_spheres, reduced.level_heights):
            pts[:, manifold.sphere_offset(f) + 1] = h
        parent_moment = problem.moment
        survivors = [comp for comp in parent_moment.mu2]
        rng = np.random.default_rng(seed + 1)
        angles = rng.random(n_samples)
        for idx in problem.reduce_indices:
            moved = pts.copy()
            for i in range(n_samples):
                params = [0.0] * problem.action.r_total
                params[idx] = angles[i]
                moved[i] = geom.apply_torus_element(manifold, problem.action,
                                                    params, pts[i])
            for comp in survivors:
                d = comp.values(moved) - comp.values(pts)
                d -= np.round(d)
                if float(np.max(np.abs(d))) >= CIRCLE_TOL:
                    raise NotInvariantOnOrbits(
                        "circle component varies along a collapsed orbit")
            if parent_moment.c:
                d1 = parent_moment.mu1_values(moved) \
                    - parent_moment.mu1_values(pts)
                if float(np.max(np.abs(d1))) >= CIRCLE_TOL:
                    raise NotInvariantOnOrbits(
                        "Hamiltonian component varies along a collapsed "
                        "orbit")
    return reduced.moment


@dataclass(frozen=True)
class HeredityVerdict:
    applicable: bool
    residual_non_hamiltonian: bool
    circle_bins_hit: int
    circle_bins: int
    surjective: bool
    passed: bool
    note: str = ""


def heredity_check(reduced: ReducedSpace, circle_bins: int = 50,
                   n_samples: int = 5000, seed: int = 0) -> HeredityVerdict:
    """The residual circle action on the reduced space must stay
    non-Hamiltonian (nonzero period row) and its circle-valued moment must
    still be surjective."""
    mom = reduced.moment
    if mom.r == 0:
        return HeredityVerdict(False, False, 0, circle_bins, False, False,
                               "vacuous: residual action is Hamiltonian")
    p = hamclass.period_matrix(reduced.manifold, reduced.action, reduced.form)
    non_ham = all(
        any(v != 0 for v in _combined_row(p, g))
        for g in mom.classification.complement_generators)
    pts = geom.sample_points(reduced.manifold, n_samples, seed)
    vals = mom.mu2_values(pts)
    hit_all = True
    hits = circle_bins
    for j in range(mom.r):
        bins = np.unique(np.clip((vals[:, j] * circle_bins).astype(int),
                                 0, circle_bins - 1))
        hits = min(hits, bins.size)
        hit_all = hit_all and bins.size == circle_bins
    passed = non_ham and hit_all
    return HeredityVerdict(True, non_ham, hits, circle_bins, hit_all, passed)


def _combined_row(p, g):
    exact = p.exact()
    return [sum(gi * exact[j][k] for j, gi in enumerate(g))
            for k in range(p.cols)]
