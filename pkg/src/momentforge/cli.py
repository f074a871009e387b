"""Batch driver: scenario files in, deterministic reports and CSV tables
out.

Scenario files are flat INI-style key/value text with one section per
concern; see the bundled files under momentforge/scenarios for the format.
Exit codes: 0 success, 1 a check failed, 2 configuration error.  The seed
precedence is flag > MOMENTFORGE_SEED > scenario file > 0.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from . import convex, equiv, geom, hamclass, moment as moment_mod, reduction
from .geom import (ActionSpec, FlatTorusFactor, ProductForm, ProductManifold,
                   SphereFactor)

SUBCOMMANDS = ("classify", "integralize", "moment", "equivariance",
               "convexity", "reduce", "betti", "all")
CHECK_ORDER = ("classify", "integralize", "moment", "equivariance",
               "convexity", "reduce", "betti")


class ConfigError(Exception):
    pass


class CheckFailed(Exception):
    pass


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    return str(value)


# ---------------------------------------------------------------------------
# scenario parsing

@dataclass
class Scenario:
    name: str
    manifold: ProductManifold
    action: ActionSpec
    form: ProductForm
    max_denominator: int
    seed: int
    samples: int
    coverage_samples: int
    grid: int
    checks: tuple
    reduce_indices: tuple = ()
    reduce_values: tuple = ()
    expect: dict = field(default_factory=dict)


def _parse_matrix(text: str, where: str) -> list:
    rows = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if chunk:
            try:
                rows.append([float(x) if "." in x or "e" in x.lower()
                             else int(x) for x in chunk.split()])
            except ValueError as exc:
                raise ConfigError(f"{where}: bad number in {chunk!r}") from exc
    if rows and any(len(r) != len(rows[0]) for r in rows):
        raise ConfigError(f"{where}: ragged matrix")
    return rows


def _parse_generators(text: str, torus_dim: int, n_spheres: int,
                      where: str):
    translations, rotations = [], []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "|" not in chunk:
            raise ConfigError(f"{where}: generator {chunk!r} needs a '|' "
                              "between translations and rotations")
        left, right = chunk.split("|", 1)
        try:
            v = [int(x) for x in left.split()]
            s = [int(x) for x in right.split()]
        except ValueError as exc:
            raise ConfigError(f"{where}: bad integer in {chunk!r}") from exc
        if len(v) != torus_dim:
            raise ConfigError(f"{where}: expected {torus_dim} translation "
                              f"entries in {chunk!r}")
        if len(s) != n_spheres:
            raise ConfigError(f"{where}: expected {n_spheres} rotation "
                              f"speeds in {chunk!r}")
        translations.append(tuple(v))
        rotations.append(tuple(s))
    if not translations:
        raise ConfigError(f"{where}: no generators")
    return tuple(translations), tuple(rotations)


def load_scenario(path, *, seed=None, sign=None,
                  max_denominator=None) -> Scenario:
    parser = configparser.ConfigParser()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    def need(section, key):
        if not parser.has_option(section, key):
            raise ConfigError(f"{path}: missing [{section}] {key}")
        return parser.get(section, key)

    def get(section, key, default=None):
        return parser.get(section, key, fallback=default)

    try:
        torus_dim = int(get("manifold", "torus_dim", "0"))
    except ValueError as exc:
        raise ConfigError(f"{path}: [manifold] torus_dim not an "
                          "integer") from exc
    torus = None
    if torus_dim:
        omega = _parse_matrix(need("manifold", "torus_omega"),
                              f"{path} [manifold] torus_omega")
        if len(omega) != torus_dim:
            raise ConfigError(f"{path}: torus_omega is not "
                              f"{torus_dim}x{torus_dim}")
        try:
            torus = FlatTorusFactor(tuple(map(tuple, omega)))
        except ValueError as exc:
            raise ConfigError(f"{path}: [manifold] torus_omega: "
                              f"{exc}") from exc
    sphere_text = get("manifold", "spheres", "") or ""
    try:
        spheres = tuple(SphereFactor(float(x)) for x in sphere_text.split())
    except ValueError as exc:
        raise ConfigError(f"{path}: [manifold] spheres: {exc}") from exc
    try:
        manifold = ProductManifold(torus, spheres)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    translations, rotations = _parse_generators(
        need("action", "generators"), torus_dim, len(spheres),
        f"{path} [action] generators")
    sign_text = sign or get("action", "sign", "plus")
    if sign_text not in ("plus", "minus"):
        raise ConfigError(f"{path}: sign must be 'plus' or 'minus'")
    try:
        action = ActionSpec(translations, rotations,
                            1 if sign_text == "plus" else -1)
    except ValueError as exc:
        raise ConfigError(f"{path}: [action] {exc}") from exc

    def intval(section, key, default):
        try:
            return int(get(section, key, str(default)))
        except ValueError as exc:
            raise ConfigError(f"{path}: [{section}] {key} not an "
                              "integer") from exc

    checks = tuple((get("checks", "run", None)
                    or "classify integralize moment equivariance convexity "
                       "betti").split())
    for check in checks:
        if check not in CHECK_ORDER:
            raise ConfigError(f"{path}: unknown check {check!r}")

    reduce_indices: tuple = ()
    reduce_values: tuple = ()
    if parser.has_section("reduce"):
        try:
            reduce_indices = tuple(
                int(x) for x in need("reduce", "generators").split())
            reduce_values = tuple(
                float(x) for x in need("reduce", "values").split())
        except ValueError as exc:
            raise ConfigError(f"{path}: [reduce] {exc}") from exc
        if len(reduce_indices) != len(reduce_values):
            raise ConfigError(f"{path}: [reduce] needs one value per "
                              "generator")

    expect = {}
    if parser.has_section("expect"):
        for key, raw in parser.items("expect"):
            if key in ("z", "omega_prime_torus"):
                expect[key] = _parse_matrix(raw, f"{path} [expect] {key}")
            elif key in ("c", "r", "k"):
                try:
                    expect[key] = int(raw)
                except ValueError as exc:
                    raise ConfigError(f"{path}: [expect] {key} not an "
                                      "integer") from exc
            else:
                raise ConfigError(f"{path}: unknown expectation {key!r}")

    env_seed = os.environ.get("MOMENTFORGE_SEED")
    if seed is not None:
        eff_seed = seed
    elif env_seed is not None:
        try:
            eff_seed = int(env_seed)
        except ValueError as exc:
            raise ConfigError("MOMENTFORGE_SEED is not an integer") from exc
    else:
        eff_seed = intval("pipeline", "seed", 0)

    return Scenario(
        name=Path(path).stem,
        manifold=manifold,
        action=action,
        form=manifold.form(),
        max_denominator=(max_denominator
                         or intval("pipeline", "max_denominator", 64)),
        seed=eff_seed,
        samples=intval("pipeline", "samples", 1000),
        coverage_samples=intval("pipeline", "coverage_samples", 20000),
        grid=intval("pipeline", "grid", 50),
        checks=checks,
        reduce_indices=reduce_indices,
        reduce_values=reduce_values,
        expect=expect,
    )


def bundled_scenario_path(name: str):
    ref = resources.files("momentforge") / "scenarios" / f"{name}.ini"
    if not ref.is_file():
        raise ConfigError(f"no bundled scenario named {name!r}")
    return ref


def resolve_scenario(arg: str):
    p = Path(arg)
    if p.is_file():
        return p
    return bundled_scenario_path(arg)


# ---------------------------------------------------------------------------
# report

@dataclass
class Report:
    scenario: str
    provenance: dict
    sections: dict = field(default_factory=dict)   # check -> ordered dict
    matrices: list = field(default_factory=list)   # (name, rows)
    samples: np.ndarray | None = None              # moment_samples table
    sample_header: tuple = ()
    coverage: object = None                        # convex.CoverageReport
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def add(self, check: str, key: str, value):
        self.sections.setdefault(check, {})[key] = value

    def require(self, check: str, key: str, ok: bool):
        self.add(check, key, bool(ok))
        if not ok:
            self.failures.append(f"{check}.{key}")

    def render(self) -> str:
        lines = [f"scenario = {self.scenario}"]
        for key in sorted(self.provenance):
            lines.append(f"{key} = {_fmt(self.provenance[key])}")
        for check in self.sections:
            lines.append("")
            lines.append(f"[{check}]")
            for key, value in self.sections[check].items():
                lines.append(f"{key} = {_fmt(value)}")
        lines.append("")
        lines.append(f"overall = {'pass' if self.passed else 'FAIL'}")
        if self.failures:
            lines.append("failures = " + ", ".join(self.failures))
        return "\n".join(lines) + "\n"


def emit_report(report: Report, out_dir) -> list:
    """Write the structured text report plus the three CSV tables; returns
    the written paths.  Bytes are a pure function of the report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def write(name, text):
        p = out / name
        p.write_bytes(text.encode("utf-8"))
        written.append(p)

    write("report.txt", report.render())
    if report.samples is not None:
        rows = [",".join(report.sample_header)]
        for row in report.samples:
            rows.append(",".join(repr(float(v)) for v in row))
        write("moment_samples.csv", "\n".join(rows) + "\n")
    rows = ["grid_resolution,n_counted_cells,n_hit_cells,fraction,"
            "empty_cell_witnesses"]
    if report.coverage is not None:
        cov = report.coverage
        rows.append(f"{cov.grid_resolution},{cov.n_counted_cells},"
                    f"{cov.n_hit_cells},{_fmt(cov.fraction)},"
                    + " ".join(str(e) for e in cov.empty_cells))
    write("coverage.csv", "\n".join(rows) + "\n")
    rows = ["name,i,j,value"]
    for name, mat in report.matrices:
        for i, r in enumerate(mat):
            for j, v in enumerate(r):
                rows.append(f"{name},{i},{j},{_fmt(v)}")
    write("matrices.csv", "\n".join(rows) + "\n")
    return written


# ---------------------------------------------------------------------------
# pipeline

def run_scenario(scenario: Scenario, requested=None) -> Report:
    """Execute the requested checks in dependency order.  Deterministic for
    a fixed (scenario, seed)."""
    wanted = list(requested or scenario.checks)
    for check in wanted:
        if check not in CHECK_ORDER:
            raise ConfigError(f"unknown check {check!r}")
    if scenario.reduce_indices and "reduce" in scenario.checks \
            and "reduce" not in wanted and requested is None:
        wanted.append("reduce")
    # every later stage needs the classification and the integral form
    checks = [c for c in CHECK_ORDER
              if c in wanted or c in ("classify", "integralize")]

    report = Report(scenario.name, {
        "seed": scenario.seed,
        "sign": "plus" if scenario.action.sign == 1 else "minus",
        "max_denominator": scenario.max_denominator,
        "samples": scenario.samples,
        "grid": scenario.grid,
        "circle_tol": moment_mod.CIRCLE_TOL,
    })
    M, A = scenario.manifold, scenario.action

    p = hamclass.period_matrix(M, A, scenario.form)
    cls = hamclass.classify_action(p)
    if "classify" in checks:
        report.add("classify", "c", cls.c)
        report.add("classify", "r", cls.r)
        report.add("classify", "b1", M.b1)
        report.add("classify", "effective", A.is_effective())
        report.add("classify", "effectiveness_diagonal",
                   A.effectiveness_diagonal())
        report.matrices.append(("period_matrix", [list(r) for r in p.entries]))
        report.matrices.append(
            ("hamiltonian_basis", [list(v) for v in cls.hamiltonian_basis]))
        report.matrices.append(
            ("complement_generators",
             [list(v) for v in cls.complement_generators]))
        if "c" in scenario.expect:
            report.require("classify", "c_matches_expected",
                           cls.c == scenario.expect["c"])
        if "r" in scenario.expect:
            report.require("classify", "r_matches_expected",
                           cls.r == scenario.expect["r"])

    result = hamclass.integralize_with_retry(M, A, scenario.form,
                                             scenario.max_denominator)
    omega_prime = result.omega_prime
    report.add("integralize", "k", result.k)
    report.add("integralize", "max_deviation", result.max_deviation)
    report.add("integralize", "q", list(result.q))
    coeffs = hamclass.form_class_coefficients(M, omega_prime)
    report.require("integralize", "h2_periods_integral",
                   all(Fraction(x).denominator == 1 for x in coeffs))
    report.require(
        "integralize", "classification_preserved",
        hamclass.classify_action(
            hamclass.period_matrix(M, A, omega_prime)) == cls)
    if omega_prime.torus_omega is not None:
        report.matrices.append(
            ("omega_prime_torus",
             [list(r) for r in omega_prime.torus_omega]))
    report.matrices.append(("omega_prime_spheres",
                            [list(omega_prime.sphere_coeffs)]))
    if "k" in scenario.expect:
        report.require("integralize", "k_matches_expected",
                       result.k == scenario.expect["k"])
    if "omega_prime_torus" in scenario.expect:
        want = scenario.expect["omega_prime_torus"]
        got = [[int(x) for x in row] for row in omega_prime.torus_omega]
        report.require("integralize", "omega_prime_matches_expected",
                       got == want)

    mom = moment_mod.generalized_moment(M, A, omega_prime, cls)

    if "moment" in checks:
        _run_moment(report, scenario, mom)
    z = equiv.cocycle_matrix(M, A, omega_prime, cls)
    if "equivariance" in checks:
        _run_equivariance(report, scenario, mom, z)
    if "convexity" in checks:
        _run_convexity(report, scenario, mom)
    if "betti" in checks:
        _run_betti(report, scenario, omega_prime, cls)
    if "reduce" in checks and scenario.reduce_indices:
        _run_reduce(report, scenario, mom)
    return report


def _run_moment(report, scenario, mom):
    M = scenario.manifold
    loops, _ = geom.homology_bases(M)
    period_ints = True
    for comp in mom.mu2:
        for loop in loops:
            val = sum(comp.torus_covector[k] * loop.direction[k]
                      for k in range(M.torus_dim))
            period_ints &= isinstance(val, int)
    report.require("moment", "mu2_loop_periods_integral", period_ints)
    report.add("moment", "c", mom.c)
    report.add("moment", "r", mom.r)
    report.matrices.append(
        ("mu2_covectors", [list(c.torus_covector) for c in mom.mu2]))
    pts = geom.sample_points(M, scenario.samples, scenario.seed)
    mu1 = mom.mu1_values(pts)
    mu2 = mom.mu2_values(pts)
    report.samples = np.hstack([pts, mu1, mu2])
    report.sample_header = tuple(
        [f"x{i}" for i in range(M.coord_dim)]
        + [f"mu1_{i}" for i in range(mom.c)]
        + [f"mu2_{i}" for i in range(mom.r)])
    if mom.r:
        x = pts[0]
        comp = mom.mu2[0]
        off = [0] * M.torus_dim
        loop_dir = list(loops[0].direction) if loops else []
        if loop_dir:
            rep = moment_mod.path_independence_check(M, comp, x, off,
                                                     loop_dir)
            report.add("moment", "path_difference", rep.difference)
            report.require("moment", "path_independent",
                           rep.difference_is_integer and rep.equal_mod_one)
    for comp in mom.mu2:
        fact = moment_mod.fiber_connected_factorization(comp.torus_covector)
        report.add("moment",
                   f"fiber_components_{mom.mu2.index(comp)}", fact.d)


def _run_equivariance(report, scenario, mom, z):
    M, A = scenario.manifold, scenario.action
    report.matrices.append(("cocycle", [list(r) for r in z]))
    if "z" in scenario.expect:
        report.require("equivariance", "z_matches_expected",
                       [list(r) for r in z] == scenario.expect["z"])
    report.require("equivariance", "z_zero_diagonal",
                   all(z[i][i] == 0 for i in range(len(z))))
    eq = equiv.equivariance_check(M, A, mom, z, scenario.samples,
                                  scenario.seed)
    report.add("equivariance", "max_mu2_error", eq.max_mu2_error)
    report.add("equivariance", "max_mu1_invariance_error",
               eq.max_mu1_invariance_error)
    report.require("equivariance", "equivariant", eq.passed)
    nat = equiv.natural_equivariance_test(M, A, mom.omega_prime,
                                          mom.classification, mom,
                                          seed=scenario.seed)
    report.add("equivariance", "has_fixed_points", nat.has_fixed_points)
    report.add("equivariance", "orbits_isotropic", nat.orbits_isotropic)
    report.add("equivariance", "naturally_equivariant",
               nat.naturally_equivariant)
    free = equiv.local_freeness_check(M, A, z, mom.classification)
    report.add("equivariance", "z_rank", free.z_rank)
    report.add("equivariance", "local_freeness", free.note)


def _run_convexity(report, scenario, mom):
    M = scenario.manifold
    samples = convex.moment_image_sample(M, mom, scenario.samples,
                                         scenario.seed)
    hull = convex.convex_hull(samples.mu1)
    report.add("convexity", "hull_vertices",
               [list(v) for v in hull.vertices])
    cov = convex.product_coverage_check(M, mom, scenario.grid,
                                        scenario.coverage_samples,
                                        scenario.seed)
    report.add("convexity", "coverage_fraction", cov.fraction)
    report.require("convexity", "coverage_ok", cov.fraction >= 0.99)
    report.coverage = cov
    if mom.r:
        ext = convex.no_local_extremum_check(M, mom)
        report.require("convexity", "no_local_extrema", ext.passed)
        lift = convex.cycle_lift(M, scenario.action, mom,
                                 mu1_target=tuple([0.0] * mom.c)
                                 if mom.c == 0 else
                                 tuple(float(v) for v in
                                       mom.mu1_values(M.basepoint())[0]),
                                 circle_targets=tuple([0.0] * (mom.r - 1)))
        report.add("convexity", "cycle_direction", list(lift.direction))
        report.add("convexity", "cycle_winding", lift.winding)
        report.require("convexity", "cycle_lift_verified", lift.verified)


def _run_betti(report, scenario, omega_prime, cls):
    M, A = scenario.manifold, scenario.action
    rep = convex.betti_bound_check(M, A, omega_prime, cls)
    report.add("betti", "rank", rep.rank)
    report.add("betti", "r", rep.r)
    report.add("betti", "b1", rep.b1)
    report.require("betti", "bound_holds", rep.bound_holds)
    report.add("betti", "equality", rep.equality)


def _run_reduce(report, scenario, mom):
    """Stage-wise reduction: one generator at a time, heredity checked at
    every stage."""
    manifold, action = scenario.manifold, scenario.action
    current = (manifold, action, mom)
    indices = list(scenario.reduce_indices)
    values = list(scenario.reduce_values)
    original = list(range(action.r_total))
    for stage, (idx, val) in enumerate(zip(indices, values)):
        man, act, mo = current
        local_idx = original.index(idx)
        problem = reduction.ReductionProblem(man, act, mo, (local_idx,),
                                             (val,))
        verdict = reduction.regular_value_check(problem)
        report.require("reduce", f"stage{stage}_regular", verdict.regular)
        reduced = reduction.reduce_at(problem)
        reduction.induced_moment(reduced, seed=scenario.seed)
        report.add("reduce", f"stage{stage}_dimension",
                   reduced.manifold.dim)
        her = reduction.heredity_check(reduced, seed=scenario.seed)
        report.add("reduce", f"stage{stage}_heredity_applicable",
                   her.applicable)
        if her.applicable:
            report.require("reduce", f"stage{stage}_non_hamiltonian",
                           her.residual_non_hamiltonian)
            report.require("reduce", f"stage{stage}_mu2_surjective",
                           her.surjective)
        original = [j for j in original if j != idx]
        current = (reduced.manifold, reduced.action, reduced.moment)


# ---------------------------------------------------------------------------
# entry point

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="momentforge",
        description="construct and verify generalized moment maps on "
                    "products of flat tori and spheres")
    parser.add_argument("command", choices=SUBCOMMANDS)
    parser.add_argument("--scenario", required=True,
                        help="bundled scenario name or path to an .ini file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=None, help="report directory")
    parser.add_argument("--sign", choices=("plus", "minus"), default=None)
    parser.add_argument("--max-denominator", type=int, default=None)
    args = parser.parse_args(argv)

    try:
        path = resolve_scenario(args.scenario)
        scenario = load_scenario(path, seed=args.seed, sign=args.sign,
                                 max_denominator=args.max_denominator)
        requested = None if args.command == "all" else (args.command,)
        report = run_scenario(scenario, requested)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(report.render())
    if args.out:
        emit_report(report, args.out)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
