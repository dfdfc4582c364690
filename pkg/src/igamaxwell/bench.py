"""Scenario-driven benchmark harness for the cavity eigenvalue solver.

A scenario is a declarative TOML file naming a geometry, a per-subdomain
spline discretization, and a coupling method (conforming glue, mortar
multipliers, or truncated interface-mode constraints).  This module
turns scenarios into assembled saddle systems, solves them, compares
computed spectra against closed-form oracles, estimates convergence
orders, and sweeps the numerical inf-sup constant.

All eigenvalues are nondimensional (vacuum permittivity and
permeability equal to one): reported values are omega^2 for a cavity
whose geometry is given in the scenario's own length unit.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .assembly import (
    assemble_modal_coupling,
    assemble_mortar_coupling,
    assemble_operators,
    multiplier_norm_matrix,
)
from .eigensolver import (
    EigenResult,
    filter_zero_modes,
    infsup_constant,
    solve_eigs,
)
from .geometry import (
    make_cube_four_patches_nonconforming,
    make_cube_single,
    make_cube_two_patches,
    make_pillbox,
)
from .modes import bessel_j_zeros, bessel_jprime_zeros, disc_modes, rect_modes
from .spaces import build_curl_space, build_multiplier_space

__all__ = [
    "Discretization",
    "Scenario",
    "ScenarioError",
    "load_scenario",
    "scenario_from_dict",
    "refine_scenario",
    "CoupledProblem",
    "assemble_problem",
    "solve_problem",
    "physical_spectrum",
    "oracle_spectrum",
    "SpectrumComparison",
    "compare_spectrum",
    "estimate_order",
    "infsup_point",
    "infsup_sweep",
    "run_scenario",
    "write_spectrum_csv",
    "write_sweep_csv",
]

GEOMETRIES = ("cube", "cube_two_patches", "cube_four_patches", "pillbox")
COUPLINGS = ("none", "glue", "mortar", "ssc")

# CSV schema version, bumped whenever header names change.
CSV_SCHEMA = "1"


class ScenarioError(ValueError):
    """A scenario file failed validation; the message names the field."""


# ---------------------------------------------------------------------------
# scenario model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Discretization:
    """Spline discretization of one subdomain."""

    degree: int
    regularity: int
    elements: tuple  # per-direction counts; see element_table for pillbox

    def scaled(self, factor):
        return replace(self, elements=tuple(int(n * factor) for n in self.elements))


@dataclass(frozen=True)
class Scenario:
    """A validated benchmark scenario."""

    name: str
    geometry: str
    radius: float
    length: float
    subdomains: tuple  # Discretization per subdomain id
    coupling: str
    q: int | None
    n_interface_modes: int | None
    n_modes: int
    shift: float | None
    method: str
    oracle_count: int
    tol_rel: float


def _require_keys(table, allowed, where):
    for key in table:
        if key not in allowed:
            raise ScenarioError(f"unknown key '{key}' in {where}")


def _get(table, key, kind, where, default=None, required=False):
    if key not in table:
        if required:
            raise ScenarioError(f"missing key '{key}' in {where}")
        return default
    val = table[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, kind) or isinstance(val, bool):
        raise ScenarioError(f"key '{key}' in {where} must be of type {kind.__name__}")
    return val


def _parse_elements(raw, where):
    if isinstance(raw, int) and not isinstance(raw, bool):
        if raw < 1:
            raise ScenarioError(f"'elements' in {where} must be positive")
        return (raw, raw, raw)
    if isinstance(raw, list) and len(raw) == 3 and all(
        isinstance(v, int) and not isinstance(v, bool) and v >= 1 for v in raw
    ):
        return tuple(raw)
    raise ScenarioError(
        f"'elements' in {where} must be a positive integer or a list of three"
    )


def scenario_from_dict(data, name="scenario"):
    """Validate a parsed scenario dictionary into a Scenario."""
    _require_keys(
        data, {"name", "geometry", "subdomain", "coupling", "solver", "comparison"}, name
    )
    name = _get(data, "name", str, "scenario", default=name)

    gtab = data.get("geometry")
    if not isinstance(gtab, dict):
        raise ScenarioError("missing [geometry] table")
    _require_keys(gtab, {"kind", "radius", "length"}, "[geometry]")
    kind = _get(gtab, "kind", str, "[geometry]", required=True)
    if kind not in GEOMETRIES:
        raise ScenarioError(f"unknown geometry kind '{kind}'")
    radius = _get(gtab, "radius", float, "[geometry]", default=1.0)
    length = _get(gtab, "length", float, "[geometry]", default=2.0)
    if kind != "pillbox" and ("radius" in gtab or "length" in gtab):
        raise ScenarioError("radius/length apply to the pillbox geometry only")
    if radius <= 0 or length <= 0:
        raise ScenarioError("radius and length must be positive")

    subs = data.get("subdomain")
    if not isinstance(subs, list) or not subs:
        raise ScenarioError("at least one [[subdomain]] table is required")
    n_subs = 1 if kind == "cube" else 2
    discs = [None] * n_subs
    for k, stab in enumerate(subs):
        where = f"[[subdomain]] #{k}"
        _require_keys(stab, {"id", "degree", "regularity", "elements"}, where)
        sid = _get(stab, "id", int, where, required=True)
        if not 0 <= sid < n_subs:
            raise ScenarioError(f"subdomain id {sid} out of range for '{kind}'")
        if discs[sid] is not None:
            raise ScenarioError(f"duplicate subdomain id {sid}")
        degree = _get(stab, "degree", int, where, required=True)
        if degree < 1:
            raise ScenarioError(f"degree in {where} must be at least 1")
        regularity = _get(stab, "regularity", int, where, default=degree - 1)
        if not 0 <= regularity < degree:
            raise ScenarioError(f"regularity in {where} must be in [0, degree)")
        if "elements" not in stab:
            raise ScenarioError(f"missing key 'elements' in {where}")
        elements = _parse_elements(stab["elements"], where)
        discs[sid] = Discretization(degree, regularity, elements)
    if any(d is None for d in discs):
        raise ScenarioError(f"'{kind}' needs all {n_subs} subdomains specified")

    ctab = data.get("coupling", {})
    _require_keys(ctab, {"method", "q", "n_interface_modes"}, "[coupling]")
    coupling = _get(ctab, "method", str, "[coupling]", default="none" if n_subs == 1 else None)
    if coupling is None:
        raise ScenarioError("multi-subdomain geometries need a [coupling] method")
    if coupling not in COUPLINGS:
        raise ScenarioError(f"unknown coupling method '{coupling}'")
    if n_subs == 1 and coupling != "none":
        raise ScenarioError("single-subdomain geometries take coupling method 'none'")
    if n_subs > 1 and coupling == "none":
        raise ScenarioError("multi-subdomain geometries need glue, mortar, or ssc")
    q = _get(ctab, "q", int, "[coupling]")
    n_ifm = _get(ctab, "n_interface_modes", int, "[coupling]")
    if coupling == "mortar":
        if q is None:
            raise ScenarioError("mortar coupling requires 'q' in [coupling]")
        p_slave = discs[0].degree
        if not 1 <= q < p_slave:
            raise ScenarioError(
                f"mortar requires 1 <= q < slave degree, got q={q}, degree={p_slave}"
            )
    elif q is not None:
        raise ScenarioError("'q' only applies to mortar coupling")
    if coupling == "ssc":
        if n_ifm is None or n_ifm < 1:
            raise ScenarioError("ssc coupling requires a positive 'n_interface_modes'")
    elif n_ifm is not None:
        raise ScenarioError("'n_interface_modes' only applies to ssc coupling")
    if coupling == "glue":
        if any(d != discs[0] for d in discs):
            raise ScenarioError("glue coupling needs identical subdomain discretizations")

    stab = data.get("solver", {})
    _require_keys(stab, {"n_modes", "shift", "method"}, "[solver]")
    n_modes = _get(stab, "n_modes", int, "[solver]", default=20)
    if n_modes < 1:
        raise ScenarioError("n_modes must be positive")
    shift = _get(stab, "shift", float, "[solver]")
    method = _get(stab, "method", str, "[solver]", default="auto")
    if method not in ("auto", "dense", "sparse"):
        raise ScenarioError(f"unknown solver method '{method}'")

    cmp_tab = data.get("comparison", {})
    _require_keys(cmp_tab, {"count", "tol_rel"}, "[comparison]")
    oracle_count = _get(cmp_tab, "count", int, "[comparison]", default=n_modes)
    tol_rel = _get(cmp_tab, "tol_rel", float, "[comparison]", default=1e-2)
    if tol_rel < 0:
        raise ScenarioError("tol_rel must be nonnegative")

    return Scenario(
        name=name,
        geometry=kind,
        radius=radius,
        length=length,
        subdomains=tuple(discs),
        coupling=coupling,
        q=q,
        n_interface_modes=n_ifm,
        n_modes=n_modes,
        shift=shift,
        method=method,
        oracle_count=oracle_count,
        tol_rel=tol_rel,
    )


def load_scenario(path):
    """Parse and validate a scenario TOML file."""
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ScenarioError(f"malformed scenario file: {exc}") from exc
    return scenario_from_dict(data, name=str(path))


def refine_scenario(scenario, level):
    """Scale every element count by 2**level (dyadic refinement)."""
    if level < 0:
        raise ScenarioError("refinement level must be nonnegative")
    factor = 2 ** level
    return replace(
        scenario, subdomains=tuple(d.scaled(factor) for d in scenario.subdomains)
    )


# ---------------------------------------------------------------------------
# geometry and space construction
# ---------------------------------------------------------------------------


def build_geometry(scenario):
    if scenario.geometry == "cube":
        geom = make_cube_single()
    elif scenario.geometry == "cube_two_patches":
        geom = make_cube_two_patches()
    elif scenario.geometry == "cube_four_patches":
        geom = make_cube_four_patches_nonconforming()
    else:
        geom = make_pillbox(scenario.radius, scenario.length)
    if scenario.coupling == "glue":
        geom = geom.merged()
    return geom


def element_table(scenario, geom, subdomain, disc):
    """Per-patch element counts of one subdomain.

    Cube patches use the discretization counts directly.  Pillbox layers
    interpret (n, nr, nz) as: square core (n, n, nz) and annular
    quarters (n along the arc, nr radial, nz axial), which keeps the
    core/quarter and quarter/quarter faces conforming.
    """
    patch_ids = geom.patches_of_subdomain(subdomain)
    if scenario.geometry != "pillbox":
        return {ip: disc.elements for ip in patch_ids}
    n, nr, nz = disc.elements
    out = {}
    for ip in patch_ids:
        out[ip] = (n, n, nz) if ip % 5 == 0 else (n, nr, nz)
    return out


@dataclass
class CoupledProblem:
    """Assembled (block) operators of one scenario."""

    scenario: Scenario
    geom: object
    spaces: tuple  # DiscreteSpace per block, ordered by subdomain id
    offsets: tuple  # start of each block in the coupled field vector
    A: sp.csr_matrix
    M: sp.csr_matrix
    B: sp.csr_matrix | None
    mult_space: object | None  # mortar only
    modes: tuple | None  # ssc only

    @property
    def n_dofs(self):
        return self.A.shape[0]

    @property
    def n_constraints(self):
        return 0 if self.B is None else self.B.shape[0]


def interface_modes(scenario, count):
    """Analytic transverse modes of the scenario's interface cross-section."""
    if scenario.geometry in ("cube_two_patches", "cube_four_patches"):
        return tuple(rect_modes(1.0, 1.0, count))
    if scenario.geometry == "pillbox":
        return tuple(disc_modes(scenario.radius, count))
    raise ScenarioError(f"geometry '{scenario.geometry}' has no coupling interface")


def _scatter_columns(block, spaces, offsets, index, n_total):
    """Place a per-subdomain constraint block into the coupled column layout."""
    blocks = [None] * len(spaces)
    blocks[index] = block
    for j, space in enumerate(spaces):
        if j != index:
            blocks[j] = sp.csr_matrix((block.shape[0], space.n_dofs))
    return sp.hstack(blocks, format="csr")


def assemble_problem(scenario):
    """Assemble the coupled stiffness/mass/constraint system of a scenario."""
    geom = build_geometry(scenario)
    if scenario.coupling in ("none", "glue"):
        disc = scenario.subdomains[0]
        elements = element_table(scenario, geom, 0, disc)
        space = build_curl_space(
            geom, 0, disc.degree, elements, regularity=disc.regularity
        )
        A, M = assemble_operators(space)
        return CoupledProblem(
            scenario, geom, (space,), (0,), A, M, None, None, None
        )

    spaces = []
    for s, disc in enumerate(scenario.subdomains):
        elements = element_table(scenario, geom, s, disc)
        spaces.append(
            build_curl_space(geom, s, disc.degree, elements, regularity=disc.regularity)
        )
    ops = [assemble_operators(space) for space in spaces]
    A = sp.block_diag([op[0] for op in ops], format="csr")
    M = sp.block_diag([op[1] for op in ops], format="csr")
    offsets = tuple(np.cumsum([0] + [sp_.n_dofs for sp_ in spaces])[:-1])

    coupling = geom.couplings[0]
    s_slave = coupling.slave_subdomain
    s_master = coupling.master_subdomain
    mult_space = None
    modes = None
    if scenario.coupling == "mortar":
        mult_space = build_multiplier_space(geom, 0, spaces[s_slave], scenario.q)
        Bs, Bm = assemble_mortar_coupling(
            geom, 0, spaces[s_slave], spaces[s_master], mult_space
        )
    else:
        modes = interface_modes(scenario, scenario.n_interface_modes)
        Bs, Bm = assemble_modal_coupling(
            geom, 0, spaces[s_slave], spaces[s_master], modes
        )
    B = _scatter_columns(Bs, spaces, offsets, s_slave, A.shape[0]) - _scatter_columns(
        Bm, spaces, offsets, s_master, A.shape[0]
    )
    return CoupledProblem(
        scenario, geom, tuple(spaces), offsets, A, M, B.tocsr(), mult_space, modes
    )


def solve_problem(problem, want_vectors=False):
    """Run the eigensolver with the scenario's solver options."""
    sc = problem.scenario
    sigma = sc.shift
    if sigma is None and (
        sc.method == "sparse"
        or (sc.method == "auto" and problem.n_dofs + problem.n_constraints > 4500)
    ):
        sigma = 1.0  # default shift, below the first cavity mode at unit scale
    return solve_eigs(
        problem.A,
        problem.M,
        B=problem.B,
        n_modes=sc.n_modes,
        sigma=sigma,
        method=sc.method,
        want_vectors=want_vectors,
    )


def physical_spectrum(problem, result: EigenResult):
    """(kernel count, physical eigenvalues ascending) of a solve."""
    ref = problem.scenario.shift if result.method == "sparse" else None
    kernel, physical = filter_zero_modes(result.values, ref=ref)
    return len(kernel), physical


# ---------------------------------------------------------------------------
# closed-form oracles
# ---------------------------------------------------------------------------


def oracle_spectrum(geometry, count, radius=1.0, length=2.0):
    """First exact nondimensional eigenvalues of a benchmark cavity.

    Cube geometries share the unit-cube spectrum: lambda = pi^2 (k^2 +
    l^2 + m^2) over nonnegative integer triples with at least two
    nonzero entries, one mode per triple with exactly one zero entry and
    two per all-nonzero triple.  The pillbox spectrum combines TM_mnp
    modes (p >= 0) built on the zeros of J_m and TE_mnp modes (p >= 1)
    built on the zeros of J_m'; every m >= 1 family is doubled by the
    angular degeneracy.
    """
    if geometry in ("cube", "cube_two_patches", "cube_four_patches"):
        # enlarge the index cutoff until the requested prefix is stable:
        # any excluded triple has an index > kmax, hence a larger lambda
        kmax = 2
        while True:
            vals = []
            for k in range(kmax + 1):
                for l in range(kmax + 1):
                    for m in range(kmax + 1):
                        nz = (k > 0) + (l > 0) + (m > 0)
                        if nz < 2:
                            continue
                        lam = np.pi ** 2 * (k * k + l * l + m * m)
                        vals.extend([lam] * (1 if nz == 2 else 2))
            vals.sort()
            if len(vals) >= count and vals[count - 1] <= np.pi ** 2 * kmax ** 2:
                return np.asarray(vals[:count])
            kmax += 1
    if geometry == "pillbox":
        return _pillbox_spectrum(radius, length, count)
    raise ScenarioError(f"no oracle spectrum for geometry '{geometry}'")


def _pillbox_spectrum(R, L, count):
    vals = []
    n_rad = count + 2
    m = 0
    while True:
        chi = bessel_j_zeros(m, n_rad)
        chi_p = bessel_jprime_zeros(m, n_rad)
        # the smallest contribution of this m-family is bounded below by
        # the smaller of the two first radial cutoffs
        if (min(chi[0], chi_p[0]) / R) ** 2 > _pillbox_cutoff(vals, count):
            break
        mult = 1 if m == 0 else 2
        for x in chi:
            for p in range(0, count + 1):
                vals.extend([(x / R) ** 2 + (p * np.pi / L) ** 2] * mult)
        for x in chi_p:
            for p in range(1, count + 1):
                vals.extend([(x / R) ** 2 + (p * np.pi / L) ** 2] * mult)
        m += 1
    vals.sort()
    return np.asarray(vals[:count])


def _pillbox_cutoff(vals, count):
    if len(vals) < count:
        return np.inf
    return sorted(vals)[count - 1] + 1e-12


# ---------------------------------------------------------------------------
# spectrum comparison and convergence
# ---------------------------------------------------------------------------


@dataclass
class SpectrumComparison:
    """Greedy ascending matching of a computed spectrum against an oracle."""

    matched: list  # (computed, oracle, rel_err)
    spurious: list  # computed values without an oracle partner
    missed: list  # oracle values without a computed partner
    tol_rel: float

    @property
    def max_rel_err(self):
        return max((e for _, _, e in self.matched), default=0.0)


def compare_spectrum(computed, oracle, tol_rel=1e-2):
    """Match two ascending spectra within a relative tolerance.

    Both lists are walked in ascending order; a computed value pairs with
    the smallest unmatched oracle value within tol_rel.  Computed values
    below the next oracle value are spurious, skipped oracle values are
    missed.
    """
    computed = sorted(float(v) for v in computed)
    oracle = sorted(float(v) for v in oracle)
    matched, spurious, missed = [], [], []
    i = j = 0
    while i < len(computed) and j < len(oracle):
        c, o = computed[i], oracle[j]
        scale = max(abs(o), np.finfo(float).tiny)
        if abs(c - o) <= tol_rel * scale:
            matched.append((c, o, abs(c - o) / scale))
            i += 1
            j += 1
        elif c < o:
            spurious.append(c)
            i += 1
        else:
            missed.append(o)
            j += 1
    spurious.extend(computed[i:])
    missed.extend(oracle[j:])
    return SpectrumComparison(matched, spurious, missed, tol_rel)


def estimate_order(errors, hs):
    """Least-squares slope of log(error) against log(h)."""
    errors = np.asarray(errors, float)
    hs = np.asarray(hs, float)
    if errors.shape != hs.shape or errors.size < 2:
        raise ValueError("order estimation needs at least two (error, h) pairs")
    if np.any(errors <= 0) or np.any(hs <= 0):
        raise ValueError("errors and mesh sizes must be positive")
    slope, _ = np.polyfit(np.log(hs), np.log(errors), 1)
    return float(slope)


# ---------------------------------------------------------------------------
# inf-sup evaluation
# ---------------------------------------------------------------------------


def _interface_mesh_size(mult_space):
    return max(
        max(ku.max_element_size, kv.max_element_size)
        for ku, kv in mult_space.piece_kvs
    )


def infsup_point(problem):
    """Numerical inf-sup constant of an assembled coupled problem.

    The pairing is evaluated against the slave subdomain only, which is
    the side that must control the multiplier space: the supremum over
    the full coupled field space lets a fine master mesh mask an
    unstable slave/multiplier pairing.  The field norm is the slave
    H(curl) norm (stiffness plus mass); the multiplier norm is the
    mesh-weighted surface H(div) proxy for mortar multipliers and the
    identity for the orthonormal interface modes.
    """
    if problem.B is None:
        raise ScenarioError("inf-sup evaluation needs a multiplier coupling")
    slave = problem.geom.couplings[0].slave_subdomain
    lo = problem.offsets[slave]
    hi = (
        problem.offsets[slave + 1]
        if slave + 1 < len(problem.offsets)
        else problem.n_dofs
    )
    N_V = (problem.A + problem.M).tocsr()[lo:hi, lo:hi]
    B_slave = sp.csr_matrix(problem.B)[:, lo:hi]
    if problem.mult_space is not None:
        h = _interface_mesh_size(problem.mult_space)
        N_L = multiplier_norm_matrix(
            problem.geom,
            0,
            problem.spaces[slave],
            problem.mult_space,
            h,
        )
    else:
        N_L = sp.identity(problem.B.shape[0], format="csr")
    return infsup_constant(B_slave, N_V, N_L)


def infsup_sweep(scenario, levels, params):
    """Inf-sup constants over refinements and coupling parameters.

    For a mortar scenario params are multiplier degrees q; for an ssc
    scenario they are interface mode counts.  Returns one row per level:
    (level, [(param, n_dof, beta), ...]).
    """
    if scenario.coupling == "mortar":
        key = "q"
    elif scenario.coupling == "ssc":
        key = "n_interface_modes"
    else:
        raise ScenarioError("inf-sup sweeps need a mortar or ssc scenario")
    rows = []
    for level in levels:
        cells = []
        for value in params:
            sc = replace(refine_scenario(scenario, level), **{key: int(value)})
            sc = scenario_from_roundtrip(sc)
            problem = assemble_problem(sc)
            beta = infsup_point(problem)
            cells.append((int(value), problem.n_dofs, beta))
        rows.append((level, cells))
    return rows


def scenario_from_roundtrip(scenario):
    """Re-validate a programmatically modified scenario."""
    if scenario.coupling == "mortar":
        p_slave = scenario.subdomains[0].degree
        if not 1 <= scenario.q < p_slave:
            raise ScenarioError(
                f"mortar requires 1 <= q < slave degree, got q={scenario.q}"
            )
    if scenario.coupling == "ssc" and scenario.n_interface_modes < 1:
        raise ScenarioError("n_interface_modes must be positive")
    return scenario


# ---------------------------------------------------------------------------
# scenario driver and CSV emission
# ---------------------------------------------------------------------------


def run_scenario(scenario, output=None):
    """Assemble, solve, and compare one scenario.

    Returns a result dictionary with the raw spectrum, the physical
    spectrum, the kernel count, and (when an oracle exists) the
    comparison.  Writes a CSV when an output path is given.
    """
    problem = assemble_problem(scenario)
    result = solve_problem(problem)
    n_kernel, physical = physical_spectrum(problem, result)
    oracle = oracle_spectrum(
        scenario.geometry,
        scenario.oracle_count,
        radius=scenario.radius,
        length=scenario.length,
    )
    comparison = compare_spectrum(
        physical[: scenario.oracle_count], oracle, scenario.tol_rel
    )
    out = {
        "scenario": scenario,
        "n_dofs": problem.n_dofs,
        "n_constraints": problem.n_constraints,
        "method": result.method,
        "values": result.values,
        "n_kernel": n_kernel,
        "physical": physical,
        "oracle": oracle,
        "comparison": comparison,
    }
    if output is not None:
        write_spectrum_csv(output, out)
    return out


def write_spectrum_csv(path, result):
    """Deterministic CSV of the physical spectrum and its oracle matching."""
    comparison = result["comparison"]
    spurious = set(float(v) for v in comparison.spurious)
    rows = []
    pairs = {c: (o, e) for c, o, e in comparison.matched}
    for idx, lam in enumerate(result["physical"]):
        lam = float(lam)
        if lam in pairs:
            o, e = pairs[lam]
            rows.append([idx, _fmt(lam), _fmt(o), _fmt(e), "matched"])
        elif lam in spurious:
            rows.append([idx, _fmt(lam), "", "", "spurious"])
        else:
            rows.append([idx, _fmt(lam), "", "", "unclassified"])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"# schema {CSV_SCHEMA}"])
        writer.writerow(["index", "eigenvalue", "oracle", "rel_err", "status"])
        writer.writerows(rows)


def write_sweep_csv(path, rows, param_label):
    """Wide-format CSV of an inf-sup sweep: one column pair per parameter."""
    params = [p for p, _, _ in rows[0][1]]
    header = ["level"]
    for p in params:
        header += [f"ndof_{param_label}{p}", f"beta_{param_label}{p}"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"# schema {CSV_SCHEMA}"])
        writer.writerow(header)
        for level, cells in rows:
            row = [level]
            for p, ndof, beta in cells:
                row += [ndof, _fmt(beta)]
            writer.writerow(row)


def _fmt(x):
    return f"{float(x):.12e}"


def frequency_ghz(eigenvalues, unit_metres):
    """Convert nondimensional eigenvalues to frequencies in GHz.

    The cavity geometry is assumed to be expressed in multiples of
    unit_metres; f = sqrt(lambda) * c / (2 pi unit) with c the vacuum
    speed of light.
    """
    c0 = 299792458.0
    lam = np.asarray(eigenvalues, float)
    if np.any(lam < 0) or unit_metres <= 0:
        raise ValueError("eigenvalues must be nonnegative and the unit positive")
    return np.sqrt(lam) * c0 / (2.0 * np.pi * unit_metres) / 1e9
