import numpy as np
import pytest

from igamaxwell.bench import (
    Discretization,
    ScenarioError,
    assemble_problem,
    compare_spectrum,
    estimate_order,
    frequency_ghz,
    infsup_point,
    infsup_sweep,
    interface_modes,
    load_scenario,
    oracle_spectrum,
    physical_spectrum,
    refine_scenario,
    run_scenario,
    scenario_from_dict,
    solve_problem,
)

scipy_special = pytest.importorskip("scipy.special")


def cube_dict(**overrides):
    data = {
        "geometry": {"kind": "cube"},
        "subdomain": [{"id": 0, "degree": 2, "elements": 2}],
        "solver": {"n_modes": 10, "method": "dense"},
        "comparison": {"count": 5},
    }
    data.update(overrides)
    return data


def mortar_dict(q=2, elements=(2, 3)):
    return {
        "geometry": {"kind": "cube_two_patches"},
        "subdomain": [
            {"id": 0, "degree": 3, "regularity": 2, "elements": elements[0]},
            {"id": 1, "degree": 2, "regularity": 0, "elements": elements[1]},
        ],
        "coupling": {"method": "mortar", "q": q},
        "solver": {"n_modes": 15, "method": "dense"},
        "comparison": {"count": 10},
    }


class TestScenarioValidation:
    def test_minimal_cube(self):
        sc = scenario_from_dict(cube_dict())
        assert sc.geometry == "cube"
        assert sc.coupling == "none"
        assert sc.subdomains[0] == Discretization(2, 1, (2, 2, 2))

    def test_unknown_key_rejected(self):
        data = cube_dict()
        data["solver"]["n_mode"] = 5
        with pytest.raises(ScenarioError, match="n_mode"):
            scenario_from_dict(data)

    def test_unknown_geometry(self):
        data = cube_dict()
        data["geometry"]["kind"] = "torus"
        with pytest.raises(ScenarioError, match="torus"):
            scenario_from_dict(data)

    def test_missing_subdomain(self):
        data = mortar_dict()
        data["subdomain"] = data["subdomain"][:1]
        with pytest.raises(ScenarioError, match="subdomains"):
            scenario_from_dict(data)

    def test_mortar_degree_bound(self):
        with pytest.raises(ScenarioError, match="q"):
            scenario_from_dict(mortar_dict(q=3))

    def test_coupling_required_for_two_subdomains(self):
        data = mortar_dict()
        del data["coupling"]
        with pytest.raises(ScenarioError):
            scenario_from_dict(data)

    def test_glue_needs_matching_discretizations(self):
        data = mortar_dict()
        data["coupling"] = {"method": "glue"}
        with pytest.raises(ScenarioError, match="identical"):
            scenario_from_dict(data)

    def test_radius_only_for_pillbox(self):
        data = cube_dict()
        data["geometry"]["radius"] = 2.0
        with pytest.raises(ScenarioError, match="pillbox"):
            scenario_from_dict(data)

    def test_elements_list(self):
        data = cube_dict()
        data["subdomain"][0]["elements"] = [2, 3, 4]
        sc = scenario_from_dict(data)
        assert sc.subdomains[0].elements == (2, 3, 4)
        data["subdomain"][0]["elements"] = [2, 3]
        with pytest.raises(ScenarioError, match="elements"):
            scenario_from_dict(data)

    def test_refine_scales_elements(self):
        sc = scenario_from_dict(mortar_dict())
        fine = refine_scenario(sc, 2)
        assert fine.subdomains[0].elements == (8, 8, 8)
        assert fine.subdomains[1].elements == (12, 12, 12)

    def test_shipped_scenarios_parse(self):
        import pathlib

        root = pathlib.Path(__file__).resolve().parents[1] / "scenarios"
        files = sorted(root.glob("*.toml"))
        assert len(files) >= 8
        for f in files:
            load_scenario(f)


class TestOracles:
    def test_cube_prefix(self):
        pi2 = np.pi ** 2
        expected = [2 * pi2] * 3 + [3 * pi2] * 2 + [5 * pi2] * 6 + [6 * pi2] * 6
        np.testing.assert_allclose(oracle_spectrum("cube", 17), expected, rtol=1e-14)

    def test_cube_multiplicity_rule(self):
        # independent enumeration over sorted index triples
        from itertools import combinations_with_replacement, permutations

        counts = {}
        for tri in combinations_with_replacement(range(0, 7), 3):
            nz = sum(1 for v in tri if v > 0)
            if nz < 2:
                continue
            lam = sum(v * v for v in tri)
            per = 1 if nz == 2 else 2
            nperm = len(set(permutations(tri)))
            counts[lam] = counts.get(lam, 0) + per * nperm
        vals = sorted(counts)
        expected = []
        for lam in vals:
            expected += [np.pi ** 2 * lam] * counts[lam]
        got = oracle_spectrum("cube", 40)
        np.testing.assert_allclose(got, expected[:40], rtol=1e-14)

    def test_pillbox_prefix_against_library_bessel(self):
        R, L = 1.0, 2.0
        vals = []
        for m in range(0, 6):
            for x in scipy_special.jn_zeros(m, 8):
                for p in range(0, 9):
                    lam = (x / R) ** 2 + (p * np.pi / L) ** 2
                    vals.extend([lam] * (1 if m == 0 else 2))
            for x in scipy_special.jnp_zeros(m, 8):
                for p in range(1, 9):
                    lam = (x / R) ** 2 + (p * np.pi / L) ** 2
                    vals.extend([lam] * (1 if m == 0 else 2))
        vals.sort()
        got = oracle_spectrum("pillbox", 15, radius=R, length=L)
        np.testing.assert_allclose(got, vals[:15], atol=1e-9)

    def test_pillbox_fundamental(self):
        chi01 = 2.404825557695773
        got = oracle_spectrum("pillbox", 1, radius=1.0, length=2.0)
        assert abs(got[0] - chi01 ** 2) <= 1e-9

    def test_pillbox_radius_scaling(self):
        a = oracle_spectrum("pillbox", 5, radius=1.0, length=2.0)
        b = oracle_spectrum("pillbox", 5, radius=2.0, length=4.0)
        np.testing.assert_allclose(a / 4.0, b, rtol=1e-12)

    def test_unknown_geometry(self):
        with pytest.raises(ScenarioError):
            oracle_spectrum("torus", 3)


class TestCompareSpectrum:
    def test_exact_match(self):
        vals = [1.0, 2.0, 2.0, 5.0]
        c = compare_spectrum(vals, vals, tol_rel=1e-10)
        assert len(c.matched) == 4 and not c.spurious and not c.missed
        assert c.max_rel_err == 0.0

    def test_spurious_below(self):
        c = compare_spectrum([0.01, 1.0, 2.0], [1.0, 2.0], tol_rel=1e-2)
        assert c.spurious == [0.01]
        assert len(c.matched) == 2 and not c.missed

    def test_missed_oracle(self):
        c = compare_spectrum([1.0], [1.0, 2.0, 3.0], tol_rel=1e-2)
        assert len(c.matched) == 1
        assert c.missed == [2.0, 3.0]

    def test_zero_tolerance(self):
        c = compare_spectrum([1.0, 2.0000001], [1.0, 2.0], tol_rel=0.0)
        assert len(c.matched) == 1
        assert c.spurious == [2.0000001] or c.missed == [2.0]


class TestEstimateOrder:
    def test_exact_power(self):
        hs = [0.1, 0.05, 0.025]
        errs = [4.0 * h ** 2 for h in hs]
        assert abs(estimate_order(errs, hs) - 2.0) <= 1e-12

    def test_noisy_power(self):
        rng = np.random.default_rng(0)
        hs = np.array([0.2 / 2 ** k for k in range(5)])
        errs = 3.0 * hs ** 3.5 * (1 + rng.uniform(-0.01, 0.01, hs.size))
        assert abs(estimate_order(errs, hs) - 3.5) <= 0.05

    def test_single_point_rejected(self):
        with pytest.raises(ValueError):
            estimate_order([1.0], [0.1])


class TestFrequencyScale:
    def test_known_value(self):
        lam = (2 * np.pi) ** 2
        f = frequency_ghz([lam], 1.0)
        assert abs(f[0] - 299792458.0 / 1e9) <= 1e-9

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            frequency_ghz([-1.0], 1.0)


class TestInterfaceModes:
    def test_dispatch(self):
        sc = scenario_from_dict(mortar_dict())
        modes = interface_modes(sc, 4)
        assert len(modes) == 4
        with pytest.raises(ScenarioError):
            interface_modes(scenario_from_dict(cube_dict()), 3)


class TestProblems:
    def test_glued_two_patches_match_single_patch(self):
        # with regularity zero at the split the glued two-patch space is
        # the same discrete space as one patch with a doubled interior knot
        single = scenario_from_dict(
            {
                "geometry": {"kind": "cube"},
                "subdomain": [
                    {"id": 0, "degree": 2, "regularity": 0, "elements": [2, 2, 2]}
                ],
                "solver": {"n_modes": 10, "method": "dense"},
                "comparison": {"count": 5},
            }
        )
        glued = scenario_from_dict(
            {
                "geometry": {"kind": "cube_two_patches"},
                "subdomain": [
                    {"id": 0, "degree": 2, "regularity": 0, "elements": [2, 2, 1]},
                    {"id": 1, "degree": 2, "regularity": 0, "elements": [2, 2, 1]},
                ],
                "coupling": {"method": "glue"},
                "solver": {"n_modes": 10, "method": "dense"},
                "comparison": {"count": 5},
            }
        )
        ps, pg = assemble_problem(single), assemble_problem(glued)
        assert ps.n_dofs == pg.n_dofs
        vs = solve_problem(ps).values
        vg = solve_problem(pg).values
        np.testing.assert_allclose(vs, vg, atol=1e-10 * max(1.0, vs.max()))

    def test_spectrum_monotone_under_nested_refinement(self):
        # min-max principle: eigenvalues do not increase on nested spaces
        vals = {}
        for nel in (2, 4):
            sc = scenario_from_dict(cube_dict())
            sc = refine_scenario(sc, 0)
            data = cube_dict()
            data["subdomain"][0]["elements"] = nel
            prob = assemble_problem(scenario_from_dict(data))
            res = solve_problem(prob)
            _, phys = physical_spectrum(prob, res)
            vals[nel] = phys[:5]
        oracle = oracle_spectrum("cube", 5)
        assert np.all(vals[4] <= vals[2] + 1e-10)
        assert np.all(vals[4] >= oracle - 1e-10)

    def test_mortar_kernel_and_constraints(self):
        prob = assemble_problem(scenario_from_dict(mortar_dict()))
        assert prob.B is not None and prob.B.shape[1] == prob.n_dofs
        res = solve_problem(prob, want_vectors=True)
        nk, phys = physical_spectrum(prob, res)
        assert nk > 0 and phys[0] > 1.0
        # solutions satisfy the coupling constraint
        BV = prob.B @ res.vectors
        norms = np.linalg.norm(res.vectors, axis=0)
        assert np.max(np.abs(BV)) <= 1e-8 * norms.max()

    def test_infsup_point_positive_and_glue_rejected(self):
        prob = assemble_problem(scenario_from_dict(mortar_dict()))
        beta = infsup_point(prob)
        assert 0 < beta < 10
        single = assemble_problem(scenario_from_dict(cube_dict()))
        with pytest.raises(ScenarioError):
            infsup_point(single)

    def test_infsup_sweep_shape_and_glue_rejected(self):
        sc = scenario_from_dict(mortar_dict())
        rows = infsup_sweep(sc, [0], [1, 2])
        assert len(rows) == 1
        level, cells = rows[0]
        assert level == 0 and [p for p, _, _ in cells] == [1, 2]
        assert all(beta > 0 for _, _, beta in cells)
        glue = scenario_from_dict(
            {
                "geometry": {"kind": "cube_two_patches"},
                "subdomain": [
                    {"id": 0, "degree": 2, "elements": 2},
                    {"id": 1, "degree": 2, "elements": 2},
                ],
                "coupling": {"method": "glue"},
                "solver": {"n_modes": 5},
                "comparison": {},
            }
        )
        with pytest.raises(ScenarioError):
            infsup_sweep(glue, [0], [1])


class TestRunScenario:
    def test_deterministic_csv(self, tmp_path):
        sc = scenario_from_dict(cube_dict())
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        run_scenario(sc, output=out1)
        run_scenario(sc, output=out2)
        assert out1.read_bytes() == out2.read_bytes()
        text = out1.read_text()
        assert text.splitlines()[1] == "index,eigenvalue,oracle,rel_err,status"

    def test_result_fields(self):
        res = run_scenario(scenario_from_dict(cube_dict()))
        assert res["n_kernel"] == 8  # interior scalar dofs of the 2^3 mesh
        assert res["comparison"].tol_rel == 1e-2
        assert len(res["physical"]) >= 5
