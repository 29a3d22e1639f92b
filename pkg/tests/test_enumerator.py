from __future__ import annotations

from collections import Counter
from fractions import Fraction as F

import pytest

from qfano.contractions import CREPANT_U
from qfano.enumerator import (
    CASE_ORDER,
    MAIN_RULES,
    SEARCH_FAMILIES,
    TAG_C_P2,
    TAG_CREPANT,
    TAG_D,
    TAG_E1,
    TAG_E1_ZU1,
    Bounds,
    Scenario,
    boundary_audit,
    canonical_sort,
    declared_rules,
    enumerate_solutions,
    enumerate_with_audit,
    geometric_filters,
    main_theorem_rows,
    merge_equivalent_tags,
    raw_candidates,
    regroup_by_h,
    table_of,
    witness_k,
)
from qfano.riemann_roch import aw_bound_ok, h0_antik


def _row(rows, **want):
    found = [r for r in rows if all(getattr(r, k) == v for k, v in want.items())]
    assert len(found) == 1, (want, found)
    return found[0]


class TestScenario:
    def test_defaults(self):
        sc = Scenario()
        assert (sc.r, sc.q, sc.alpha, sc.cartier_index_s, sc.h_min) == (2, 1, 1, 1, 4)
        b = sc.bounds
        assert (b.z_max, b.u_max, b.k_max, b.e_max, b.n_max, b.max_flips, b.d_step) == (8, 10, 8, 32, 14, 4, F(1, 2))

    @pytest.mark.parametrize("field", ["z_max", "u_max", "k_max", "max_flips", "a_max"])
    def test_positive_bounds(self, field):
        with pytest.raises(ValueError):
            Bounds(**{field: 0})

    def test_zero_caps_allowed_for_e_and_n(self):
        Bounds(e_max=0, n_max=0)
        with pytest.raises(ValueError):
            Bounds(e_max=-1)

    def test_rejects_bad_scenarios(self):
        with pytest.raises(ValueError):
            Scenario(r=0)
        with pytest.raises(ValueError):
            Scenario(alpha=0)
        with pytest.raises(ValueError):
            Scenario(families=("E13",))


class TestReproduction:
    def test_row_counts(self, rows):
        counts = Counter(table_of(r) for r in rows)
        assert counts == {"table1": 15, "table2": 6, "table3": 4, "table4": 14, "table5": 6, "crepant": 1}

    def test_fibration_branch(self, rows):
        d_rows = [r for r in rows if r.case == TAG_D]
        assert len(d_rows) == 6
        for r in d_rows:
            assert r.u == r.z
            assert r.n + r.e == 9
            assert r.kx3 == F(r.n + 9, 2)
            assert r.derived.deg_F == r.z * (3 + r.n)

    def test_e1_with_z_equal_u_equal_1(self, rows):
        zu1 = [r for r in rows if r.case == TAG_E1_ZU1]
        assert sorted(r.e for r in zu1) == [0, 2, 4, 6, 8, 10]
        for r in zu1:
            assert r.kx3 == 6 - F(r.e, 4)
            assert r.N == (16 - r.e) // 2
            assert r.h == 4 and r.n == 0 and r.z == r.u == 1
            assert r.x_prime == f"V_{2 * r.derived.kx_prime_3 // 2}"

    def test_crepant_row(self, rows):
        (r,) = [r for r in rows if r.case == TAG_CREPANT]
        assert (r.h, r.kx3, r.N, r.z, r.u, r.e, r.n) == (4, F(5, 2), 1, 1, 2, 0, 0)

    def test_spot_values(self, rows):
        assert _row(rows, case=TAG_E1, h=7, N=1).derived.kx_prime_3 == 64
        assert _row(rows, case=TAG_E1, h=8, N=1, z=2).derived.l_C == 27
        assert _row(rows, case="E2").derived.kx_prime_3 == 10
        assert _row(rows, case=TAG_C_P2, h=6, N=1).derived.delta_l == 7
        assert _row(rows, case=TAG_D, h=5, N=1).derived.deg_F == 3

    def test_row_invariants(self, rows, scenario):
        for r in rows:
            assert r.h >= scenario.h_min and h0_antik(r.kx3, r.N) == r.h
            assert aw_bound_ok(r.N) and 1 <= r.N <= 15 and r.N >= r.n + 1
            assert r.e >= 0 and r.n >= 0
            assert all(v == 0 for _, v in r.derived.residuals) and not r.derived.problems
            if r.derived.genus_slack is not None:
                assert r.derived.genus_slack >= 0 and r.derived.genus_slack.denominator == 1
            if r.derived.l_C is not None:
                assert r.derived.l_C > 0
            if r.case == TAG_CREPANT:
                assert r.u in CREPANT_U

    def test_flip_structure(self, rows):
        assert all(len(r.flips) <= 1 for r in rows)
        assert all(f.a == 2 for r in rows for f in r.flips)
        assert all(not r.flips for r in rows if r.case == TAG_E1_ZU1)
        assert all(r.z <= r.u for r in rows)

    def test_sorted_and_deterministic(self, rows, scenario):
        assert rows == canonical_sort(rows)
        assert enumerate_solutions(scenario, workers=2) == rows

    def test_bounds_are_slack(self, rows, scenario):
        assert boundary_audit(rows, scenario.bounds) == []

    def test_ky3_prime_uses_scenario(self, rows, scenario):
        r = _row(rows, case=TAG_D, h=4, N=6)
        assert r.ky3_prime(scenario) == 5 - F(1, 2) - F(1, 2)
        assert r.ky3_prime(Scenario(alpha=2)) == 5 - 1 - F(1, 2)


class TestFilters:
    def test_rule_names_unique(self, scenario):
        names = [rule.name for rule in declared_rules(scenario)]
        assert len(names) == len(set(names))
        assert {rule.stage for rule in declared_rules(scenario)} == {"theorem", "main"}
        assert all(rule.stage == "main" for rule in MAIN_RULES)

    def test_degree_seven_fibration_removed(self, search):
        _, audit = search
        (hit,) = [a for a in audit if a.row.case == TAG_D and a.row.n == 4 and a.row.N - a.row.n == 1]
        assert hit.rule == "fibration, Y' Gorenstein: no del Pezzo fiber of degree 7"
        assert hit.row.derived.deg_F == 7 and hit.row.h == 5

    def test_every_removal_names_its_rule(self, search, scenario):
        _, audit = search
        names = {rule.name for rule in declared_rules(scenario, ("theorem",))}
        assert audit and all(a.rule in names for a in audit)

    def test_main_stage(self, rows, scenario):
        audit = []
        kept = main_theorem_rows(rows, scenario, audit)
        removed = {(a.row.case, a.row.h, a.row.N, a.row.e) for a in audit}
        assert removed == {(TAG_E1_ZU1, 4, 8, 0), (TAG_E1_ZU1, 4, 7, 2), (TAG_C_P2, 6, 8, 0)}
        assert len(kept) == len(rows) - 3

    def test_flags_record_applied_rules(self, rows):
        r = _row(rows, case=TAG_C_P2, h=6, N=1)
        assert any("N - n = 1" in f for f in r.flags)

    def test_filters_are_idempotent(self, rows, scenario):
        assert geometric_filters(rows, scenario, ("theorem",)) == rows

    def test_raw_rows_cover_filtered(self, rows, scenario):
        raw = raw_candidates(scenario)
        assert len(raw) > len(rows)
        assert {(r.h, r.kx3, r.N, r.e) for r in rows} <= {(r.h, r.kx3, r.N, r.e) for r in raw}


class TestRegroup:
    def test_groups(self, main_rows):
        groups = regroup_by_h(main_rows)
        assert {h: len(v) for h, v in groups.items()} == {4: 11, 5: 9, 6: 10, 7: 5, 8: 4, 9: 1, 10: 3}
        (only,) = groups[9]
        r = only.row
        assert (r.kx3, r.N, r.e, r.n, r.z, r.u, r.derived.l_C, r.x_prime) == (F(25, 2), 1, 5, 0, 1, 2, 10, "B_4")
        assert only.existence == "unknown"

    def test_existence_callback(self, main_rows):
        groups = regroup_by_h(main_rows, existence=lambda r: "questioned" if r.case == TAG_CREPANT else None)
        marks = {m.row.case: m.existence for m in groups[4]}
        assert marks[TAG_CREPANT] == "questioned" and marks["E9"] == "unknown"

    def test_order_within_h(self, main_rows):
        for entries in regroup_by_h(main_rows).values():
            keys = [(m.row.kx3, m.row.N, CASE_ORDER.index(m.row.case)) for m in entries]
            assert keys == sorted(keys)

    def test_empty(self):
        assert regroup_by_h([]) == {}


class TestRestrictions:
    def test_no_flips(self, rows):
        sc = Scenario(bounds=Bounds(n_max=0))
        assert enumerate_solutions(sc) == [r for r in rows if r.n == 0]

    def test_no_flop(self, rows):
        sc = Scenario(bounds=Bounds(e_max=0))
        assert enumerate_solutions(sc) == [r for r in rows if r.e == 0]

    def test_single_family(self, rows):
        sc = Scenario(families=(TAG_D,))
        assert enumerate_solutions(sc) == [r for r in rows if r.case == TAG_D]

    def test_families_partition_the_search(self, rows):
        merged = []
        for fam in SEARCH_FAMILIES:
            merged += enumerate_solutions(Scenario(families=(fam,)))
        assert canonical_sort(merge_equivalent_tags(merged)) == rows


def test_witness_k(rows):
    assert witness_k(_row(rows, case=TAG_E1, h=7, N=1)) == 1
    assert witness_k(_row(rows, case="E2")) == 3
    assert witness_k(_row(rows, case=TAG_D, h=5, N=1)) is None
