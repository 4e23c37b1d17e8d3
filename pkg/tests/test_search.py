from __future__ import annotations

import json
import random
from itertools import combinations

import pytest

from arcgeom.fieldred import canonical_pseudo_conic
from arcgeom.gf import field
from arcgeom.incidence import BudgetExceeded
from arcgeom.projgeom import all_subspaces, apply_collineation, collineation_generators, full_space, span
from arcgeom.pseudoarcs import (
    PseudoArc,
    PseudoArcError,
    apply_to_arc,
    frame_collineation,
    frame_elements,
    is_pseudo_conic,
)
from arcgeom.search import (
    BUDGET_ENV,
    Checkpoint,
    SearchSpec,
    admissible_count,
    audit_extendability,
    candidate_pool,
    checkpoint_path,
    enumerate_pseudo_arcs,
    main_theorem_pipeline,
    orbit_certificate,
    orbit_partition,
    prefix_certificates,
    prefix_stabilizer,
    pseudo_oval_extensions,
    reduction_cross_check,
)

from .oracles import brute_rank
from .test_pseudoarcs import random_collineation


def _spans_by_rank(K: PseudoArc) -> bool:
    F = field(K.q)
    return all(brute_rank([r for E in t for r in E.rows], K.q, F) == 3 * K.n for t in combinations(K.elements, 3))


def test_orbit_certificate_lines_of_pg52():
    gens = collineation_generators(5, 2)
    lines = all_subspaces(5, 2, 1)
    c = orbit_certificate(gens, lines, 1)
    assert c.orbit_sizes == (651,) and c.holds
    assert c.to_dict()["orbit_count"] == 1


def test_orbit_certificate_disjoint_pairs():
    gens = collineation_generators(5, 2)
    lines = all_subspaces(5, 2, 1)
    pairs = [(a, b) for a in lines for b in lines if not a.mask & b.mask]
    assert len(pairs) == 651 * 560
    c = orbit_certificate(gens, pairs, 1)
    assert c.orbit_sizes == (364560,) and c.holds


def test_orbit_certificate_edge_cases():
    gens = collineation_generators(5, 2)
    c = orbit_certificate(gens, [], 0)
    assert (c.objects, c.orbit_sizes, c.transversal) == (0, (), ())
    lines = all_subspaces(5, 2, 1)
    with pytest.raises(ValueError):
        orbit_certificate(gens, lines[:10])
    with pytest.raises(BudgetExceeded):
        orbit_certificate(gens, lines, budget=50)
    planes = all_subspaces(3, 2, 2)
    two = orbit_certificate(collineation_generators(3, 2), list(all_subspaces(3, 2, 0)) + list(planes), 1)
    assert sorted(two.orbit_sizes) == [15, 15] and not two.holds


@pytest.mark.parametrize("n,q,k", [(2, 2, 4), (2, 3, 4), (3, 2, 3)])
def test_prefix_certificates_hold(n, q, k):
    certs = prefix_certificates(n, q, k)
    assert len(certs) == k
    for j, c in enumerate(certs):
        assert c.holds and c.orbit_sizes == (admissible_count(n, q, j),)


def test_admissible_counts_match_pools():
    for n, q in [(2, 2), (2, 3)]:
        for k in range(4):
            assert len(candidate_pool(n, q, k)) == admissible_count(n, q, k)


def test_reduction_cross_check():
    r = reduction_cross_check(2, 2)
    assert r["certified"] and r["agrees"]
    assert r["reduced"] * r["ordered_pairs"] == 6 * r["raw"]


def test_fix_first_two_triples_match_direct_scan():
    e = enumerate_pseudo_arcs(SearchSpec(2, 2, 3, "fix-first-two"))
    K1, K2 = frame_elements(2, 2)[:2]
    full = full_space(5, 2)
    direct = [L for L in all_subspaces(5, 2, 1) if span(K1, K2, L) == full]
    assert sorted(K[2] for K in e.arcs) == sorted(direct)
    assert all(K.elements[:2] == (K1, K2) for K in e.arcs)
    assert e.report.exhaustive and e.report.found == len(direct)


def test_rank_and_bitset_prefilters_agree():
    for size, mode in [(3, "fix-first-two"), (4, "frame"), (5, "frame")]:
        a = enumerate_pseudo_arcs(SearchSpec(2, 2, size, mode))
        b = enumerate_pseudo_arcs(SearchSpec(2, 2, size, mode, prefilter="rank"))
        assert a.arcs == b.arcs and a.report.found == b.report.found


def test_pseudo_ovals_of_pg52():
    e = enumerate_pseudo_arcs(SearchSpec(2, 2, 5, "frame"))
    assert e.report.exhaustive and e.arcs
    assert all(_spans_by_rank(K) for K in e.arcs)
    assert all(is_pseudo_conic(K)[0] for K in e.arcs)


def test_frame_enumeration_meets_every_image():
    """A random image of the pseudo-conic, normalised to the frame, lands in an enumerated orbit."""
    e = enumerate_pseudo_arcs(SearchSpec(2, 2, 5, "frame"))
    pool = candidate_pool(2, 2, 4)
    rep = orbit_partition(prefix_stabilizer(2, 2, 4), pool)
    index = {S: i for i, S in enumerate(pool)}
    found = {rep[index[K[4]]] for K in e.arcs}
    rng = random.Random(8)
    C = canonical_pseudo_conic(2, 2)
    for _ in range(5):
        K = apply_to_arc(random_collineation(rng, 5, 2), C)
        order = list(range(5))
        rng.shuffle(order)
        els = [K[i] for i in order]
        f = frame_collineation(*els[:4])
        img = [apply_collineation(f, E) for E in els]
        assert img[:4] == frame_elements(2, 2)
        assert rep[index[img[4]]] in found


def test_emitted_arcs_pass_independent_scan():
    for spec in [SearchSpec(2, 2, 4, "fix-first-two"), SearchSpec(2, 3, 5, "frame")]:
        e = enumerate_pseudo_arcs(spec)
        assert e.arcs and all(_spans_by_rank(K) for K in e.arcs)
        assert len(set(K.elements for K in e.arcs)) == len(e.arcs)


def test_size_beyond_thas_bound_is_empty():
    e = enumerate_pseudo_arcs(SearchSpec(2, 3, 11, "fix-first-two"))
    assert e.arcs == [] and e.report.found == 0
    assert any("maximum" in n for n in e.report.notes)


def test_audit_224():
    r = audit_extendability(2, 2, 4)
    assert r.claim_holds and r.complete == 0 and r.found > 0
    assert r.extendable == r.found and r.consistent
    assert r.certificates and all(c["holds"] for c in r.certificates)
    assert r.verdict.startswith("complete-count 0")
    assert audit_extendability(2, 2, 4, symmetry="frame").claim_holds


def test_audit_239():
    r = audit_extendability(2, 3, 9)
    assert r.claim_holds and r.complete == 0 and r.found > 0


def test_small_audits_beyond_the_headline():
    for size in (3, 5):
        r = audit_extendability(2, 2, size)
        assert r.claim_holds and r.found > 0
        assert "not one of the headline audits" in r.notes


def test_budget_makes_audit_non_exhaustive(monkeypatch):
    r = audit_extendability(3, 2, 8, budget=50)
    assert not r.exhaustive and not r.claim_holds
    assert r.complete == 0 and r.verdict.endswith("non-exhaustive")
    monkeypatch.setenv(BUDGET_ENV, "500")
    assert not audit_extendability(2, 3, 9).exhaustive


def test_certificate_budget_falls_back_to_raw():
    e = enumerate_pseudo_arcs(SearchSpec(2, 2, 3, "fix-first-two"), collect=False, cert_budget=10)
    assert e.report.symmetry == "none"
    assert any("falling back" in n for n in e.report.notes)


def test_shards_agree():
    one = audit_extendability(2, 3, 9)
    three = audit_extendability(2, 3, 9, shards=3)
    par = audit_extendability(2, 3, 9, shards=2, parallel=True)
    for r in (three, par):
        assert (r.found, r.extendable, r.complete, r.nodes) == (one.found, one.extendable, one.complete, one.nodes)
        assert r.claim_holds


def test_checkpoint_resume(tmp_path):
    full = audit_extendability(2, 3, 9, shards=2)
    partial = audit_extendability(2, 3, 9, shards=2, budget=300, checkpoint_dir=tmp_path)
    assert not partial.exhaustive
    spec = SearchSpec(2, 3, 9, "frame", shards=2)
    cks = [Checkpoint.from_text(checkpoint_path(tmp_path, spec, s).read_text()) for s in range(2)]
    assert all(ck.digest == spec.digest() and not ck.done for ck in cks)
    resumed = audit_extendability(2, 3, 9, shards=2, checkpoint_dir=tmp_path)
    assert resumed.exhaustive
    assert (resumed.found, resumed.extendable, resumed.complete) == (full.found, full.extendable, full.complete)
    cks = [Checkpoint.from_text(checkpoint_path(tmp_path, spec, s).read_text()) for s in range(2)]
    assert all(ck.done for ck in cks)
    # A finished checkpoint answers without further work.
    again = audit_extendability(2, 3, 9, shards=2, checkpoint_dir=tmp_path)
    assert (again.found, again.nodes) == (resumed.found, resumed.nodes)


def test_checkpoint_text_round_trip():
    ck = Checkpoint("abc", 1, 3, 7, False)
    assert Checkpoint.from_text(ck.to_text()).to_text() == ck.to_text()
    with pytest.raises(ValueError):
        Checkpoint.from_text("garbage\n")


def test_determinism():
    spec = SearchSpec(2, 2, 4, "fix-first-two", shards=2)
    a, b = enumerate_pseudo_arcs(spec), enumerate_pseudo_arcs(spec)
    assert a.arcs == b.arcs
    r1, r2 = audit_extendability(2, 2, 4), audit_extendability(2, 2, 4)
    assert r1.to_json(timing=False) == r2.to_json(timing=False)
    assert json.loads(r1.to_json())["claim_holds"] is True


def test_spec_validation():
    with pytest.raises(ValueError):
        SearchSpec(2, 2, 4, "orbital")
    with pytest.raises(ValueError):
        SearchSpec(2, 2, 4, prefilter="magic")
    with pytest.raises(ValueError):
        SearchSpec(2, 2, 0)
    assert SearchSpec(2, 2, 4).digest() == SearchSpec(2, 2, 4, budget=5).digest()
    assert SearchSpec(2, 2, 4).digest() != SearchSpec(2, 2, 4, shards=2).digest()


def test_pseudo_oval_extensions_of_pseudo_conic_minus_one():
    C = canonical_pseudo_conic(2, 2)
    exts = pseudo_oval_extensions(C.without(0))
    # q even: K lies in a pseudo-hyperoval, so in exactly two pseudo-ovals.
    assert len(exts) == 2 and C.as_set() in {E.as_set() for E in exts}
    assert len(set().union(*(E.as_set() for E in exts))) == 6


def test_main_theorem_pseudo_conic_minus_one():
    C = canonical_pseudo_conic(2, 3)
    for i in (0, 5):
        r = main_theorem_pipeline(C.without(3), i)
        assert r.hypothesis and r.unique and r.conclusion
        assert r.extensions[0].as_set() == C.as_set()
        assert r.pseudo_conic == [True] and r.witnesses[0] is not None
        assert r.oa_route["oa_verified"] and r.oa_route["oa_rows"] == 9


def test_main_theorem_equivariance():
    C = canonical_pseudo_conic(2, 3)
    g = random_collineation(random.Random(21), 5, 3)
    K = apply_to_arc(g, C.without(3))
    r = main_theorem_pipeline(K, 2, oa_route=False)
    assert r.conclusion and r.unique
    assert r.extensions[0].as_set() == apply_to_arc(g, C).as_set()
    w = r.witnesses[0]
    assert {apply_collineation(w, E) for E in r.extensions[0]} == C.as_set()


def test_main_theorem_edge_cases():
    C = canonical_pseudo_conic(2, 3)
    r = main_theorem_pipeline(C)
    assert r.conclusion and "already" in r.notes[0]
    small = C.without(0).without(0).without(0)
    r = main_theorem_pipeline(small, 0)
    assert not r.conclusion and "precondition" in r.notes[0]
    with pytest.raises(PseudoArcError):
        main_theorem_pipeline(canonical_pseudo_conic(2, 2).without(0))
    arc11 = canonical_pseudo_conic(1, 11).without(0)
    with pytest.raises(PseudoArcError):
        main_theorem_pipeline(arc11)
