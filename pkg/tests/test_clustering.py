import io
import math
import random

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import squareform
from sklearn.metrics import adjusted_rand_score

import oracles
from netmap.clustering import (
    AffiliationMatrix,
    Grouping,
    HacParams,
    Linkage,
    Segment,
    adjusted_rand_index,
    build_affiliation,
    diagnostics_report,
    format_grouping,
    format_segments,
    group_segments,
    hac_cluster,
    load_assignment,
    load_grouping,
    load_segments,
    partition_labels,
    run_hac,
    similarity,
    similarity_matrix,
)
from netmap.errors import AssignmentError
from netmap.graph import InteractionGraph

# 10 accounts x 30 entities, written out by hand
HAND = """
a0 111111000000000000000000000000
a1 111110000000000000000000000001
a2 000001111100000000000000000000
a3 000000111110000000000000000000
a4 000000000011111000000000000000
a5 000000000000000000000000000000
a6 100000000000000111110000000000
a7 000000000000000000001111100000
a8 010101010101010101010101010101
a9 000000000000000000000000011111
"""


def hand_fixture():
    rows = {}
    for line in HAND.strip().splitlines():
        name, bits = line.split()
        rows[name] = bits
    entities = [f"e{j:02d}" for j in range(30)]
    edges = [(a, entities[j]) for a, bits in rows.items() for j, b in enumerate(bits) if b == "1"]
    g = InteractionGraph.from_pairs(edges, nodes=rows)
    return rows, entities, g


def matrix_from_sets(rows):
    g = InteractionGraph.from_pairs([(a, e) for a, es in rows.items() for e in es], nodes=rows)
    return build_affiliation(g, rows, "follow")


def partition(segments):
    return {s.members for s in segments}


# -- affiliation -------------------------------------------------------------


def test_hand_built_incidence():
    rows, entities, g = hand_fixture()
    m = build_affiliation(g, rows, "follow")
    used = [e for j, e in enumerate(entities) if any(bits[j] == "1" for bits in rows.values())]
    assert list(m.cols) == used
    want = np.array([[int(rows[a][entities.index(e)]) for e in used] for a in sorted(rows)])
    assert (m.dense() == want).all()
    assert m.empty_rows == ("a5",)


def test_entities_outside_the_map_count():
    g = InteractionGraph.from_pairs([("a", "outside"), ("b", "outside"), ("a", "b")])
    m = build_affiliation(g, {"a", "b"}, "follow")
    assert m.cols == ("b", "outside")


def test_identical_rows_and_empty_input():
    m = matrix_from_sets({"x": {"p", "q"}, "y": {"p", "q"}})
    assert (m.dense()[0] == m.dense()[1]).all()
    with pytest.raises(ValueError):
        build_affiliation(InteractionGraph(), [], "follow")


def test_no_all_zero_columns():
    rows, _, g = hand_fixture()
    m = build_affiliation(g, rows, "follow")
    assert (m.dense().sum(axis=0) > 0).all()


# -- similarity --------------------------------------------------------------


def test_similarity_examples():
    m = matrix_from_sets({"a": {"x", "y"}, "b": {"x", "y"}, "c": {"z"}, "d": {"y", "z"}, "e": set()})
    assert similarity(m, "a", "b") == 1.0
    assert similarity(m, "a", "c") == 0.0
    assert similarity(m, "a", "e") == 0.0
    # rows (1,1,0) and (0,1,1)
    assert similarity(m, "a", "d") == pytest.approx(0.5, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.dictionaries(st.sampled_from("abcdefgh"), st.sets(st.sampled_from("pqrstuvw")), min_size=1))
def test_similarity_properties(rows):
    m = matrix_from_sets(rows)
    s = similarity_matrix(m)
    assert (s == s.T).all()
    assert (s >= 0).all() and (s <= 1).all()
    for i, a in enumerate(m.rows):
        if rows[a]:
            assert s[i, i] == 1.0
        for j, b in enumerate(m.rows):
            assert s[i, j] == similarity(m, a, b)


# -- HAC ---------------------------------------------------------------------


def test_single_row():
    m = matrix_from_sets({"only": {"x"}})
    assert partition(hac_cluster(m, HacParams(n_segments=1))) == {frozenset({"only"})}


def test_identical_rows_merge_first():
    rng = random.Random(1)
    rows = {f"r{i}": {f"e{rng.randrange(1000)}" for _ in range(6)} for i in range(8)}
    rows["twin1"] = rows["twin2"] = {"t1", "t2", "t3"}
    result = run_hac(matrix_from_sets(rows), HacParams(n_segments=1))
    first = result.merges[0]
    assert {first.left, first.right} == {"twin1", "twin2"}
    assert first.similarity == 1.0


def test_cut_target_larger_than_rows():
    with pytest.raises(ValueError):
        hac_cluster(matrix_from_sets({"a": {"x"}, "b": {"y"}}), HacParams(n_segments=3))


def test_params_need_exactly_one_cut():
    with pytest.raises(ValueError):
        HacParams()
    with pytest.raises(ValueError):
        HacParams(n_segments=3, threshold=0.5)


def test_empty_rows_become_residual():
    rows, _, g = hand_fixture()
    result = run_hac(build_affiliation(g, rows, "follow"), HacParams(n_segments=4))
    assert len(result.segments) == 4
    assert result.segments[-1].label == "Other"
    assert result.segments[-1].members == {"a5"}


def test_threshold_cut():
    m = matrix_from_sets({"a": {"x", "y"}, "b": {"x", "y"}, "c": {"z"}, "d": {"z", "w"}})
    segs = hac_cluster(m, HacParams(threshold=0.9))
    assert partition(segs) == {frozenset("ab"), frozenset("c"), frozenset("d")}


@pytest.mark.parametrize("method", list(Linkage))
@pytest.mark.parametrize("seed", range(4))
def test_matches_scipy_linkage(method, seed):
    rng = np.random.default_rng(seed)
    dense = (rng.random((40, 300)) < 0.15).astype(np.int8)
    dense[dense.sum(axis=1) == 0, 0] = 1
    rows = tuple(f"r{i:02d}" for i in range(40))
    m = AffiliationMatrix(rows, tuple(f"c{j}" for j in range(300)), sp.csr_matrix(dense))
    dist = 1.0 - similarity_matrix(m)
    np.fill_diagonal(dist, 0.0)
    z = linkage(squareform(dist, checks=False), method=method.value)
    want = fcluster(z, t=6, criterion="maxclust")
    got = partition_labels(hac_cluster(m, HacParams(method, n_segments=6)), rows)
    assert adjusted_rand_score(want, got) == 1.0


def test_planted_partition_recovery():
    rows, truth = oracles.planted_affiliation(0)
    order = sorted(rows)
    got = partition_labels(hac_cluster(matrix_from_sets(rows), HacParams(n_segments=3)), order)
    assert adjusted_rand_score([truth[a] for a in order], got) >= 0.9


@pytest.mark.parametrize("seed", range(5))
def test_row_permutation_only_relabels(seed):
    rows, _ = oracles.planted_affiliation(seed, size=12, p_in=0.5, p_out=0.2)
    m = matrix_from_sets(rows)
    perm = np.random.default_rng(seed).permutation(len(m.rows))
    shuffled = AffiliationMatrix(tuple(m.rows[i] for i in perm), m.cols, m.cells[perm], m.relation)
    params = HacParams(n_segments=5)
    assert partition(hac_cluster(shuffled, params)) == partition(hac_cluster(m, params))


def test_ties_follow_member_order():
    # four equidistant pairs: the pair with the smallest ids merges first
    m = matrix_from_sets({"d": {"x"}, "c": {"x"}, "b": {"y"}, "a": {"y"}})
    merges = run_hac(m, HacParams(n_segments=1)).merges
    assert (merges[0].left, merges[0].right) == ("a", "b")


def test_deterministic_and_partition():
    rows, _ = oracles.planted_affiliation(9, size=15)
    m = matrix_from_sets(rows)
    a = hac_cluster(m, HacParams(n_segments=7))
    b = hac_cluster(m, HacParams(n_segments=7))
    assert a == b
    members = [x for s in a for x in s.members]
    assert len(members) == len(set(members)) == len(rows)


def test_own_ari_matches_sklearn():
    rng = random.Random(0)
    for _ in range(50):
        n = rng.randint(2, 40)
        x = [rng.randrange(4) for _ in range(n)]
        y = [rng.randrange(5) for _ in range(n)]
        assert math.isclose(adjusted_rand_index(x, y), adjusted_rand_score(x, y), abs_tol=1e-12)


def test_diagnostics_lists_empty_rows():
    rows, _, g = hand_fixture()
    m = build_affiliation(g, rows, "follow")
    result = run_hac(m, HacParams(n_segments=3))
    report = diagnostics_report(m, result, HacParams(n_segments=3))
    assert report["empty_rows"] == ["a5"]
    assert len(report["merges"]) == len(result.merges)


# -- groups ------------------------------------------------------------------


def fixture_45():
    """45 segments in 8 groups whose sizes add up to the audience table."""
    group_sizes = {
        "Conservative Politics": 1637, "Euro-Right": 398, "Government and Public Policy": 1168,
        "International Conspiracy Theory": 1364, "Liberal Politics": 840, "Other": 3355,
        "Russia Focused": 1545, "Veterans & Military": 2106,
    }
    per_group = [6, 3, 5, 6, 4, 9, 6, 6]
    segments, assignment, sid = [], {}, 0
    rng = random.Random(45)
    for (label, size), k in zip(group_sizes.items(), per_group):
        cuts = sorted(rng.sample(range(1, size), k - 1))
        bounds = [0, *cuts, size]
        for lo, hi in zip(bounds, bounds[1:]):
            segments.append(Segment(sid, frozenset(f"{label[:3]}{i}" for i in range(lo, hi))))
            assignment[sid] = label
            sid += 1
    return segments, assignment, group_sizes


def test_45_segments_into_8_groups():
    segments, assignment, sizes = fixture_45()
    assert len(segments) == 45
    grouping = group_segments(segments, assignment)
    assert len(grouping.groups) == 8
    for label, ids in grouping.groups:
        assert grouping.sizes()[label] == sum(len(s.members) for s in segments if s.id in ids) == sizes[label]
    assert grouping.population == 12_413


def test_all_segments_one_group():
    segs = [Segment(i, frozenset({f"a{i}"})) for i in range(4)]
    grouping = group_segments(segs, {i: "everyone" for i in range(4)})
    assert grouping.groups == (("everyone", frozenset(range(4))),)


def test_assignment_errors_are_exhaustive():
    segs = [Segment(i, frozenset({f"a{i}"})) for i in range(4)]
    with pytest.raises(AssignmentError) as exc:
        group_segments(segs, [(0, "x"), (0, "y"), (1, "x"), (9, "z")])
    err = exc.value
    assert err.missing == [2, 3] and err.duplicate == [0] and err.unknown == [9]
    assert "9" in str(err)


def test_load_assignment():
    pairs = load_assignment(io.StringIO("# id\tlabel\n0\tLeft\n1\tRight wing\n"))
    assert pairs == [(0, "Left"), (1, "Right wing")]


def test_grouping_round_trip():
    segments, assignment, _ = fixture_45()
    grouping = group_segments(segments[:10], {i: assignment[i] for i in range(10)})
    again = load_grouping(io.StringIO(format_grouping(grouping)))
    assert again.groups == grouping.groups
    assert again.group_of == grouping.group_of
    segs = load_segments(io.StringIO(format_segments(segments[:10])))
    assert segs == sorted(segments[:10], key=lambda s: s.id)


def test_grouping_rejects_overlap():
    with pytest.raises(ValueError):
        Grouping((Segment(0, frozenset("ab")), Segment(1, frozenset("bc"))), (("g", frozenset({0, 1})),))
