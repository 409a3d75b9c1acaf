"""Time series extraction, FD widths, and the three aspect models."""
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import oracle_fd_width
from tempoprune.aspects import (
    Aspect,
    AspectSet,
    TermTimeSeries,
    build_aspect_sets,
    component_window,
    doc_aspect_map,
    dynamic_windows,
    fd_window_size,
    index_time_hull,
    round_half_up,
    simple_windows,
    sliding_windows,
    smooth,
    term_time_series,
)
from tempoprune.corpus import Corpus, Document
from tempoprune.errors import PruneError, TermNotFoundError
from tempoprune.index import build_index
from tempoprune.timewindows import TimeWindow, intersect


def test_round_half_up():
    assert round_half_up(0.5) == 1
    assert round_half_up(1.49) == 1
    assert round_half_up(-0.5) == 0
    assert round_half_up(-0.51) == -1


# --- time series -------------------------------------------------------------


def _dated(doc_id, tokens, day):
    return Document(doc_id, tokens, frozenset({TimeWindow.instant(day)}))


def test_series_single_doc():
    idx = build_index(Corpus(documents=[_dated("d1", ["x", "x", "x"], 100)]))
    assert term_time_series(idx, "x").counts == {100: 3}


def test_series_sums_same_day():
    idx = build_index(
        Corpus(documents=[_dated("d1", ["x"], 40), _dated("d2", ["x", "x", "y"], 40)])
    )
    assert term_time_series(idx, "x").counts == {40: 3}
    assert term_time_series(idx, "x", presence_only=True).counts == {40: 2}


def test_series_one_contribution_per_window():
    doc = Document(
        "d1",
        ["x", "x"],
        frozenset({TimeWindow.certain(0, 10), TimeWindow.certain(100, 110)}),
    )
    idx = build_index(Corpus(documents=[doc]))
    # midpoints of [0,10] and [100,110]
    assert term_time_series(idx, "x").counts == {5: 2, 105: 2}


def test_series_skips_undated_docs():
    idx = build_index(
        Corpus(documents=[_dated("d1", ["x"], 7), Document("d2", ["x"])])
    )
    series = term_time_series(idx, "x")
    assert series.counts == {7: 1}
    assert series.n_points == 1


def test_series_unknown_term():
    idx = build_index(Corpus(documents=[_dated("d1", ["x"], 0)]))
    with pytest.raises(TermNotFoundError):
        term_time_series(idx, "zzz")


def test_series_matches_corpus_recount(rand_corpus, rand_index):
    term = "disaster"
    expected: dict[int, int] = {}
    for doc in rand_corpus.documents:
        tf = doc.tokens.count(term)
        if tf == 0:
            continue
        for w in doc.time_part:
            expected[w.midpoint] = expected.get(w.midpoint, 0) + tf
    assert term_time_series(rand_index, term).counts == expected


def test_series_span():
    series = TermTimeSeries(term="t", counts={5: 1, 30: 2})
    assert series.span == (5, 30)
    assert series.n_points == 3
    with pytest.raises(ValueError):
        TermTimeSeries(term="t", counts={}).span


# --- Freedman-Diaconis -------------------------------------------------------


def test_fd_four_consecutive_days():
    series = TermTimeSeries(term="t", counts={0: 1, 1: 1, 2: 1, 3: 1})
    # IQR = 2 under averaged-inverted-CDF quartiles; ceil(2*2*4^(-1/3)) = 3
    assert fd_window_size(series) == 3


def test_fd_single_day_fallback():
    assert fd_window_size(TermTimeSeries(term="t", counts={42: 17})) == 1


def test_fd_uniform_sample_matches_oracle():
    rng = np.random.default_rng(123)
    days = rng.integers(0, 100, size=1000)
    counts: dict[int, int] = {}
    for d in days:
        counts[int(d)] = counts.get(int(d), 0) + 1
    series = TermTimeSeries(term="t", counts=counts)
    assert fd_window_size(series) == oracle_fd_width(days.tolist())


@given(st.lists(st.integers(-500, 500), min_size=1, max_size=60))
def test_fd_matches_oracle(days):
    counts: dict[int, int] = {}
    for d in days:
        counts[d] = counts.get(d, 0) + 1
    series = TermTimeSeries(term="t", counts=counts)
    got = fd_window_size(series)
    assert got == oracle_fd_width(days)
    assert got >= 1


# --- tiled aspect models -----------------------------------------------------


def test_simple_windows_drops_empty_tiles():
    series = TermTimeSeries(term="t", counts={0: 1, 1: 1, 9: 1})
    aset = simple_windows(series, 5)
    assert [a.window for a in aset.aspects] == [
        TimeWindow.certain(0, 4),
        TimeWindow.certain(5, 9),
    ]
    assert [a.weight for a in aset.aspects] == [0.5, 0.5]
    assert aset.kind == "simple"


def test_simple_windows_single_day():
    aset = simple_windows(TermTimeSeries(term="t", counts={7: 3}), 10)
    assert len(aset.aspects) == 1
    assert aset.aspects[0].weight == 1.0


def test_sliding_windows_half_overlap():
    series = TermTimeSeries(term="t", counts={d: 1 for d in range(10)})
    aset = sliding_windows(series, 4)
    assert [a.window.b_lo for a in aset.aspects] == [0, 2, 4, 6, 8]
    for day in range(10):
        covering = [a for a in aset.aspects if a.window.b_lo <= day <= a.window.e_hi]
        assert 1 <= len(covering) <= 2


def test_sliding_gamma_one_degenerates_to_unit_tiles():
    series = TermTimeSeries(term="t", counts={0: 1, 1: 1, 2: 1})
    aset = sliding_windows(series, 1)
    assert [a.window for a in aset.aspects] == [TimeWindow.instant(d) for d in range(3)]


@given(
    st.dictionaries(st.integers(0, 200), st.integers(1, 5), min_size=1, max_size=40),
    st.integers(1, 30),
)
def test_simple_tiling_properties(counts, gamma):
    series = TermTimeSeries(term="t", counts=counts)
    aset = simple_windows(series, gamma)
    lo = min(counts)
    assert aset.weight_sum() == pytest.approx(1.0)
    for a in aset.aspects:
        s = a.window.b_lo
        assert (s - lo) % gamma == 0
        assert a.window.e_hi == s + gamma - 1
        assert any(s <= d <= s + gamma - 1 for d in counts)
    # each day with mass lies in exactly one tile
    for day in counts:
        hits = [a for a in aset.aspects if a.window.b_lo <= day <= a.window.e_hi]
        assert len(hits) == 1


@given(
    st.dictionaries(st.integers(0, 200), st.integers(1, 5), min_size=1, max_size=40),
    st.integers(1, 30),
)
def test_sliding_tiling_properties(counts, gamma):
    series = TermTimeSeries(term="t", counts=counts)
    aset = sliding_windows(series, gamma)
    step = max(1, gamma // 2)
    assert aset.weight_sum() == pytest.approx(1.0)
    for a in aset.aspects:
        assert (a.window.b_lo - min(counts)) % step == 0
    for day in counts:
        hits = [a for a in aset.aspects if a.window.b_lo <= day <= a.window.e_hi]
        assert 1 <= len(hits) <= max(1, (gamma + step - 1) // step)


def test_tiled_windows_reject_bad_gamma():
    series = TermTimeSeries(term="t", counts={0: 1})
    with pytest.raises(ValueError):
        simple_windows(series, 0)
    with pytest.raises(ValueError):
        sliding_windows(series, 0)


# --- dynamic aspects ---------------------------------------------------------


def test_component_window():
    assert component_window(50.0, 10.0) == TimeWindow.certain(40, 60)
    assert component_window(10.2, 0.4) == TimeWindow.certain(10, 11)


def test_dynamic_single_spike():
    series = TermTimeSeries(term="t", counts={50: 30})
    aset = dynamic_windows(series, k_max=3, seed=0)
    assert len(aset.aspects) == 1
    assert aset.aspects[0].weight == pytest.approx(1.0)
    assert aset.aspects[0].center == pytest.approx(50.0)
    assert aset.kind == "dynamic"


def test_dynamic_weights_match_mixture():
    from tempoprune.gmm import select_k_bic

    rng = np.random.default_rng(5)
    days = np.concatenate(
        [rng.normal(100, 3, 300), rng.normal(400, 3, 200)]
    ).round().astype(int)
    counts: dict[int, int] = {}
    for d in days:
        counts[int(d)] = counts.get(int(d), 0) + 1
    series = TermTimeSeries(term="t", counts=counts)
    fit = select_k_bic(series, k_max=5, seed=9)
    aset = dynamic_windows(series, k_max=5, seed=9)
    assert len(aset.aspects) == fit.k == 2
    for a, pi in zip(aset.aspects, fit.weights):
        assert a.weight == pytest.approx(float(pi), abs=1e-6)
    assert aset.weight_sum() == pytest.approx(1.0, abs=1e-9)


# --- smoothing ---------------------------------------------------------------


def _two_aspect_set():
    return AspectSet(
        term="t",
        aspects=[
            Aspect(window=TimeWindow.certain(0, 9), weight=0.5),
            Aspect(window=TimeWindow.certain(10, 19), weight=0.5),
        ],
        doc_map={"d1": (0,), "d2": (1,)},
        kind="simple",
        span=(0, 19),
    )


def test_smooth_arithmetic():
    smoothed = smooth(_two_aspect_set(), 0.3)
    weights = [a.weight for a in smoothed.aspects]
    assert weights == pytest.approx([0.35, 0.35, 0.3])
    assert smoothed.aspects[-1].is_global
    assert smoothed.aspects[-1].window == TimeWindow.certain(0, 19)
    assert smoothed.global_index == 2
    assert smoothed.doc_map == {"d1": (0, 2), "d2": (1, 2)}
    assert smoothed.weight_sum() == pytest.approx(1.0, abs=1e-9)


def test_smooth_zero_is_noop():
    aset = _two_aspect_set()
    assert smooth(aset, 0.0) is aset


def test_smooth_validation():
    with pytest.raises(ValueError):
        smooth(_two_aspect_set(), 1.0)
    with pytest.raises(ValueError):
        smooth(_two_aspect_set(), -0.1)
    with pytest.raises(ValueError):
        smooth(smooth(_two_aspect_set(), 0.3), 0.3)  # already smoothed


@given(st.floats(0.01, 0.99))
def test_smooth_weight_sum_invariant(lam):
    smoothed = smooth(_two_aspect_set(), lam)
    assert smoothed.weight_sum() == pytest.approx(1.0, abs=1e-9)
    assert smoothed.aspects[-1].weight == pytest.approx(lam)


# --- document-to-aspect mapping ----------------------------------------------


def test_doc_map_simple_and_global():
    docs = [_dated("d1", ["x"], 3), _dated("d2", ["x"], 15)]
    idx = build_index(Corpus(documents=docs))
    aset = smooth(_two_aspect_set(), 0.3)
    mapped = doc_aspect_map(aset, idx, "x")
    assert mapped.doc_map == {"d1": (0, 2), "d2": (1, 2)}


def test_doc_map_doc_spanning_two_windows():
    doc = Document("d1", ["x"], frozenset({TimeWindow.certain(8, 12)}))
    idx = build_index(Corpus(documents=[doc]))
    mapped = doc_aspect_map(_two_aspect_set(), idx, "x")
    assert mapped.doc_map == {"d1": (0, 1)}


def test_doc_map_dynamic_nearest_center_fallback():
    aset = AspectSet(
        term="x",
        aspects=[
            Aspect(window=TimeWindow.certain(40, 60), weight=0.5, center=50.0),
            Aspect(window=TimeWindow.certain(90, 110), weight=0.5, center=100.0),
        ],
        kind="dynamic",
        span=(40, 110),
    )
    idx = build_index(Corpus(documents=[_dated("d1", ["x"], 200)]))
    mapped = doc_aspect_map(aset, idx, "x")
    assert mapped.doc_map == {"d1": (1,)}  # closer to mean 100 than to 50


def test_doc_map_undated_doc_gets_only_global():
    idx = build_index(Corpus(documents=[Document("d1", ["x"])]))
    aset = smooth(_two_aspect_set(), 0.3)
    mapped = doc_aspect_map(aset, idx, "x")
    assert mapped.doc_map == {"d1": (2,)}


def test_doc_map_matches_brute_force(rand_index):
    aspect_sets = build_aspect_sets(rand_index, model="sliding", lambda_w=0.3)
    for term in list(rand_index.terms())[:40]:
        aset = aspect_sets[term]
        gi = aset.global_index
        for p in rand_index.lists[term].postings:
            windows = rand_index.doc_times.get(p.doc_id, frozenset())
            expected = {
                i
                for i, a in enumerate(aset.aspects)
                if not a.is_global
                and any(intersect(a.window, w) is not None for w in windows)
            }
            if gi is not None:
                expected.add(gi)
            assert aset.doc_map[p.doc_id] == tuple(sorted(expected))


# --- whole-index construction ------------------------------------------------


def test_build_aspect_sets_covers_every_term(rand_index):
    sets = build_aspect_sets(rand_index, model="simple")
    assert sorted(sets) == rand_index.terms()
    for term, aset in sets.items():
        assert aset.weight_sum() == pytest.approx(1.0, abs=1e-9)
        for p in rand_index.lists[term].postings:
            assert p.doc_id in aset.doc_map
            assert aset.doc_map[p.doc_id]


def test_build_aspect_sets_mapped_docs_intersect_windows(rand_index):
    sets = build_aspect_sets(rand_index, model="simple")
    for term, aset in sets.items():
        for p in rand_index.lists[term].postings:
            windows = rand_index.doc_times.get(p.doc_id, frozenset())
            for i in aset.doc_map[p.doc_id]:
                a = aset.aspects[i]
                if a.is_global:
                    continue
                assert any(intersect(a.window, w) is not None for w in windows)


def test_build_aspect_sets_undated_term_goes_global():
    docs = [_dated("d1", ["x"], 10), Document("d2", ["y"]), Document("d3", ["y"])]
    idx = build_index(Corpus(documents=docs))
    sets = build_aspect_sets(idx, model="simple")
    aset = sets["y"]
    assert aset.kind == "global"
    assert len(aset.aspects) == 1
    assert aset.aspects[0].is_global
    assert aset.aspects[0].weight == 1.0
    assert aset.doc_map == {"d2": (0,), "d3": (0,)}


def test_build_aspect_sets_rejects_unknown_model(rand_index):
    with pytest.raises(PruneError):
        build_aspect_sets(rand_index, model="fourier")


def test_build_aspect_sets_threaded_matches_serial(rand_index):
    serial = build_aspect_sets(rand_index, model="dynamic", seed=4, k_max=3)
    threaded = build_aspect_sets(rand_index, model="dynamic", seed=4, k_max=3, threads=4)
    assert serial.keys() == threaded.keys()
    for term in serial:
        a, b = serial[term], threaded[term]
        assert a.doc_map == b.doc_map
        assert [x.window for x in a.aspects] == [x.window for x in b.aspects]
        assert [x.weight for x in a.aspects] == pytest.approx([x.weight for x in b.aspects])


def test_index_time_hull(toy5_index):
    assert index_time_hull(toy5_index) == (100, 500)
