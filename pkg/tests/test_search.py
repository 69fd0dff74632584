import json

import numpy as np
import pytest

from antisparse_ann.lib.embedding.binary_code import BinaryCode, pack_bits, unpack_bits
from antisparse_ann.lib.embedding.encoder import EmbeddingMethod, PreBinarizedQuery, encode_dataset
from antisparse_ann.lib.errors.errors import ContainerFormatError, DimensionError, MatrixMismatchError
from antisparse_ann.lib.frames.projection import make_uniform_frame
from antisparse_ann.lib.index_search import search as search_module
from antisparse_ann.lib.index_search.binary_index import BinaryIndex, build_index, index_from_words, sidecar_path
from antisparse_ann.lib.index_search.search import (
    ScoredList,
    SearchMode,
    build_luts,
    rank_top,
    reconstruct_codes,
    rerank_reconstruction,
    search_asymmetric,
    search_hamming,
)
from tests import oracles


def _codes(*rows):
    return [BinaryCode.from_signs(np.array(r)) for r in rows]


def _random_index(seed, n, m, matrix_ref=""):
    signs = np.where(np.random.default_rng(seed).random((n, m)) < 0.5, -1, 1)
    return signs, index_from_words(pack_bits(signs), m, matrix_ref)


def test_hamming_two_codes():
    index = build_index(_codes([1, 1], [1, -1]), "")
    result = search_hamming(index, BinaryCode.from_signs(np.array([1, -1])), 2)
    assert result.entries == [(1, 2.0), (0, 0.0)]
    assert result.mode is SearchMode.SYMMETRIC_HAMMING


def test_single_code_index():
    index = build_index(_codes([1, -1, 1]), "")
    assert index.n == 1
    assert search_hamming(index, index.code(0), 1).entries == [(0, 3.0)]


def test_identical_code_ranks_first():
    signs, index = _random_index(1, 200, 64)
    result = search_hamming(index, index.code(17), 5)
    assert result.ids[0] == 17
    assert result.scores[0] == 64.0


def test_ties_break_by_ascending_id():
    index = build_index(_codes([1, 1], [-1, -1], [1, 1], [1, 1]), "")
    result = search_hamming(index, BinaryCode.from_signs(np.array([1, 1])), 4)
    assert list(result.ids) == [0, 2, 3, 1]


def test_lut_all_ones():
    luts = build_luts(PreBinarizedQuery(np.ones(8)))
    popcounts = np.array([bin(t).count("1") for t in range(256)])
    np.testing.assert_allclose(luts.tables[0], popcounts * 2 - 8)


def test_lut_single_bit():
    table = build_luts(PreBinarizedQuery(np.array([0.5]))).tables[0]
    assert table[0] == -0.5
    assert table[1] == 0.5


def test_asymmetric_two_codes():
    index = build_index(_codes([1, -1], [1, 1]), "")
    result = search_asymmetric(index, PreBinarizedQuery(np.array([0.5, 1.0])), 2)
    assert result.entries == [(1, 1.5), (0, -0.5)]


def test_saturated_query_matches_hamming():
    signs, index = _random_index(2, 300, 48)
    q = np.where(np.random.default_rng(9).random(48) < 0.5, -1.0, 1.0)
    asym = search_asymmetric(index, PreBinarizedQuery(q), 20)
    ham = search_hamming(index, BinaryCode.from_signs(q), 20)
    np.testing.assert_array_equal(asym.ids, ham.ids)
    np.testing.assert_allclose(asym.scores, ham.scores)


@pytest.mark.parametrize("m", [16, 64, 128])
@pytest.mark.parametrize("seed", range(4))
def test_kernels_match_brute_force(m, seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(50, 1000))
    matrix = make_uniform_frame(8, m, seed)
    signs, index = _random_index(seed, n, m, matrix.ref)
    q_signs = np.where(rng.random(m) < 0.5, -1, 1)
    xdot = rng.uniform(-1, 1, m)
    ids = np.arange(n)

    ham = search_hamming(index, BinaryCode.from_signs(q_signs), 10)
    assert ham.entries == oracles.rank(oracles.hamming_scores(signs, q_signs), ids, 10)

    asym = search_asymmetric(index, PreBinarizedQuery(xdot), 30)
    expected = oracles.rank(oracles.asymmetric_scores(signs, xdot), ids, 30)
    assert [i for i, _ in asym.entries] == [i for i, _ in expected]
    np.testing.assert_allclose(asym.scores, [s for _, s in expected], atol=1e-9)

    q = rng.standard_normal(8)
    q /= np.linalg.norm(q)
    reranked = rerank_reconstruction(index, matrix, asym, q, 10)
    expected = oracles.rank(oracles.rerank_scores(matrix.entries, signs, asym.ids, q), asym.ids, 10)
    assert [i for i, _ in reranked.entries] == [i for i, _ in expected]
    np.testing.assert_allclose(reranked.scores, [s for _, s in expected], atol=1e-9)


def test_parallel_scan_equals_sequential(monkeypatch):
    signs, index = _random_index(3, 3000, 64)
    xdot = np.random.default_rng(4).uniform(-1, 1, 64)
    qcode = BinaryCode.from_signs(signs[0])
    monkeypatch.setenv("ASANN_THREADS", "1")
    sequential = (search_hamming(index, qcode, 50), search_asymmetric(index, PreBinarizedQuery(xdot), 50))
    monkeypatch.setattr(search_module, "PARALLEL_SCAN_MIN", 16)
    monkeypatch.setenv("ASANN_THREADS", "5")
    parallel = (search_hamming(index, qcode, 50), search_asymmetric(index, PreBinarizedQuery(xdot), 50))
    for a, b in zip(sequential, parallel):
        np.testing.assert_array_equal(a.ids, b.ids)
        np.testing.assert_array_equal(a.scores, b.scores)


def test_rank_top_keeps_ties_at_threshold():
    ids, scores = rank_top(np.arange(6), np.array([1.0, 3.0, 3.0, 2.0, 3.0, 0.0]), 2)
    assert list(ids) == [1, 2]
    assert list(scores) == [3.0, 3.0]


def test_rerank_shortlist_of_one():
    matrix = make_uniform_frame(4, 16, 0)
    signs, index = _random_index(5, 40, 16, matrix.ref)
    shortlist = ScoredList([7], [0.0], SearchMode.ASYMMETRIC)
    result = rerank_reconstruction(index, matrix, shortlist, np.ones(4) / 2, 1)
    assert list(result.ids) == [7]
    assert result.mode is SearchMode.RECONSTRUCTION_RERANK


def test_rerank_exact_reconstruction_ranks_first():
    matrix = make_uniform_frame(4, 16, 0)
    signs, index = _random_index(6, 40, 16, matrix.ref)
    unit, _ = reconstruct_codes(matrix, unpack_bits(index.codes[[12]], 16))
    shortlist = ScoredList(np.arange(40), np.zeros(40), SearchMode.ASYMMETRIC)
    result = rerank_reconstruction(index, matrix, shortlist, unit[0], 3)
    assert result.ids[0] == 12
    assert result.scores[0] == pytest.approx(0.0, abs=1e-12)


def test_rerank_checks_matrix():
    matrix = make_uniform_frame(4, 16, 0)
    other = make_uniform_frame(4, 16, 1)
    _, index = _random_index(7, 10, 16, matrix.ref)
    shortlist = ScoredList([0, 1], [0.0, 0.0], SearchMode.ASYMMETRIC)
    with pytest.raises(MatrixMismatchError):
        rerank_reconstruction(index, other, shortlist, np.ones(4), 1)
    with pytest.raises(DimensionError):
        rerank_reconstruction(index, matrix, shortlist, np.ones(4), 3)


def test_count_out_of_range():
    _, index = _random_index(8, 10, 16)
    with pytest.raises(DimensionError):
        search_hamming(index, index.code(0), 11)
    with pytest.raises(DimensionError):
        search_asymmetric(index, PreBinarizedQuery(np.ones(16)), 0)
    with pytest.raises(DimensionError):
        search_hamming(index, BinaryCode.from_signs(np.ones(8)), 1)


def test_build_index_rejects_bad_input():
    with pytest.raises(DimensionError):
        build_index([], "")
    with pytest.raises(DimensionError):
        build_index(_codes([1, 1], [1, 1, 1]), "")


def test_index_store_size_and_reload(tmp_path):
    _, index = _random_index(9, 10_000, 64, "abc")
    assert index.store_bytes() == 10_000 * 8
    path = tmp_path / "index.asbc"
    index.save(str(path))
    assert path.stat().st_size == 10_000 * 8 + 17
    loaded = BinaryIndex.load(str(path))
    np.testing.assert_array_equal(loaded.codes, index.codes)
    assert loaded.metadata() == index.metadata()


def test_sidecar_must_agree(tmp_path):
    _, index = _random_index(10, 20, 16, "abc")
    path = tmp_path / "index.asbc"
    index.save(str(path))
    meta = json.loads(open(sidecar_path(str(path))).read())
    meta["n"] = 21
    with open(sidecar_path(str(path)), "w") as fh:
        json.dump(meta, fh)
    with pytest.raises(ContainerFormatError):
        BinaryIndex.load(str(path))


def test_end_to_end_encoded_index(frame_16x64):
    vectors = np.random.default_rng(11).standard_normal((50, 16))
    encoded = encode_dataset(frame_16x64, vectors, EmbeddingMethod.ANTISPARSE, 1.0)
    index = index_from_words(encoded.words, encoded.m, frame_16x64.ref, "frame", 1.0)
    result = search_asymmetric(index, PreBinarizedQuery(encoded.prebinarized[4]), 1)
    assert list(result.ids) == [4]
