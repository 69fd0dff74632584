import io

import numpy as np
import pytest

from antisparse_ann.lib.data_io.ground_truth import GroundTruth
from antisparse_ann.lib.errors.errors import DimensionError
from antisparse_ann.lib.evaluation.experiment_runner import RecallRow
from antisparse_ann.lib.evaluation.recall import read_result_dump, recall_at_R, recall_from_dump, write_result_dump
from antisparse_ann.lib.evaluation.summary import summarize, write_summary_csv
from antisparse_ann.lib.index_search.search import ScoredList, SearchMode


def _truth(nearest):
    ids = np.array(nearest)[:, None]
    return GroundTruth(ids, np.zeros(ids.shape))


def _lists(rankings):
    return [ScoredList(r, -np.arange(len(r), dtype=float), SearchMode.SYMMETRIC_HAMMING) for r in rankings]


def test_perfect_recall():
    assert recall_at_R(_lists([[3, 1], [0, 2]]), _truth([3, 0]), 1) == 1.0


def test_half_at_second_position():
    results = _lists([[9, 1], [0, 5], [7, 2], [3, 8]])
    truth = _truth([1, 0, 2, 3])
    assert recall_at_R(results, truth, 1) == pytest.approx(0.5)
    assert recall_at_R(results, truth, 2) == pytest.approx(1.0)


def test_recall_is_monotone_in_R():
    rng = np.random.default_rng(0)
    results = _lists([rng.permutation(50)[:20] for _ in range(30)])
    truth = _truth(rng.integers(0, 50, 30))
    values = [recall_at_R(results, truth, R) for R in (1, 5, 10, 20)]
    assert values == sorted(values)


def test_recall_errors():
    with pytest.raises(DimensionError):
        recall_at_R(_lists([[0]]), _truth([0, 1]), 1)
    with pytest.raises(DimensionError):
        recall_at_R(_lists([[0]]), _truth([0]), 2)


def test_result_dump(tmp_path):
    results = [ScoredList([4, 2], [1.5, -0.5], SearchMode.ASYMMETRIC), ScoredList([0, 1], [2.0, 0.0], SearchMode.ASYMMETRIC)]
    path = str(tmp_path / "results.json")
    write_result_dump(path, results)
    loaded = read_result_dump(path)
    assert [r.entries for r in loaded] == [r.entries for r in results]
    assert loaded[0].mode is SearchMode.ASYMMETRIC
    assert recall_from_dump(path, _truth([2, 0]), 1) == pytest.approx(0.5)


def _row(seed, recall, R=10, m=32):
    return RecallRow(method="antisparse", matrix="frame", m=m, h=1.0, mode="binary", shortlist=100,
                     seed=seed, R=R, recall=recall, n=100, n_queries=10)


def test_summarize_groups_over_seeds():
    rows = [_row(0, 0.5), _row(1, 0.7), _row(0, 0.9, R=100), _row(0, 0.2, m=64)]
    summary = summarize(rows)
    assert [(s.m, s.R, s.n_seeds) for s in summary] == [(32, 10, 2), (32, 100, 1), (64, 10, 1)]
    assert summary[0].recall_mean == pytest.approx(0.6)
    assert summary[0].recall_std == pytest.approx(0.1)
    assert summary[1].recall_std == 0.0

    buffer = io.StringIO()
    write_summary_csv(buffer, summary)
    lines = buffer.getvalue().splitlines()
    assert lines[0] == "method,matrix,m,h,mode,shortlist,R,recall_mean,recall_std,n_seeds"
    assert lines[1] == "antisparse,frame,32,1,binary,100,10,0.600000,0.100000,2"
