import io

import numpy as np
import pytest
from pydantic import ValidationError

from antisparse_ann.lib.data_io.vecs_io import write_fvecs
from antisparse_ann.lib.embedding.encoder import EmbeddingMethod
from antisparse_ann.lib.errors.errors import DimensionError
from antisparse_ann.lib.evaluation import experiment_runner
from antisparse_ann.lib.evaluation.experiment_runner import (
    CSV_FIELDS,
    RecallRow,
    derive_seed,
    encode_corpus,
    prepare_data,
    rows_from_csv,
    run_experiment,
    run_grid,
    write_csv,
)
from antisparse_ann.lib.evaluation.recall import recall_from_dump, write_result_dump
from antisparse_ann.lib.frames.projection import MatrixKind
from antisparse_ann.lib.index_search.search import SearchMode
from antisparse_ann.lib.models.experiment_config import (
    AnisotropicDatasetSpec,
    BenchConfig,
    ExperimentConfig,
    SyntheticDatasetSpec,
    VecsDatasetSpec,
)

SMALL = SyntheticDatasetSpec(n=400, d=8, n_queries=40)


def _config(**overrides):
    values = dict(dataset=SMALL, method=EmbeddingMethod.ANTISPARSE, matrix=MatrixKind.UNIFORM_FRAME,
                  m=16, mode=SearchMode.SYMMETRIC_HAMMING, R=[1, 10, 100], seeds=[0])
    values.update(overrides)
    return ExperimentConfig(**values)


def test_derive_seed_is_stable():
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    assert derive_seed(1, 2, 3) != derive_seed(1, 2, 4)
    assert 0 <= derive_seed(0) < 2**64


def test_prepared_data_depends_on_seed():
    a = prepare_data(SMALL, 0)
    b = prepare_data(SMALL, 1)
    assert a.base.n == 400 and a.queries.n == 40
    assert not (a.base.vectors == b.base.vectors).all()
    assert a.truth.k == 1


def test_pca_applies_after_ground_truth():
    spec = AnisotropicDatasetSpec(n=300, d=12, n_queries=20, pca_d_out=4)
    data = prepare_data(spec, 0)
    assert data.base.dim == 4 and data.queries.dim == 4


@pytest.mark.parametrize("mode", list(SearchMode))
@pytest.mark.parametrize("method", list(EmbeddingMethod))
def test_run_experiment_rows(mode, method):
    report = run_experiment(_config(mode=mode, method=method, R=[1, 10, 50], shortlist=50))
    assert [row.R for row in report.rows] == [1, 10, 50]
    recalls = [row.recall for row in report.rows]
    assert recalls == sorted(recalls)
    assert all(0.0 <= r <= 1.0 for r in recalls)
    assert report.rows[0].mode == mode.value
    assert report.rows[0].encode_ms is None


def test_rerank_beats_binary_on_average():
    seeds = [0, 1, 2]
    binary = run_experiment(_config(m=24, seeds=seeds, R=[10]))
    rerank = run_experiment(_config(m=24, seeds=seeds, R=[10], mode=SearchMode.RECONSTRUCTION_RERANK))
    assert rerank.recall(10) >= binary.recall(10)


def test_csv_is_reproducible():
    config = _config(seeds=[0, 1])
    first = run_experiment(config).to_csv()
    prepare_data.cache_clear()
    encode_corpus.cache_clear()
    second = run_experiment(config).to_csv()
    assert first == second
    assert first.splitlines()[0] == ",".join(CSV_FIELDS)
    assert first.splitlines()[1].startswith("antisparse,frame,16,1,binary,100,0,1,")
    assert first.splitlines()[1].endswith(",400,40,,")


def test_modes_share_one_base_encoding(monkeypatch):
    prepare_data.cache_clear()
    encode_corpus.cache_clear()
    real = experiment_runner.encode_dataset
    sizes = []

    def counting(matrix, vectors, *args, **kwargs):
        sizes.append(len(vectors))
        return real(matrix, vectors, *args, **kwargs)

    monkeypatch.setattr(experiment_runner, "encode_dataset", counting)
    grid = BenchConfig(dataset=SMALL, methods=[EmbeddingMethod.ANTISPARSE], m_grid=[16], modes=list(SearchMode),
                       shortlist=50, R=[1, 10], seeds=[0, 1])
    report = run_grid(grid.expand())
    assert len(report.rows) == 3 * 2 * 2
    assert sizes.count(SMALL.n) == 2
    assert sizes.count(SMALL.n_queries) == 3 * 2


def test_timings_fill_columns():
    row = run_experiment(_config(R=[1]), timings=True).rows[0]
    assert row.encode_ms is not None and row.encode_ms >= 0
    assert row.search_ms is not None


def test_results_sink_collects_lists():
    sink = []
    run_experiment(_config(R=[5], seeds=[0, 3]), results_sink=sink)
    assert [seed for seed, _ in sink] == [0, 3]
    assert len(sink[0][1]) == 40 and len(sink[0][1][0]) == 5


def test_R_limits():
    with pytest.raises(DimensionError) as info:
        run_experiment(_config(R=[500]))
    assert any("seed=0" in note for note in info.value.__notes__)
    with pytest.raises(DimensionError):
        run_experiment(_config(R=[20], shortlist=10, mode=SearchMode.RECONSTRUCTION_RERANK))


def test_csv_rows_round_trip():
    report = run_experiment(_config(seeds=[0]))
    parsed = rows_from_csv(io.StringIO(report.to_csv()))
    assert parsed == list(report.rows)

    timed = RecallRow("lsh", "gauss", 8, 0.5, "asym", 100, 1, 10, 0.25, 10, 5, 12.34, 5.0)
    buffer = io.StringIO()
    write_csv(buffer, [timed])
    assert buffer.getvalue().splitlines()[1] == "lsh,gauss,8,0.5,asym,100,1,10,0.250000,10,5,12.3,5.0"


def test_experiment_config_validation():
    assert _config(R=[100, 1, 10, 10]).R == [1, 10, 100]
    with pytest.raises(ValidationError):
        _config(shortlist_mode=SearchMode.RECONSTRUCTION_RERANK)
    with pytest.raises(ValidationError):
        _config(R=[0])
    with pytest.raises(ValidationError):
        _config(h=0.0)
    with pytest.raises(ValidationError):
        ExperimentConfig.model_validate({"dataset": {"kind": "nope"}})


def test_bench_grid_order_and_default_code_lengths():
    bench = BenchConfig(dataset=SyntheticDatasetSpec(d=16), methods=["lsh", "antisparse"],
                        matrices=["gauss", "frame"], modes=["binary"])
    assert bench.code_lengths() == [16, 32, 48, 64, 128]
    configs = bench.expand()
    assert len(configs) == 2 * 2 * 5
    assert [(c.method.value, c.matrix.value, c.m) for c in configs[:6]] == [
        ("lsh", "gauss", 16), ("lsh", "gauss", 32), ("lsh", "gauss", 48), ("lsh", "gauss", 64),
        ("lsh", "gauss", 128), ("lsh", "frame", 16),
    ]


def test_bench_vecs_needs_a_dimension():
    bench = BenchConfig(dataset=VecsDatasetSpec(base="b.fvecs", queries="q.fvecs"))
    with pytest.raises(ValueError):
        bench.code_lengths()
    assert BenchConfig(dataset=VecsDatasetSpec(base="b", queries="q", pca_d_out=48), m_multipliers=[2]).code_lengths() == [96]
    assert BenchConfig(dataset=VecsDatasetSpec(base="b", queries="q"), m_grid=[128]).code_lengths() == [128]


def test_run_grid_concatenates():
    configs = [_config(m=8, R=[1]), _config(m=16, R=[1])]
    report = run_grid(configs)
    assert [row.m for row in report.rows] == [8, 16]


def test_csv_recall_matches_reloaded_dumps(tmp_path):
    sink = []
    report = run_experiment(_config(R=[1, 10], seeds=[2], mode=SearchMode.ASYMMETRIC), results_sink=sink)
    path = str(tmp_path / "dump.json")
    write_result_dump(path, sink[0][1])
    truth = prepare_data(SMALL, 2).truth
    for row in report.rows:
        assert recall_from_dump(path, truth, row.R) == row.recall


@pytest.mark.parametrize("mode", list(SearchMode))
@pytest.mark.parametrize("method", list(EmbeddingMethod))
def test_antipodal_pair(tmp_path, mode, method):
    base, queries = tmp_path / "base.fvecs", tmp_path / "queries.fvecs"
    write_fvecs(str(base), np.array([[6.0, -2.0, 7.0, 1.0], [-6.0, 2.0, -7.0, -1.0]]))
    write_fvecs(str(queries), np.array([[6.0, -2.0, 7.0, 1.0]]))
    config = _config(dataset=VecsDatasetSpec(base=str(base), queries=str(queries)), m=8, R=[1],
                     mode=mode, method=method)
    assert run_experiment(config).recall(1) == 1.0
