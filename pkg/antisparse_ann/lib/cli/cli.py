#!/usr/bin/env python3
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import List, Optional, Sequence

from colorama import Fore, init
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from antisparse_ann import __version__
from antisparse_ann.lib.data_io.datasets import gen_anisotropic, gen_unit_sphere, pca_reduce
from antisparse_ann.lib.data_io.ground_truth import GroundTruth, ground_truth
from antisparse_ann.lib.data_io.vecs_io import read_dataset, write_fvecs
from antisparse_ann.lib.embedding.binary_code import read_code_store, write_code_store
from antisparse_ann.lib.embedding.encoder import EmbeddingMethod, encode_dataset
from antisparse_ann.lib.errors.errors import (
    AntisparseError,
    ContainerFormatError,
    DegenerateInstanceError,
    DimensionError,
    NonConvergenceError,
    VecsFormatError,
)
from antisparse_ann.lib.evaluation.experiment_runner import (
    rows_from_csv,
    run_grid,
    search_all,
    write_csv,
)
from antisparse_ann.lib.evaluation.recall import recall_at_R, write_result_dump
from antisparse_ann.lib.evaluation.summary import SummaryRow, summarize, write_summary_csv
from antisparse_ann.lib.frames.pca import PcaModel, pca_fit
from antisparse_ann.lib.frames.projection import MatrixKind, ProjectionMatrix, make_projection
from antisparse_ann.lib.index_search.binary_index import BinaryIndex, index_from_words
from antisparse_ann.lib.index_search.search import DEFAULT_SHORTLIST, SearchMode
from antisparse_ann.lib.models.experiment_config import (
    DEFAULT_R,
    BenchConfig,
    ExperimentConfig,
    SyntheticDatasetSpec,
    VecsDatasetSpec,
)
from antisparse_ann.lib.parser.parser import Parser
from antisparse_ann.lib.solver.antisparse_solver import DEFAULT_H, trace_to_json
from antisparse_ann.lib.utils.log import setup_logging

init(autoreset=True)

logger = logging.getLogger(__name__)


def parse_int_list(text: str) -> List[int]:
    """Parse '1,10,100' or '0..4' (inclusive) or a mix such as '0..2,7'."""
    values: List[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            low, high = part.split("..", 1)
            start, stop = int(low), int(high)
            if stop < start:
                raise argparse.ArgumentTypeError(f"Empty range {part!r}")
            values.extend(range(start, stop + 1))
        else:
            values.append(int(part))
    if not values:
        raise argparse.ArgumentTypeError(f"No integers in {text!r}")
    return values


def _int_list(text: str) -> List[int]:
    try:
        return parse_int_list(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


class SummaryTable:
    """Render seed-averaged recall rows as one rich table per (method, matrix)."""

    def __init__(self, rows: Sequence[SummaryRow]):
        self.rows = rows

    def render(self, console: Optional[Console] = None) -> None:
        console = console or Console()
        if not self.rows:
            print(Fore.YELLOW + "No rows to summarize.")
            return
        grouped: dict[tuple[str, str], list[SummaryRow]] = {}
        for row in self.rows:
            grouped.setdefault((row.method, row.matrix), []).append(row)

        console.rule("Recall summary")
        for (method, matrix), rows in grouped.items():
            table = Table(
                show_header=True,
                header_style="bold bright_blue",
                row_styles=["none", "dim"],
                title=f"{method} / {matrix}",
                title_style="bold magenta",
            )
            for column in ("m", "h", "mode", "shortlist", "R"):
                table.add_column(column, justify="right", no_wrap=True)
            table.add_column("recall (mean ± std)", justify="right", no_wrap=True)
            table.add_column("seeds", justify="right", no_wrap=True)
            for row in rows:
                table.add_row(str(row.m), format(row.h, "g"), row.mode, str(row.shortlist), str(row.R),
                              f"{row.recall_mean:.4f} ± {row.recall_std:.4f}", str(row.n_seeds))
            console.print(table)
        console.rule()


class CLI:
    """Orchestrates CLI parsing and actions for asann."""

    def __init__(self, argv: Optional[list[str]] = None):
        self.argv = argv

    def parse_args(self) -> argparse.Namespace:
        parser = argparse.ArgumentParser(description="Anti-sparse coding for approximate nearest neighbor search",
                                         prog="asann")
        parser.add_argument('--verbose', '-v', action='count', default=0, help='Increase log verbosity (-v, -vv)')
        parser.add_argument('--progress', '-P', action='store_true', help='Show progress bars')
        parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}',
                            help='Show program version and exit')
        sub = parser.add_subparsers(dest='command', required=True)

        gen = sub.add_parser('gen', help='Write a synthetic dataset as fvecs')
        gen.add_argument('--n', type=int, required=True, help='Number of vectors')
        gen.add_argument('--d', type=int, required=True, help='Dimension')
        gen.add_argument('--seed', type=int, default=0, help='Generator seed')
        gen.add_argument('--anisotropic', action='store_true', help='Un-normalized correlated vectors instead of unit-sphere')
        gen.add_argument('--decay', type=float, default=0.5, help='Spectrum decay for --anisotropic')
        gen.add_argument('--out', '-o', type=str, required=True, help='Output .fvecs file')

        gt = sub.add_parser('gt', help='Exact ground truth by brute force')
        gt.add_argument('--base', type=str, required=True, help='Base .fvecs/.bvecs file')
        gt.add_argument('--queries', type=str, required=True, help='Query .fvecs/.bvecs file')
        gt.add_argument('--k', type=int, default=100, help='Neighbors per query')
        gt.add_argument('--limit', type=int, default=None, help='Read only this many base vectors')
        gt.add_argument('--out', '-o', type=str, required=True, help='Output .json or .ivecs file')

        enc = sub.add_parser('encode', help='Encode a vector file into packed binary codes')
        enc.add_argument('--base', type=str, required=True, help='Input .fvecs/.bvecs file')
        self._add_embedding_flags(enc)
        enc.add_argument('--seed', type=int, default=0, help='Projection matrix seed')
        enc.add_argument('--pca', type=int, default=None, metavar='D_OUT', help='Reduce to D_OUT dims with PCA first')
        enc.add_argument('--limit', type=int, default=None, help='Read only this many vectors')
        enc.add_argument('--out', '-o', type=str, required=True, help='Output ASBC code store')
        enc.add_argument('--matrix-out', type=str, default=None, help='Projection matrix file (default: OUT.aspm)')
        enc.add_argument('--pca-out', type=str, default=None, help='PCA model file (default: OUT.aspc)')
        enc.add_argument('--trace', type=str, default=None, help='Dump solver breakpoints as JSON')

        idx = sub.add_parser('index', help='Bind a code store to its matrix as a searchable index')
        idx.add_argument('--codes', type=str, required=True, help='ASBC code store from encode')
        idx.add_argument('--matrix', type=str, required=True, help='ASPM matrix used by encode')
        idx.add_argument('--h', type=float, default=DEFAULT_H, help='Penalty the codes were built with')
        idx.add_argument('--out', '-o', type=str, required=True, help='Output index file (plus .json sidecar)')

        srch = sub.add_parser('search', help='Search an index with a query file')
        srch.add_argument('--index', type=str, required=True, help='Index file from the index command')
        srch.add_argument('--matrix', type=str, required=True, help='ASPM matrix of the index')
        srch.add_argument('--queries', type=str, required=True, help='Query .fvecs/.bvecs file')
        srch.add_argument('--method', type=EmbeddingMethod, choices=list(EmbeddingMethod),
                          default=EmbeddingMethod.ANTISPARSE, help='How the index codes were built')
        srch.add_argument('--mode', type=SearchMode, choices=list(SearchMode), default=SearchMode.ASYMMETRIC)
        srch.add_argument('--R', type=int, default=10, help='Results per query')
        srch.add_argument('--shortlist', type=int, default=DEFAULT_SHORTLIST, help='Shortlist length for rerank')
        srch.add_argument('--shortlist-mode', type=SearchMode, choices=[SearchMode.ASYMMETRIC, SearchMode.SYMMETRIC_HAMMING],
                          default=SearchMode.ASYMMETRIC, help='First stage feeding rerank')
        srch.add_argument('--pca-model', type=str, default=None, help='ASPC model to apply to the queries')
        srch.add_argument('--limit', type=int, default=None, help='Read only this many queries')
        srch.add_argument('--gt', type=str, default=None, help='Ground truth file; prints recall@R')
        srch.add_argument('--out', '-o', type=str, required=True, help='Per-query result dump (JSON)')

        bench = sub.add_parser('bench', help='Run an experiment grid and emit CSV')
        bench.add_argument('--config', '-c', type=str, default=None, help='YAML/JSON grid config')
        bench.add_argument('--dataset', choices=['synthetic', 'vecs'], default='synthetic')
        bench.add_argument('--n', type=int, default=10_000)
        bench.add_argument('--d', type=int, default=16)
        bench.add_argument('--n-queries', type=int, default=1_000)
        bench.add_argument('--base', type=str, default=None, help='Base file for --dataset vecs')
        bench.add_argument('--queries', type=str, default=None, help='Query file for --dataset vecs')
        bench.add_argument('--pca', type=int, default=None, metavar='D_OUT')
        bench.add_argument('--limit', type=int, default=None)
        self._add_embedding_flags(bench, single=False)
        bench.add_argument('--mode', type=SearchMode, choices=list(SearchMode), default=SearchMode.SYMMETRIC_HAMMING)
        bench.add_argument('--shortlist', type=int, default=DEFAULT_SHORTLIST)
        bench.add_argument('--shortlist-mode', type=SearchMode, choices=[SearchMode.ASYMMETRIC, SearchMode.SYMMETRIC_HAMMING],
                           default=SearchMode.ASYMMETRIC)
        bench.add_argument('--R', type=_int_list, default=list(DEFAULT_R), help='Comma list, e.g. 1,10,100')
        bench.add_argument('--seed', type=_int_list, default=[0], help='Seeds, e.g. 0..4')
        bench.add_argument('--timings', action='store_true', help='Fill encode_ms/search_ms (breaks byte-reproducibility)')
        bench.add_argument('--out', '-o', type=str, default=None, help='CSV file (default: stdout)')

        summ = sub.add_parser('summarize', help='Average bench CSV rows over seeds')
        summ.add_argument('--csv', type=str, required=True, help='CSV produced by bench')
        summ.add_argument('--out', '-o', type=str, default=None, help='Write the summary as CSV too')
        return parser.parse_args(self.argv)

    @staticmethod
    def _add_embedding_flags(parser: argparse.ArgumentParser, single: bool = True) -> None:
        parser.add_argument('--method', type=EmbeddingMethod, choices=list(EmbeddingMethod),
                            default=EmbeddingMethod.ANTISPARSE)
        parser.add_argument('--matrix', type=MatrixKind, choices=list(MatrixKind), default=MatrixKind.UNIFORM_FRAME)
        parser.add_argument('--m', type=int if single else _int_list, required=single, default=None if single else [64],
                            help='Code length' if single else 'Code length(s), e.g. 16,64,128')
        parser.add_argument('--h', type=float, default=DEFAULT_H, help='Target penalty h_t')

    def run(self) -> None:
        args = self.parse_args()
        setup_logging(args.verbose)
        try:
            handler = getattr(self, f"_cmd_{args.command}")
            handler(args)
        except FileNotFoundError as e:
            # e.filename may not be present if FileNotFoundError was raised manually
            if hasattr(e, "filename") and e.filename is not None:
                print(Fore.RED + f"File not found: {e.filename}")
            else:
                print(Fore.RED + f"File not found: {str(e)}")
            sys.exit(2)
        except ValidationError as e:
            print(Fore.RED + "Validation error in configuration:")
            print(Fore.RED + str(e))
            sys.exit(3)
        except (VecsFormatError, ContainerFormatError) as e:
            print(Fore.RED + f"Format error: {e}")
            sys.exit(4)
        except (DegenerateInstanceError, NonConvergenceError) as e:
            print(Fore.RED + f"Solver error: {e}")
            sys.exit(5)
        except AntisparseError as e:
            print(Fore.RED + f"Error: {e}")
            for note in getattr(e, "__notes__", []):
                print(Fore.RED + f"  {note}")
            sys.exit(6)
        except (OSError, IOError) as e:
            print(Fore.RED + f"I/O error: {e}")
            sys.exit(10)

    def _cmd_gen(self, args: argparse.Namespace) -> None:
        if args.anisotropic:
            dataset = gen_anisotropic(args.n, args.d, args.seed, args.decay)
        else:
            dataset = gen_unit_sphere(args.n, args.d, args.seed)
        write_fvecs(args.out, dataset.vectors)
        print(Fore.GREEN + f"Wrote {dataset.n} x {dataset.dim} vectors to {args.out}")

    def _cmd_gt(self, args: argparse.Namespace) -> None:
        base = read_dataset(args.base, args.limit)
        queries = read_dataset(args.queries)
        truth = ground_truth(base, queries, args.k, show_progress=args.progress)
        truth.save(args.out)
        print(Fore.GREEN + f"Ground truth for {truth.n_queries} queries (k={truth.k}) written to {args.out}")

    def _cmd_encode(self, args: argparse.Namespace) -> None:
        dataset = read_dataset(args.base, args.limit)
        if args.pca is not None:
            model = pca_fit(dataset.vectors, args.pca)
            pca_path = args.pca_out or args.out + ".aspc"
            model.save(pca_path)
            dataset = pca_reduce(dataset, model)
            print(Fore.GREEN + f"PCA model ({model.d_in} -> {model.d_out}) written to {pca_path}")
        matrix = make_projection(args.matrix, dataset.dim, args.m, args.seed)
        matrix_path = args.matrix_out or args.out + ".aspm"
        matrix.save(matrix_path)
        encoded = encode_dataset(matrix, dataset.vectors, args.method, args.h,
                                 show_progress=args.progress, keep_traces=args.trace is not None)
        write_code_store(args.out, encoded.words, encoded.m)
        if args.trace is not None and encoded.traces is not None:
            with open(args.trace, "w", encoding="utf-8") as fh:
                json.dump([{"vector": i, "breakpoints": trace_to_json(t)} for i, t in enumerate(encoded.traces)], fh)
            print(Fore.GREEN + f"Solver traces written to {args.trace}")
        elif args.trace is not None:
            print(Fore.YELLOW + "--trace ignored: solver traces only exist for --method antisparse, "
                  f"not {EmbeddingMethod(args.method).value}")
        print(Fore.GREEN + f"Encoded {dataset.n} vectors into {encoded.m}-bit codes: {args.out} (matrix {matrix_path})")

    def _cmd_index(self, args: argparse.Namespace) -> None:
        words, m = read_code_store(args.codes)
        matrix = ProjectionMatrix.load(args.matrix)
        if matrix.cols != m:
            raise DimensionError(f"Codes have m={m} but the matrix has {matrix.cols} columns")
        index = index_from_words(words, m, matrix.ref, matrix.kind.value, args.h)
        index.save(args.out)
        print(Fore.GREEN + f"Index of {index.n} codes ({index.store_bytes()} bytes of codes) written to {args.out}")

    def _cmd_search(self, args: argparse.Namespace) -> None:
        index = BinaryIndex.load(args.index)
        matrix = ProjectionMatrix.load(args.matrix)
        if matrix.cols != index.m or (index.matrix_ref and index.matrix_ref != matrix.ref):
            raise DimensionError(f"Matrix {matrix.ref} (m={matrix.cols}) was not used to build this index")
        queries = read_dataset(args.queries, args.limit)
        if args.pca_model:
            queries = pca_reduce(queries, PcaModel.load(args.pca_model))
        h_t = index.h_t if index.h_t is not None else DEFAULT_H
        config = ExperimentConfig(method=args.method, matrix=matrix.kind, m=index.m, h=h_t, mode=args.mode,
                                  shortlist=args.shortlist, shortlist_mode=args.shortlist_mode, R=[args.R])
        encoded = encode_dataset(matrix, queries.vectors, args.method, h_t, show_progress=args.progress)
        results = search_all(config, index, matrix, queries.vectors, encoded, args.R)
        write_result_dump(args.out, results)
        print(Fore.GREEN + f"Searched {queries.n} queries ({args.mode.value}); results written to {args.out}")
        if args.gt:
            truth = GroundTruth.load(args.gt)
            print(Fore.GREEN + f"recall@{args.R} = {recall_at_R(results, truth, args.R):.4f}")

    def _bench_config(self, args: argparse.Namespace) -> BenchConfig:
        if args.config:
            return Parser(args.config).get_model()
        if args.dataset == 'vecs':
            if not args.base or not args.queries:
                raise DimensionError("--dataset vecs needs --base and --queries")
            dataset = VecsDatasetSpec(base=args.base, queries=args.queries, pca_d_out=args.pca, limit=args.limit)
        else:
            dataset = SyntheticDatasetSpec(n=args.n, d=args.d, n_queries=args.n_queries)
        return BenchConfig(
            dataset=dataset, methods=[args.method], matrices=[args.matrix], m_grid=args.m, h_grid=[args.h],
            modes=[args.mode], shortlist=args.shortlist, shortlist_mode=args.shortlist_mode, R=args.R,
            seeds=args.seed, out=args.out,
        )

    def _cmd_bench(self, args: argparse.Namespace) -> None:
        bench = self._bench_config(args)
        configs = bench.expand()
        logger.info("Running %d grid point(s) x %d seed(s)", len(configs), len(bench.seeds))
        report = run_grid(configs, show_progress=args.progress, timings=args.timings)
        destination = args.out or bench.out
        if destination:
            os.makedirs(os.path.dirname(destination) or ".", exist_ok=True)
            with open(destination, "w", encoding="utf-8", newline="") as fh:
                write_csv(fh, report.rows)
            print(Fore.GREEN + f"{len(report.rows)} rows written to {destination}")
        else:
            write_csv(sys.stdout, report.rows)

    def _cmd_summarize(self, args: argparse.Namespace) -> None:
        with open(args.csv, "r", encoding="utf-8", newline="") as fh:
            rows = rows_from_csv(fh)
        summary = summarize(rows)
        SummaryTable(summary).render()
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                write_summary_csv(fh, summary)
            print(Fore.GREEN + f"Summary written to {args.out}")
