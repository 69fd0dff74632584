"""Module averaging raw recall rows over seeds"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import IO, Dict, List, Sequence, Tuple

import numpy as np

from antisparse_ann.lib.evaluation.experiment_runner import RecallRow

SUMMARY_FIELDS = ["method", "matrix", "m", "h", "mode", "shortlist", "R", "recall_mean", "recall_std", "n_seeds"]

GroupKey = Tuple[str, str, int, float, str, int, int]


@dataclass(frozen=True)
class SummaryRow:
    method: str
    matrix: str
    m: int
    h: float
    mode: str
    shortlist: int
    R: int
    recall_mean: float
    recall_std: float
    n_seeds: int

    def csv_values(self) -> List[str]:
        return [self.method, self.matrix, str(self.m), format(self.h, "g"), self.mode, str(self.shortlist),
                str(self.R), f"{self.recall_mean:.6f}", f"{self.recall_std:.6f}", str(self.n_seeds)]


def summarize(rows: Sequence[RecallRow]) -> List[SummaryRow]:
    """Mean and population std of recall per (method, matrix, m, h, mode, shortlist, R), in first-seen order."""
    groups: Dict[GroupKey, List[float]] = {}
    for row in rows:
        key = (row.method, row.matrix, row.m, row.h, row.mode, row.shortlist, row.R)
        groups.setdefault(key, []).append(row.recall)
    return [
        SummaryRow(*key, recall_mean=float(np.mean(values)), recall_std=float(np.std(values)), n_seeds=len(values))
        for key, values in groups.items()
    ]


def write_summary_csv(stream: IO[str], rows: Sequence[SummaryRow]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(SUMMARY_FIELDS)
    for row in rows:
        writer.writerow(row.csv_values())
