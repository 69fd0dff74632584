"""Independent brute-force references used only by the tests."""
from __future__ import annotations

from typing import List, Sequence, Tuple

import numpy as np


def project_l1_ball(v: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto {z : ||z||_1 <= radius} (sort-based)."""
    if np.sum(np.abs(v)) <= radius:
        return v.copy()
    magnitudes = np.sort(np.abs(v))[::-1]
    cumulative = np.cumsum(magnitudes)
    ks = np.arange(1, v.size + 1)
    rho = np.nonzero(magnitudes * ks > cumulative - radius)[0][-1]
    theta = (cumulative[rho] - radius) / (rho + 1.0)
    return np.sign(v) * np.maximum(np.abs(v) - theta, 0.0)


def prox_linf(v: np.ndarray, weight: float) -> np.ndarray:
    """prox of weight * ||.||_inf via Moreau: v - P_{l1 ball of radius weight}(v)."""
    return v - project_l1_ball(v, weight)


def objective(A: np.ndarray, y: np.ndarray, h: float, x: np.ndarray) -> float:
    residual = A @ x - y
    return 0.5 * float(residual @ residual) + h * float(np.max(np.abs(x)))


def subgradient_oracle(A: np.ndarray, y: np.ndarray, h: float, iterations: int = 50_000) -> Tuple[np.ndarray, float]:
    """Proximal (sub)gradient descent on J_h; returns the best iterate and its objective."""
    step = 1.0 / max(float(np.linalg.norm(A, 2)) ** 2, 1e-12)
    x = np.zeros(A.shape[1])
    best_x, best = x.copy(), objective(A, y, h, x)
    for _ in range(iterations):
        x = prox_linf(x - step * (A.T @ (A @ x - y)), step * h)
        value = objective(A, y, h, x)
        if value < best:
            best_x, best = x.copy(), value
    return best_x, best


def rank(scores: Sequence[float], ids: Sequence[int], count: int) -> List[Tuple[int, float]]:
    pairs = sorted(zip(ids, scores), key=lambda p: (-p[1], p[0]))
    return [(int(i), float(s)) for i, s in pairs[:count]]


def hamming_scores(db_signs: np.ndarray, q_signs: np.ndarray) -> List[float]:
    m = db_signs.shape[1]
    return [float(m - 2 * sum(1 for a, b in zip(row, q_signs) if a != b)) for row in db_signs]


def asymmetric_scores(db_signs: np.ndarray, xdot: np.ndarray) -> List[float]:
    return [float(sum(float(a) * float(b) for a, b in zip(row, xdot))) for row in db_signs]


def rerank_scores(A: np.ndarray, db_signs: np.ndarray, ids: Sequence[int], q: np.ndarray) -> List[float]:
    scores = []
    for i in ids:
        recon = A @ db_signs[i].astype(np.float64)
        norm = float(np.sqrt(recon @ recon))
        scores.append(-float(np.sqrt(np.sum((q - recon / norm) ** 2))) if norm > 0 else -np.inf)
    return scores


def quadratic_loop_ground_truth(base: np.ndarray, queries: np.ndarray, k: int) -> List[List[int]]:
    result = []
    for q in queries:
        distances = []
        for i, b in enumerate(base):
            total = 0.0
            for a, c in zip(b, q):
                total += (float(a) - float(c)) ** 2
            distances.append((total, i))
        distances.sort()
        result.append([i for _, i in distances[:k]])
    return result
