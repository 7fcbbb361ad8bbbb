"""Soft-margin SVM with an RBF kernel, trained by sequential minimal
optimization on the dual problem.

Multi-class decisions use one-vs-one voting over all unordered label pairs.
The solver is the maximal-violating-pair variant of SMO: at each step it picks
the feasible pair with the largest KKT violation and solves the two-variable
subproblem analytically, so training is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .dataset import LabeledDataset
from .labels import Label


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    """exp(-gamma * ||a - b||^2) for every row pair of A and B."""
    a2 = np.sum(A * A, axis=1)[:, None]
    b2 = np.sum(B * B, axis=1)[None, :]
    d2 = np.maximum(a2 + b2 - 2.0 * (A @ B.T), 0.0)
    return np.exp(-gamma * d2)


@dataclass
class BinaryMachine:
    """One pairwise machine: positive label is the earlier one in label order."""

    pos_label: int
    neg_label: int
    sv_x: np.ndarray  # (m, d) support vectors
    sv_y: np.ndarray  # (m,) +1/-1
    alphas: np.ndarray  # (m,) dual coefficients in (0, C]
    bias: float
    iterations: int
    converged: bool
    # Training-time diagnostics over the full training subset.
    kkt_max_violation: float = 0.0
    dual_balance: float = 0.0  # sum of alpha_i * y_i, should be ~0


@dataclass
class SvmModel:
    gamma: float
    C: float
    tol: float
    variant: str
    machines: list[BinaryMachine] = field(default_factory=list)


def _smo(K: np.ndarray, y: np.ndarray, C: float, tol: float, max_iter: int):
    """Maximal-violating-pair SMO on the dual: minimize 1/2 a'Qa - e'a with
    0 <= a <= C and y'a = 0, where Q = (y y') * K. Returns (alpha, bias,
    iterations, converged)."""
    n = y.size
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of the objective at alpha = 0
    pos = y > 0
    iterations = 0
    converged = False
    while iterations < max_iter:
        yg = -y * grad
        up = (pos & (alpha < C)) | (~pos & (alpha > 0))
        low = (pos & (alpha > 0)) | (~pos & (alpha < C))
        up_scores = np.where(up, yg, -np.inf)
        low_scores = np.where(low, yg, np.inf)
        i = int(np.argmax(up_scores))
        j = int(np.argmin(low_scores))
        gap = up_scores[i] - low_scores[j]
        if gap <= tol:
            converged = True
            break
        iterations += 1
        curvature = max(K[i, i] + K[j, j] - 2.0 * K[i, j], 1e-12)
        step = gap / curvature
        # Clip the step so both multipliers stay inside the [0, C] box.
        room_i = C - alpha[i] if y[i] > 0 else alpha[i]
        room_j = alpha[j] if y[j] > 0 else C - alpha[j]
        step = min(step, room_i, room_j)
        d_i = y[i] * step
        d_j = -y[j] * step
        alpha[i] += d_i
        alpha[j] += d_j
        # Snap to the box to keep the index sets crisp.
        for t in (i, j):
            if alpha[t] < 1e-12:
                alpha[t] = 0.0
            elif alpha[t] > C - 1e-12:
                alpha[t] = C
        grad += y * step * (K[:, i] - K[:, j])
    yg = -y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        bias = float(yg[free].mean())
    else:
        up = (pos & (alpha < C)) | (~pos & (alpha > 0))
        low = (pos & (alpha > 0)) | (~pos & (alpha < C))
        hi = yg[up].max() if up.any() else 0.0
        lo = yg[low].min() if low.any() else 0.0
        bias = float((hi + lo) / 2.0)
    return alpha, bias, iterations, converged


def svm_train(ds: LabeledDataset, gamma: float = 0.005, C: float = 1000.0,
              tol: float = 1e-3, max_passes: int = 500) -> SvmModel:
    """Train one-vs-one RBF machines. max_passes bounds the SMO pair updates
    at max_passes * n per machine."""
    if gamma <= 0 or C <= 0:
        raise ValueError("gamma and C must be positive")
    classes = np.unique(ds.labels)
    if classes.size < 2:
        raise ValueError("svm_train needs at least two classes")
    model = SvmModel(gamma=gamma, C=C, tol=tol, variant=ds.variant)
    for a, b in combinations(classes.tolist(), 2):
        sel = (ds.labels == a) | (ds.labels == b)
        X = ds.vectors[sel]
        y = np.where(ds.labels[sel] == a, 1.0, -1.0)
        K = rbf_kernel(X, X, gamma)
        alpha, bias, iterations, converged = _smo(K, y, C, tol, max_iter=max_passes * y.size)
        margins = y * ((alpha * y) @ K + bias)
        keep = alpha > 1e-12
        model.machines.append(BinaryMachine(
            pos_label=int(a), neg_label=int(b),
            sv_x=X[keep].copy(), sv_y=y[keep].copy(), alphas=alpha[keep].copy(),
            bias=bias, iterations=iterations, converged=converged,
            kkt_max_violation=float(_kkt_violations(alpha, margins, C).max()),
            dual_balance=float(np.sum(alpha * y)),
        ))
    return model


def _kkt_violations(alpha: np.ndarray, margins: np.ndarray, C: float) -> np.ndarray:
    """Per-sample KKT violation magnitudes given full multipliers and margins
    y_i * f(x_i): interior points must sit on the margin, zero points outside
    it, and box-bound points inside it."""
    v = np.zeros(alpha.size)
    at_zero = alpha == 0
    at_c = alpha == C
    interior = ~at_zero & ~at_c
    v[at_zero] = np.maximum(0.0, 1.0 - margins[at_zero])
    v[interior] = np.abs(1.0 - margins[interior])
    v[at_c] = np.maximum(0.0, margins[at_c] - 1.0)
    return v


def machine_decision(machine: BinaryMachine, model: SvmModel, X: np.ndarray) -> np.ndarray:
    """Signed decision values for rows of X; positive favours pos_label."""
    if machine.sv_x.shape[0] == 0:
        return np.full(X.shape[0], machine.bias)
    K = rbf_kernel(machine.sv_x, X, model.gamma)
    return (machine.alphas * machine.sv_y) @ K + machine.bias


def svm_predict(model: SvmModel, x) -> Label:
    """One-vs-one vote; ties fall back to summed decision values, then to
    label order."""
    X = np.asarray(x, dtype=np.float64)[None, :]
    votes = np.zeros(len(Label))
    scores = np.zeros(len(Label))
    for machine in model.machines:
        f = float(machine_decision(machine, model, X)[0])
        winner = machine.pos_label if f >= 0 else machine.neg_label
        votes[winner] += 1
        scores[machine.pos_label] += f
        scores[machine.neg_label] -= f
    best_votes = votes.max()
    candidates = [c for c in range(len(Label)) if votes[c] == best_votes]
    if len(candidates) > 1:
        best_score = max(scores[c] for c in candidates)
        candidates = [c for c in candidates if scores[c] == best_score]
    return Label(candidates[0])
