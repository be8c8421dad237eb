"""Numerical re-derivation of the optimal cloning and learning fidelities.

The covariant block form reduces both problems to a small semidefinite
program: maximize the linear block fidelity over PSD coefficient blocks
subject to the affine normalization constraints (two scalar budgets for
cloning, one per irrep row and sector pair for learning).  The solver is an
alternating projection scheme with a scaled dual (ADMM): one step projects
onto the affine constraint set, the other onto the PSD cone blockwise, with
the objective folded into the affine step.

Internally the blocks are rescaled as Y^{mu nu} = d_mu d_nu X^{mu nu}, which
preserves the PSD cone and removes the large coefficient spread from the
constraints; the reported maximizer is unscaled back to X.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .irreps import IrrepBlocks, MU_LABELS, block_keys, irrep_dims, sector_dims, valid_sectors
from .linalg import require_gate_dim

TASKS = ("clone", "learn")

DEFAULT_TOL = 1e-8
MAX_ITERATIONS = 100_000


class ConvergenceError(RuntimeError):
    """Solver hit the iteration cap; carries the best value and residuals."""

    def __init__(self, best_value: float, residual: float, iterations: int):
        super().__init__(
            f"no convergence after {iterations} iterations: "
            f"best value {best_value:.9f}, residual {residual:.3e}"
        )
        self.best_value = best_value
        self.residual = residual
        self.iterations = iterations


class _HermitianBlockSpace:
    """Real coordinates for a direct sum of Hermitian blocks.

    Each n x n block contributes n real diagonal coordinates followed by
    sqrt(2)-scaled (re, im) pairs for the upper triangle; the scaling makes
    the coordinate map an isometry, so Euclidean projections in coordinates
    are projections in the Frobenius norm.
    """

    def __init__(self, keys):
        self.keys = [k for k, _ in keys]
        self.rows = {k: labels for k, labels in keys}
        self.sizes = [len(labels) for _, labels in keys]
        self.offsets = []
        off = 0
        for n in self.sizes:
            self.offsets.append(off)
            off += n * n
        self.dim = off
        self._offdiag_pos = {}
        for key, n in zip(self.keys, self.sizes):
            pos = {}
            p = 0
            for a in range(n):
                for b in range(a + 1, n):
                    pos[(a, b)] = p
                    p += 1
            self._offdiag_pos[key] = pos

    def unflatten(self, x: np.ndarray) -> dict:
        out = {}
        for key, n, off in zip(self.keys, self.sizes, self.offsets):
            v = x[off:off + n * n]
            m = np.zeros((n, n), dtype=complex)
            for a in range(n):
                m[a, a] = v[a]
            idx = n
            for a in range(n):
                for b in range(a + 1, n):
                    m[a, b] = (v[idx] + 1j * v[idx + 1]) / np.sqrt(2)
                    m[b, a] = m[a, b].conjugate()
                    idx += 2
            out[key] = m
        return out

    def flatten(self, mats: dict) -> np.ndarray:
        x = np.zeros(self.dim)
        for key, n, off in zip(self.keys, self.sizes, self.offsets):
            m = mats[key]
            for a in range(n):
                x[off + a] = m[a, a].real
            idx = off + n
            for a in range(n):
                for b in range(a + 1, n):
                    x[idx] = np.sqrt(2) * m[a, b].real
                    x[idx + 1] = np.sqrt(2) * m[a, b].imag
                    idx += 2
        return x

    def entry_functionals(self, key, ik, jl) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate vectors giving Re and Im of entry (ik, jl) of a block."""
        labels = self.rows[key]
        bidx = self.keys.index(key)
        n, off = self.sizes[bidx], self.offsets[bidx]
        a, b = labels.index(ik), labels.index(jl)
        vre = np.zeros(self.dim)
        vim = np.zeros(self.dim)
        if a == b:
            vre[off + a] = 1.0
            return vre, vim
        lo, hi = min(a, b), max(a, b)
        idx = off + n + 2 * self._offdiag_pos[key][(lo, hi)]
        sign = 1.0 if a < b else -1.0
        vre[idx] = 1 / np.sqrt(2)
        vim[idx + 1] = sign / np.sqrt(2)
        return vre, vim

    def psd_project(self, x: np.ndarray) -> np.ndarray:
        mats = self.unflatten(x)
        out = {}
        for key, m in mats.items():
            w, v = np.linalg.eigh(m)
            np.clip(w, 0, None, out=w)
            out[key] = (v * w) @ v.conj().T
        return self.flatten(out)


@dataclass(frozen=True)
class OptimizationProblem:
    """Linear objective over PSD coefficient blocks with affine constraints.

    The coordinates refer to the scaled variables Y = d_mu d_nu X; ``scale``
    records the per-block factor used to recover X.
    """

    d: int
    task: str
    space: _HermitianBlockSpace
    objective: np.ndarray
    constraints: np.ndarray
    rhs: np.ndarray
    scale: dict
    initial: np.ndarray


@dataclass(frozen=True)
class OptimizationResult:
    optimal_value: float
    optimal_blocks: IrrepBlocks
    iterations: int
    kkt_residual: float


def build_problem(d: int, task: str) -> OptimizationProblem:
    """Assemble objective, constraints, scaling, and the feasible start point."""
    d = require_gate_dim(d)
    if task not in TASKS:
        raise ValueError(f"task must be one of {TASKS}, got {task!r}")
    dims = irrep_dims(d)
    sec = sector_dims(d)
    keys = block_keys(d)
    space = _HermitianBlockSpace(keys)
    scale = {key: dims[key[0]] * dims[key[1]] for key, _ in keys}

    c = np.zeros(space.dim)
    for mu in MU_LABELS:
        signs = valid_sectors(mu, d)
        if not signs:
            continue
        for i in signs:
            for j in signs:
                vre, _ = space.entry_functionals((mu, mu), (i, i), (j, j))
                c += dims[mu] * vre / (d**4 * scale[(mu, mu)])

    rows = []
    rhs = []
    if task == "clone":
        # sum_{mu nu} d_mu d_nu sum_k X_{(ik),(ik)} = d_i d  for i = +/-
        for i in "+-":
            v = np.zeros(space.dim)
            for mu in MU_LABELS:
                if i not in valid_sectors(mu, d):
                    continue
                for nu in MU_LABELS:
                    for k in valid_sectors(nu, d):
                        vre, _ = space.entry_functionals((mu, nu), (i, k), (i, k))
                        v += vre  # d_mu d_nu cancels against the block scale
            rows.append(v)
            rhs.append(sec[i] * d)
    else:
        # sum_nu d_nu sum_k X_{(ik),(jk)} = delta_ij  for each mu and valid i, j
        for mu in MU_LABELS:
            signs = valid_sectors(mu, d)
            for i in signs:
                for j in signs:
                    vre = np.zeros(space.dim)
                    vim = np.zeros(space.dim)
                    for nu in MU_LABELS:
                        for k in valid_sectors(nu, d):
                            r, im = space.entry_functionals((mu, nu), (i, k), (j, k))
                            vre += r / dims[mu]
                            vim += im / dims[mu]
                    rows.append(vre)
                    rhs.append(float(i == j))
                    if i != j and np.abs(vim).max() > 0:
                        rows.append(vim)
                        rhs.append(0.0)

    x0 = _feasible_diagonal_start(d, task, space, dims, sec)
    return OptimizationProblem(
        d=d, task=task, space=space,
        objective=c,
        constraints=np.array(rows), rhs=np.array(rhs),
        scale=scale, initial=x0,
    )


def _feasible_diagonal_start(d, task, space, dims, sec) -> np.ndarray:
    """Identity-proportional feasible point.

    The constraint groups touch disjoint diagonal coordinate sets, so the
    scaling reduces to one scalar per group.
    """
    mats = {key: np.zeros((len(space.rows[key]),) * 2, dtype=complex) for key in space.keys}
    if task == "clone":
        for i in "+-":
            slots = [(key, a) for key in space.keys
                     for a, (si, _) in enumerate(space.rows[key]) if si == i]
            val = sec[i] * d / len(slots)
            for key, a in slots:
                mats[key][a, a] = val
    else:
        for mu in MU_LABELS:
            for i in valid_sectors(mu, d):
                slots = [(key, a) for key in space.keys if key[0] == mu
                         for a, (si, _) in enumerate(space.rows[key]) if si == i]
                val = dims[mu] / len(slots)
                for key, a in slots:
                    mats[key][a, a] = val
    return space.flatten(mats)


def solve(problem: OptimizationProblem, tol: float = DEFAULT_TOL,
          max_iterations: int = MAX_ITERATIONS) -> OptimizationResult:
    """Run the alternating projection scheme to the requested tolerance.

    ``tol`` bounds the distance of the reported objective from the true
    optimum; the inner stopping threshold is tol/10 on all residuals.
    """
    if tol < 1e-9:
        raise ValueError(f"tol must be >= 1e-9, got {tol}")
    space = problem.space
    a_mat = problem.constraints
    b = problem.rhs
    c = problem.objective
    a_pinv = np.linalg.pinv(a_mat, rcond=1e-12)

    def proj_affine(x):
        return x - a_pinv @ (a_mat @ x - b)

    inner = max(tol / 10.0, 1e-13)
    rho = 1.0
    x = problem.initial.copy()
    z = space.psd_project(x)
    u = x - z
    primal = dual = np.inf
    it = 0
    for it in range(1, max_iterations + 1):
        x = proj_affine(z - u + c / rho)
        z_prev = z
        z = space.psd_project(x + u)
        u += x - z
        primal = float(np.abs(x - z).max())
        dual = float(rho * np.abs(z - z_prev).max())
        if primal < inner and dual < inner:
            break
        if it % 50 == 0:
            if primal > 10 * dual:
                rho *= 2.0
                u /= 2.0
            elif dual > 10 * primal:
                rho /= 2.0
                u *= 2.0
    cons = float(np.abs(a_mat @ z - b).max())
    kkt = max(primal, dual, cons)
    value = float(c @ z)
    if primal >= inner or dual >= inner:
        raise ConvergenceError(value, kkt, it)

    mats = space.unflatten(z)
    blocks = {key: mats[key] / problem.scale[key] for key in space.keys}
    rows = {key: space.rows[key] for key in space.keys}
    optimal = IrrepBlocks(d=problem.d, blocks=blocks, rows=rows)
    return OptimizationResult(
        optimal_value=value,
        optimal_blocks=optimal,
        iterations=it,
        kkt_residual=kkt,
    )


def analytic_bound(d: int) -> float:
    """The saturated bound (1/d^4)(sqrt(d_+) + sqrt(d_-))^2 for cloning."""
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    dp = d * (d + 1) / 2
    dm = d * (d - 1) / 2
    return float((np.sqrt(dp) + np.sqrt(dm)) ** 2 / d**4)
