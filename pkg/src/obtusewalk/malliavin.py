"""Gradient, divergence, Clark-Ocone representation, and related identities.

The gradient is implemented as the finite-difference operator

    D_k^j F(w) = sum_i c_i^j(k) F(w with outcome k forced to i),

which is defined for every table on the finite path space; the equivalent
chaos-lowering form is provided as a cross-check. The divergence extends
the stochastic integral to non-predictable integrands via a correction
term and is the adjoint of the gradient.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chaos import ChaosCoefficients
from .errors import MartingaleError
from .integrals import VectorProcess, kernel_time_slice, multiple_integral
from .omega import (
    PathSpace,
    PathTable,
    atom_average,
    atom_deviation,
    covariance,
    expectation,
)
from .walk import WalkSpec


@dataclass(frozen=True, eq=False)
class GradientField:
    """All gradient tables D_k^j F, indexed by time k and coordinate j."""

    space: PathSpace
    values: np.ndarray  # (N+1, num_paths, d)

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=float)
        expected = (self.space.N + 1, self.space.num_paths, self.space.d)
        if vals.shape != expected:
            raise ValueError(f"gradient field has shape {vals.shape}, expected {expected}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def table(self, k: int, j: int) -> PathTable:
        if not 0 <= k <= self.space.N:
            raise ValueError(f"time {k} outside [0, {self.space.N}]")
        if not 1 <= j <= self.space.d:
            raise ValueError(f"coordinate {j} outside [1, {self.space.d}]")
        return PathTable(self.space, self.values[k][:, j - 1])

    def squared_norm_table(self) -> PathTable:
        """Pathwise sum_k ||D_k F||^2."""
        return PathTable(
            self.space, np.einsum("kpj,kpj->p", self.values, self.values)
        )


def gradient(walk: WalkSpec, table: PathTable) -> GradientField:
    """Finite-difference gradient of a table at every time and coordinate."""
    if table.space != walk.space:
        raise ValueError("table is not defined on the walk's path space")
    space = walk.space
    out = np.empty((space.N + 1, space.num_paths, walk.d))
    for k in range(space.N + 1):
        mutated = table.values[space.mutated_indices(k)]  # (P, d+1)
        out[k] = mutated @ walk.steps[k].c  # (P, d)
    return GradientField(space, out)


def gradient_chaos(
    walk: WalkSpec, coeffs: ChaosCoefficients, k: int, j: int
) -> PathTable:
    """Gradient via chaos lowering: sum_r r I^{r-1}(f_r^j(*,k) off-diagonal).

    Agrees with the finite-difference gradient of the reconstructed table.
    """
    if not 0 <= k <= walk.N:
        raise ValueError(f"time {k} outside [0, {walk.N}]")
    if not 1 <= j <= walk.d:
        raise ValueError(f"coordinate {j} outside [1, {walk.d}]")
    values = np.zeros(walk.space.num_paths)
    for kernel in coeffs.kernels:
        sliced = kernel_time_slice(kernel, j, k)
        if not sliced.entries:
            continue
        values = values + kernel.order * multiple_integral(walk, sliced).values
    return PathTable(walk.space, values)


def divergence(walk: WalkSpec, process: VectorProcess) -> PathTable:
    """Extension of the stochastic integral to arbitrary integrands.

    delta(X) = sum_k <X_k, Y_k> - sum_i sum_k <D_k(X_k^i), Y_k> Y_k^i.
    The correction term is skipped for times where X_k is exactly constant
    on the prior prefix atoms, so on predictable processes the result is
    bit-identical to the stochastic integral.
    """
    if process.space != walk.space:
        raise ValueError("process is not defined on the walk's path space")
    space = walk.space
    total = np.einsum("npj,npj->p", process.values, walk.increments)
    for k in range(space.N + 1):
        xk = process.values[k]  # (P, d)
        if atom_deviation(xk, space, k - 1) == 0.0:
            continue
        mutated = xk[space.mutated_indices(k)]  # (P, d+1, d_i)
        grad = np.einsum("pmi,mj->pij", mutated, walk.steps[k].c)  # (P, j, i)
        yk = walk.increments[k]  # (P, d)
        total = total - np.einsum("pij,pj,pi->p", grad, yk, yk)
    return PathTable(space, total)


def clark_ocone(walk: WalkSpec, table: PathTable) -> tuple[float, VectorProcess]:
    """Predictable representation F = E[F] + sum_k <E[D_k F | F_{k-1}], Y_k>."""
    grad = gradient(walk, table)
    xi = np.empty_like(grad.values)
    for k in range(walk.N + 1):
        xi[k] = atom_average(walk, grad.values[k], k - 1)
    return expectation(walk, table), VectorProcess(walk.space, xi)


def clark_ocone_from(
    walk: WalkSpec, table: PathTable, n: int
) -> tuple[PathTable, VectorProcess]:
    """Representation from an intermediate time:

    F = E[F | F_n] + sum_{k > n} <E[D_k F | F_{k-1}], Y_k>.
    """
    if not -1 <= n <= walk.N:
        raise ValueError(f"conditioning time {n} outside [-1, {walk.N}]")
    head = PathTable(walk.space, atom_average(walk, table.values, n))
    grad = gradient(walk, table)
    xi = np.zeros_like(grad.values)
    for k in range(n + 1, walk.N + 1):
        xi[k] = atom_average(walk, grad.values[k], k - 1)
    return head, VectorProcess(walk.space, xi)


def predictable_representation(
    walk: WalkSpec, martingale: Sequence[PathTable], tol: float = 1e-9
) -> tuple[float, VectorProcess]:
    """Integrand gamma with M_n = M_init + sum_{k<=n} <gamma_k, Y_k>.

    The input is the scalar martingale (M_0, ..., M_N); its deterministic
    initial value is E[M_0]. Vector-valued martingales are handled one
    component at a time. Raises MartingaleError when adaptedness or the
    martingale property fails beyond tol.
    """
    if len(martingale) != walk.N + 1:
        raise ValueError(f"need {walk.N + 1} tables, got {len(martingale)}")
    for n, m in enumerate(martingale):
        if m.space != walk.space:
            raise ValueError(f"table {n} is not on the walk's path space")
        defect = atom_deviation(m.values, walk.space, n)
        if defect > tol:
            raise MartingaleError(
                f"M_{n} is not measurable at time {n} (deviation {defect:.3e})"
            )
    m_init = expectation(walk, martingale[0])
    prev = np.full(walk.space.num_paths, m_init)
    xi = np.zeros((walk.N + 1, walk.space.num_paths, walk.d))
    for n, m in enumerate(martingale):
        projected = atom_average(walk, m.values, n - 1)
        defect = float(np.max(np.abs(projected - prev)))
        if defect > tol:
            raise MartingaleError(
                f"martingale property fails at step {n} (deviation {defect:.3e})"
            )
        grad_n = m.values[walk.space.mutated_indices(n)] @ walk.steps[n].c
        xi[n] = atom_average(walk, grad_n, n - 1)
        prev = m.values
    return m_init, VectorProcess(walk.space, xi)


def poincare_check(walk: WalkSpec, table: PathTable) -> tuple[float, float]:
    """Variance of the table and its gradient-energy upper bound."""
    variance = covariance(walk, table, table)
    bound = expectation(walk, gradient(walk, table).squared_norm_table())
    return variance, bound
