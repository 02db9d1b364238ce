"""Obtuse random walk specifications, validation, and canonical construction.

A walk is given per step by d+1 strictly positive outcome probabilities and
d+1 outcome vectors in R^d. The defining identities are

    sum_i c_i^j(n) = 0         and      sum_i c_i^j(n) v_i^l(n) = delta^{jl},

with c_i^j(n) = p_i(n) v_i^j(n): the normalized increments are centered with
identity conditional covariance. Increments are independent across steps
(values and probabilities deterministic per step, possibly step-varying).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import SizeCapError
from .omega import DEFAULT_CAP, PathSpace, PathTable


@dataclass(frozen=True, eq=False)
class StepLaw:
    """One step of a walk: outcome probabilities p_i and vectors v_i."""

    p: np.ndarray  # (d+1,)
    v: np.ndarray  # (d+1, d); row i is the outcome vector v_i

    def __post_init__(self) -> None:
        p = np.array(self.p, dtype=float)
        v = np.array(self.v, dtype=float)
        if p.ndim != 1 or v.ndim != 2:
            raise ValueError("step law needs a probability vector and a vector matrix")
        if v.shape != (p.shape[0], p.shape[0] - 1):
            raise ValueError(
                f"outcome matrix has shape {v.shape}, expected ({len(p)}, {len(p) - 1})"
            )
        p.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "v", v)

    @property
    def d(self) -> int:
        return self.v.shape[1]

    @cached_property
    def c(self) -> np.ndarray:
        """(d+1, d) matrix c_i^j = p_i v_i^j."""
        out = self.p[:, None] * self.v
        out.setflags(write=False)
        return out


@dataclass(frozen=True, eq=False)
class WalkSpec:
    """A d-dimensional obtuse walk over times 0..N with independent steps."""

    d: int
    N: int
    steps: tuple[StepLaw, ...]
    cap: int = field(default=DEFAULT_CAP, compare=False, repr=False)

    def __post_init__(self) -> None:
        if len(self.steps) != self.N + 1:
            raise ValueError(f"expected {self.N + 1} steps, got {len(self.steps)}")
        for n, step in enumerate(self.steps):
            if step.d != self.d:
                raise ValueError(f"step {n} has dimension {step.d}, expected {self.d}")
        object.__setattr__(self, "steps", tuple(self.steps))
        count = (self.d + 1) ** (self.N + 1)
        if count > self.cap:
            raise SizeCapError(
                f"path space would need {count} entries, above the cap of {self.cap}"
            )

    @cached_property
    def space(self) -> PathSpace:
        return PathSpace(self.d, self.N, self.cap)

    @cached_property
    def measure(self) -> np.ndarray:
        """(num_paths,) product probabilities in canonical order."""
        out = np.ones(self.space.num_paths)
        for n, step in enumerate(self.steps):
            out *= step.p[self.space.outcomes[:, n]]
        out.setflags(write=False)
        return out

    @cached_property
    def increments(self) -> np.ndarray:
        """(N+1, num_paths, d) array of increment vectors Y_n along each path."""
        out = np.stack(
            [step.v[self.space.outcomes[:, n]] for n, step in enumerate(self.steps)]
        )
        out.setflags(write=False)
        return out


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of checking the walk identities, with worst residual locations."""

    passed: bool
    errors: tuple[str, ...]
    max_mean_residual: float
    worst_mean: tuple[int, int] | None  # (step, coordinate j)
    max_moment_residual: float
    worst_moment: tuple[int, int, int] | None  # (step, j, l)


@dataclass(frozen=True, eq=False)
class StructureTensor:
    """Per-step tensor linking squared increments back to the increments.

    phi[i, j, k] multiplies the k-th increment coordinate in the pointwise
    identity Y^i Y^j = delta^{ij} + sum_k phi[i, j, k] Y^k.
    """

    step: int
    phi: np.ndarray  # (d, d, d)

    def __post_init__(self) -> None:
        phi = np.array(self.phi, dtype=float)
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)


def validate(walk: WalkSpec, tol: float = 1e-10) -> ValidationReport:
    """Check the centering and covariance identities at every step.

    Structural defects (non-positive probabilities, probability sums away
    from one) fail the report outright; otherwise the report carries the
    worst residual of each identity and passes iff both stay within tol.
    """
    errors: list[str] = []
    for n, step in enumerate(walk.steps):
        if np.any(step.p <= 0.0):
            errors.append(f"step {n}: non-positive probability")
        psum = float(np.add.reduce(step.p))
        if abs(psum - 1.0) > 1e-12:
            errors.append(f"step {n}: probabilities sum to {psum!r}, not 1")

    max_mean = 0.0
    worst_mean: tuple[int, int] | None = None
    max_moment = 0.0
    worst_moment: tuple[int, int, int] | None = None
    for n, step in enumerate(walk.steps):
        mean_res = np.abs(step.c.sum(axis=0))  # (d,)
        j = int(np.argmax(mean_res))
        if mean_res[j] >= max_mean:
            max_mean = float(mean_res[j])
            worst_mean = (n, j + 1)
        moment_res = np.abs(step.c.T @ step.v - np.eye(walk.d))  # (d, d)
        jl = np.unravel_index(int(np.argmax(moment_res)), moment_res.shape)
        if moment_res[jl] >= max_moment:
            max_moment = float(moment_res[jl])
            worst_moment = (n, jl[0] + 1, jl[1] + 1)

    passed = not errors and max_mean <= tol and max_moment <= tol
    return ValidationReport(
        passed=passed,
        errors=tuple(errors),
        max_mean_residual=max_mean,
        worst_mean=worst_mean,
        max_moment_residual=max_moment,
        worst_moment=worst_moment,
    )


def _complete_orthogonal(sqrt_p: np.ndarray) -> np.ndarray:
    """Orthogonal matrix with first row sqrt_p, completed deterministically.

    Rows d..1 are obtained by orthonormalizing the standard basis vectors
    e_d, ..., e_1 (in that order) against the rows already fixed, with the
    first nonzero entry of each completed row made positive. With strictly
    positive probabilities no candidate ever degenerates.
    """
    dd = len(sqrt_p)
    rows = np.zeros((dd, dd))
    rows[0] = sqrt_p
    done = [0]
    for j in range(dd - 1, 0, -1):
        u = np.zeros(dd)
        u[j] = 1.0
        for _ in range(2):  # re-orthogonalize once for numerical hygiene
            for r in done:
                u -= (u @ rows[r]) * rows[r]
        norm = float(np.linalg.norm(u))
        if norm < 1e-12:
            raise ValueError("orthogonal completion degenerated")
        u /= norm
        nz = int(np.nonzero(np.abs(u) > 1e-12)[0][0])
        if u[nz] < 0:
            u = -u
        rows[j] = u
        done.append(j)
    return rows


def construct_obtuse(
    probabilities: Sequence[Sequence[float]], cap: int = DEFAULT_CAP
) -> WalkSpec:
    """Build a walk carrying the given per-step outcome probabilities.

    For each step, an orthogonal (d+1)x(d+1) matrix U with first row
    (sqrt p_0, ..., sqrt p_d) is completed; the outcome vectors are then
    v_i^j = U[j, i] / sqrt(p_i). The result always validates.
    """
    steps = []
    d = None
    for n, p_raw in enumerate(probabilities):
        p = np.asarray(p_raw, dtype=float)
        if p.ndim != 1 or len(p) < 2:
            raise ValueError(f"step {n}: need at least two outcome probabilities")
        if d is None:
            d = len(p) - 1
        elif len(p) - 1 != d:
            raise ValueError(f"step {n}: outcome count changed from {d + 1} to {len(p)}")
        if np.any(p <= 0.0):
            raise ValueError(f"step {n}: probabilities must be strictly positive")
        total = float(np.add.reduce(p))
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"step {n}: probabilities sum to {total!r}, not 1")
        p = p / total
        u = _complete_orthogonal(np.sqrt(p))
        v = (u[1:] / np.sqrt(p)).T  # (d+1, d)
        steps.append(StepLaw(p, v))
    if not steps:
        raise ValueError("need at least one step")
    return WalkSpec(d=d, N=len(steps) - 1, steps=tuple(steps), cap=cap)


def structure_tensor(walk: WalkSpec, n: int) -> StructureTensor:
    """Tensor phi[i,j,k] = sum_m p_m v_m^i v_m^j v_m^k for the given step."""
    if not 0 <= n <= walk.N:
        raise ValueError(f"step {n} outside [0, {walk.N}]")
    step = walk.steps[n]
    phi = np.einsum("m,mi,mj,mk->ijk", step.p, step.v, step.v, step.v)
    return StructureTensor(step=n, phi=phi)


def structure_residual(walk: WalkSpec, n: int) -> float:
    """Worst pointwise defect of Y^i Y^j = delta^{ij} + sum_k phi[i,j,k] Y^k."""
    step = walk.steps[n]
    phi = structure_tensor(walk, n).phi
    lhs = np.einsum("mi,mj->mij", step.v, step.v)
    rhs = np.eye(walk.d)[None] + np.einsum("ijk,mk->mij", phi, step.v)
    return float(np.max(np.abs(lhs - rhs)))


def increment_rv(walk: WalkSpec, n: int, j: int) -> PathTable:
    """The j-th coordinate of the step-n increment as a path table."""
    if not 0 <= n <= walk.N:
        raise ValueError(f"step {n} outside [0, {walk.N}]")
    if not 1 <= j <= walk.d:
        raise ValueError(f"coordinate {j} outside [1, {walk.d}]")
    return PathTable(walk.space, walk.increments[n][:, j - 1])


def monomial_table(
    walk: WalkSpec, times: Sequence[int], coords: Sequence[int]
) -> PathTable:
    """Pointwise product of increment coordinates Y_{t_1}^{k_1} ... Y_{t_r}^{k_r}."""
    if len(times) != len(coords):
        raise ValueError("times and coords must have equal length")
    values = np.ones(walk.space.num_paths)
    for t, k in zip(times, coords):
        values *= increment_rv(walk, t, k).values
    return PathTable(walk.space, values)


def bernoulli_walk(N: int, p_up: float = 0.5, cap: int = DEFAULT_CAP) -> WalkSpec:
    """One-dimensional walk with P(up) = p_up at every step (outcome 0 = up)."""
    return construct_obtuse([[p_up, 1.0 - p_up]] * (N + 1), cap=cap)
