"""GMRES, Calderon operator preconditioning, and end-to-end solves.

Systems here are complex symmetric, consistent, and typically singular
(the multi-trace discretization carries a known nullspace), so the solver
is full unrestarted GMRES with modified Gram-Schmidt and Givens rotations;
for a consistent system started from zero the iterates stay inside the
Krylov space of the right-hand side and converge without any special
nullspace handling.

The preconditioner is the operator map r -> M^{-1} B (M^{-T} r) with B a
block-diagonal opposite-order operator on per-panel dual spaces and M the
primal-dual duality Gram. Gram inverses are applied by nested GMRES runs
to a much tighter tolerance; their iteration counts are accumulated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import (GalerkinMatrix, IncidentWave, KernelConfig,
                       assemble_duality, assemble_hypersingular,
                       assemble_rhs, assemble_single_layer)
from .errors import ConvergenceError, DimensionBudgetError, ReductionError
from .geometry import MultiScreen
from .quadrature import QuadratureConfig
from .spaces import (FULL, FunctionSpace, ReductionStrategy, expected_nullity,
                     multitrace_space)

DENSE_BUDGET = 4000


@dataclass
class SolveConfig:
    """Tolerances and caps for the nested GMRES solves."""

    outer_tol: float = 2.0e-5
    inner_tol: float = 2.0e-12
    max_outer: Optional[int] = None          # default: system dimension
    max_inner: Optional[int] = None          # default: Gram dimension
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    precond_quadrature: QuadratureConfig = field(
        default_factory=lambda: QuadratureConfig(order=4, far_order=2))
    rhs_strength: int = 6

    def __post_init__(self):
        if not (0.0 < self.inner_tol < self.outer_tol < 1.0):
            raise ValueError("tolerances must satisfy "
                             "0 < inner_tol < outer_tol < 1")


@dataclass
class SolveReport:
    """Everything a solve produced, ready for CSV serialization."""

    problem: str
    geometry: str
    reduction: str
    preconditioned: bool
    kappa: complex
    h: float
    ndof: int
    coefficients: np.ndarray
    iterations: int
    residual_history: np.ndarray
    inner_iteration_total: int
    converged: bool
    nullity_predicted: Optional[int]
    space: FunctionSpace
    right_hand_side: np.ndarray
    direction: tuple
    cond_est: Optional[float] = None
    nullity_measured: Optional[int] = None

    @property
    def final_residual(self) -> float:
        return float(self.residual_history[-1])


def gmres(apply, b: np.ndarray, tol: float = 1e-8,
          maxit: Optional[int] = None):
    """Full GMRES with modified Gram-Schmidt, started from zero.

    apply: linear map (callable or matrix with @). Returns
    (x, iterations, residual_history, converged); the history holds the
    relative residual after each step, starting at 1.0. A Hessenberg
    subdiagonal below 1e-14 * ||b|| means the Krylov space is invariant
    (lucky breakdown) and counts as convergence.
    """
    matvec = apply if callable(apply) else (lambda v: apply @ v)
    b = np.asarray(b, dtype=np.complex128)
    n = len(b)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n, dtype=np.complex128), 0, np.zeros(1), True
    if maxit is None:
        maxit = n
    maxit = max(1, min(maxit, n))
    V = np.empty((maxit + 1, n), dtype=np.complex128)
    H = np.zeros((maxit + 1, maxit), dtype=np.complex128)
    g = np.zeros(maxit + 1, dtype=np.complex128)
    giv = np.empty((maxit, 2), dtype=np.complex128)
    V[0] = b / bnorm
    g[0] = bnorm
    history = [1.0]
    converged = False
    k = 0
    for k in range(maxit):
        w = matvec(V[k])
        for i in range(k + 1):
            hik = np.vdot(V[i], w)
            H[i, k] = hik
            w -= hik * V[i]
        hnext = np.linalg.norm(w)
        H[k + 1, k] = hnext
        lucky = hnext <= 1e-14 * bnorm
        if not lucky:
            V[k + 1] = w / hnext
        # previous rotations, then a new one zeroing H[k+1, k]
        for i in range(k):
            g1, g2 = giv[i]
            a, c = H[i, k], H[i + 1, k]
            H[i, k] = g1 * a + g2 * c
            H[i + 1, k] = -np.conj(g2) * a + np.conj(g1) * c
        a, c = H[k, k], H[k + 1, k]
        r = np.hypot(abs(a), abs(c))
        if r == 0.0:
            g1, g2 = 1.0 + 0j, 0.0 + 0j
        else:
            g1, g2 = np.conj(a) / r, np.conj(c) / r
        giv[k] = g1, g2
        H[k, k] = r
        H[k + 1, k] = 0.0
        g[k + 1] = -np.conj(g2) * g[k]
        g[k] = g1 * g[k]
        rel = abs(g[k + 1]) / bnorm
        history.append(rel)
        if rel <= tol or lucky:
            converged = True
            k += 1
            break
    else:
        k = maxit
    y = np.linalg.solve(H[:k, :k], g[:k]) if k else np.zeros(0)
    x = V[:k].T @ y if k else np.zeros(n, dtype=np.complex128)
    return x, k, np.asarray(history), converged


class CalderonPreconditioner:
    """Left preconditioner r -> M^{-1} B (M^{-T} r).

    B is the block-diagonal opposite-order operator on the dual spaces and
    M the primal-dual duality Gram (plain transpose, bilinear pairing).
    Each Gram inverse runs an inner GMRES from zero to inner_tol;
    accumulated counts are exposed as inner_iterations.
    """

    def __init__(self, B, M, cfg: SolveConfig):
        self.B = B.entries if isinstance(B, GalerkinMatrix) else B
        M = M.entries if isinstance(M, GalerkinMatrix) else M
        self.M = sp.csr_matrix(M).astype(np.complex128)
        self.Mt = self.M.T.tocsr()
        if self.M.shape[0] != self.M.shape[1]:
            raise ValueError("duality Gram must be square")
        if self.B.shape != self.M.shape:
            raise ValueError("preconditioner blocks and Gram dimension "
                             "mismatch")
        self.cfg = cfg
        self.inner_iterations = 0

    def _gram_solve(self, A, rhs: np.ndarray) -> np.ndarray:
        n = len(rhs)
        maxit = self.cfg.max_inner or n
        x, it, hist, ok = gmres(lambda v: A @ v, rhs,
                                tol=self.cfg.inner_tol, maxit=maxit)
        self.inner_iterations += it
        if not ok:
            raise ConvergenceError(
                f"Gram inner solve stalled at residual {hist[-1]:.3e} "
                f"after {it} iterations")
        return x

    def matvec(self, r: np.ndarray) -> np.ndarray:
        z = self._gram_solve(self.Mt, r)
        return self._gram_solve(self.M, self.B @ z)

    __call__ = matvec

    def dense_apply(self, A: np.ndarray) -> np.ndarray:
        """P @ A via a direct sparse factorization (diagnostics path)."""
        lu = spla.splu(self.M.tocsc())
        Y = lu.solve(np.asarray(A, dtype=np.complex128), trans="T")
        return lu.solve(np.asarray(self.B @ Y))


def make_calderon_preconditioner(B, M, cfg: SolveConfig = None):
    """Operator preconditioner from block operator B and duality Gram M."""
    return CalderonPreconditioner(B, M, cfg or SolveConfig())


# ----------------------------------------------------------------------
# Assembly caching (matrices are reused across reductions and variants)
# ----------------------------------------------------------------------


def _screen_key(screen: MultiScreen):
    return (screen.name, float(screen.h), float(screen.side))


def _quad_key(q: QuadratureConfig):
    return (q.order, q.far_order, float(q.near_threshold))


def _single_block_space(space: FunctionSpace, index: int) -> FunctionSpace:
    return FunctionSpace(kind=space.kind, blocks=(space.blocks[index],),
                         screen=space.screen, problem=space.problem,
                         side=space.side, reduction=space.reduction)


class AssemblyCache:
    """Value-keyed store for assembled operators within one process.

    Reduced systems are exact submatrices of the Full system (a kept basis
    function and its pair integrals do not change when other panels or
    strips are dropped), so only the Full matrix is assembled and reduced
    variants are sliced out by (panel, anchor) identity. Per-panel
    preconditioner blocks are shared between reductions whenever the panel
    carrier is untruncated.
    """

    def __init__(self):
        self._systems: dict = {}
        self._bblocks: dict = {}

    def clear(self) -> None:
        self._systems.clear()
        self._bblocks.clear()

    def _assemble(self, space, kappa, quad, operator):
        cfg = KernelConfig(kappa=kappa)
        if operator == "single-layer":
            return assemble_single_layer(space, space, cfg, quad).entries
        return assemble_hypersingular(space, space, cfg, quad).entries

    def system(self, screen: MultiScreen, problem: str, kappa: complex,
               quad: QuadratureConfig,
               reduction: ReductionStrategy) -> tuple:
        """(primal space, system matrix) for the requested reduction."""
        space = multitrace_space(screen, problem, "primal", reduction)
        key = (_screen_key(screen), problem, complex(kappa), _quad_key(quad))
        op = "single-layer" if problem == "dirichlet" else "hypersingular"
        if key not in self._systems:
            full = multitrace_space(screen, problem, "primal", FULL)
            A = self._assemble(full, kappa, quad, op)
            index = {(m.panel, m.gid): i for i, m in enumerate(full.dof_meta)}
            self._systems[key] = (A, index)
        A_full, index = self._systems[key]
        if reduction.is_full:
            return space, A_full
        take = np.array([index[(m.panel, m.gid)] for m in space.dof_meta])
        return space, np.ascontiguousarray(A_full[np.ix_(take, take)])

    def precond_block(self, screen: MultiScreen, dual_space: FunctionSpace,
                      index: int, kappa: complex,
                      quad: QuadratureConfig) -> np.ndarray:
        block = dual_space.blocks[index]
        pm = screen.panel_meshes[block.panel]
        refined_full = block.carrier.refinement is not None and \
            block.carrier.refinement.parent is pm.mesh
        tag = "full" if refined_full else dual_space.reduction.label()
        # opposite-order operator: hypersingular blocks precondition the
        # single-layer system and vice versa
        op = ("hypersingular" if dual_space.problem == "dirichlet"
              else "single-layer")
        key = (_screen_key(screen), dual_space.problem, complex(kappa),
               _quad_key(quad), block.panel, tag)
        if key not in self._bblocks:
            one = _single_block_space(dual_space, index)
            self._bblocks[key] = self._assemble(one, kappa, quad, op)
        return self._bblocks[key]


def _block_diag_operator(blocks) -> np.ndarray:
    n = sum(b.shape[0] for b in blocks)
    out = np.zeros((n, n), dtype=np.complex128)
    at = 0
    for b in blocks:
        out[at:at + b.shape[0], at:at + b.shape[1]] = b
        at += b.shape[0]
    return out


def _solve(screen: MultiScreen, problem: str, kappa: complex,
           reduction: ReductionStrategy, precondition: bool,
           cfg: SolveConfig, direction, cache: Optional[AssemblyCache]):
    cfg = cfg or SolveConfig()
    kappa = complex(kappa)
    own_cache = cache or AssemblyCache()
    primal, A = own_cache.system(screen, problem, kappa, cfg.quadrature,
                                 reduction)
    wave = IncidentWave(direction=tuple(direction), kappa=kappa)
    g = assemble_rhs(primal, wave, problem, strength=cfg.rhs_strength)

    inner_total = 0
    if precondition:
        dual = multitrace_space(screen, problem, "dual", reduction)
        blocks = [own_cache.precond_block(screen, dual, i, kappa,
                                          cfg.precond_quadrature)
                  for i in range(len(dual.blocks))]
        M = assemble_duality(dual, primal)
        P = CalderonPreconditioner(_block_diag_operator(blocks), M, cfg)
        rhs = P.matvec(g)
        op = lambda v: P.matvec(A @ v)
    else:
        P = None
        rhs = g
        op = lambda v: A @ v

    maxit = cfg.max_outer or len(rhs)
    x, iters, history, ok = gmres(op, rhs, tol=cfg.outer_tol, maxit=maxit)
    if P is not None:
        inner_total = P.inner_iterations
    try:
        nullity = expected_nullity(screen, primal)
    except ReductionError:
        nullity = None        # overlapping coverings: numerical rank only
    return SolveReport(
        problem=problem, geometry=screen.name, reduction=reduction.label(),
        preconditioned=precondition, kappa=kappa, h=float(screen.h),
        ndof=primal.dimension, coefficients=x, iterations=iters,
        residual_history=history, inner_iteration_total=inner_total,
        converged=ok, nullity_predicted=nullity,
        space=primal, right_hand_side=g, direction=tuple(direction))


def solve_dirichlet(screen: MultiScreen, kappa: complex,
                    reduction: ReductionStrategy = FULL,
                    precondition: bool = True,
                    cfg: SolveConfig = None,
                    direction=(0.0, 0.0, 1.0),
                    cache: Optional[AssemblyCache] = None) -> SolveReport:
    """Soft (sound-soft) scattering: single-layer system for the jump of
    the normal derivative, hypersingular opposite-order blocks."""
    return _solve(screen, "dirichlet", kappa, reduction, precondition,
                  cfg, direction, cache)


def solve_neumann(screen: MultiScreen, kappa: complex,
                  reduction: ReductionStrategy = FULL,
                  precondition: bool = True,
                  cfg: SolveConfig = None,
                  direction=(0.0, 0.0, 1.0),
                  cache: Optional[AssemblyCache] = None) -> SolveReport:
    """Hard (sound-hard) scattering: hypersingular system for the jump of
    the trace, single-layer opposite-order blocks."""
    return _solve(screen, "neumann", kappa, reduction, precondition,
                  cfg, direction, cache)


def effective_condition_number(A, P=None, budget: int = DENSE_BUDGET):
    """(cond, nullity) from the singular values of P A (or A).

    nullity counts singular values below 1e-8 of the largest; cond is the
    ratio of the largest to the smallest one above that cut. Dimensions
    beyond the budget are refused: use iteration counts instead.
    """
    Amat = A.entries if isinstance(A, GalerkinMatrix) else np.asarray(A)
    n = Amat.shape[0]
    if n > budget:
        raise DimensionBudgetError(
            f"dimension {n} exceeds the dense-spectrum budget {budget}; "
            "compare iteration counts instead")
    if P is not None:
        Amat = P.dense_apply(Amat)
    sv = np.linalg.svd(Amat, compute_uv=False)
    nullity = int(np.sum(sv < 1e-8 * sv[0]))
    keep = sv[:n - nullity] if nullity else sv
    cond = float(keep[0] / keep[-1])
    return cond, nullity
