"""Holonomy algebra estimation and invariant fiber structures.

Two independent estimators feed the same report format: the infinitesimal
route spans the tractor curvature and its covariant derivatives at a base
point, and the loop route takes matrix logs of small-loop holonomies
(squares at the base plus seeded lassos through sample points).  Both are
closed under brackets and orthonormalized.

On top of an estimated algebra, brute-force linear algebra finds the fiber
structures it preserves: symmetric and alternating bilinear forms, complex
structures (through the commutant), and invariant subspaces (through
eigenspace analysis of generic elements).  Every candidate is re-verified
against all generators before being returned.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import logm

from .affine import ChartModel, Curve, max_abs, sample_points
from .expr import eval_many, num
from .projective import cotton_field, weyl_field
from .tractor import connection_matrix_field, loop_holonomy, square_loop

__all__ = [
    "HolonomyAlgebra",
    "StructureCandidate",
    "infinitesimal_algebra",
    "loop_algebra",
    "algebra_from_generators",
    "bracket_closure",
    "compare_spans",
    "invariant_metric",
    "invariant_symplectic",
    "invariant_complex",
    "invariant_subspaces",
    "classify",
    "CLASSIFY_CAVEAT",
]

_ZERO = num(0.0)

CLASSIFY_CAVEAT = "These are not equivalences, however, except in the projectively Einstein case."


@dataclass
class HolonomyAlgebra:
    """Estimated holonomy algebra at a point, as matrices on the fiber."""

    generators: np.ndarray        # raw collected matrices (g, m, m)
    basis: np.ndarray             # orthonormalized basis after closure (rank, m, m)
    rank: int
    tolerance: float
    method: str
    rank_stable: bool
    closed_under_bracket: bool    # true if the raw span was already closed
    closure_rounds: int
    singular_values: np.ndarray
    trace_free_residual: float
    bracket_residual: float
    details: dict = field(default_factory=dict)

    @property
    def fiber_dim(self) -> int:
        return self.basis.shape[1] if self.basis.ndim == 3 else self.generators.shape[1]


@dataclass
class StructureCandidate:
    """A fiber structure preserved by an algebra, with its residual."""

    kind: str                     # metric | symplectic | complex | subspace
    data: np.ndarray | None
    residual: float
    meta: dict = field(default_factory=dict)


# -- span utilities ------------------------------------------------------------------


_SPAN_FLOOR = 1e-10


def _span_basis(mats, m: int, tol: float):
    """Orthonormal basis (Frobenius) of the span of a list of matrices.

    Rank counts singular values above tol times the largest.  A stack whose
    largest singular value sits below an absolute floor is treated as zero:
    evaluating an identically vanishing curvature leaves rounding residue
    that must not be ranked relative to itself.
    """
    if len(mats) == 0:
        return np.zeros((0, m, m)), np.zeros(0), 0
    stack = np.array([np.asarray(a, dtype=float).ravel() for a in mats])
    u, s, vt = np.linalg.svd(stack, full_matrices=False)
    if s.size == 0 or s[0] <= _SPAN_FLOOR:
        return np.zeros((0, m, m)), s, 0
    rank = int(np.sum(s > tol * s[0]))
    return vt[:rank].reshape(rank, m, m), s, rank


def _containment_residual(mats, basis) -> float:
    """Worst relative distance from each matrix to the span of the basis."""
    if len(mats) == 0:
        return 0.0
    worst = 0.0
    flat_basis = basis.reshape(basis.shape[0], -1) if basis.size else None
    for a in mats:
        v = np.asarray(a, dtype=float).ravel()
        norm = np.linalg.norm(v)
        if norm < 1e-14:
            continue
        if flat_basis is None or flat_basis.shape[0] == 0:
            worst = max(worst, 1.0)
            continue
        proj = flat_basis.T @ (flat_basis @ v)
        worst = max(worst, float(np.linalg.norm(v - proj) / norm))
    return worst


def bracket_closure(mats, m: int, tol: float, max_rounds: int = 12):
    """Close a span of matrices under commutators.

    Returns (basis, closed_initially, rounds, bracket_residual).
    """
    basis, _, rank = _span_basis(mats, m, tol)
    closed_initially = None
    rounds = 0
    while rounds < max_rounds:
        rounds += 1
        brackets = []
        for i in range(rank):
            for j in range(i + 1, rank):
                brackets.append(basis[i] @ basis[j] - basis[j] @ basis[i])
        resid = _containment_residual(brackets, basis)
        if closed_initially is None:
            closed_initially = resid <= tol
        if resid <= tol:
            return basis, bool(closed_initially), rounds, resid
        new_basis, _, new_rank = _span_basis(list(basis) + brackets, m, tol)
        basis, rank = new_basis, new_rank
    brackets = [basis[i] @ basis[j] - basis[j] @ basis[i]
                for i in range(rank) for j in range(i + 1, rank)]
    return basis, bool(closed_initially), rounds, _containment_residual(brackets, basis)


def algebra_from_generators(gens, fiber_dim: int | None = None, tol: float = 1e-7,
                            method: str = "provided") -> HolonomyAlgebra:
    """Wrap explicit generator matrices in the standard report format."""
    gens = [np.asarray(g, dtype=float) for g in gens]
    if fiber_dim is None:
        if not gens:
            raise ValueError("fiber_dim is required when no generators are given")
        fiber_dim = gens[0].shape[0]
    m = fiber_dim
    _, svals, rank = _span_basis(gens, m, tol)
    if svals.size and svals[0] > _SPAN_FLOOR:
        ranks = {t: int(np.sum(svals > t * svals[0])) for t in (tol / 10, tol, tol * 10)}
    else:
        ranks = {t: 0 for t in (tol / 10, tol, tol * 10)}
    basis, closed, rounds, bresid = bracket_closure(gens, m, tol)
    tf = max((abs(float(np.trace(a))) / (1.0 + max_abs(a)) for a in gens), default=0.0)
    return HolonomyAlgebra(
        generators=np.array(gens) if gens else np.zeros((0, m, m)),
        basis=basis,
        rank=int(basis.shape[0]),
        tolerance=tol,
        method=method,
        rank_stable=len(set(ranks.values())) == 1,
        closed_under_bracket=closed,
        closure_rounds=rounds,
        singular_values=svals,
        trace_free_residual=tf,
        bracket_residual=bresid,
        details={"span_rank_before_closure": rank, "ranks_by_threshold": ranks},
    )


def compare_spans(a: HolonomyAlgebra, b: HolonomyAlgebra, tol: float = 1e-5) -> dict:
    """Mutual containment report for two estimated algebras."""
    a_in_b = _containment_residual(list(a.basis), b.basis)
    b_in_a = _containment_residual(list(b.basis), a.basis)
    return {
        "rank_a": a.rank,
        "rank_b": b.rank,
        "a_in_b_residual": a_in_b,
        "b_in_a_residual": b_in_a,
        "agree": a.rank == b.rank and max(a_in_b, b_in_a) <= tol,
    }


# -- infinitesimal estimator -----------------------------------------------------------


def _tractor_curvature_symbolic(chart: ChartModel) -> np.ndarray:
    def build():
        n = chart.n
        W = weyl_field(chart)
        CY = cotton_field(chart)
        F = np.empty((n, n, n + 1, n + 1), dtype=object)
        for h in range(n):
            for j in range(n):
                for k in range(n):
                    for l in range(n):
                        F[h, j, k, l] = W[h, j, k, l]
                    F[h, j, n, k] = CY[h, j, k]
                for r in range(n + 1):
                    F[h, j, r, n] = _ZERO
        return F

    return chart.symbolic("Fsym", build)


def _covariant_derivative_level(chart: ChartModel, level: np.ndarray) -> np.ndarray:
    """One covariant derivative of an endomorphism-valued covariant tensor.

    `level` has shape (n,)*r + (n+1, n+1); the output prepends one more
    covariant slot.  Corrections: the commutator with the connection matrix
    for the endomorphism part and -Gamma terms for each form index.
    """
    n = chart.n
    m = n + 1
    M = connection_matrix_field(chart)
    form_rank = level.ndim - 2
    shape = (n,) * (form_rank + 1) + (m, m)
    out = np.empty(shape, dtype=object)
    for a in range(n):
        name = chart.coords[a]
        for idx in np.ndindex(*(n,) * form_rank):
            K = level[idx]
            for r in range(m):
                for s in range(m):
                    term = K[r, s].diff(name)
                    for p in range(m):
                        term = term + (M[a, r, p] * K[p, s] - K[r, p] * M[a, p, s])
                    for slot in range(form_rank):
                        i_s = idx[slot]
                        for q in range(n):
                            swapped = idx[:slot] + (q,) + idx[slot + 1:]
                            term = term - chart.gamma[q, a, i_s] * level[swapped][r, s]
                    out[(a,) + idx + (r, s)] = term
    return out


def _derivative_level(chart: ChartModel, order: int) -> np.ndarray:
    if order == 0:
        return _tractor_curvature_symbolic(chart)
    prev = _derivative_level(chart, order - 1)
    return chart.symbolic(f"Fcov{order}",
                          lambda: _covariant_derivative_level(chart, prev))


def infinitesimal_algebra(chart: ChartModel, point, max_order: int = 3,
                          tol: float = 1e-7) -> HolonomyAlgebra:
    """Span of the tractor curvature and its covariant derivatives at a point.

    Derivative orders are added one at a time; the tower stops early once
    the bracket-closed span stops growing (or fills all of sl), since
    further orders cannot shrink it and higher levels are expensive on
    rational charts.  `max_order` caps the tower either way.
    """
    if not 0 <= max_order <= 3:
        raise ValueError("max_order must be between 0 and 3")
    n = chart.n
    m = n + 1
    env = chart.env(point)
    mats = []
    rank_by_order = []
    basis = np.zeros((0, m, m))
    closed, rounds, bresid = True, 0, 0.0
    orders_used = 0
    for order in range(max_order + 1):
        level = _derivative_level(chart, order)
        vals = np.array(eval_many(level.ravel(), env)).reshape(-1, m, m)
        mats.extend(vals)
        orders_used = order
        basis, closed, rounds, bresid = bracket_closure(mats, m, tol)
        rank_by_order.append(int(basis.shape[0]))
        saturated = rank_by_order[-1] == m * m - 1
        stalled = order > 0 and rank_by_order[-1] == rank_by_order[-2]
        if saturated or stalled:
            break
    raw = np.array(mats)
    _, svals, rank = _span_basis(mats, m, tol)
    if svals.size and svals[0] > _SPAN_FLOOR:
        ranks = {t: int(np.sum(svals > t * svals[0])) for t in (tol / 10, tol, tol * 10)}
    else:
        ranks = {t: 0 for t in (tol / 10, tol, tol * 10)}
    stable = len(set(ranks.values())) == 1
    tf = max(
        (abs(float(np.trace(a))) / (1.0 + max_abs(a)) for a in mats),
        default=0.0,
    )
    return HolonomyAlgebra(
        generators=raw,
        basis=basis,
        rank=int(basis.shape[0]),
        tolerance=tol,
        method="infinitesimal",
        rank_stable=stable,
        closed_under_bracket=closed,
        closure_rounds=rounds,
        singular_values=svals,
        trace_free_residual=tf,
        bracket_residual=bresid,
        details={"span_rank_before_closure": rank, "ranks_by_threshold": ranks,
                 "max_order": max_order, "orders_used": orders_used,
                 "rank_by_order": rank_by_order},
    )


# -- loop estimator ----------------------------------------------------------------------


def _guarded_log(chart: ChartModel, loop_segments, ode_tol: float, max_retries: int = 5):
    """Principal log of a loop holonomy, shrinking the loop if it leaves the branch."""
    segs = loop_segments
    for attempt in range(max_retries + 1):
        H, rep = loop_holonomy(chart, segs, tol=ode_tol)
        if max_abs(H - np.eye(H.shape[0])) < 1.0:
            log = logm(H)
            return np.real(log), rep, attempt
        # shrink towards the base point of the loop
        base = segs[0].point(segs[0].t0) if not isinstance(segs, Curve) else segs.point(segs.t0)
        shrunk = []
        for s in (segs if not isinstance(segs, Curve) else [segs]):
            a = s.point(s.t0)
            b = s.point(s.t1)
            shrunk.append(Curve.segment(base + 0.5 * (a - base), base + 0.5 * (b - base)))
        segs = shrunk
    raise RuntimeError("loop holonomy stayed outside the log branch radius after retries")


def _default_loop_family(chart: ChartModel, base, count: int, seed: int, eps: float):
    n = chart.n
    base = np.asarray(base, dtype=float)
    loops = []
    for i in range(n):
        for j in range(i + 1, n):
            loops.append(square_loop(base, i, j, eps))
    rng = np.random.default_rng(seed)
    anchors = sample_points(chart, seed=seed, n_random=max(count, 1), n_grid=0)
    center = chart.center()
    for k in range(count):
        # pull anchors toward the center so the attached square stays inside
        p = center + 0.8 * (anchors[k % len(anchors)] - center)
        i, j = rng.choice(n, size=2, replace=False)
        lasso = [Curve.segment(base, p)]
        lasso.extend(square_loop(p, int(i), int(j), eps))
        lasso.append(Curve.segment(p, base))
        loops.append(lasso)
    return loops


def loop_algebra(chart: ChartModel, base_point, loop_family=None, count: int = 6,
                 seed: int = 0, eps: float = 0.08, tol: float = 1e-7,
                 ode_tol: float = 1e-10, log_floor: float = 1e-8,
                 max_order: int = 3) -> HolonomyAlgebra:
    """Algebra spanned by logs of small-loop holonomies, merged with the
    infinitesimal estimate at the same point."""
    base = np.asarray(base_point, dtype=float)
    m = chart.n + 1
    if loop_family is None:
        loop_family = _default_loop_family(chart, base, count, seed, eps)
    logs = []
    retries = 0
    for loop in loop_family:
        log, _, attempts = _guarded_log(chart, loop, ode_tol)
        retries += attempts
        norm = float(np.linalg.norm(log))
        if norm > log_floor:
            logs.append(log / norm)
    loops_basis, svals, loops_rank = _span_basis(logs, m, tol)
    inf = infinitesimal_algebra(chart, base, max_order=max_order, tol=tol)
    merged = list(inf.basis) + logs
    basis, closed, rounds, bresid = bracket_closure(merged, m, tol)
    tf = max((abs(float(np.trace(a))) for a in logs), default=0.0)
    return HolonomyAlgebra(
        generators=np.array(logs) if logs else np.zeros((0, m, m)),
        basis=basis,
        rank=int(basis.shape[0]),
        tolerance=tol,
        method="loops+infinitesimal",
        rank_stable=inf.rank_stable,
        closed_under_bracket=closed,
        closure_rounds=rounds,
        singular_values=svals,
        trace_free_residual=tf,
        bracket_residual=bresid,
        details={
            "loops_only_rank": loops_rank,
            "infinitesimal_rank": inf.rank,
            "n_loops": len(loop_family),
            "log_retries": retries,
            "loops_in_infinitesimal_residual": _containment_residual(logs, inf.basis),
        },
    )


# -- invariant structure detection ---------------------------------------------------------


def _sym_basis(m: int):
    out = []
    for i in range(m):
        for j in range(i, m):
            E = np.zeros((m, m))
            E[i, j] = E[j, i] = 1.0
            out.append(E)
    return out


def _antisym_basis(m: int):
    out = []
    for i in range(m):
        for j in range(i + 1, m):
            E = np.zeros((m, m))
            E[i, j] = 1.0
            E[j, i] = -1.0
            out.append(E)
    return out


def _bilinear_solutions(gens, m: int, symmetric: bool, tol: float):
    """Null space of h -> A^T h + h A over the (anti)symmetric matrices.

    Columns of the assembled matrix are indexed by basis forms, rows by
    (generator, matrix entry); coefficient vectors in the null space give
    forms annihilated by every generator at once.
    """
    basis = _sym_basis(m) if symmetric else _antisym_basis(m)
    cols = []
    for E in basis:
        col = [((A.T @ E + E @ A) / (1.0 + max_abs(A))).ravel() for A in gens]
        cols.append(np.concatenate(col))
    Lmat = np.array(cols).T
    u, s, vt = np.linalg.svd(Lmat, full_matrices=True)
    if s.size == 0:
        null_dim = len(basis)
    else:
        null_dim = int(np.sum(s <= tol * s[0])) + max(0, len(basis) - s.size)
    sols = []
    for k in range(null_dim):
        coeffs = vt[len(basis) - 1 - k]
        H = sum(c * E for c, E in zip(coeffs, basis))
        H = H / np.linalg.norm(H)
        sols.append(H)
    return sols, s


def _verify_bilinear(gens, H) -> float:
    worst = 0.0
    for A in gens:
        scale = (1.0 + max_abs(A)) * (1.0 + max_abs(H))
        worst = max(worst, max_abs(A.T @ H + H @ A) / scale)
    return worst


def _signature(H, tol: float = 1e-9):
    vals = np.linalg.eigvalsh(0.5 * (H + H.T))
    scale = max(1.0, float(np.abs(vals).max()))
    pos = int(np.sum(vals > tol * scale))
    neg = int(np.sum(vals < -tol * scale))
    zero = H.shape[0] - pos - neg
    return pos, neg, zero


def invariant_metric(alg: HolonomyAlgebra, tol: float = 1e-7):
    """Symmetric bilinear form fixed by every generator, if one exists."""
    m = alg.fiber_dim
    gens = list(alg.basis)
    if len(gens) == 0:
        return StructureCandidate("metric", None, 0.0,
                                  {"trivial": True,
                                   "note": "trivial holonomy, not informative"})
    sols, svals = _bilinear_solutions(gens, m, symmetric=True, tol=tol)
    candidates = list(sols)
    if len(sols) > 1:
        # individual null vectors can be degenerate while the space holds a
        # nondegenerate form; try a few seeded combinations as well
        rng = np.random.default_rng(2)
        for _ in range(4):
            H = sum(c * S for c, S in zip(rng.normal(size=len(sols)), sols))
            candidates.append(H / np.linalg.norm(H))
    best = None
    for H in candidates:
        p, q, z = _signature(H)
        if z > 0:
            continue
        if q > p:
            H, p, q = -H, q, p
        resid = _verify_bilinear(gens, H)
        if resid > tol:
            continue
        if best is None or resid < best.residual:
            best = StructureCandidate("metric", H, resid,
                                      {"signature": (p, q),
                                       "solution_space_dim": len(sols)})
    return best


def invariant_symplectic(alg: HolonomyAlgebra, tol: float = 1e-7):
    """Antisymmetric bilinear form fixed by every generator, if one exists."""
    m = alg.fiber_dim
    gens = list(alg.basis)
    if len(gens) == 0:
        return StructureCandidate("symplectic", None, 0.0,
                                  {"trivial": True,
                                   "note": "trivial holonomy, not informative"})
    if m % 2 == 1:
        return None
    sols, _ = _bilinear_solutions(gens, m, symmetric=False, tol=tol)
    best = None
    for W in sols:
        if abs(np.linalg.det(W)) < 1e-10:
            continue
        resid = _verify_bilinear(gens, W)
        if resid > tol:
            continue
        if best is None or resid < best.residual:
            best = StructureCandidate("symplectic", W, resid,
                                      {"solution_space_dim": len(sols)})
    return best


def _commutant(gens, m: int, tol: float):
    rows = []
    for A in gens:
        scale = 1.0 + max_abs(A)
        I = np.eye(m)
        op = (np.kron(A, I) - np.kron(I, A.T)) / scale
        rows.append(op)
    L = np.vstack(rows)
    u, s, vt = np.linalg.svd(L)
    null_dim = int(np.sum(s <= tol * s[0])) + (m * m - s.size)
    basis = [vt[m * m - 1 - k].reshape(m, m) for k in range(null_dim)]
    return basis


def _complex_from_element(B, tol: float):
    vals, vecs = np.linalg.eig(B)
    scale = 1.0 + float(np.abs(vals).max())
    if np.any(np.abs(vals.imag) <= 1e-8 * scale):
        return None
    J = np.real(vecs @ np.diag(1j * np.sign(vals.imag)) @ np.linalg.inv(vecs))
    if max_abs(J @ J + np.eye(B.shape[0])) > tol:
        return None
    return J


def invariant_complex(alg: HolonomyAlgebra, seed: int = 0, tol: float = 1e-6):
    """Complex structure commuting with every generator, if one exists."""
    m = alg.fiber_dim
    gens = list(alg.basis)
    if len(gens) == 0:
        return StructureCandidate("complex", None, 0.0,
                                  {"trivial": True,
                                   "note": "trivial holonomy, not informative"})
    if m % 2 == 1:
        return None
    comm = _commutant(gens, m, tol=1e-9)
    if not comm:
        return None
    rng = np.random.default_rng(seed)
    J = None
    for attempt in range(2):
        coeffs = rng.normal(size=len(comm))
        B = sum(c * C for c, C in zip(coeffs, comm))
        J = _complex_from_element(B, tol)
        if J is not None:
            break
    if J is None:
        return None
    resid = max(max_abs(A @ J - J @ A) / (1.0 + max_abs(A)) for A in gens)
    if resid > tol:
        return None
    meta = {"commutant_dim": len(comm), "square_residual": max_abs(J @ J + np.eye(m))}
    # best-effort check for an anticommuting partner (hypercomplex hint)
    partner = _anticommuting_partner(comm, J, rng, tol)
    meta["anticommuting_partner_found"] = partner is not None
    return StructureCandidate("complex", J, resid, meta)


def _anticommuting_partner(comm, J, rng, tol: float):
    """Search the commutant for a second complex structure anticommuting with J."""
    if not comm:
        return None
    anti = np.array([(C @ J + J @ C).ravel() for C in comm])
    G = anti @ anti.T
    w, v = np.linalg.eigh(G)
    scale = max(1.0, float(w.max()))
    null = [v[:, k] for k in range(len(w)) if w[k] <= 1e-12 * scale]
    for coeff in null:
        B = sum(c * C for c, C in zip(coeff, comm))
        if np.linalg.norm(B) < 1e-9:
            continue
        K = _complex_from_element(B, tol)
        if K is not None and max_abs(K @ J + J @ K) <= tol * 10:
            return K
    return None


def invariant_subspaces(alg: HolonomyAlgebra, k: int | None = None, seed: int = 0,
                        tol: float = 1e-7, n_trials: int = 2):
    """Invariant proper subspaces of the fiber, by eigenspace analysis."""
    m = alg.fiber_dim
    gens = list(alg.basis)
    if len(gens) == 0:
        return [StructureCandidate("subspace", None, 0.0,
                                   {"trivial": True,
                                    "note": "trivial holonomy, not informative"})]
    rng = np.random.default_rng(seed)
    found = []
    for trial in range(n_trials):
        coeffs = rng.normal(size=len(gens))
        C = sum(c * A for c, A in zip(coeffs, gens))
        vals, vecs = np.linalg.eig(C)
        scale = 1.0 + float(np.abs(vals).max())
        atoms = []
        used = set()
        for idx in range(len(vals)):
            if idx in used:
                continue
            if abs(vals[idx].imag) <= 1e-9 * scale:
                v = np.real(vecs[:, idx])
                if np.linalg.norm(v) > 1e-12:
                    atoms.append(v[:, None] / np.linalg.norm(v))
                used.add(idx)
            else:
                pair = None
                for jdx in range(idx + 1, len(vals)):
                    if jdx not in used and abs(vals[jdx] - np.conj(vals[idx])) <= 1e-8 * scale:
                        pair = jdx
                        break
                block = np.column_stack([np.real(vecs[:, idx]), np.imag(vecs[:, idx])])
                atoms.append(block)
                used.add(idx)
                if pair is not None:
                    used.add(pair)
        if len(atoms) > 9:
            atoms = atoms[:9]
        for mask in range(1, 2 ** len(atoms) - 1):
            cols = [atoms[i] for i in range(len(atoms)) if mask & (1 << i)]
            Braw = np.column_stack(cols)
            q, r = np.linalg.qr(Braw)
            keep = np.abs(np.diag(r)) > 1e-10
            q = q[:, keep]
            dim = q.shape[1]
            if dim == 0 or dim >= m:
                continue
            if k is not None and dim != k:
                continue
            proj = q @ q.T
            resid = max(max_abs((np.eye(m) - proj) @ A @ proj) / (1.0 + max_abs(A))
                        for A in gens)
            if resid <= tol:
                found.append(StructureCandidate("subspace", q, resid, {"dim": dim}))
    # dedupe by projector distance
    unique = []
    for cand in sorted(found, key=lambda c: (c.meta["dim"], c.residual)):
        proj = cand.data @ cand.data.T
        if all(max_abs(proj - u.data @ u.data.T) > 1e-6 for u in unique):
            unique.append(cand)
    return unique


# -- classification report -------------------------------------------------------------------


def _algebra_dimension_labels(m: int, rank: int):
    """Name standard algebras on an m-dimensional fiber matching a given dimension.

    Dimension agreement is a label, not a classification: several families
    share dimensions and the estimate carries numerical rank only.
    """
    table = [
        (f"sl({m},R)", m * m - 1),
        (f"so(p,q), p+q={m}", m * (m - 1) // 2),
    ]
    if m % 2 == 0:
        h = m // 2
        table.append((f"sl({h},C)", 2 * (h * h - 1)))
        table.append((f"su(p,q), p+q={h}", h * h - 1))
        table.append((f"sp({m},R)", h * (m + 1)))
        table.append((f"so({h},C)", h * (h - 1)))
    if m % 4 == 0:
        qd = m // 4
        table.append((f"sl({qd},H)", 4 * qd * qd - 1))
        table.append((f"sp(p,q), p+q={qd}, +sp(1)", qd * (2 * qd + 1) + 3))
    if m == 7:
        table.append(("g2", 14))
    if m == 8:
        table.append(("spin(7)", 21))
    return sorted({name for name, dim in table if dim == rank})


def classify(alg: HolonomyAlgebra, candidates) -> dict:
    """Map detected fiber structures to geometric structure labels.

    The mapping (preserved structure -> geometric structure) is the label
    dictionary only; apart from the metric case these are not equivalences,
    and the report says so.
    """
    labels = []
    equivalences = {}
    trivial = alg.rank == 0
    for cand in candidates:
        if cand is None or (cand.meta or {}).get("trivial"):
            continue
        if cand.kind == "metric":
            labels.append("Einstein manifold")
            equivalences["Einstein manifold"] = True
        elif cand.kind == "symplectic":
            labels.append("Contact manifold")
            equivalences["Contact manifold"] = False
        elif cand.kind == "complex":
            labels.append("U(1)-bundle over a complex manifold")
            equivalences["U(1)-bundle over a complex manifold"] = False
            if cand.meta.get("anticommuting_partner_found"):
                labels.append("Sp(1,H)-bundle over a quaternionic manifold")
                equivalences["Sp(1,H)-bundle over a quaternionic manifold"] = False
        elif cand.kind == "subspace":
            labels.append("Foliation by Ricci-flat leaves")
            equivalences["Foliation by Ricci-flat leaves"] = False
    labels = list(dict.fromkeys(labels))
    return {
        "labels": labels,
        "equivalences": equivalences,
        "caveat": CLASSIFY_CAVEAT,
        "trivial_holonomy": trivial,
        "estimator": alg.method,
        "algebra_rank": alg.rank,
        "dimension_matches": _algebra_dimension_labels(alg.fiber_dim, alg.rank),
    }
