"""Worst-case sensitivity search over independent binding sets.

The worst-case sensitivity of generator ``i`` to load ``j`` is the maximum
of ``|J[i, j]|`` over every binding set (generator subset plus branch subset
totalling ``n_gen - 1`` members) whose constraint stack is invertible.
Enumeration is exhaustive (the problem is discrete and non-convex);
candidate sets are scanned in lexicographic order and ties are resolved
toward the lexicographically smallest set, so results do not depend on
chunking or thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy.linalg import lapack as _lapack

from .errors import DegeneratePoint, DependentBindings, EmptyLoadSet, NoValidSet
from .jacobian import BindingSet, jacobian_from_binding
from .linalg import RANK_REL_TOL
from .network import Network

#: two candidate values within this of each other count as a tie
TIE_TOL = 1e-9


def _lex_subsets(n: int, max_size: int) -> Iterator[tuple[int, ...]]:
    """All subsets of ``range(n)`` up to ``max_size``, lexicographic order."""
    prefix: list[int] = []

    def rec(start: int) -> Iterator[tuple[int, ...]]:
        yield tuple(prefix)
        if len(prefix) < max_size:
            for v in range(start, n):
                prefix.append(v)
                yield from rec(v + 1)
                prefix.pop()

    yield from rec(0)


def candidate_sets(net: Network) -> Iterator[tuple[tuple[int, ...], tuple[int, ...]]]:
    """All generator/branch set pairs of the required total size, in
    lexicographic order (generator subset first, then branch subset)."""
    need_total = net.n_gen - 1
    for sg in _lex_subsets(net.n_gen, need_total):
        need = need_total - len(sg)
        if need > net.n_edge:
            continue
        for sb in combinations(range(net.n_edge), need):
            yield sg, sb


def candidate_count(net: Network) -> int:
    """Number of cardinality-feasible sets, before the independence filter."""
    k_max = net.n_gen - 1
    return sum(
        math.comb(net.n_gen, k) * math.comb(net.n_edge, k_max - k)
        for k in range(k_max + 1)
        if k_max - k <= net.n_edge
    )


class _StackScanner:
    """Shared per-set factorization with the project independence criterion."""

    def __init__(self, net: Network, rank_tol: float = RANK_REL_TOL):
        n, n_g = net.n_bus, net.n_gen
        e1 = np.zeros((1, n))
        e1[0, 0] = 1.0
        # row pool: loads block stays fixed; gen/branch rows selected per set
        self.pool = np.vstack([net.laplacian[n_g:, :], net.laplacian[:n_g, :],
                               net.flow_matrix, e1])
        self.n = n
        self.n_load = net.n_load
        self.gen_rows = net.laplacian[:n_g, :]
        self.base_idx = list(range(net.n_load))
        self.gen_ofs = net.n_load
        self.branch_ofs = net.n_load + n_g
        self.last = self.pool.shape[0] - 1
        self.rank_tol = rank_tol

    def factorize(self, sg: Sequence[int], sb: Sequence[int]):
        """LU factors of the stack, or ``None`` if the set is dependent."""
        idx = (
            self.base_idx
            + [self.gen_ofs + g for g in sg]
            + [self.branch_ofs + e for e in sb]
            + [self.last]
        )
        stack = self.pool[idx]
        lu, piv, info = _lapack.dgetrf(stack)
        if info > 0:  # exact zero pivot
            return None
        if info < 0:
            raise ValueError(f"dgetrf: bad argument {-info}")
        d = np.abs(np.diag(lu))
        if d.min() <= self.rank_tol * d.max():
            return None
        return lu, piv

    @staticmethod
    def solve(factors, rhs: np.ndarray, trans: int = 0) -> np.ndarray:
        lu, piv = factors
        x, info = _lapack.dgetrs(lu, piv, rhs, trans=trans)
        if info != 0:
            raise ValueError(f"dgetrs: bad argument {-info}")
        return x


def _chunks(items: list, n_chunks: int) -> list[list]:
    size = max(1, math.ceil(len(items) / n_chunks))
    return [items[i : i + size] for i in range(0, len(items), size)]


def _better(val_a: float, key_a, val_b: float, key_b) -> bool:
    """True when (val_a, key_a) beats (val_b, key_b): larger value, then
    lexicographically smaller set. Total order, so reduction is associative."""
    if val_a != val_b:
        return val_a > val_b
    return key_b is None or (key_a is not None and key_a < key_b)


def enumerate_binding_sets(net: Network, rank_tol: float = RANK_REL_TOL) -> Iterator[BindingSet]:
    """Yield every independent binding set in lexicographic order."""
    scanner = _StackScanner(net, rank_tol)
    for sg, sb in candidate_sets(net):
        if scanner.factorize(sg, sb) is not None:
            yield BindingSet(gens=sg, branches=sb)


@dataclass(frozen=True)
class SensitivityReport:
    """Worst-case sensitivity of every generator-load pair.

    ``cwc[i, j]`` is the worst case for generator ``i`` and load ``j``;
    ``argmax[i][j]`` the lexicographically smallest achieving set.
    """

    cwc: np.ndarray
    argmax: tuple[tuple[BindingSet, ...], ...]
    candidates_total: int
    candidates_valid: int


def _scan_scalar(
    net: Network,
    score: Callable[[_StackScanner, object], float],
    threads: int = 1,
    rank_tol: float = RANK_REL_TOL,
) -> tuple[float, BindingSet, int, int]:
    """Maximize a per-set scalar over all candidates. Returns
    ``(value, argmax, total, valid)``."""
    scanner = _StackScanner(net, rank_tol)
    cands = list(candidate_sets(net))

    def scan(chunk):
        best, key, valid = -1.0, None, 0
        for sg, sb in chunk:
            factors = scanner.factorize(sg, sb)
            if factors is None:
                continue
            valid += 1
            val = score(scanner, factors)
            if _better(val, (sg, sb), best, key):
                best, key = val, (sg, sb)
        return best, key, valid

    if threads <= 1:
        results = [scan(cands)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(scan, _chunks(cands, threads * 4)))

    best, key, valid = -1.0, None, 0
    for b, k, v in results:
        valid += v
        if _better(b, k, best, key):
            best, key = b, k
    if key is None:
        raise NoValidSet("no independent binding set exists for this network")
    return best, BindingSet(gens=key[0], branches=key[1]), len(cands), valid


def worst_case_siso(
    net: Network, gen: int, load: int, threads: int = 1, rank_tol: float = RANK_REL_TOL
) -> tuple[float, BindingSet]:
    """Worst-case sensitivity of one generator-load pair.

    ``gen`` and ``load`` are zero-based internal indices (load ``j`` is bus
    ``n_gen + j``). Ties resolve to the lexicographically smallest set.
    """
    if not 0 <= gen < net.n_gen:
        raise IndexError(f"generator index {gen} out of range")
    if not 0 <= load < net.n_load:
        raise IndexError(f"load index {load} out of range")
    rhs = np.zeros(net.n_bus)
    rhs[load] = 1.0
    gen_row = net.laplacian[gen]

    def score(scanner: _StackScanner, factors) -> float:
        col = scanner.solve(factors, rhs)
        return abs(float(gen_row @ col))

    val, bset, _, _ = _scan_scalar(net, score, threads, rank_tol)
    return val, bset


def worst_case_miso(
    net: Network,
    gen: int,
    loads: Sequence[int],
    norm: str = "euclidean",
    threads: int = 1,
    rank_tol: float = RANK_REL_TOL,
) -> tuple[float, BindingSet]:
    """Worst-case sensitivity of one generator to joint perturbations of a
    load set: the Euclidean norm of the Jacobian row restricted to ``loads``,
    maximized over binding sets (the exact Lipschitz constant of the linear
    response under 2-norm perturbations confined to those loads)."""
    if norm != "euclidean":
        raise ValueError(f"unsupported norm {norm!r}")
    loads = sorted(set(int(j) for j in loads))
    if not loads:
        raise EmptyLoadSet("MISO sensitivity needs at least one load index")
    if loads[0] < 0 or loads[-1] >= net.n_load:
        raise IndexError(f"load indices {loads} out of range")
    if not 0 <= gen < net.n_gen:
        raise IndexError(f"generator index {gen} out of range")
    gen_row = net.laplacian[gen]
    cols = np.array(loads)

    def score(scanner: _StackScanner, factors) -> float:
        w = scanner.solve(factors, gen_row, trans=1)
        return float(np.linalg.norm(w[cols]))

    val, bset, _, _ = _scan_scalar(net, score, threads, rank_tol)
    return val, bset


def worst_case_all(
    net: Network, threads: int = 1, rank_tol: float = RANK_REL_TOL
) -> SensitivityReport:
    """Worst cases for every pair in one enumeration pass."""
    scanner = _StackScanner(net, rank_tol)
    cands = list(candidate_sets(net))
    n_g, n_l = net.n_gen, net.n_load
    rhs = np.eye(net.n_bus)[:, :n_l]

    def scan(chunk):
        cwc = np.zeros((n_g, n_l))
        keys = [[None] * n_l for _ in range(n_g)]
        valid = 0
        for sg, sb in chunk:
            factors = scanner.factorize(sg, sb)
            if factors is None:
                continue
            valid += 1
            jac = np.abs(scanner.gen_rows @ scanner.solve(factors, rhs))
            # vectorized update; exact float ties fall back to the key order
            for i, j in np.argwhere(jac > cwc):
                cwc[i, j] = jac[i, j]
                keys[i][j] = (sg, sb)
            for i, j in np.argwhere(jac == cwc):
                if _better(jac[i, j], (sg, sb), cwc[i, j], keys[i][j]):
                    keys[i][j] = (sg, sb)
        return cwc, keys, valid

    if threads <= 1:
        results = [scan(cands)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(scan, _chunks(cands, threads * 4)))

    cwc = np.zeros((n_g, n_l))
    keys = [[None] * n_l for _ in range(n_g)]
    valid = 0
    for c, k, v in results:
        valid += v
        for i in range(n_g):
            for j in range(n_l):
                if _better(c[i, j], k[i][j], cwc[i, j], keys[i][j]):
                    cwc[i, j] = c[i, j]
                    keys[i][j] = k[i][j]
    if valid == 0:
        raise NoValidSet("no independent binding set exists for this network")

    argmax = tuple(
        tuple(BindingSet(gens=keys[i][j][0], branches=keys[i][j][1]) for j in range(n_l))
        for i in range(n_g)
    )
    return SensitivityReport(
        cwc=cwc,
        argmax=argmax,
        candidates_total=len(cands),
        candidates_valid=valid,
    )


def tied_argmax_sets(
    net: Network,
    gen: int,
    load: int,
    tie_tol: float = TIE_TOL,
    rank_tol: float = RANK_REL_TOL,
) -> tuple[float, BindingSet, list[BindingSet]]:
    """Worst case, its canonical argmax, and every set tied within ``tie_tol``.

    Degenerate maxima are common (a binding leaf branch is indistinguishable
    from binding the generator behind it), so reports list all of them.
    """
    best, argmax = worst_case_siso(net, gen, load, rank_tol=rank_tol)
    scanner = _StackScanner(net, rank_tol)
    rhs = np.zeros(net.n_bus)
    rhs[load] = 1.0
    gen_row = net.laplacian[gen]
    ties = []
    for sg, sb in candidate_sets(net):
        factors = scanner.factorize(sg, sb)
        if factors is None:
            continue
        val = abs(float(gen_row @ scanner.solve(factors, rhs)))
        if val >= best - tie_tol:
            ties.append(BindingSet(gens=sg, branches=sb))
    return best, argmax, ties


def local_sensitivity(
    net: Network,
    params,
    load: np.ndarray,
    gen: int,
    load_idx: int,
    binding_tol: float | None = None,
) -> float:
    """|J_ij| at the binding set realized by this load: the local Lipschitz
    constant of generator ``gen`` w.r.t. load ``load_idx`` inside the
    active-set region containing ``load``."""
    from .dcopf import BINDING_TOL, extract_binding_set, solve_opf

    tol = BINDING_TOL if binding_tol is None else binding_tol
    sol = solve_opf(net, params, load, binding_tol=tol)
    bset = extract_binding_set(sol, net, params)
    jac = jacobian_from_binding(net, bset).jac
    return abs(float(jac[gen, load_idx]))


@dataclass(frozen=True)
class StructuralCheck:
    """Cut-structure diagnostic for one binding set.

    When removing the binding branches disconnects the graph, every component
    must keep at least one non-binding generator; ``passed`` records that, and
    the check is vacuous (single component) when the set is not a cut."""

    components: tuple[tuple[int, ...], ...]
    passed: bool
    vacuous: bool


def structural_check(net: Network, bset: BindingSet) -> StructuralCheck:
    """Verify the free-generator-per-component property of a binding set."""
    removed = set(bset.branches)
    adjacency: list[list[int]] = [[] for _ in range(net.n_bus)]
    for e, (u, v, _) in enumerate(net.edges):
        if e not in removed:
            adjacency[u].append(v)
            adjacency[v].append(u)

    seen = [False] * net.n_bus
    components = []
    for s in range(net.n_bus):
        if seen[s]:
            continue
        comp = []
        stack = [s]
        seen[s] = True
        while stack:
            u = stack.pop()
            comp.append(u)
            for w in adjacency[u]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
        components.append(tuple(sorted(comp)))

    binding = set(bset.gens)
    passed = all(
        any(v < net.n_gen and v not in binding for v in comp) for comp in components
    )
    return StructuralCheck(
        components=tuple(components),
        passed=passed,
        vacuous=len(components) == 1,
    )


@dataclass(frozen=True)
class SampledBound:
    """Monte-Carlo lower bound for the fixed-parameter sensitivity supremum."""

    value: float
    samples_used: int
    samples_degenerate: int


def sample_lower_bound(
    net: Network,
    params,
    gen: int,
    load_idx: int,
    box_low: np.ndarray,
    box_high: np.ndarray,
    samples: int = 100,
    seed: int = 0,
) -> SampledBound:
    """Sample loads uniformly from a box and take the best local sensitivity.

    This is explicitly a lower bound on the supremum over the load domain at
    fixed cost and limits; no exact algorithm for that supremum is offered.
    Samples whose binding count is irregular are skipped and counted.
    """
    from .dcopf import extract_binding_set, solve_opf

    rng = np.random.default_rng(seed)
    box_low = np.asarray(box_low, dtype=float)
    box_high = np.asarray(box_high, dtype=float)
    best = 0.0
    used = degenerate = 0
    for _ in range(samples):
        load = rng.uniform(box_low, box_high)
        try:
            sol = solve_opf(net, params, load)
            bset = extract_binding_set(sol, net, params)
        except (DegeneratePoint, DependentBindings):
            degenerate += 1
            continue
        used += 1
        jac = jacobian_from_binding(net, bset).jac
        best = max(best, abs(float(jac[gen, load_idx])))
    return SampledBound(value=best, samples_used=used, samples_degenerate=degenerate)
