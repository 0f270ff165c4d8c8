"""Spectral theory of the geodesic-distance Dirichlet operator.

The operator on a level-m cell model is

    (L f)(x) = sum_y (f(x) - f(y)) * d(x, y)^(-s) * mu(y)

over cells y, with d the geodesic distance and mu the uniform cell
measure.  Cells carry equal measure, so the dense matrix is symmetric.

Its spectrum splits into two honest pieces:

* wavelet eigenvalues, one class per (ball depth, chart region), each of
  multiplicity (c - 1) * #balls in the class, with eigenfunctions the
  character wavelets supported on a single ball;
* the complement, spanned by top-ball indicator functions, on which L
  acts exactly as the reduced top-level operator.  Its eigenvalues come
  from numerically diagonalizing that small matrix and are reported
  separately; the smallest of them can lie below every wavelet
  eigenvalue, so `lambda_min_wavelet` is a statement about the wavelet
  block only (that is the quantity the hearing results invert).

Heat kernels, Green functions, semigroup action and path sampling all
ride on this decomposition rather than on dense diagonalization, with
the dense matrix kept around as the reference for the test suite.
"""

from __future__ import annotations

import math
import warnings
from fractions import Fraction

import numpy as np
import scipy.linalg

from .fields import additive_character_table
from .models import EXACT_MATRIX_CELL_LIMIT, ModelError

__all__ = [
    "assemble_operator",
    "reduced_operator",
    "reduced_block_eigenvalues",
    "wavelet_family",
    "wavelet_eigenvalue_numeric",
    "class_eigenvalues",
    "SpectrumClass",
    "SpectrumSummary",
    "enumerate_spectrum",
    "heat_kernel",
    "green_function",
    "green_reduced_exact",
    "semigroup_apply",
    "SimulationResult",
    "sample_paths",
]


def _is_integral(s):
    if isinstance(s, int):
        return True
    if isinstance(s, Fraction):
        return s.denominator == 1
    return isinstance(s, float) and s.is_integer()


def assemble_operator(model, s, exact=False, max_cells=EXACT_MATRIX_CELL_LIMIT):
    """Dense operator matrix: off-diagonal -d^(-s) mu(y), zero row sums.

    Float64 by default; with exact=True (integer s only) the entries are
    Fractions in an object array, exact at every step.
    """
    D, unit = model.distance_matrix(max_cells=max_cells)
    n = D.shape[0]
    mu = model.cell_measure
    if exact:
        if not _is_integral(s):
            raise ValueError("exact assembly needs an integer exponent s")
        s = int(s)
        scale = unit.denominator
        L = np.empty((n, n), dtype=object)
        rates = {}
        for value in np.unique(D):
            rates[value] = Fraction(scale, int(value)) ** s * mu
        for i in range(n):
            row = D[i]
            acc = Fraction(0)
            for j in range(n):
                if i == j:
                    continue
                w = rates[row[j]]
                L[i, j] = -w
                acc += w
            L[i, i] = acc
        return L
    dist = D.astype(np.float64) * float(unit)
    W = dist ** (-float(s)) * float(mu)
    np.fill_diagonal(W, 0.0)
    L = -W
    np.fill_diagonal(L, W.sum(axis=1))
    return L


def reduced_operator(model, s, exact=False):
    """Top-level operator on fiber indicators: the action of L on functions
    constant on top balls, an invariant block because cross-top distances
    are constant on pairs of tops."""
    ntops = len(model.tops)
    mu_top = Fraction(1, model.branching)
    if exact:
        if not _is_integral(s):
            raise ValueError("exact assembly needs an integer exponent s")
        Q = np.zeros((ntops, ntops), dtype=object)
        for i in range(ntops):
            acc = Fraction(0)
            for j in range(ntops):
                if i == j:
                    continue
                w = model.cross_top_distance(i, j) ** -int(s) * mu_top
                Q[i, j] = -w
                acc += w
            Q[i, i] = acc
        return Q
    Q = np.zeros((ntops, ntops), dtype=np.float64)
    for i in range(ntops):
        for j in range(ntops):
            if i != j:
                d = float(model.cross_top_distance(i, j))
                Q[i, j] = -(d ** -float(s)) * float(mu_top)
    np.fill_diagonal(Q, -Q.sum(axis=1))
    return Q


def reduced_block_eigenvalues(model, s):
    """Sorted eigenvalues of the reduced block (float; includes the 0 of
    the constant function).  Uniform top measure makes the block symmetric."""
    Q = reduced_operator(model, s)
    return np.sort(scipy.linalg.eigvalsh(Q))


def wavelet_family(model, ball):
    """The c - 1 character wavelets on a ball, as rows over all cells.

    Row j is mu(B)^(-1/2) chi_j(child digit), zero outside the ball, with
    chi_j the additive characters of the digit group; rows are orthonormal
    in L^2(mu) and mean zero on the ball.
    """
    if ball.depth >= model.level:
        raise ModelError("single-cell balls carry no wavelets")
    c = model.branching
    chars = additive_character_table(model.p, model.f * model.dimension)
    norm = float(ball.measure) ** -0.5
    lo, hi = ball.cell_range
    digit_pos = ball.depth - 1
    out = np.zeros((c - 1, model.num_cells), dtype=np.complex128)
    for y in range(lo, hi):
        digit = model.digits_of(y)[digit_pos]
        out[:, y] = norm * chars[1:, digit]
    return out


def wavelet_eigenvalue_numeric(model, ball, s, exact=None, base_cell=None):
    """Eigenvalue of the wavelets on a ball, by literal quadrature:

        mu(B)^(1-s) + sum_{cells y outside B} d(x, y)^(-s) mu(y)

    for any cell x inside B (the sum does not depend on the choice; pass
    base_cell to check that).  Exact Fractions for integer s by default.
    """
    if exact is None:
        exact = _is_integral(s)
    if exact and not _is_integral(s):
        raise ValueError("exact quadrature needs an integer exponent s")
    lo, hi = ball.cell_range
    x = lo if base_cell is None else base_cell
    if not lo <= x < hi:
        raise ValueError("base cell lies outside the ball")
    mu = model.cell_measure
    if exact:
        s = int(s)
        total = ball.measure ** (1 - s)
        for y in range(model.num_cells):
            if lo <= y < hi:
                continue
            total += model.geodesic_distance(x, y) ** -s * mu
        return total
    sf = float(s)
    total = float(ball.measure) ** (1.0 - sf)
    for y in range(model.num_cells):
        if lo <= y < hi:
            continue
        total += float(model.geodesic_distance(x, y)) ** -sf * float(mu)
    return total


def _region_representatives(model):
    """First top index for each distinct chart region."""
    reps = {}
    for i, top in enumerate(model.tops):
        reps.setdefault(top.region, i)
    return reps


def class_eigenvalues(model, s, exact=None):
    """Eigenvalue for every (ball depth, region) class, from one
    representative ball each.

    Constancy on classes holds because within-top distance profiles depend
    only on depth and cross-top distances only on the region pair; the
    test suite spot-checks it against other members.
    """
    values = {}
    for region, top_index in _region_representatives(model).items():
        for depth in range(1, model.level):
            ball = model.ball(top_index, (0,) * (depth - 1))
            values[(depth, region)] = wavelet_eigenvalue_numeric(
                model, ball, s, exact=exact
            )
    return values


class SpectrumClass:
    """One wavelet eigenvalue class of the spectrum."""

    __slots__ = ("eigenvalue", "mu_B", "region", "depth", "num_balls", "multiplicity")

    def __init__(self, eigenvalue, mu_B, region, depth, num_balls, multiplicity):
        self.eigenvalue = eigenvalue
        self.mu_B = mu_B
        self.region = region
        self.depth = depth
        self.num_balls = num_balls
        self.multiplicity = multiplicity

    def __repr__(self):
        return (
            f"SpectrumClass(lambda={float(self.eigenvalue):.6g}, mu_B={self.mu_B},"
            f" region={sorted(self.region)}, mult={self.multiplicity})"
        )


class SpectrumSummary:
    """Wavelet classes plus the non-diagonalized indicator complement."""

    __slots__ = ("model_name", "s", "classes", "complement_dimension", "reduced_eigenvalues")

    def __init__(self, model_name, s, classes, complement_dimension, reduced_eigenvalues):
        self.model_name = model_name
        self.s = s
        self.classes = classes
        self.complement_dimension = complement_dimension
        self.reduced_eigenvalues = reduced_eigenvalues

    @property
    def lambda_min_wavelet(self):
        return min(c.eigenvalue for c in self.classes)

    @property
    def total_dimension(self):
        return self.complement_dimension + sum(c.multiplicity for c in self.classes)

    def to_json_dict(self):
        from .models import _frac_str

        return {
            "model": self.model_name,
            "s": float(self.s),
            "classes": [
                {
                    "eigenvalue": float(c.eigenvalue),
                    "eigenvalue_exact": _frac_str(c.eigenvalue)
                    if isinstance(c.eigenvalue, (Fraction, int))
                    else None,
                    "mu_B": _frac_str(c.mu_B),
                    "region": sorted(c.region),
                    "depth": c.depth,
                    "num_balls": c.num_balls,
                    "multiplicity": c.multiplicity,
                }
                for c in self.classes
            ],
            "complement_dimension": self.complement_dimension,
            "reduced_block_eigenvalues": [float(v) for v in self.reduced_eigenvalues],
            "lambda_min_wavelet": float(self.lambda_min_wavelet),
            "total_dimension": self.total_dimension,
        }


def enumerate_spectrum(model, s, exact=None):
    """All wavelet classes with multiplicities, plus the complement block.

    Multiplicities and the complement dimension add up to the number of
    cells (asserted): per top, (c-1)(1 + c + ... + c^(m-2)) wavelets plus
    one indicator give c^(m-1) dimensions.
    """
    values = class_eigenvalues(model, s, exact=exact)
    region_counts = {}
    for top in model.tops:
        region_counts[top.region] = region_counts.get(top.region, 0) + 1
    c = model.branching
    classes = []
    for (depth, region), lam in sorted(
        values.items(), key=lambda kv: (kv[0][0], sorted(kv[0][1]))
    ):
        num_balls = region_counts[region] * c ** (depth - 1)
        classes.append(
            SpectrumClass(
                lam,
                Fraction(1, c**depth),
                region,
                depth,
                num_balls,
                (c - 1) * num_balls,
            )
        )
    summary = SpectrumSummary(
        model.name, s, classes, len(model.tops), reduced_block_eigenvalues(model, s)
    )
    if summary.total_dimension != model.num_cells:
        raise ModelError("spectrum dimensions do not add up to the cell count")
    return summary


# -- kernels ------------------------------------------------------------------


def _within_top_depth(model):
    """(per x per) matrix of join depths between cells of one top."""
    c = model.branching
    m = model.level
    per = model.cells_per_top
    u = np.arange(per)
    depth = np.ones((per, per), dtype=np.int64)
    agree = np.ones((per, per), dtype=bool)
    for k in range(1, m):
        pk = u // c ** (m - 1 - k)
        agree &= pk[:, None] == pk[None, :]
        depth += agree
    return depth


def _synthesis_kernel(model, weights_by_class, block_coefficients):
    """Kernel sum_psi w(class) psi(x) psi(y)* + block part, assembled from
    per-class weights and a tops x tops coefficient matrix.

    Character orthogonality collapses each ball's wavelet sum to
    mu(B)^(-1) (c [same child] - 1), so within a top the wavelet part is
    a function of the join depth alone, one matrix per region.
    """
    c = model.branching
    m = model.level
    per = model.cells_per_top
    n = model.num_cells
    depth = _within_top_depth(model)
    region_block = {}
    for region in {t.region for t in model.tops}:
        W = np.zeros((per, per), dtype=np.float64)
        for delta in range(1, m):
            w = weights_by_class[(delta, region)]
            coef = np.where(
                delta < depth, float(c - 1), np.where(delta == depth, -1.0, 0.0)
            )
            W += float(w) * float(c) ** delta * coef
        region_block[region] = W
    K = np.repeat(np.repeat(block_coefficients, per, axis=0), per, axis=1)
    for i, top in enumerate(model.tops):
        sl = slice(i * per, (i + 1) * per)
        K[sl, sl] += region_block[top.region]
    assert K.shape == (n, n)
    return K


def heat_kernel(model, s, t, paper_constant_term=False, complement=True):
    """Dense heat kernel K_t(x, y) of the semigroup exp(-tL), against mu.

    The wavelet part is the ancestor-chain character sum.  The top-ball
    block is, by default, the exact cross-fiber evolution exp(-t L_red)
    scaled to a kernel; its constant mode is the normalized 1/mu(X)
    term, so every row integrates to 1.  complement=False drops the
    block's mean-zero part and keeps the flat 1/mu(X) term alone
    (constant + wavelet synthesis: still unit mass, but no cross-fiber
    mixing).  paper_constant_term=True instead takes the bare constant 1
    of the un-normalized closed form, which has no complement term
    either; rows then integrate to mu(X), not 1.
    """
    if t < 0:
        raise ValueError("negative time")
    lams = class_eigenvalues(model, s, exact=False)
    weights = {k: math.exp(-t * v) for k, v in lams.items()}
    ntops = len(model.tops)
    if paper_constant_term:
        block = np.ones((ntops, ntops))
    elif not complement:
        block = np.full((ntops, ntops), float(model.branching) / ntops)
    else:
        Q = reduced_operator(model, s)
        block = scipy.linalg.expm(-t * Q) * float(model.branching)
    return _synthesis_kernel(model, weights, block)


def green_function(model, s, complement=True):
    """Green kernel G(x, y): the kernel of the pseudo-inverse of L.

    G L = L G = I - P_0 with P_0 the projection onto constants (the
    default).  complement=False keeps the wavelet sum alone; cross-fiber
    values are then identically zero and the inversion holds only on the
    wavelet span.  For s <= 1 the finite-level values are fine but grow
    with the level (the continuum object diverges); a warning says so.
    """
    if float(s) <= 1:
        warnings.warn(
            "Green function for s <= 1: finite-level values only, the"
            " deepening limit diverges",
            stacklevel=2,
        )
    lams = class_eigenvalues(model, s, exact=False)
    weights = {k: 1.0 / float(v) for k, v in lams.items()}
    ntops = len(model.tops)
    if complement:
        Q = reduced_operator(model, s)
        block = np.linalg.pinv(Q) * float(model.branching)
    else:
        block = np.zeros((ntops, ntops))
    return _synthesis_kernel(model, weights, block)


def _invert_fraction_matrix(M):
    n = len(M)
    aug = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(M)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            raise ModelError("matrix is singular")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = Fraction(1) / aug[col][col]
        aug[col] = [v * inv for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                factor = aug[r][col]
                aug[r] = [a - factor * b for a, b in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def green_reduced_exact(model, s):
    """Exact rational pseudo-inverse of the reduced operator (integer s).

    Uses (Q + J)^(-1) - J/k^2 = Q^+, valid because Q is symmetric with
    kernel exactly the constants.  This is the cross-fiber block of the
    Green kernel up to the 1/mu(top) kernel scaling, and it depends only
    on the top-level structure, not on the subdivision level.
    """
    if not _is_integral(s):
        raise ValueError("exact inversion needs an integer exponent s")
    Q = reduced_operator(model, s, exact=True)
    k = Q.shape[0]
    M = [[Q[i, j] + 1 for j in range(k)] for i in range(k)]
    inv = _invert_fraction_matrix(M)
    shift = Fraction(1, k * k)
    return [[inv[i][j] - shift for j in range(k)] for i in range(k)]


def semigroup_apply(model, s, t, values, complement=True):
    """exp(-tL) applied to a vector of cell values by spectral synthesis.

    Block averages evolve under the reduced operator; each depth's detail
    (the difference of successive conditional averages) is an eigenvector
    and just decays.  Matches the dense matrix exponential to rounding.
    complement=False projects onto constants + wavelets instead: the
    cross-fiber part of the input (top means minus the global mean) is
    dropped, not evolved.
    """
    v = np.asarray(values, dtype=np.complex128 if np.iscomplexobj(values) else np.float64)
    n = model.num_cells
    if v.shape != (n,):
        raise ValueError(f"expected {n} cell values, got shape {v.shape}")
    c = model.branching
    m = model.level
    per = model.cells_per_top
    ntops = len(model.tops)
    lams = class_eigenvalues(model, s, exact=False)
    means = v.reshape(ntops, per).mean(axis=1)
    if complement:
        Q = reduced_operator(model, s)
        out = np.repeat(scipy.linalg.expm(-t * Q) @ means, per)
    else:
        out = np.full(n, means.mean())
    averages = {m: v}
    for depth in range(m - 1, 0, -1):
        width = c ** (m - depth)
        averages[depth] = v.reshape(-1, width).mean(axis=1).repeat(width)
    for delta in range(1, m):
        detail = averages[delta + 1] - averages[delta]
        decay = np.repeat(
            [math.exp(-t * lams[(delta, top.region)]) for top in model.tops], per
        )
        out = out + decay * detail
    return out


class SimulationResult:
    """Outcome of jump-process sampling: final-state law and jump stats."""

    __slots__ = (
        "model_name",
        "s",
        "t_max",
        "seed",
        "num_paths",
        "final_cells",
        "empirical_law",
        "jump_counts",
        "first_holding",
        "mean_holding",
        "trajectories",
    )

    def __init__(self, model_name, s, t_max, seed, final_cells, empirical_law,
                 jump_counts, first_holding, mean_holding, trajectories):
        self.model_name = model_name
        self.s = s
        self.t_max = t_max
        self.seed = seed
        self.num_paths = len(final_cells)
        self.final_cells = final_cells
        self.empirical_law = empirical_law
        self.jump_counts = jump_counts
        self.first_holding = first_holding
        self.mean_holding = mean_holding
        self.trajectories = trajectories

    def to_json_dict(self):
        return {
            "model": self.model_name,
            "s": float(self.s),
            "t_max": self.t_max,
            "seed": self.seed,
            "num_paths": self.num_paths,
            "jumps": {
                "mean": float(np.mean(self.jump_counts)),
                "min": int(np.min(self.jump_counts)),
                "max": int(np.max(self.jump_counts)),
            },
            "first_holding_mean": float(np.mean(self.first_holding)),
            "mean_holding": self.mean_holding,
            "empirical_law": [float(x) for x in self.empirical_law],
            "trajectories": self.trajectories,
        }


def sample_paths(model, s, t_max, n_paths, seed, start=None, max_store=10,
                 max_cells=EXACT_MATRIX_CELL_LIMIT, _rate_cap_steps=2_000_000):
    """Sample the jump process with generator -L on the cells.

    From cell x the process waits Exp(rate(x)) with rate(x) the diagonal
    of L, then jumps to y with probability proportional to d(x,y)^(-s)
    mu(y).  Paths start from `start` (cell index) or, by default, from
    the uniform law, which is stationary.  Fully deterministic given the
    seed.  The first few trajectories are kept as (time, cell) lists;
    the untruncated first holding time of every path is kept for rate
    checks against the generator diagonal.
    """
    if seed is None:
        raise ValueError("a seed is required; sampling must be reproducible")
    D, unit = model.distance_matrix(max_cells=max_cells)
    dist = D.astype(np.float64) * float(unit)
    W = dist ** (-float(s)) * float(model.cell_measure)
    np.fill_diagonal(W, 0.0)
    rates = W.sum(axis=1)
    cum = np.cumsum(W, axis=1)
    cum /= cum[:, -1][:, None]
    n = model.num_cells
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    if start is None:
        states = rng.integers(0, n, size=n_paths)
    else:
        if not 0 <= start < n:
            raise ValueError(f"start cell {start} out of range")
        states = np.full(n_paths, start, dtype=np.int64)
    clocks = np.zeros(n_paths)
    jumps = np.zeros(n_paths, dtype=np.int64)
    first_holding = None
    store = min(max_store, n_paths)
    trajectories = [[(0.0, int(states[k]))] for k in range(store)]
    alive = np.ones(n_paths, dtype=bool)
    total_steps = 0
    while alive.any():
        idx = np.nonzero(alive)[0]
        waits = rng.exponential(1.0 / rates[states[idx]])
        if first_holding is None:
            first_holding = waits.copy()
        landed = clocks[idx] + waits
        done = landed >= t_max
        clocks[idx] = np.where(done, t_max, landed)
        alive[idx[done]] = False
        movers = idx[~done]
        if movers.size:
            draws = rng.random(movers.size)
            nxt = np.empty(movers.size, dtype=np.int64)
            for k, (cell, u) in enumerate(zip(states[movers], draws)):
                nxt[k] = np.searchsorted(cum[cell], u, side="right")
            states[movers] = nxt
            jumps[movers] += 1
            for k in movers[movers < store]:
                trajectories[k].append((float(clocks[k]), int(states[k])))
        total_steps += movers.size
        if total_steps > _rate_cap_steps:
            raise RuntimeError(
                f"simulation exceeded {_rate_cap_steps} jumps; t_max too"
                " large for these rates"
            )
    law = np.bincount(states, minlength=n).astype(np.float64) / n_paths
    mean_holding = float(n_paths * t_max / (jumps.sum() + n_paths))
    if first_holding is None:
        first_holding = np.zeros(0)
    return SimulationResult(
        model.name, s, t_max, seed, states, law, jumps, first_holding,
        mean_holding, trajectories
    )
