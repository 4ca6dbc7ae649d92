"""Multiplicative-weights solver for the coverage LP.

The LP being solved (complement form) is: maximize sum(x) subject to
x_i / f_i + (1 / f_i) * sum(z_j over sets containing i) <= 1, sum(z) = m - k,
x and z in [0, 1], where f_i counts the sets containing element i.  Writing
y_j = 1 - z_j recovers the standard coverage relaxation, which is what
scale_to_pi0 emits.

The solver fixes a guess L for the objective, restricts to the region
sum(x) = L, sum(z) = m - k, and runs multiplicative weights over the n
per-element constraints.  Each iteration calls a linear oracle that
minimizes the weighted constraint sum over the region; the minimizer is
just "L cheapest elements, m - k cheapest sets", computed on truncated
fixed-point costs so machines exchange O(log n)-bit numbers.  Iteration
counts, weights and all feasibility comparisons are exact integer
arithmetic; the only floating point is the choice of the iteration count.

Weight convention: after t iterations element i carries the exact integer
accumulator A_i = sum of f_i - x_i - |selected sets containing i| over past
iterations, and its weight is w_i = 2**(-eps * A_i / f_i), materialized on
the grid 2**-B with B = 10 * ceil(log2 n) by fixmath.pow2_scaled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .cluster import Cluster, ceil_log2
from .fixmath import exp2_frac
from .instance import SetSystem

TRUNC_BITS_PER_LOG = 10
# Runtime bound asserted on the averaged iterate: max constraint value must
# not exceed 1 + SLACK_NUM/SLACK_DEN * eps.  7/5 is just above the provable
# 2*ln(2) and leaves room for the fixed-point underestimates.
SLACK_NUM = 7
SLACK_DEN = 5


class OracleSoundnessError(AssertionError):
    """Exact truncation or feasibility check failed; upstream bug."""


def round_eps_down(eps: Fraction) -> tuple[Fraction, int]:
    """Largest power of 1/2 that is <= eps; also returns its exponent."""
    eps = Fraction(eps)
    if not 0 < eps <= Fraction(1, 4):
        raise ValueError(f"eps must be in (0, 1/4], got {eps}")
    s = 2
    while Fraction(1, 1 << s) > eps:
        s += 1
    return Fraction(1, 1 << s), s


def iteration_count(n: int, eps: Fraction) -> int:
    """Smallest T with ln(2n)/(T*a) <= a for a = eps*ln 2."""
    return math.ceil(math.log(2 * n) / (float(eps) * math.log(2)) ** 2)


@dataclass(frozen=True)
class TruncatedPQ:
    """Per-element and per-set oracle costs on the common 2**-frac_bits grid."""

    p_scaled: tuple[int, ...]
    q_scaled: tuple[int, ...]
    frac_bits: int


@dataclass(frozen=True)
class FractionalPair:
    """Averaged LP iterate, kept as integer sums over rounds_t iterations."""

    sum_x: tuple[int, ...]
    sum_z: tuple[int, ...]
    rounds_t: int

    def x(self) -> list[Fraction]:
        return [Fraction(v, self.rounds_t) for v in self.sum_x]

    def z(self) -> list[Fraction]:
        return [Fraction(v, self.rounds_t) for v in self.sum_z]


@dataclass(frozen=True)
class LpSolution:
    """Standard-form relaxation values after rescaling."""

    x: tuple[Fraction, ...]
    y: tuple[Fraction, ...]
    objective: Fraction
    budget_used: Fraction
    sigma: Fraction


class WeightAccumulator:
    """Exact integer error accumulators driving the weights."""

    def __init__(self, n: int):
        self.n = n
        self.a = np.zeros(n, dtype=np.int64)
        self.t = 0

    def update(self, errors: np.ndarray) -> None:
        lim = 2 * self.n
        emin, emax = int(errors.min()), int(errors.max())
        if emin < -lim or emax > lim:
            raise OracleSoundnessError(f"per-iteration error outside [-2n, 2n]: {emin}..{emax}")
        self.a += errors
        self.t += 1
        if int(np.abs(self.a).max(initial=0)) > lim * self.t:
            raise OracleSoundnessError("accumulator magnitude exceeded 2*n*t")


class LpContext:
    """Shared precomputation for one (instance, frequency, eps) triple."""

    def __init__(self, sys: SetSystem, f, k: int, eps: Fraction):
        self.sys = sys
        self.n = sys.n
        self.m = sys.m
        self.k = k
        self.f = tuple(int(v) for v in f)
        if len(self.f) != sys.n or any(v < 1 for v in self.f):
            raise ValueError("frequency vector must be positive and length n")
        self.eps, self.s = round_eps_down(eps)
        n, m = self.n, self.m
        if not (1 + m <= max(n, 2) ** 4):
            raise ValueError("m too large for the 1/n^5 truncation slack")
        self.b = TRUNC_BITS_PER_LOG * ceil_log2(max(n, 1))
        self.t_total = iteration_count(n, self.eps)
        self.abits = 4 * ceil_log2(max(n, 2)) + 3
        if (2 * n * self.t_total).bit_length() + 1 > self.abits:
            raise ValueError(
                f"eps={self.eps} too small for n={n}: accumulators outgrow "
                f"the {self.abits}-bit broadcast width"
            )
        self.f_arr = np.array(self.f, dtype=np.int64)
        self.d_arr = self.f_arr << self.s
        self.rows = [np.array([e - 1 for e in s], dtype=np.intp) for s in sys.sets]
        self.s_mat = np.zeros((m, n), dtype=np.int64)
        for j, idx in enumerate(self.rows):
            self.s_mat[j, idx] = 1
        classes: dict[int, list[int]] = {}
        for i, fv in enumerate(self.f):
            classes.setdefault(fv, []).append(i)
        self.f_classes = [(fv, np.array(ix, dtype=np.intp)) for fv, ix in sorted(classes.items())]
        self.f_classes_py = [(fv, list(ix)) for fv, ix in sorted(classes.items())]
        self.f_lcm = math.lcm(*(fv for fv, _ in self.f_classes_py))
        # int64 holds every scaled weight iff 4*n**2 * 2**b < 2**63.
        self.int64_ok = self.b + (4 * n * n).bit_length() <= 62
        self.wcap_log2 = (4 * n * n).bit_length()  # weights stay below 4n^2
        self.qhat_bits = self.b + 3 * ceil_log2(max(n, 2)) + 3
        self.n_pow5 = max(n, 1) ** 5
        self._tabs: dict[int, object] = {}

    def _tab(self, fv: int):
        tab = self._tabs.get(fv)
        if tab is None:
            den = fv << self.s
            vals = [exp2_frac(r, den, self.b) for r in range(den)]
            tab = np.array(vals, dtype=np.int64) if self.int64_ok else vals
            self._tabs[fv] = tab
        return tab

    def weights(self, a: np.ndarray):
        """Scaled weights W_i = floor-approx of 2**(-eps*A_i/f_i) * 2**b.

        Returns (numpy array, exact python-int sum).  The array is int64
        when every possible weight fits, else dtype=object.
        """
        c_all, r_all = np.divmod(-a, self.d_arr)
        if int(c_all.max(initial=0)) > self.wcap_log2:
            raise OracleSoundnessError("weight above the 4n^2 potential cap")
        cap = (4 * self.n * self.n) << self.b
        if self.int64_ok:
            w = np.empty(self.n, dtype=np.int64)
            for fv, idx in self.f_classes:
                tab = self._tab(fv)
                base = tab[r_all[idx]]
                c = c_all[idx]
                # np.where evaluates both branches, so keep each shift count legal
                zero = np.int64(0)
                up = np.minimum(np.maximum(c, zero), np.int64(62))
                down = np.minimum(np.maximum(-c, zero), np.int64(63))
                w[idx] = np.where(c >= 0, base << up, base >> down)
        else:
            w = np.empty(self.n, dtype=object)
            for fv, idx in self.f_classes:
                tab = self._tab(fv)
                for i in idx:
                    base = tab[r_all[i]]
                    c = int(c_all[i])
                    w[i] = base << c if c >= 0 else base >> -c
        total = sum(w.tolist())
        # the potential argument keeps the weight sum below 4n^2; this also
        # guards the int64 cost matmul against overflow
        if total > cap:
            raise OracleSoundnessError("weight sum above the 4n^2 potential cap")
        return w, total

    def exact_check(self, w, lhs_hat_scaled: int, sum_w_scaled: int, x_ind, cnt, feasible: bool):
        """Exact rational soundness of the truncation, per oracle call.

        lhs denotes the true weighted constraint sum at the chosen point,
        computed from the exact weights; lhs_hat is its truncated stand-in.
        Verifies lhs - 1/n^5 <= lhs_hat <= lhs, and lhs <= sum w + 1/n^5
        whenever the oracle accepted.  Everything is cleared to the common
        denominator lcm(f) * 2**b so the comparisons are plain integers.
        """
        # pure python ints: w * coeff can overflow int64 near the weight cap
        wl = w.tolist()
        cl = (x_ind + cnt).tolist()
        lcm = self.f_lcm
        lhs_lcm = 0
        for fv, idx in self.f_classes_py:
            num = sum(wl[i] * cl[i] for i in idx if cl[i])
            if num:
                lhs_lcm += num * (lcm // fv)
        slack_lcm_p5 = (lcm << self.b)  # slack * lcm * n^5
        hat_lcm = lhs_hat_scaled * lcm
        if not hat_lcm <= lhs_lcm:
            raise OracleSoundnessError("truncated objective exceeds the exact one")
        if not (lhs_lcm - hat_lcm) * self.n_pow5 <= slack_lcm_p5:
            raise OracleSoundnessError("truncation lost more than 1/n^5")
        if feasible and not (lhs_lcm - sum_w_scaled * lcm) * self.n_pow5 <= slack_lcm_p5:
            raise OracleSoundnessError("accepted point violates the weighted budget")


@dataclass(frozen=True)
class OracleStep:
    feasible: bool
    x_idx: np.ndarray
    z_idx: np.ndarray
    pq: TruncatedPQ
    lhs_hat_scaled: int
    sum_w_scaled: int
    w: np.ndarray


def oracle_step(ctx: LpContext, acc: WeightAccumulator, length: int, cluster: Cluster) -> OracleStep:
    """One linear-oracle call: cheapest `length` elements, m-k cheapest sets.

    Costs two rounds: every machine ships its truncated set cost to central,
    central answers with the chosen indicator vectors (or a 1-bit reject).
    Declares infeasible exactly when even the minimizer of the truncated
    objective exceeds the weight sum, which is sound because truncation only
    ever lowers costs.
    """
    n, m, k = ctx.n, ctx.m, ctx.k
    assert 0 <= length <= n
    w, sum_w = ctx.weights(acc.a)
    p = w // ctx.f_arr
    if ctx.int64_ok:
        q = ctx.s_mat @ p
        p_list = p.tolist()
        q_list = q.tolist()
    else:
        p_list = p.tolist()
        q_list = [sum(p_list[i] for i in row) for row in ctx.rows]
        q = np.array(q_list, dtype=object)
    for qv in q_list:
        if qv.bit_length() > ctx.qhat_bits:
            raise OracleSoundnessError("set cost outgrew its message width")
    cluster.step_round(
        ((j, cluster.central, ctx.qhat_bits) for j in range(1, m + 1) if j != cluster.central),
        label="oracle.cost_gather",
    )
    x_idx = np.array(sorted(range(n), key=p_list.__getitem__)[:length], dtype=np.intp)
    z_idx = np.array(sorted(range(m), key=q_list.__getitem__)[: m - k], dtype=np.intp)
    lhs_hat = sum(p_list[i] for i in x_idx) + sum(q_list[j] for j in z_idx)
    feasible = lhs_hat <= sum_w
    pq = TruncatedPQ(tuple(p_list), tuple(q_list), ctx.b)
    if feasible:
        cluster.broadcast(n + m, label="oracle.point_broadcast")
    else:
        cluster.broadcast(1, label="oracle.reject_broadcast")
    return OracleStep(feasible, x_idx, z_idx, pq, lhs_hat, sum_w, w)


def _mwu(ctx: LpContext, length: int, cluster: Cluster, debug_sink=None) -> FractionalPair | None:
    """Run the full weight-update loop for one objective guess."""
    n, m, k = ctx.n, ctx.m, ctx.k
    acc = WeightAccumulator(n)
    sum_x = np.zeros(n, dtype=np.int64)
    sum_z = np.zeros(m, dtype=np.int64)
    with cluster.coalesce(f"mwu[L={length}]"):
        for t in range(ctx.t_total):
            step = oracle_step(ctx, acc, length, cluster)
            x_ind = np.zeros(n, dtype=np.int64)
            x_ind[step.x_idx] = 1
            z_ind = np.zeros(m, dtype=np.int64)
            z_ind[step.z_idx] = 1
            if not step.feasible:
                cnt = (z_ind[:, None] * ctx.s_mat).sum(axis=0)
                ctx.exact_check(step.w, step.lhs_hat_scaled, step.sum_w_scaled, x_ind, cnt, False)
                if debug_sink is not None:
                    debug_sink({"L": length, "t": t, "feasible": False})
                return None
            cnt = cluster.convergecast_sum(
                z_ind[:, None] * ctx.s_mat, entry_bits=1, label="mwu.cover_count"
            )
            ctx.exact_check(step.w, step.lhs_hat_scaled, step.sum_w_scaled, x_ind, cnt, True)
            errors = ctx.f_arr - x_ind - cnt
            acc.update(errors)
            if int(np.abs(acc.a).max(initial=0)).bit_length() + 1 > ctx.abits:
                raise OracleSoundnessError("accumulator outgrew its broadcast width")
            cluster.broadcast(n * ctx.abits, label="mwu.acc_broadcast")
            sum_x += x_ind
            sum_z += z_ind
            if debug_sink is not None:
                debug_sink(
                    {
                        "L": length,
                        "t": t,
                        "feasible": True,
                        "lhs_hat_scaled": step.lhs_hat_scaled,
                        "sum_w_scaled": step.sum_w_scaled,
                        "acc_absmax": int(np.abs(acc.a).max(initial=0)),
                        "acc_t": acc.t,
                    }
                )
    pair = FractionalPair(tuple(sum_x.tolist()), tuple(sum_z.tolist()), ctx.t_total)
    _check_pair(ctx, length, pair)
    return pair


def _check_pair(ctx: LpContext, length: int, pair: FractionalPair) -> None:
    """Membership and slack of the averaged iterate, exactly."""
    t = pair.rounds_t
    if sum(pair.sum_x) != length * t or sum(pair.sum_z) != (ctx.m - ctx.k) * t:
        raise OracleSoundnessError("averaged iterate left the region")
    cntz = (np.array(pair.sum_z, dtype=np.int64) @ ctx.s_mat).tolist()
    # constraint_i = (sum_x_i + cntz_i) / (t * f_i) must be <= 1 + 7/5 * eps
    scale = SLACK_DEN << ctx.s
    bound = scale + SLACK_NUM
    for i in range(ctx.n):
        if (pair.sum_x[i] + cntz[i]) * scale > t * ctx.f[i] * bound:
            raise OracleSoundnessError(f"constraint {i + 1} exceeds the 1 + 1.4*eps slack")


def mwu_solve(
    sys: SetSystem,
    f,
    length: int,
    k: int,
    eps: Fraction,
    cluster: Cluster,
    *,
    ctx: LpContext | None = None,
    debug_sink=None,
) -> FractionalPair | None:
    """Feasibility solve at objective guess `length`; None when rejected.

    A None is a certificate that no point of the region satisfies all
    constraints at slack 0; a pair satisfies every constraint within
    1 + 1.4 * eps (checked, exact).  eps is rounded down to a power of 1/2.
    """
    if ctx is None:
        ctx = LpContext(sys, f, k, eps)
    return _mwu(ctx, length, cluster, debug_sink)


def guess_grid(n: int, eps: Fraction) -> list[int]:
    """Candidate objective values: floors of (1+eps)**i, deduplicated,
    ascending, capped at n, always containing n."""
    if n < 1:
        raise ValueError("n must be positive")
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    vals: set[int] = set()
    cur = Fraction(1)
    while True:
        v = cur.numerator // cur.denominator
        if v > n:
            break
        vals.add(v)
        cur *= 1 + eps
    vals.add(n)
    vals.discard(0)
    return sorted(vals)


@dataclass(frozen=True)
class Pi1Result:
    l_star: int
    pair: FractionalPair | None
    eps: Fraction
    feasible_guesses: tuple[int, ...]
    infeasible_guesses: tuple[int, ...]


def solve_pi1(
    sys: SetSystem,
    f,
    k: int,
    eps: Fraction,
    cluster: Cluster,
    *,
    debug_sink=None,
) -> Pi1Result:
    """Try every guess in the grid, batched, and keep the largest feasible.

    Guesses run in parallel batches of ceil(log2(n+1)): a batch costs the
    rounds of its slowest member while inbox bits add up.  Any guess at or
    below the LP optimum is feasible, so l_star * (1+eps) >= that optimum.
    """
    ctx = LpContext(sys, f, k, eps)
    grid = guess_grid(sys.n, ctx.eps)
    batch_size = max(1, ceil_log2(sys.n + 1))
    best: tuple[int, FractionalPair] | None = None
    feas: list[int] = []
    infeas: list[int] = []
    for start in range(0, len(grid), batch_size):
        batch = grid[start : start + batch_size]
        lanes = []
        for length in batch:
            lane = cluster.lane()
            pair = _mwu(ctx, length, lane, debug_sink)
            lanes.append(lane)
            if pair is None:
                infeas.append(length)
            else:
                feas.append(length)
                if best is None or length > best[0]:
                    best = (length, pair)
        cluster.absorb_parallel(lanes, label=f"pi1.batch[{batch[0]}..{batch[-1]}]")
    if best is None:
        return Pi1Result(0, None, ctx.eps, tuple(feas), tuple(infeas))
    return Pi1Result(best[0], best[1], ctx.eps, tuple(feas), tuple(infeas))


def scale_to_pi0(sys: SetSystem, f, pair: FractionalPair, eps: Fraction) -> LpSolution:
    """Turn the averaged complement-form iterate into a clean relaxation.

    Divides x and z by 1 + sigma, where sigma is the measured worst
    constraint excess (never more than 1.4 * eps by the solver contract),
    then sets y = 1 - z.  The output satisfies, exactly:
      x_i <= sum of y_j over sets containing i,
      sum(y) <= k + 2 * eps * m,
      sum(x) >= (1 - 4 * eps) * (sum of the input x).
    """
    eps = Fraction(eps)
    t = pair.rounds_t
    n, m, k = sys.n, sys.m, sys.k
    f = tuple(int(v) for v in f)
    cntz = [0] * n
    for j, s in enumerate(sys.sets):
        zj = pair.sum_z[j]
        if zj:
            for e in s:
                cntz[e - 1] += zj
    sigma = Fraction(0)
    for i in range(n):
        excess = Fraction(pair.sum_x[i] + cntz[i], t * f[i]) - 1
        if excess > sigma:
            sigma = excess
    if sigma > Fraction(SLACK_NUM, SLACK_DEN) * eps:
        raise OracleSoundnessError("constraint excess beyond the solver contract")
    den = 1 + sigma
    x = tuple(Fraction(v, t) / den for v in pair.sum_x)
    y = tuple(1 - Fraction(v, t) / den for v in pair.sum_z)
    member: list[list[int]] = [[] for _ in range(n)]
    for j, s in enumerate(sys.sets):
        for e in s:
            member[e - 1].append(j)
    for i in range(n):
        covered = sum((y[j] for j in member[i]), Fraction(0))
        if x[i] > covered:
            raise OracleSoundnessError("rescaled x exceeds its fractional cover")
    objective = sum(x, Fraction(0))
    budget_used = sum(y, Fraction(0))
    if budget_used > k + 2 * eps * m:
        raise OracleSoundnessError("rescaled budget exceeds k + 2*eps*m")
    if objective < (1 - 4 * eps) * Fraction(sum(pair.sum_x), t):
        raise OracleSoundnessError("rescaling lost more than the 4*eps factor")
    return LpSolution(x=x, y=y, objective=objective, budget_used=budget_used, sigma=sigma)
