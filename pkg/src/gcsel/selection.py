"""Stepwise, block-refined stepwise, all-subsets and repeated selection."""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .engine import init_model
from .exceptions import CapExceededError, DomainError
from .pvalues import leave_one_out_pvalues, step_pvalue

__all__ = [
    "Step",
    "SelectionTrace",
    "SubsetResult",
    "stepwise",
    "all_subsets",
    "repeated_stepwise",
    "ALL_SUBSETS_CAP",
    "KMAX_CAP",
]

ALL_SUBSETS_CAP = 25
KMAX_CAP = 20


@dataclass
class Step:
    """One selected covariate.

    ``stepwise_p`` is the P-value at the time of inclusion; ``adjusted_p``
    and ``standard_p`` are leave-one-out values in the final model.
    """

    index: int
    name: str
    stepwise_p: float
    rss_after: float
    adjusted_p: float = float("nan")
    standard_p: float = float("nan")
    forced: bool = False
    coefficient: float = float("nan")


@dataclass
class SelectionTrace:
    """Ordered record of a selection run."""

    steps: list = field(default_factory=list)
    terminated: str = "threshold"
    rss0: float = float("nan")
    n: int = 0
    q: int = 0
    rejected: Step = None
    model: object = field(default=None, repr=False)
    skipped: list = field(default_factory=list)

    @property
    def indices(self):
        """All selected indices, forced ones included, in order."""
        return [s.index for s in self.steps]

    @property
    def covariates(self):
        """Selected indices that were tested (the constant excluded)."""
        return [s.index for s in self.steps if not s.forced]

    @property
    def rss(self):
        return self.steps[-1].rss_after if self.steps else self.rss0

    def __len__(self):
        return len(self.covariates)

    def to_rows(self):
        """One dict per step; ``ratio`` is the step's rss over the previous one."""
        rows = []
        prev = self.rss0
        for s in self.steps:
            rows.append(
                {
                    "covariate": s.name,
                    "index": s.index,
                    "p_value": s.stepwise_p,
                    "rss": s.rss_after,
                    "ratio": s.rss_after / prev if prev > 0 else float("nan"),
                    "adjusted_p": s.adjusted_p,
                    "standard_p": s.standard_p,
                    "coefficient": s.coefficient,
                }
            )
            prev = s.rss_after
        return rows


@dataclass
class SubsetResult:
    """A subset in which every tested member is significant."""

    members: tuple
    member_pvalues: dict
    rss: float
    standard_pvalues: dict = field(default_factory=dict)
    coefficients: dict = field(default_factory=dict)
    maximal: bool = True

    @property
    def covariates(self):
        return tuple(i for i in self.members if i != 0)


def _check_common(alpha, nu, kmax):
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    if int(nu) != nu or nu < 1:
        raise DomainError("nu must be a positive integer")
    if int(kmax) != kmax or kmax < 1:
        raise DomainError("kmax must be a positive integer")
    if kmax > KMAX_CAP:
        raise CapExceededError(f"kmax={kmax} exceeds the cap of {KMAX_CAP} (2**kmax subsets)")
    if alpha > 1 and kmax == 1:
        raise ValueError("alpha > 1 is only meaningful together with kmax > 1")


def _pool_mask(data, pool_mask):
    if pool_mask is None:
        return np.ones(data.q, dtype=bool)
    mask = np.array(pool_mask, dtype=bool)
    if mask.shape != (data.q,):
        raise ValueError(f"pool_mask must have shape ({data.q},)")
    return mask


def _best_candidate(model, mask):
    rss, collinear = model.candidate_rss(mask)
    scores = np.where(collinear | np.isnan(rss), np.inf, rss)
    if scores.size == 0 or not np.isfinite(scores.min()):
        return None, None
    j = int(np.argmin(scores))
    return j + 1, float(rss[j])


def _exhausted(model, n, q_total, nu):
    return model.k >= n - 2 or q_total - model.k < nu or model.rss <= 0.0


def _gather(model, mask, kmax, n, q_total):
    """Greedy order of up to ``kmax`` candidates, ignoring significance."""
    trial = model.copy()
    order = []
    while len(order) < kmax and trial.k < n - 2 and q_total - trial.k >= 1 and trial.rss > 0:
        j, _ = _best_candidate(trial, mask)
        if j is None:
            break
        trial.add(j)
        order.append(j)
    return order


def _refine_block(model, gathered, alpha, nu, n, q_total):
    """Best passing subset of ``gathered`` on top of ``model``.

    Returns ``(members_in_order, loo_pvalues)`` or ``None``.
    """
    data = model.data
    Q = model.basis
    cols = np.column_stack([data.column(j) for j in gathered])
    W = cols - Q @ (Q.T @ cols)
    W -= Q @ (Q.T @ W)
    G = W.T @ W
    g = W.T @ model.residual
    base = model.rss
    m = len(gathered)

    cache = {0: base}

    def rss_of(bits):
        if bits in cache:
            return cache[bits]
        idx = [t for t in range(m) if bits >> t & 1]
        Gs = G[np.ix_(idx, idx)]
        gs = g[idx]
        try:
            sol = np.linalg.solve(Gs, gs)
        except np.linalg.LinAlgError:
            cache[bits] = np.nan
            return np.nan
        if np.linalg.cond(Gs) > 1e14:
            cache[bits] = np.nan
            return np.nan
        val = float(max(base - gs @ sol, 0.0))
        cache[bits] = val
        return val

    best = None
    for bits in range(1, 1 << m):
        rss_t = rss_of(bits)
        if not np.isfinite(rss_t):
            continue
        size = bin(bits).count("1")
        k_full = model.k + size
        if q_total - (k_full - 1) < nu or k_full >= n:
            continue
        pvals = {}
        ok = True
        for t in range(m):
            if not bits >> t & 1:
                continue
            rss_minus = rss_of(bits & ~(1 << t))
            if not np.isfinite(rss_minus) or rss_minus <= 0:
                ok = False
                break
            p = step_pvalue(min(rss_t, rss_minus), rss_minus, n, k_full - 1, q_total, nu)
            if p > alpha:
                ok = False
                break
            pvals[gathered[t]] = p
        if not ok:
            continue
        members = tuple(gathered[t] for t in range(m) if bits >> t & 1)
        key = (rss_t, size, sorted(members))
        if best is None or key < best[0]:
            best = (key, bits, pvals)
    if best is None:
        return None
    _, bits, pvals = best
    # record members in greedy order of rss reduction
    remaining = [t for t in range(m) if bits >> t & 1]
    chosen = 0
    order = []
    while remaining:
        t_best = min(remaining, key=lambda t: (rss_of(chosen | 1 << t), t))
        chosen |= 1 << t_best
        remaining.remove(t_best)
        order.append(gathered[t_best])
    return order, pvals


def stepwise(data, alpha=0.01, nu=1, kmax=1, pool_mask=None, max_steps=None):
    """Forward selection with exact Gaussian-covariate P-values.

    Parameters
    ----------
    data : Dataset
    alpha : float, default=0.01
        Cut-off for the stepwise P-value.  Values above one are accepted only
        with ``kmax > 1``, in which case the first ``kmax`` greedy covariates
        are returned.
    nu : int, default=1
        Compare each candidate against the ``nu``-th best Gaussian covariate.
    kmax : int, default=1
        With ``kmax > 1`` the next ``kmax`` greedy candidates are gathered
        regardless of significance and the passing subset with the smallest
        RSS is accepted as a block.
    pool_mask : array of bool, shape (q,), optional
        Restrict the candidates to these columns.
    max_steps : int, optional
        Stop after this many accepted covariates.

    Returns
    -------
    SelectionTrace
    """
    _check_common(alpha, nu, kmax)
    mask = _pool_mask(data, pool_mask)
    n = data.n
    q_total = int(mask.sum()) + len(data.forced)
    model = init_model(data)
    trace = SelectionTrace(rss0=float(data.y @ data.y), n=n, q=q_total)

    prev = trace.rss0
    for i in data.forced:
        p = step_pvalue(model.rss, prev, n, 0, 1) if prev > 0 else 1.0
        trace.steps.append(Step(i, data.label(i), p, model.rss, forced=True))
        prev = model.rss

    accepted = 0
    while True:
        if max_steps is not None and accepted >= max_steps:
            trace.terminated = "threshold"
            break
        if _exhausted(model, n, q_total, nu):
            trace.terminated = "exhausted"
            break
        if kmax == 1:
            j, rss_j = _best_candidate(model, mask)
            if j is None:
                trace.terminated = "exhausted"
                break
            p = step_pvalue(rss_j, model.rss, n, model.k, q_total, nu)
            if p > alpha:
                trace.rejected = Step(j, data.label(j), p, rss_j)
                trace.terminated = "threshold"
                break
            model.add(j)
            trace.steps.append(Step(j, data.label(j), p, model.rss))
            accepted += 1
            continue

        gathered = _gather(model, mask, kmax, n, q_total)
        if not gathered:
            trace.terminated = "exhausted"
            break
        if alpha > 1:
            block = (gathered, None)
        else:
            block = _refine_block(model, gathered, alpha, nu, n, q_total)
        if block is None:
            trace.terminated = "kmax_refined"
            break
        order, pvals = block
        for j in order:
            if pvals is None:
                rss_j = model.candidate_rss(_single(data.q, j))[0][j - 1]
                p = step_pvalue(rss_j, model.rss, n, model.k, q_total, nu)
            else:
                p = pvals[j]
            model.add(j)
            trace.steps.append(Step(j, data.label(j), p, model.rss))
            accepted += 1
        if alpha > 1:
            trace.terminated = "kmax_refined"
            break

    if model.k:
        loo = leave_one_out_pvalues(model, q=q_total, nu=nu)
        coef = model.coefficients()
        for step, beta in zip(trace.steps, coef):
            step.adjusted_p, step.standard_p = loo[step.index]
            step.coefficient = float(beta)
    trace.model = model
    return trace


def _single(q, j):
    mask = np.zeros(q, dtype=bool)
    mask[j - 1] = True
    return mask


def _subset_rss(G, g, base, q):
    """RSS for every bit mask over ``q`` unit-norm, pre-residualized columns."""
    total = 1 << q
    rss = np.full(total, np.nan)
    rss[0] = base
    chunk = 20000
    for size in range(1, q + 1):
        combos = np.array(list(combinations(range(q), size)), dtype=np.int64)
        masks = (np.int64(1) << combos).sum(axis=1)
        for start in range(0, len(combos), chunk):
            idx = combos[start : start + chunk]
            Gs = G[idx[:, :, None], idx[:, None, :]]
            gs = g[idx]
            try:
                sol = np.linalg.solve(Gs, gs[..., None])[..., 0]
                bad = np.zeros(len(idx), dtype=bool)
            except np.linalg.LinAlgError:
                sol = np.zeros_like(gs)
                bad = np.zeros(len(idx), dtype=bool)
                for r in range(len(idx)):
                    try:
                        sol[r] = np.linalg.solve(Gs[r], gs[r])
                    except np.linalg.LinAlgError:
                        bad[r] = True
            # flag numerically singular subsets
            if size > 1:
                eig_min = np.linalg.eigvalsh(Gs)[:, 0]
                bad |= eig_min < 1e-12
            else:
                bad |= Gs[:, 0, 0] < 1e-12
            vals = base - np.einsum("ij,ij->i", gs, sol)
            vals = np.clip(vals, 0.0, base)
            vals[bad] = np.nan
            rss[masks[start : start + chunk]] = vals
    return rss


def all_subsets(data, alpha=0.01, cap=ALL_SUBSETS_CAP, nu=1):
    """Every maximal subset whose members are all significant.

    A subset passes when each non-constant member, tested as if added last,
    has P-value at most ``alpha``.  It is kept when no strict superset also
    passes.  Results are ordered by RSS, smallest first.

    Raises
    ------
    CapExceededError
        If ``data.q`` exceeds ``cap``.
    """
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    q = data.q
    if q > cap:
        raise CapExceededError(f"all-subsets search over q={q} columns exceeds the cap of {cap}")
    n = data.n
    n_forced = len(data.forced)
    q_total = q + n_forced

    x = data.x
    r0 = data.y
    if data.intercept:
        x = x - x.mean(axis=0)
        r0 = r0 - r0.mean()
    norms = np.sqrt(np.einsum("ij,ij->j", x, x))
    scale = np.where(norms > 0, norms, 1.0)
    W = x / scale
    G = W.T @ W
    g = W.T @ r0
    zero = norms <= 1e-12 * max(float(np.max(norms)), 1e-300)
    G[zero, zero] = 0.0
    base = float(r0 @ r0)
    rss = _subset_rss(G, g, base, q)

    masks = np.arange(1 << q, dtype=np.int64)
    popcount = np.zeros(1 << q, dtype=np.int64)
    for i in range(q):
        popcount += (masks >> i) & 1
    passed = np.isfinite(rss)
    passed[0] = False
    for i in range(q):
        has = ((masks >> i) & 1).astype(bool) & passed
        m = masks[has]
        rss_m = rss[m]
        rss_minus = rss[m ^ (1 << i)]
        ok = np.isfinite(rss_minus) & (rss_minus > 0)
        p = np.ones(m.shape)
        for size in np.unique(popcount[m[ok]]):
            sel = ok & (popcount[m] == size)
            k_prev = int(size) + n_forced - 1
            if n - k_prev - 1 <= 0 or q_total - k_prev < nu:
                continue
            p[sel] = step_pvalue(np.minimum(rss_m[sel], rss_minus[sel]), rss_minus[sel], n, k_prev, q_total, nu)
        passed[m] = p <= alpha

    # superset-or transform: up[m] = some passing set contains m
    up = passed.copy()
    for i in range(q):
        bit = 1 << i
        lack = (masks & bit) == 0
        up[lack] |= up[masks[lack] | bit]
    has_super = np.zeros(1 << q, dtype=bool)
    for i in range(q):
        bit = 1 << i
        lack = (masks & bit) == 0
        has_super[lack] |= up[masks[lack] | bit]
    maximal = np.flatnonzero(passed & ~has_super)
    maximal = maximal[np.lexsort((maximal, rss[maximal]))]

    results = []
    for m in maximal:
        members = tuple(data.forced) + tuple(i + 1 for i in range(q) if int(m) >> i & 1)
        model = init_model(data)
        for j in members[n_forced:]:
            model.add(j)
        loo = leave_one_out_pvalues(model, q=q_total, nu=nu)
        coef = model.coefficients()
        results.append(
            SubsetResult(
                members=members,
                member_pvalues={i: loo[i][0] for i in members},
                rss=float(model.rss),
                standard_pvalues={i: loo[i][1] for i in members},
                coefficients=dict(zip(members, coef.tolist())),
            )
        )
    return results


def repeated_stepwise(data, alpha=0.01, nu=1, kmax=1, max_rounds=None, pool_mask=None):
    """Run stepwise selection, remove what it picked, and repeat.

    Stops at the first round that selects nothing.  If the very first round is
    empty, that empty trace is returned on its own.
    """
    _check_common(alpha, nu, kmax)
    mask = _pool_mask(data, pool_mask).copy()
    rounds = []
    while mask.any():
        if max_rounds is not None and len(rounds) >= max_rounds:
            break
        trace = stepwise(data, alpha=alpha, nu=nu, kmax=kmax, pool_mask=mask)
        covs = trace.covariates
        if not covs:
            if not rounds:
                rounds.append(trace)
            break
        rounds.append(trace)
        mask[np.asarray(covs) - 1] = False
    return rounds
