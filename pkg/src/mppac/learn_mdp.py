"""Mean-payoff learning for blackbox/greybox MDPs.

Anytime on-demand bounded value iteration: simulate episodes against the
oracle, detect probably-sure end components, attach stay actions encoding
the current gain bounds, and iterate interval value updates with deflation
over the discovered fragment until the bound gap at the initial state
closes (or the timeout fires, in which case the current bounds are still a
valid report).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from .graph import (
    MINUS,
    PLUS,
    STAY,
    UNKNOWN,
    ClosedMec,
    MecRecord,
    best_leaving_action,
    find_delta_sure_mecs,
    is_delta_sure_ec,
    mec_decomposition,
)
from .model import BLACKBOX, GREYBOX, learner_rng
from .stats import (
    ec_required_samples,
    greybox_miss_probability,
    lower_tp_estimate,
    split_mp_inconfidence,
    tp_inconfidence,
    tp_width,
)

TERMINALS = (PLUS, MINUS, UNKNOWN)

BLACKBOX_UPDATES = "blackbox"
GREYBOX_UPDATES = "greybox-equations"

# Deterministic trace clock: one oracle step counts as one microsecond, so
# traces (and the CSVs built from them) are identical for identical
# (model, config, seed) regardless of machine load. Real elapsed time is
# reported separately and drives only the timeout.
VIRTUAL_STEP_SECONDS = 1e-6


@dataclass(frozen=True)
class LearnerConfig:
    epsilon_mp: float = 0.01
    delta_mp: float = 0.1
    revisit_threshold: int = 6  # k: path occurrences before a loop check
    episodes_per_round: int = 10_000  # n
    precision_mode: str = "relative"  # "relative" | "absolute"
    timeout_s: float = 1800.0
    seed: int = 0
    update_style: str = BLACKBOX_UPDATES  # "blackbox" | "greybox-equations"
    aperiodicity: float = 0.95  # y: virtual self-loop weight in MEC VI
    initial_mec_samples: int = 10_000
    mec_sample_multiplier: int = 5
    max_episode_steps: int = 0  # 0 = unbounded episodes
    anytime: bool = False  # drop the termination test, run to timeout
    fixpoint_tol: float = 1e-6
    exact_mec_bounds: bool = False  # CTMDP only: full sweep instead of 3 VI calls


@dataclass
class BoundsReport:
    """Anytime output: per-round trace rows and the final PAC interval."""

    trace: list  # (time_s, episodes, lower, upper); bounds scaled to [0,1]
    final: tuple  # (lower_mp, upper_mp) in reward units
    certified_inconfidence: float
    r_max_seen: float
    episodes: int
    rounds: int
    wall_seconds: float
    timed_out: bool
    wall_trace: list  # real elapsed seconds per trace row (informational)

    @property
    def width(self) -> float:
        return self.final[1] - self.final[0]


def stay_distribution(l: float, u: float) -> dict:
    """Stay action for scaled gain bounds [l, u]: reach PLUS with the lower
    bound, MINUS with 1-upper, UNKNOWN with the gap."""
    if not 0.0 <= l <= u <= 1.0:
        raise ValueError(f"invalid gain bounds ({l}, {u})")
    return {PLUS: l, MINUS: 1.0 - u, UNKNOWN: u - l}


class PartialModel:
    """Everything the learner knows about the model."""

    def __init__(
        self,
        p_min: float,
        delta_mp: float = 0.1,
        update_style: str = BLACKBOX_UPDATES,
        info_level: str = BLACKBOX,
        ctmdp: bool = False,
    ):
        self.p_min = p_min
        self.delta_mp = delta_mp
        self.update_style = update_style
        self.info_level = info_level
        self.ctmdp = ctmdp
        self.available: dict[int, tuple[str, ...]] = {}  # discovered states
        self.counts: dict[tuple[int, str], int] = {}  # #(s,a)
        self.triples: dict[tuple[int, str, int], int] = {}  # #(s,a,t)
        self.post: dict[tuple[int, str], set[int]] = {}  # observed successors
        self.succ_total: dict[tuple[int, str], int] = {}  # greybox |post(s,a)|
        self.dwell_sum: dict[tuple[int, str], float] = {}  # CTMDP residence times
        self.rewards: dict[int, float] = {}
        self.r_max_seen = 0.0
        self.L: dict[int, float] = {PLUS: 1.0, MINUS: 0.0, UNKNOWN: 0.0}
        self.U: dict[int, float] = {PLUS: 1.0, MINUS: 0.0, UNKNOWN: 1.0}
        self.act_L: dict[tuple[int, str], float] = {}
        self.act_U: dict[tuple[int, str], float] = {}
        self.mecs: list[MecRecord] = []
        self.stay_of: dict[int, MecRecord] = {}
        # greedy-choice memo: action values only move between rounds, so
        # per-state argmax lists are cached until someone bumps the version
        self.choices_version = 0
        self._choice_cache: dict[int, tuple] = {}
        self._choice_cache_version = -1

    def invalidate_choices(self) -> None:
        """Anything that moves act_L/act_U or a stay gain must call this."""
        self.choices_version += 1

    # -- discovery and counting ---------------------------------------

    def discover(self, s: int, oracle) -> bool:
        """First contact with a state: learn its actions and reward."""
        if s in self.available:
            return False
        av = tuple(oracle.available_actions(s))
        self.available[s] = av
        for a in av:
            self.counts[(s, a)] = 0
            self.post[(s, a)] = set()
            self.act_L[(s, a)] = 0.0
            self.act_U[(s, a)] = 1.0
            if oracle.info_level == GREYBOX:
                self.succ_total[(s, a)] = oracle.successor_count(s, a)
        self.L[s] = 0.0
        self.U[s] = 1.0
        r = oracle.reward(s)
        self.rewards[s] = r
        if r > self.r_max_seen:
            self._grow_r_max(r)
        return True

    def _grow_r_max(self, new_r: float) -> None:
        # gain bounds are stored scaled by r_max_seen; a larger maximum
        # shrinks every previously certified scaled gain by old/new
        old = self.r_max_seen
        self.r_max_seen = new_r
        if old > 0.0:
            ratio = old / new_r
            for m in self.mecs:
                m.gain_lower *= ratio
                m.gain_upper *= ratio
            self.invalidate_choices()

    def record_step(self, s: int, a: str, t: int, dwell: float | None = None) -> None:
        key = (s, a)
        self.counts[key] += 1
        self.triples[(s, a, t)] = self.triples.get((s, a, t), 0) + 1
        self.post[key].add(t)
        if dwell is not None:
            self.dwell_sum[key] = self.dwell_sum.get(key, 0.0) + dwell

    def scaled_reward(self, s: int) -> float:
        if self.r_max_seen <= 0.0:
            return 0.0
        return self.rewards[s] / self.r_max_seen

    # -- inconfidence bookkeeping ---------------------------------------

    def num_pairs(self) -> int:
        return max(1, len(self.counts))

    def current_delta_tp(self) -> float:
        """Per-transition inconfidence at the current discovery horizon."""
        if self.ctmdp:
            d1, _ = split_mp_inconfidence(self.delta_mp, self.p_min)
            return tp_inconfidence(d1, self.p_min, self.num_pairs())
        return tp_inconfidence(self.delta_mp, self.p_min, self.num_pairs())

    def current_delta_r(self) -> float:
        """Per-rate inconfidence (CTMDP); equals current_delta_tp by the
        split construction."""
        _, d2 = split_mp_inconfidence(self.delta_mp, self.p_min)
        return d2 / self.num_pairs()

    def grey_equations(self, s: int, a: str, style: str | None = None) -> bool:
        """Whether the residual-to-seen-extremes update is used for (s,a)."""
        style = self.update_style if style is None else style
        if style != GREYBOX_UPDATES:
            return False
        if self.info_level == GREYBOX:
            total = self.succ_total.get((s, a))
            return total is not None and len(self.post[(s, a)]) >= total
        return True

    def surcharge(self) -> float:
        """Extra reported inconfidence when greybox equations run on
        blackbox data: per sampled pair, the chance its support is still
        incomplete."""
        if self.update_style != GREYBOX_UPDATES or self.info_level == GREYBOX:
            return 0.0
        return sum(
            greybox_miss_probability(self.p_min, n) for n in self.counts.values() if n > 0
        )

    # -- MEC record bookkeeping -----------------------------------------

    def rebuild_stay_of(self) -> None:
        self.stay_of = {s: m for m in self.mecs if m.has_stay for s in m.states}
        self.invalidate_choices()

    def reconcile_mecs(self, fresh: list[MecRecord], default_budget: int) -> None:
        """Adopt this round's sure MECs. A record matching an old one in both
        state and action sets keeps its gain bounds and stay; anything else
        starts over at (0, 1) — a changed MEC invalidates old gain bounds."""
        old = {m.key(): m for m in self.mecs}
        for m in fresh:
            m.sample_budget = default_budget
            prev = old.get(m.key())
            if prev is not None:
                m.gain_lower = prev.gain_lower
                m.gain_upper = prev.gain_upper
                m.has_stay = prev.has_stay
                m.sample_budget = prev.sample_budget
        self.mecs = fresh
        self.rebuild_stay_of()

    def adopt_looping_record(self, rec: MecRecord, default_budget: int) -> MecRecord:
        """Attach stay to a freshly confirmed EC mid-episode. An existing
        record with the same identity keeps its bounds; otherwise records
        overlapping the new one are dropped."""
        for m in self.mecs:
            if m.key() == rec.key():
                m.delta_sure = True
                m.has_stay = True
                self.rebuild_stay_of()
                return m
        self.mecs = [m for m in self.mecs if not (m.states & rec.states)]
        rec.delta_sure = True
        rec.has_stay = True
        rec.sample_budget = default_budget
        self.mecs.append(rec)
        self.rebuild_stay_of()
        return rec


# ---------------------------------------------------------------------------
# Bellman updates


def bellman_blackbox(s: int, a: str, partial: PartialModel, delta_tp: float):
    """Pessimistic lower / optimistic upper one-step values: the unassigned
    estimate mass counts as 0 for the lower bound and 1 for the upper."""
    n = partial.counts[(s, a)]
    if n == 0:
        return 0.0, 1.0
    w = tp_width(n, delta_tp)
    low = up = mass = 0.0
    for t in sorted(partial.post[(s, a)]):
        th = lower_tp_estimate(partial.triples[(s, a, t)], n, w)
        mass += th
        low += th * partial.L[t]
        up += th * partial.U[t]
    return low, up + (1.0 - mass)


def bellman_greybox(s: int, a: str, partial: PartialModel, delta_tp: float):
    """As blackbox, but residual mass goes to the worst/best *seen*
    successor instead of to 0/1."""
    n = partial.counts[(s, a)]
    if n == 0:
        return 0.0, 1.0
    w = tp_width(n, delta_tp)
    seen = sorted(partial.post[(s, a)])
    low = up = mass = 0.0
    for t in seen:
        th = lower_tp_estimate(partial.triples[(s, a, t)], n, w)
        mass += th
        low += th * partial.L[t]
        up += th * partial.U[t]
    resid = 1.0 - mass
    low += resid * min(partial.L[t] for t in seen)
    up += resid * max(partial.U[t] for t in seen)
    return low, up


class _Estimates:
    """Per-round cache of lower transition estimates (counts are frozen
    during a value-iteration phase, only L/U move)."""

    def __init__(self, partial: PartialModel, style: str | None = None):
        delta_tp = partial.current_delta_tp()
        widths: dict[int, float] = {}
        self.table = {}
        for (s, a), n in partial.counts.items():
            if n == 0:
                self.table[(s, a)] = None
                continue
            w = widths.get(n)
            if w is None:
                w = widths[n] = tp_width(n, delta_tp)
            ths = tuple(
                (t, lower_tp_estimate(partial.triples[(s, a, t)], n, w))
                for t in sorted(partial.post[(s, a)])
            )
            resid = max(0.0, 1.0 - sum(th for _, th in ths))
            self.table[(s, a)] = (ths, resid, partial.grey_equations(s, a, style))

    def pair_bounds(self, s: int, a: str, L: dict, U: dict):
        entry = self.table[(s, a)]
        if entry is None:
            return 0.0, 1.0
        ths, resid, grey = entry
        low = up = 0.0
        for t, th in ths:
            low += th * L[t]
            up += th * U[t]
        if grey:
            low += resid * min(L[t] for t, _ in ths)
            up += resid * max(U[t] for t, _ in ths)
        else:
            up += resid
        return low, up


def _sweep_once(partial: PartialModel, est: _Estimates) -> float:
    """One synchronous Bellman sweep over the discovered states; refreshes
    per-pair act values and returns the largest state-value movement."""
    newL: dict[int, float] = {}
    newU: dict[int, float] = {}
    moved = 0.0
    L, U = partial.L, partial.U
    for s, av in partial.available.items():
        best_l = best_u = 0.0
        for a in av:
            pl, pu = est.pair_bounds(s, a, L, U)
            partial.act_L[(s, a)] = pl
            partial.act_U[(s, a)] = pu
            if pl > best_l:
                best_l = pl
            if pu > best_u:
                best_u = pu
        rec = partial.stay_of.get(s)
        if rec is not None:
            best_l = max(best_l, rec.gain_lower)
            best_u = max(best_u, rec.gain_upper)
        newL[s] = best_l
        newU[s] = best_u
        moved = max(moved, abs(best_l - L[s]), abs(best_u - U[s]))
    partial.L.update(newL)
    partial.U.update(newU)
    return moved


def global_update(partial: PartialModel, update_style: str | None = None, tol: float = 1e-6) -> bool:
    """One synchronous Bellman sweep; True iff any value moved more than tol.

    update_style overrides the partial model's own style (used to compare
    blackbox and greybox updates on identical counts).
    """
    return _sweep_once(partial, _Estimates(partial, update_style)) > tol


def _mec_action_values(partial: PartialModel, M: MecRecord) -> dict:
    vals = {}
    for s in sorted(M.states):
        for a in partial.available[s]:
            vals[(s, a)] = (partial.act_L[(s, a)], partial.act_U[(s, a)])
        if M.has_stay:
            vals[(s, STAY)] = (M.gain_lower, M.gain_upper)
    return vals


def deflate(M: MecRecord, partial: PartialModel) -> float:
    """Clamp U of every state of M to the best leaving action's upper value;
    returns the largest decrease applied."""
    vals = _mec_action_values(partial, M)
    try:
        sa = best_leaving_action(M, vals, partial.available, partial.post)
    except ClosedMec:
        return 0.0  # no exit and no stay yet: nothing sound to clamp to
    up = vals[sa][1]
    moved = 0.0
    for s in M.states:
        if partial.U[s] > up:
            moved = max(moved, partial.U[s] - up)
            partial.U[s] = up
    return moved


def _vi_phase(partial: PartialModel, config: LearnerConfig) -> None:
    """Reinitialize L/U and iterate sweep + deflate to the fixpoint.

    Convergence is judged on the values after deflation: the sweep alone can
    keep re-raising a closed MEC's U to the estimation-width floor that
    deflation then removes, so per-phase movement never settles even though
    the post-deflate values do (monotonically — the sweep is a monotone map
    and deflation only lowers U).
    """
    for s in partial.available:
        partial.L[s] = 0.0
        partial.U[s] = 1.0
    est = _Estimates(partial)
    while True:
        before_l = dict(partial.L)
        before_u = dict(partial.U)
        _sweep_once(partial, est)
        for M in partial.mecs:
            if M.has_stay:
                deflate(M, partial)
        moved = max(
            max(abs(partial.L[s] - before_l[s]), abs(partial.U[s] - before_u[s]))
            for s in partial.available
        )
        if moved <= config.fixpoint_tol:
            partial.invalidate_choices()
            return


# ---------------------------------------------------------------------------
# episodes


def _choose_action(s: int, partial: PartialModel, rng):
    """Uniformly among the actions maximizing the upper value, narrowed by
    the lower value; the draw runs over a label-sorted list so equal seeds
    give equal choices. The label list per state is memoized until the
    underlying values move (choices_version), which spares recomputing the
    argmax on every step of every episode in a round."""
    cache = partial._choice_cache
    if partial._choice_cache_version != partial.choices_version:
        cache.clear()
        partial._choice_cache_version = partial.choices_version
    labels = cache.get(s)
    if labels is None:
        cands = []
        for a in partial.available[s]:
            cands.append((a, partial.act_U[(s, a)], partial.act_L[(s, a)]))
        rec = partial.stay_of.get(s)
        if rec is not None:
            cands.append((STAY, rec.gain_upper, rec.gain_lower))
        best_u = max(c[1] for c in cands)
        cands = [c for c in cands if c[1] == best_u]
        best_l = max(c[2] for c in cands)
        labels = tuple(sorted(c[0] for c in cands if c[2] == best_l))
        cache[s] = labels
    if len(labels) == 1:
        return labels[0]
    i = min(int(rng.random() * len(labels)), len(labels) - 1)
    return labels[i]


def _draw_stay(rec: MecRecord, rng) -> int:
    x = rng.random()
    if x < rec.gain_lower:
        return PLUS
    if x < rec.gain_lower + (1.0 - rec.gain_upper):
        return MINUS
    return UNKNOWN


def _take(oracle, partial: PartialModel, rng, s: int, a: str) -> int:
    """Execute one action (real or stay) from s, recording what happened."""
    if a == STAY:
        return _draw_stay(partial.stay_of[s], rng)
    step = oracle.sample_step(s, a)
    partial.record_step(s, a, step.successor, step.dwell)
    partial.discover(step.successor, oracle)
    return step.successor


def looping(path, s: int, partial: PartialModel, delta_tp: float, p_min: float):
    """Loop check for a state revisited often: find the MEC containing s in
    the observed graph restricted to the path with under-sampled actions
    removed, then require the strict sure-EC gate. Returns the confirmed
    record (truthy) or None."""
    px = {q for q in path if q >= 0}
    need = ec_required_samples(delta_tp, p_min)
    graph = {}
    for q in sorted(px):
        for a in partial.available[q]:
            if partial.counts[(q, a)] >= need:
                ts = partial.post[(q, a)]
                if ts and ts <= px:
                    graph[(q, a)] = frozenset(ts)
    for m in mec_decomposition(graph):
        if s in m.states:
            if is_delta_sure_ec(m.states, partial.counts, partial.post, delta_tp, p_min):
                m.delta_sure = True
                return m
            return None
    return None


def simulate_episode(oracle, partial: PartialModel, config: LearnerConfig, rng, deadline=None):
    """One episode from the initial state, ending in a terminal pseudo-state
    (or aborted by the step cap / timeout, leaving counts valid)."""
    k = config.revisit_threshold
    partial.discover(oracle.init, oracle)
    path = [oracle.init]
    appear = {oracle.init: 1}
    steps = 0
    while True:
        s = path[-1]
        if s in TERMINALS:
            return path
        if config.max_episode_steps and steps >= config.max_episode_steps:
            return path
        if deadline is not None and time.monotonic() >= deadline:
            return path
        t = _take(oracle, partial, rng, s, _choose_action(s, partial, rng))
        steps += 1
        path.append(t)
        if t in TERMINALS:
            continue
        appear[t] = appear.get(t, 0) + 1
        if appear[t] >= k and appear[t] % k == 0:
            # a state already carrying a confirmed stay record needs no new
            # loop analysis; re-deriving from the current (partial) path
            # could even shrink the record and discard its learned gains
            rec = partial.stay_of.get(t)
            if rec is None:
                rec = looping(path, t, partial, partial.current_delta_tp(), partial.p_min)
                if rec is not None:
                    rec = partial.adopt_looping_record(rec, config.initial_mec_samples)
            if rec is not None:
                ls, la = best_leaving_action(
                    rec, _mec_action_values(partial, rec), partial.available, partial.post
                )
                t = _take(oracle, partial, rng, ls, la)
                steps += 1
                path.append(t)
                if t not in TERMINALS:
                    appear[t] = appear.get(t, 0) + 1


# ---------------------------------------------------------------------------
# MEC refinement


def compute_n_samples(M: MecRecord, partial: PartialModel, config: LearnerConfig) -> int:
    """Smallest initial*multiplier^j strictly above the least visit count of
    M's pairs."""
    least = min(partial.counts[(s, a)] for s in M.states for a in M.actions[s])
    n = config.initial_mec_samples
    while n <= least:
        n *= config.mec_sample_multiplier
    return n


def simulate_mec(
    M: MecRecord, oracle, n_samples: int, rng, partial: PartialModel, start: int, deadline=None
) -> bool:
    """Uniform-action random walk inside M for n_samples times the number of
    observed (s,a,t) triples. Returns False if a step escapes M — the record
    is then stale and must be dropped by the caller."""
    n_triples = sum(
        1 for (s, a, t) in partial.triples if s in M.states and a in M.actions.get(s, ())
    )
    steps = n_samples * max(1, n_triples)
    acts = {s: sorted(M.actions[s]) for s in M.states}
    # this loop dominates refinement time, so record_step is inlined and the
    # uniform draw skipped when there is only one action to draw from
    states = M.states
    sample = oracle.sample_step
    rand = rng.random
    monotonic = time.monotonic
    counts = partial.counts
    triples = partial.triples
    post = partial.post
    dwell_sum = partial.dwell_sum
    s = start
    for i in range(steps):
        if deadline is not None and (i & 0xFFF) == 0 and monotonic() >= deadline:
            return True  # keep what was learned; the caller is out of time
        av = acts[s]
        a = av[min(int(rand() * len(av)), len(av) - 1)] if len(av) > 1 else av[0]
        t, dwell = sample(s, a)
        key = (s, a)
        counts[key] += 1
        tk = (s, a, t)
        triples[tk] = triples.get(tk, 0) + 1
        post[key].add(t)
        if dwell is not None:
            dwell_sum[key] = dwell_sum.get(key, 0.0) + dwell
        if t not in states:
            partial.discover(t, oracle)
            return False
        s = t
    return True


def _interval_gain_vi(M: MecRecord, rows, rewards, delta_tp: float, beta: float, y: float):
    """Interval value iteration for the gain of a (presumed) MEC.

    rows maps (s,a) to (count, ((t, frequency), ...)); widths come from the
    counts, residual mass goes to the worst/best seen successor. A virtual
    self-loop of mass 1-y forces aperiodicity without changing the gain.
    Iterates until both update-difference spans are below beta; the lower
    gain is the smallest lower difference, the upper gain the largest upper
    difference, clamped to [0,1].
    """
    beta = max(beta, 1e-9)
    states = sorted(M.states)
    prepared = {}
    for (s, a), (n, q) in rows.items():
        w = tp_width(n, delta_tp)
        ths = tuple((t, max(0.0, f - w)) for t, f in q)
        prepared[(s, a)] = (ths, max(0.0, 1.0 - sum(th for _, th in ths)))
    acts = {s: sorted(M.actions[s]) for s in states}
    l = {s: 0.0 for s in states}
    u = {s: 0.0 for s in states}
    while True:
        newl = {}
        newu = {}
        for s in states:
            best_l = best_u = 0.0
            for a in acts[s]:
                ths, resid = prepared[(s, a)]
                pl = pu = 0.0
                for t, th in ths:
                    pl += th * l[t]
                    pu += th * u[t]
                pl += resid * min(l[t] for t, _ in ths)
                pu += resid * max(u[t] for t, _ in ths)
                if pl > best_l:
                    best_l = pl
                if pu > best_u:
                    best_u = pu
            newl[s] = rewards[s] + y * best_l + (1.0 - y) * l[s]
            newu[s] = rewards[s] + y * best_u + (1.0 - y) * u[s]
        dl = [newl[s] - l[s] for s in states]
        du = [newu[s] - u[s] for s in states]
        l, u = newl, newu
        if max(dl) - min(dl) <= beta and max(du) - min(du) <= beta:
            gl = min(1.0, max(0.0, min(dl)))
            gu = min(1.0, max(0.0, max(du)))
            return gl, max(gl, gu)


def mec_value_iteration(
    M: MecRecord, partial: PartialModel, delta_tp: float, beta: float, y: float = 0.95
):
    """Gain bounds for M from the current counts (rewards scaled to [0,1] by
    r_max_seen). Residual-to-seen-extremes updates are always used here: a
    sure MEC's support is known with the certified confidence."""
    rows = {}
    for s in M.states:
        for a in M.actions[s]:
            n = partial.counts[(s, a)]
            seen = sorted(partial.post[(s, a)])
            rows[(s, a)] = (n, tuple((t, partial.triples[(s, a, t)] / n) for t in seen))
    rewards = {s: partial.scaled_reward(s) for s in M.states}
    return _interval_gain_vi(M, rows, rewards, delta_tp, beta, y)


def _tighten(M: MecRecord, gl: float, gu: float) -> None:
    """Intersect the new gain interval with the stored one; if sampling
    noise makes them disjoint, trust the fresh (better-sampled) interval."""
    lo = max(M.gain_lower, gl)
    hi = min(M.gain_upper, gu)
    if lo > hi:
        lo, hi = gl, gu
    M.gain_lower = lo
    M.gain_upper = hi


def drop_stale_record(M: MecRecord, partial: PartialModel) -> None:
    """A walk escaped M: its staying-action evidence was wrong, so the
    record loses sure status and its stay action."""
    M.delta_sure = False
    M.has_stay = False
    partial.mecs = [m for m in partial.mecs if m is not M]
    partial.rebuild_stay_of()


def update_mec_value(
    M: MecRecord,
    oracle,
    partial: PartialModel,
    config: LearnerConfig,
    rng,
    start: int | None = None,
    deadline=None,
):
    """Refine M's gain bounds, aiming interval VI at half the current gap.

    Value iteration alone often suffices: the precision target beta, not the
    visit counts, is what binds whenever rows concentrate on few successors
    (a single-successor row loses no width at any count). The sampling walk
    with its escalating budget therefore only runs when VI at the current
    counts leaves the gap too wide, i.e. when the count-driven width floor
    is the binding constraint. Returns the new bounds, or None if the walk
    escaped M (stale record, dropped).
    """
    beta = (M.gain_upper - M.gain_lower) / 2.0
    gl, gu = mec_value_iteration(
        M, partial, partial.current_delta_tp(), beta, config.aperiodicity
    )
    _tighten(M, gl, gu)
    partial.invalidate_choices()
    if not _needs_refinement(M, partial, config):
        return M.gain_lower, M.gain_upper
    n_samples = compute_n_samples(M, partial, config)
    M.sample_budget = n_samples
    if start is None or start not in M.states:
        start = min(M.states)
    if not simulate_mec(M, oracle, n_samples, rng, partial, start, deadline):
        drop_stale_record(M, partial)
        return None
    beta = (M.gain_upper - M.gain_lower) / 2.0
    gl, gu = mec_value_iteration(
        M, partial, partial.current_delta_tp(), beta, config.aperiodicity
    )
    _tighten(M, gl, gu)
    partial.invalidate_choices()
    return M.gain_lower, M.gain_upper


# ---------------------------------------------------------------------------
# main loop


def _termination_width(partial: PartialModel, config: LearnerConfig) -> float:
    w = 2.0 * config.epsilon_mp
    if config.precision_mode == "relative" and partial.r_max_seen > 0:
        w /= partial.r_max_seen
    return w


def _needs_refinement(rec: MecRecord, partial: PartialModel, config: LearnerConfig) -> bool:
    # refining far below the termination width burns samples for nothing
    return rec.gain_upper - rec.gain_lower >= _termination_width(partial, config) / 2.0


def _learn(oracle, config: LearnerConfig, refine, ctmdp: bool) -> BoundsReport:
    t0 = time.monotonic()
    deadline = t0 + config.timeout_s if config.timeout_s else None
    rng = learner_rng(config.seed)
    partial = PartialModel(
        oracle.p_min,
        delta_mp=config.delta_mp,
        update_style=config.update_style,
        info_level=oracle.info_level,
        ctmdp=ctmdp,
    )
    partial.discover(oracle.init, oracle)
    trace: list[tuple[float, int, float, float]] = []
    wall_trace: list[float] = []
    episodes = 0
    rounds = 0
    timed_out = False

    while True:
        rounds += 1
        refined: set[int] = set()
        for _ in range(config.episodes_per_round):
            if deadline is not None and time.monotonic() >= deadline:
                timed_out = True
                break
            path = simulate_episode(oracle, partial, config, rng, deadline)
            episodes += 1
            last = path[-1]
            if last not in TERMINALS:
                if deadline is not None and time.monotonic() >= deadline:
                    timed_out = True
                    break
                continue  # step-capped episode; counts are still valid
            if last in (PLUS, UNKNOWN) and len(path) >= 2:
                rec = partial.stay_of.get(path[-2])
                if rec is not None and id(rec) not in refined:
                    refined.add(id(rec))
                    if _needs_refinement(rec, partial, config):
                        refine(rec, oracle, partial, config, rng, path[-2], deadline)

        fresh = find_delta_sure_mecs(partial, partial.current_delta_tp(), partial.p_min)
        partial.reconcile_mecs(fresh, config.initial_mec_samples)
        _vi_phase(partial, config)
        low = partial.L[oracle.init]
        up = partial.U[oracle.init]
        trace.append((oracle.steps_sampled * VIRTUAL_STEP_SECONDS, episodes, low, up))
        wall_trace.append(time.monotonic() - t0)
        if timed_out:
            break
        if not config.anytime and up - low < _termination_width(partial, config):
            break
        if deadline is not None and time.monotonic() >= deadline:
            timed_out = True
            break

    r_max = partial.r_max_seen
    return BoundsReport(
        trace=trace,
        final=(r_max * partial.L[oracle.init], r_max * partial.U[oracle.init]),
        certified_inconfidence=min(1.0, config.delta_mp + partial.surcharge()),
        r_max_seen=r_max,
        episodes=episodes,
        rounds=rounds,
        wall_seconds=time.monotonic() - t0,
        timed_out=timed_out,
        wall_trace=wall_trace,
    )


def on_demand_bvi(oracle, config: LearnerConfig | None = None) -> BoundsReport:
    """Learn PAC mean-payoff bounds for the MDP behind the oracle."""
    config = config or LearnerConfig()
    return _learn(oracle, config, update_mec_value, ctmdp=False)
