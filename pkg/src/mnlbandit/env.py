"""Simulation environment: seeded MNL buyer, step accounting, regret ledger.

The environment owns the hidden instance and a private RNG stream.  Every
``offer`` consumes exactly one time step; ``sample_epochs`` runs whole
exploration epochs in a vectorized batch with exact step accounting; and
``advance`` replays a fixed assortment for many steps at once (exploitation,
where outcomes do not feed any estimator).

Epoch law used by the batch sampler.  One epoch offers ``Z ∪ S`` repeatedly
until the outcome lands in ``Z ∪ {0}``.  Writing ``nu_i = v_i / (1 + V_Z)``
with ``V_Z = sum_{j in Z} v_j``, the per-item purchase counts
``x_i`` (i in S) collected before the stop are independent geometric
variables on {0, 1, ...} with success probability ``1 / (1 + nu_i)``
(mean ``nu_i``), the stopping outcome is independent of all counts and is
distributed over ``Z ∪ {0}`` proportionally to ``v_c`` (weight 1 for the
no-purchase option), and the epoch length is ``1 + sum_i x_i``.  This is the
standard product-form factorization of a race of exponentials observed at
geometric times; the step-level ``offer`` path and the batch path are
distributionally identical (and tested against each other).

Determinism: a replication's entire outcome sequence is a pure function of
``(master_seed, replication_index)`` via `fork_stream`.  The RNG algorithm
identifier is pinned in `RNG_ALGORITHM_ID` and echoed by the CLI metadata.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Tuple

import numpy as np

from .model import Assortment, Instance, revenue, validate_assortment
from .oracle import BRUTE_FORCE_MAX_N, OptimumSolution, brute_force_optimum, fractional_optimum
from .model import reduce_params

__all__ = [
    "RNG_ALGORITHM_ID",
    "fork_stream",
    "HorizonExhausted",
    "EpochBatch",
    "RegretLedger",
    "Environment",
]

#: Pinned RNG recipe: numpy PCG64 seeded from
#: ``SeedSequence(master_seed, spawn_key=(replication_index,))``.
RNG_ALGORITHM_ID = "numpy-pcg64-seedseq-spawnkey-v1"

#: Upper bound on elements drawn per vectorized chunk (memory guard).  Fixed
#: constant so the draw sequence is a deterministic function of the call
#: sequence.
_CHUNK_ELEMENTS = 1 << 22


class HorizonExhausted(RuntimeError):
    """Raised when an operation would exceed the environment's step budget."""


def fork_stream(master_seed: int, replication_index: int) -> np.random.Generator:
    """Independent, reproducible RNG stream for one replication.

    Uses ``SeedSequence(master_seed, spawn_key=(replication_index,))`` to
    derive statistically independent streams: same arguments give the same
    stream, different replication indices give streams with no shared state.
    """
    ss = np.random.SeedSequence(master_seed, spawn_key=(replication_index,))
    return np.random.Generator(np.random.PCG64(ss))


def stream_digest(master_seed: int, replication_index: int) -> int:
    """Deterministic 64-bit digest identifying a replication's stream."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(replication_index,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class EpochBatch:
    """Result of a vectorized batch of exploration epochs.

    ``epochs`` is the number of *completed* epochs (== requested unless the
    step budget ran out), ``steps`` the exact number of time steps consumed
    (including a final partial epoch when truncated — its statistics are
    discarded but its steps still count), ``x_sums[j]`` the total purchase
    count of the j-th item of ``s`` over completed epochs, and ``z_sum`` the
    summed stop rewards over completed epochs.
    """

    requested: int
    epochs: int
    steps: int
    x_sums: np.ndarray
    z_sum: float
    truncated: bool
    # Optional per-epoch detail (collect=True): one row/entry per completed epoch.
    x: Optional[np.ndarray] = None
    z_values: Optional[np.ndarray] = None
    lengths: Optional[np.ndarray] = None


@dataclass
class RegretLedger:
    """Exact pseudo-regret and offer accounting.

    ``cum_regret`` accumulates ``theta_star - R(S_t, v)`` per step (pseudo
    regret — deterministic given the offered sets), is nondecreasing and
    never exceeds ``theta_star * steps``.  ``per_item_offer_counts[i-1]``
    counts the steps at which item ``i`` was part of the offered set, so the
    total never exceeds ``capacity * steps``.
    """

    n: int
    steps: int = 0
    cum_regret: float = 0.0
    per_item_offer_counts: np.ndarray = field(default=None)  # type: ignore[assignment]
    _segments: List[List[float]] = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        if self.per_item_offer_counts is None:
            self.per_item_offer_counts = np.zeros(self.n, dtype=np.int64)

    def record(self, item_indices: np.ndarray, per_step_regret: float, steps: int) -> None:
        if steps <= 0:
            return
        self.steps += steps
        self.cum_regret += per_step_regret * steps
        if item_indices.size:
            self.per_item_offer_counts[item_indices] += steps
        if self._segments and self._segments[-1][0] == per_step_regret:
            self._segments[-1][1] += steps
        else:
            self._segments.append([per_step_regret, steps])

    def curve(self) -> np.ndarray:
        """Cumulative pseudo-regret after each step: shape ``(steps,)``."""
        if not self._segments:
            return np.zeros(0, dtype=float)
        per_step = np.concatenate(
            [np.full(int(c), g, dtype=float) for g, c in self._segments]
        )
        return np.cumsum(per_step)


class Environment:
    """Seeded MNL market simulator with exclusive ownership semantics.

    The instance's weights are hidden from algorithms: only ``n``, ``k`` and
    the reward vector are exposed.  The optimal solution is computed once at
    construction for regret accounting and success evaluation; accessors
    ``oracle_solution`` / ``true_revenue`` are evaluation scaffolding and
    must not be consulted by estimation or driver logic.

    An environment must be driven by a single owner at a time: interleaving
    two algorithms on one environment corrupts both runs' step accounting.
    """

    def __init__(
        self,
        inst: Instance,
        rng: np.random.Generator,
        horizon: Optional[int] = None,
    ) -> None:
        self._inst = inst
        self._rng = rng
        if horizon is not None and horizon < 1:
            raise ValueError("horizon must be >= 1 when given")
        self._horizon = horizon
        self.n = inst.n
        self.k = inst.k
        self.rewards = inst.r.copy()
        self.rewards.setflags(write=False)
        self.ledger = RegretLedger(n=inst.n)
        if inst.n <= BRUTE_FORCE_MAX_N:
            self._solution = brute_force_optimum(inst)
        else:
            self._solution = fractional_optimum(
                {i: float(inst.r[i - 1]) for i in inst.items()},
                reduce_params(inst, ()),
                inst.k,
            )
        # Per-assortment cache of (cumulative outcome weights, per-step regret,
        # 0-based indices); bounded, cleared wholesale when full.
        self._offer_cache: dict = {}

    # -- evaluation scaffolding (not for algorithm use) ---------------------

    def oracle_solution(self) -> OptimumSolution:
        """The instance's optimal assortment and revenue (scaffolding)."""
        return self._solution

    def true_revenue(self, s: Iterable[int]) -> float:
        """True expected revenue of ``s`` (scaffolding)."""
        return revenue(self._inst, s)

    # -- step budget --------------------------------------------------------

    @property
    def horizon(self) -> Optional[int]:
        return self._horizon

    def set_horizon(self, horizon: int) -> None:
        """Install a step budget on a fresh environment (one-time)."""
        if self._horizon is not None:
            raise ValueError("horizon is already set")
        if self.ledger.steps > 0:
            raise ValueError("cannot set a horizon after steps were consumed")
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        self._horizon = horizon

    @property
    def steps_remaining(self) -> Optional[int]:
        if self._horizon is None:
            return None
        return self._horizon - self.ledger.steps

    def _cached(self, key: Tuple[Tuple[int, ...], Tuple[int, ...]]):
        entry = self._offer_cache.get(key)
        if entry is None:
            offered = tuple(sorted(set(key[0]) | set(key[1])))
            idx = np.asarray(offered, dtype=int) - 1
            w = self._inst.v[idx]
            cum = np.cumsum(np.concatenate(([1.0], w)))
            regret = self._solution.theta_star - revenue(self._inst, offered)
            if len(self._offer_cache) >= 4096:
                self._offer_cache.clear()
            entry = (offered, idx, w, cum, regret)
            self._offer_cache[key] = entry
        return entry

    # -- single step --------------------------------------------------------

    def offer(self, s: Iterable[int]) -> int:
        """Offer assortment ``s`` for one time step; return the outcome.

        The outcome is the purchased item id, or 0 for no purchase.  Raises
        on capacity violations (``|s| > k``) — this is a hard error, never a
        silent truncation — and raises `HorizonExhausted` when the step
        budget is spent.
        """
        t = validate_assortment(s, self.n)
        if len(t) > self.k:
            raise ValueError(f"assortment size {len(t)} exceeds capacity {self.k}")
        if self._horizon is not None and self.ledger.steps >= self._horizon:
            raise HorizonExhausted("step budget exhausted")
        offered, idx, w, cum, regret = self._cached((t, ()))
        u = self._rng.random() * cum[-1]
        j = int(np.searchsorted(cum, u, side="right"))
        self.ledger.record(idx, regret, 1)
        return 0 if j == 0 else offered[j - 1]

    # -- exploitation -------------------------------------------------------

    def advance(self, s: Iterable[int], steps: int) -> None:
        """Offer ``s`` for ``steps`` consecutive steps, discarding outcomes.

        Pseudo-regret accounting is exact (it depends only on the offered
        set), and no RNG is consumed: use only where outcomes feed nothing.
        """
        t = validate_assortment(s, self.n, self.k)
        if steps < 0:
            raise ValueError("steps must be >= 0")
        remaining = self.steps_remaining
        if remaining is not None and steps > remaining:
            raise HorizonExhausted("step budget exhausted")
        _, idx, _, _, regret = self._cached((t, ()))
        self.ledger.record(idx, regret, steps)

    # -- vectorized epochs ---------------------------------------------------

    def sample_epochs(
        self,
        z: Iterable[int],
        s: Iterable[int],
        epochs: int,
        collect: bool = False,
    ) -> EpochBatch:
        """Run up to ``epochs`` exploration epochs of ``(Z, S)`` in batch.

        ``z`` (the stopping set) and ``s`` (the tracked set) must be
        disjoint with ``|z ∪ s| <= k``.  Statistics of completed epochs are
        returned; when the step budget runs out, the in-flight epoch's steps
        are consumed but its statistics are discarded (``truncated=True``).
        """
        tz = validate_assortment(z, self.n)
        ts = validate_assortment(s, self.n)
        if set(tz) & set(ts):
            raise ValueError("stopping set and tracked set must be disjoint")
        if len(tz) + len(ts) > self.k:
            raise ValueError(
                f"offered size {len(tz) + len(ts)} exceeds capacity {self.k}"
            )
        if epochs < 1:
            raise ValueError("epochs must be >= 1")

        _, _, _, _, regret = self._cached((ts, tz))
        offered_idx = np.asarray(sorted(tz + ts), dtype=int) - 1

        v_z = self._inst.v[np.asarray(tz, dtype=int) - 1] if tz else np.zeros(0)
        v_s = self._inst.v[np.asarray(ts, dtype=int) - 1] if ts else np.zeros(0)
        vz_total = float(v_z.sum())
        nu = v_s / (1.0 + vz_total)
        p_success = 1.0 / (1.0 + nu)  # per-item geometric stop probability
        # Stop outcome over Z ∪ {0}: weight 1 for no-purchase, v_c otherwise.
        stop_cum = np.cumsum(np.concatenate(([1.0], v_z)))
        stop_rewards = np.concatenate(
            ([0.0], self._inst.r[np.asarray(tz, dtype=int) - 1] if tz else np.zeros(0))
        )

        budget = self.steps_remaining  # None = unlimited
        x_sums = np.zeros(len(ts), dtype=np.int64)
        z_sum = 0.0
        done = 0
        used = 0
        truncated = False
        xs: List[np.ndarray] = []
        zs: List[np.ndarray] = []
        lens: List[np.ndarray] = []

        chunk_rows = max(1, _CHUNK_ELEMENTS // max(1, len(ts)))
        while done < epochs and not truncated:
            want = min(epochs - done, chunk_rows)
            if budget is not None:
                # each epoch takes >= 1 step, so at most this many can start
                want = min(want, budget - used)
                if want <= 0:
                    truncated = True
                    break
            if len(ts):
                x = (
                    self._rng.geometric(p=np.broadcast_to(p_success, (want, len(ts))))
                    - 1
                ).astype(np.int64)
                lengths = 1 + x.sum(axis=1)
            else:
                x = np.zeros((want, 0), dtype=np.int64)
                lengths = np.ones(want, dtype=np.int64)
            u = self._rng.random(want) * stop_cum[-1]
            stop_j = np.searchsorted(stop_cum, u, side="right")
            z_vals = stop_rewards[stop_j]

            if budget is not None:
                cum_len = np.cumsum(lengths)
                fit = int(np.searchsorted(cum_len, budget - used, side="right"))
                if fit < want:
                    # complete `fit` epochs; the next epoch is cut short and
                    # consumes whatever budget remains.
                    truncated = True
                    x, lengths, z_vals = x[:fit], lengths[:fit], z_vals[:fit]
                    used = budget
                else:
                    used += int(cum_len[-1]) if want else 0
            else:
                used += int(lengths.sum())

            x_sums += x.sum(axis=0)
            z_sum += float(z_vals.sum())
            done += len(lengths)
            if collect and len(lengths):
                xs.append(x)
                zs.append(z_vals)
                lens.append(lengths)

        self.ledger.record(offered_idx, regret, used)
        truncated = truncated or done < epochs
        batch = EpochBatch(
            requested=epochs,
            epochs=done,
            steps=used,
            x_sums=x_sums,
            z_sum=z_sum,
            truncated=truncated,
        )
        if collect:
            batch.x = (
                np.concatenate(xs, axis=0) if xs else np.zeros((0, len(ts)), dtype=np.int64)
            )
            batch.z_values = np.concatenate(zs) if zs else np.zeros(0)
            batch.lengths = (
                np.concatenate(lens) if lens else np.zeros(0, dtype=np.int64)
            )
        return batch
