"""Vectorized scorer for the configuration search inner loop.

Evaluating one (feature set, k) candidate means scheduling and simulating
every validation instance; the search does that thousands of times per fold is
trained, so the per-instance reference path (make_schedule + simulate_schedule)
is too slow. This module batches the work across validation instances with
numpy while reproducing the reference tie-breaking and arithmetic; per-feature
squared-distance matrices are cached so growing a feature set costs one add.

Distances may differ from the reference path in the last floating-point ulp
(different summation order); everything downstream is identical.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .metrics import DEFAULT_PENALTY
from .scenario import Scenario
from .scheduling import backup_solver

_NEG_INF = float("-inf")


class FoldScorer:
    """Scores (features, k) candidates for one inner-train / validation pair.

    ``feature_pool`` lists the original feature columns that are informative
    (non-constant) on the inner-training rows; candidates are subsets of it.
    ``n_scored`` counts evaluated (features, k) pairs.
    """

    def __init__(
        self,
        scenario: Scenario,
        train_ids: Sequence[str],
        val_ids: Sequence[str],
        *,
        lambda_sched: int = 3,
        penalty: float = DEFAULT_PENALTY,
        charge_feature_cost: bool = True,
    ):
        if not len(train_ids):
            raise ValueError("empty inner-training set")
        if not len(val_ids):
            raise ValueError("empty validation set")
        tr = scenario.rows(train_ids)
        va = scenario.rows(val_ids)
        self.timeout = scenario.timeout
        self.penalty = penalty
        self.lambda_sched = lambda_sched
        self.n_train = tr.size
        self.n_scored = 0

        feats = scenario.features
        f_tr = feats[tr]
        with np.errstate(all="ignore"):
            lo = np.nanmin(f_tr, axis=0)
            hi = np.nanmax(f_tr, axis=0)
            fill = np.nanmedian(f_tr, axis=0)
        informative = np.isfinite(lo) & np.isfinite(hi) & (hi > lo)
        self.feature_pool: tuple[int, ...] = tuple(
            int(c) for c in np.flatnonzero(informative)
        )
        self._informative = set(self.feature_pool)

        def scale(block: np.ndarray) -> np.ndarray:
            out = block.copy()
            nan = np.isnan(out)
            if nan.any():
                out[nan] = np.broadcast_to(fill, out.shape)[nan]
            with np.errstate(all="ignore"):
                out = 2.0 * (out - lo) / (hi - lo) - 1.0
            return out

        self._tr_scaled = scale(f_tr)
        self._va_scaled = scale(feats[va])
        self._dcache: dict[int, np.ndarray] = {}

        self._solved_tr = scenario.solved[tr]
        self._rt_tr = scenario.runtime[tr]
        self._val_solved = scenario.solved[va].tolist()
        self._val_rt = scenario.runtime[va].tolist()
        if charge_feature_cost and scenario.feature_cost is not None:
            self._val_cost = scenario.feature_cost[va].tolist()
        else:
            self._val_cost = [0.0] * va.size

        ids = scenario.algorithm_ids
        rank = np.empty(len(ids), dtype=int)
        rank[np.array(sorted(range(len(ids)), key=lambda a: ids[a]))] = np.arange(
            len(ids)
        )
        self._alg_rank = rank
        self._backup = backup_solver(
            self._solved_tr, self._rt_tr, ids, self.timeout, penalty
        )
        self._backup_idx = scenario.algorithm_index(self._backup)

    @property
    def backup(self) -> str:
        return self._backup

    def _column_dist(self, col: int) -> np.ndarray:
        cached = self._dcache.get(col)
        if cached is None:
            diff = self._va_scaled[:, col, None] - self._tr_scaled[None, :, col]
            cached = diff * diff
            self._dcache[col] = cached
        return cached

    def score_many(self, features: Sequence[int], ks: Sequence[int]) -> list[float]:
        """Score one feature set at several neighborhood sizes.

        Returns ``-(mean penalized runtime)`` per k so greater is better.
        Candidate columns constant on the inner-training rows contribute
        nothing; a candidate set with no informative column scores -inf.
        """
        cols = [c for c in features if c in self._informative]
        if not cols:
            self.n_scored += len(ks)
            return [_NEG_INF] * len(ks)
        dist = self._column_dist(cols[0])
        if len(cols) > 1:
            dist = dist.copy()
            for c in cols[1:]:
                dist += self._column_dist(c)
        order = np.argsort(dist, axis=1, kind="stable")
        solved_sorted = self._solved_tr[order]
        rt_sorted = self._rt_tr[order]
        out = []
        for k in ks:
            kk = min(int(k), self.n_train)
            out.append(self._evaluate(solved_sorted[:, :kk], rt_sorted[:, :kk]))
            self.n_scored += 1
        return out

    def _evaluate(self, solved_nb: np.ndarray, rt_nb: np.ndarray) -> float:
        n_val, _, n_alg = solved_nb.shape
        timeout = self.timeout
        penalty_time = self.penalty * timeout
        rank = self._alg_rank

        uncovered = np.ones(solved_nb.shape[:2], dtype=bool)
        picks = np.full((n_val, self.lambda_sched), -1, dtype=int)
        for r in range(self.lambda_sched):
            gain_mask = solved_nb & uncovered[:, :, None]
            cov = gain_mask.sum(axis=1)
            max_cov = cov.max(axis=1)
            active = max_cov > 0
            if not active.any():
                break
            gain_rt = np.where(gain_mask, rt_nb, 0.0).sum(axis=1)
            cand = cov == max_cov[:, None]
            rt_masked = np.where(cand, gain_rt, np.inf)
            cand &= rt_masked == rt_masked.min(axis=1, keepdims=True)
            ranked = np.where(cand, rank[None, :], n_alg)
            pick = ranked.argmin(axis=1)
            rows = np.flatnonzero(active)
            picks[rows, r] = pick[rows]
            uncovered[rows] &= ~solved_nb[rows, :, pick[rows]]

        counts_all = solved_nb.sum(axis=1).tolist()
        mean_rt = rt_nb.mean(axis=1).tolist()
        n_unsolved = uncovered.sum(axis=1).tolist()
        picks_l = picks.tolist()
        rank_l = rank.tolist()
        backup = self._backup_idx
        val_solved, val_rt, val_cost = self._val_solved, self._val_rt, self._val_cost

        pars = []
        for row in range(n_val):
            entries: dict[int, int] = {}
            for a in picks_l[row]:
                if a >= 0:
                    c = counts_all[row][a]
                    if c:
                        entries[a] = c
            if n_unsolved[row]:
                entries[backup] = entries.get(backup, 0) + n_unsolved[row]
            total = sum(entries.values())
            if total == 0:
                slots = [(backup, float(timeout))]
            else:
                row_mean = mean_rt[row]
                ordered = sorted(entries, key=lambda a: (row_mean[a], rank_l[a]))
                slots = [(a, entries[a] * timeout / total) for a in ordered]

            cost = val_cost[row]
            effective = None
            if cost <= timeout:
                solved_row, rt_row = val_solved[row], val_rt[row]
                elapsed = 0.0
                for a, slot in slots:
                    rt = rt_row[a]
                    if solved_row[a] and rt <= slot:
                        tot = cost + elapsed + rt
                        if tot <= timeout:
                            effective = tot
                            break
                    elapsed += slot
            if effective is not None and effective < timeout:
                pars.append(effective)
            else:
                pars.append(penalty_time)
        return -float(np.mean(pars))
