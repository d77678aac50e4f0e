"""Transmission-mode selection for the three schemes.

The context-aware scheme works per angular cluster with a global relay
budget; the R13-style baseline ranks relays by radio quality only and lets
each remote pick the best sidelink locally; the R12 baseline never relays.

All three schemes share one array-based implementation operating on a
LinkContext snapshot; node-list wrappers are provided for direct use on
SensorNode objects.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import SimConfig
from .energy import projected_life_days
from .scenario import CoverageClass, SensorNode, TransmissionMode

NO_RELAY = -1


def pair_key(id_a, id_b):
    """Symmetric uint64 key for a device pair."""
    a = np.asarray(id_a, dtype=np.uint64)
    b = np.asarray(id_b, dtype=np.uint64)
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    return (hi << np.uint64(32)) | lo


@dataclass
class LinkContext:
    """BS-side view of the deployment at one TMS round.

    bs_battery_j is the battery level as last reported, which may lag the
    true level by up to one reporting day.  pair_pathloss returns the
    (static, shadowed) sidelink pathloss for id pairs; pair_matrix returns
    the remotes-by-relays pathloss matrix and may be backed by a cache.
    """

    alive: np.ndarray                 # bool
    in_coverage: np.ndarray           # bool
    snr_max_db: np.ndarray            # cellular SNR at maximum tx power
    distance_m: np.ndarray
    cellular_daily_j: np.ndarray      # daily energy under Cellular accounting
    bs_battery_j: np.ndarray
    served_days: np.ndarray
    cluster_of: np.ndarray            # int, -1 when unclustered/dead
    pair_pathloss: Callable[[np.ndarray, np.ndarray], np.ndarray]
    blacklist_keys: np.ndarray = field(
        default_factory=lambda: np.empty(0, dtype=np.uint64))  # sorted

    def is_blacklisted(self, id_a, id_b) -> np.ndarray:
        keys = pair_key(id_a, id_b)
        idx = np.searchsorted(self.blacklist_keys, keys)
        idx = np.clip(idx, 0, max(len(self.blacklist_keys) - 1, 0))
        if len(self.blacklist_keys) == 0:
            return np.zeros(np.shape(keys), dtype=bool)
        return self.blacklist_keys[idx] == keys


@dataclass
class TmAssignment:
    mode: dict[int, TransmissionMode]
    relay_of: dict[int, int]
    relays: set[int]


@dataclass
class ArrayAssignment:
    mode: np.ndarray                  # int8 TransmissionMode values
    relay_of: np.ndarray              # int64, NO_RELAY when unattached
    relays: np.ndarray                # int64 ids, budget-limited
    rejected_pairs: np.ndarray        # uint64 keys of failed discoveries
    # Pairs the round proposed for discovery (blacklisted pairs excluded).
    proposed_remote: np.ndarray = field(
        default_factory=lambda: np.empty(0, dtype=np.int64))
    proposed_relay: np.ndarray = field(
        default_factory=lambda: np.empty(0, dtype=np.int64))
    proposed_admitted: np.ndarray = field(
        default_factory=lambda: np.empty(0, dtype=bool))

    def to_assignment(self) -> TmAssignment:
        mode = {i: TransmissionMode(int(m)) for i, m in enumerate(self.mode)}
        relay_of = {i: int(r) for i, r in enumerate(self.relay_of)
                    if r != NO_RELAY}
        return TmAssignment(mode=mode, relay_of=relay_of,
                            relays=set(int(r) for r in self.relays))


def remaining_requirement_days(ctx: LinkContext, cfg: SimConfig) -> np.ndarray:
    return np.maximum(cfg.scenario.life_requirement_days - ctx.served_days, 0.0)


def remote_mask(ctx: LinkContext, cfg: SimConfig) -> np.ndarray:
    """Sensors to be configured to sidelink TM: out of uplink coverage, or
    projected battery life under cellular accounting below the remaining
    requirement."""
    with np.errstate(divide="ignore", invalid="ignore"):
        proj = np.where(ctx.cellular_daily_j > 0,
                        ctx.bs_battery_j / ctx.cellular_daily_j, np.inf)
    remaining = remaining_requirement_days(ctx, cfg)
    return ctx.alive & (~ctx.in_coverage | (proj < remaining))


def candidate_mask(ctx: LinkContext, cfg: SimConfig) -> np.ndarray:
    """Relay candidacy: good cellular link (inclusive SNR threshold), battery
    margin over the remaining requirement, strictly beyond the distance
    threshold."""
    with np.errstate(divide="ignore", invalid="ignore"):
        proj = np.where(ctx.cellular_daily_j > 0,
                        ctx.bs_battery_j / ctx.cellular_daily_j, np.inf)
    remaining = remaining_requirement_days(ctx, cfg)
    return (ctx.alive & ctx.in_coverage
            & (ctx.snr_max_db >= cfg.channel.relay_snr_db)
            & (proj >= cfg.scenario.relay_battery_margin * remaining)
            & (ctx.distance_m > cfg.scenario.relay_min_distance_m))


def _rank_order(snr: np.ndarray, ids: np.ndarray) -> np.ndarray:
    """Indices sorting by descending SNR, ascending id as tiebreak."""
    return np.lexsort((ids, -snr))


def assign_context_aware(ctx: LinkContext, cfg: SimConfig) -> ArrayAssignment:
    n = len(ctx.alive)
    mode = np.full(n, int(TransmissionMode.UNSERVED), dtype=np.int8)
    relay_of = np.full(n, NO_RELAY, dtype=np.int64)
    ids = np.arange(n)

    remotes = remote_mask(ctx, cfg)
    # Cease-serving rule: sensors that already fulfilled the requirement are
    # withdrawn from remote eligibility.
    ceased = ctx.served_days >= cfg.scenario.life_requirement_days
    remotes &= ~ceased

    candidates = candidate_mask(ctx, cfg) & ~remotes

    # One relay per cluster: best candidate by SNR, then global budget
    # arbitration across clusters by the same ranking.
    n_clusters = int(ctx.cluster_of.max()) + 1 if ctx.cluster_of.size else 0
    chosen = np.empty(0, dtype=np.int64)
    cand_ids = ids[candidates]
    if len(cand_ids):
        order = _rank_order(ctx.snr_max_db[cand_ids], cand_ids)
        ranked = cand_ids[order]
        cl = ctx.cluster_of[ranked]
        ranked = ranked[cl >= 0]
        cl = cl[cl >= 0]
        # First occurrence per cluster in rank order is the cluster's best
        # candidate; the global budget then keeps the best-ranked clusters.
        _, first = np.unique(cl, return_index=True)
        chosen = ranked[np.sort(first)[:cfg.scenario.relay_budget]]
    relay_for_cluster = np.full(max(n_clusters, 1), NO_RELAY, dtype=np.int64)
    if len(chosen):
        relay_for_cluster[ctx.cluster_of[chosen]] = chosen

    # Remote attachment: the cluster's relay, admitted iff the sidelink
    # pathloss is within the admission threshold (inclusive) and the pair is
    # not blacklisted.
    rejected = []
    remote_ids = ids[remotes]
    attached = np.zeros(n, dtype=bool)
    proposed_remote = np.empty(0, dtype=np.int64)
    proposed_relay = np.empty(0, dtype=np.int64)
    proposed_admitted = np.empty(0, dtype=bool)
    if len(remote_ids):
        rclusters = ctx.cluster_of[remote_ids]
        rrelay = np.where(rclusters >= 0, relay_for_cluster[np.clip(rclusters, 0, None)],
                          NO_RELAY)
        has_relay = rrelay != NO_RELAY
        cand_remotes = remote_ids[has_relay]
        cand_relays = rrelay[has_relay]
        if len(cand_remotes):
            pl = ctx.pair_pathloss(cand_remotes, cand_relays)
            if len(ctx.blacklist_keys):
                black = ctx.is_blacklisted(cand_remotes, cand_relays)
            else:
                black = np.zeros(len(cand_remotes), dtype=bool)
            within = pl <= cfg.channel.admission_pl_db
            ok = within & ~black
            relay_of[cand_remotes[ok]] = cand_relays[ok]
            attached[cand_remotes[ok]] = True
            # Blacklisted pairs are never re-proposed for discovery.
            keep = ~black
            proposed_remote = cand_remotes[keep]
            proposed_relay = cand_relays[keep]
            proposed_admitted = within[keep]
            newly_failed = ~within & ~black
            if newly_failed.any():
                rejected = pair_key(cand_remotes[newly_failed],
                                    cand_relays[newly_failed])

    mode[attached] = int(TransmissionMode.SIDELINK)
    # Fallbacks and everyone else: cellular when possible.
    unattached = ctx.alive & ~attached
    mode[unattached & ctx.in_coverage] = int(TransmissionMode.CELLULAR)
    # Relays with at least one admitted remote act as relays.
    active_relays = np.unique(relay_of[relay_of != NO_RELAY])
    mode[active_relays] = int(TransmissionMode.RELAY)
    mode[~ctx.alive] = int(TransmissionMode.UNSERVED)

    return ArrayAssignment(
        mode=mode, relay_of=relay_of, relays=chosen,
        rejected_pairs=np.asarray(rejected, dtype=np.uint64),
        proposed_remote=proposed_remote, proposed_relay=proposed_relay,
        proposed_admitted=proposed_admitted)


def assign_r13(ctx: LinkContext, cfg: SimConfig,
               pair_matrix: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None,
               ) -> ArrayAssignment:
    """R13-style baseline: relay eligibility is radio quality only; each
    outage remote locally picks the non-blacklisted relay with the smallest
    sidelink pathloss.  No battery awareness, no clustering, no cease rule."""
    n = len(ctx.alive)
    mode = np.full(n, int(TransmissionMode.UNSERVED), dtype=np.int8)
    relay_of = np.full(n, NO_RELAY, dtype=np.int64)
    ids = np.arange(n)

    eligible = ctx.alive & (ctx.snr_max_db >= cfg.channel.relay_snr_db)
    elig_ids = ids[eligible]
    order = _rank_order(ctx.snr_max_db[elig_ids], elig_ids)
    relays = elig_ids[order][:cfg.scenario.relay_budget]

    remotes = ids[ctx.alive & ~ctx.in_coverage]
    rejected = []
    if len(remotes) and len(relays):
        if pair_matrix is not None:
            pl = pair_matrix(remotes, relays)
        else:
            pl = ctx.pair_pathloss(
                np.repeat(remotes, len(relays)),
                np.tile(relays, len(remotes))).reshape(len(remotes), len(relays))
        pl = pl.copy()
        if len(ctx.blacklist_keys):
            black = ctx.is_blacklisted(
                np.repeat(remotes, len(relays)),
                np.tile(relays, len(remotes))).reshape(pl.shape)
            pl[black] = np.inf
        pick = np.argmin(pl, axis=1)
        best_pl = pl[np.arange(len(remotes)), pick]
        ok = best_pl <= cfg.channel.admission_pl_db
        relay_of[remotes[ok]] = relays[pick[ok]]
        mode[remotes[ok]] = int(TransmissionMode.SIDELINK)
        finite = np.isfinite(best_pl)
        proposed_remote = remotes[finite]
        proposed_relay = relays[pick[finite]]
        proposed_admitted = ok[finite]
        failed = ~ok & finite
        if failed.any():
            rejected = pair_key(remotes[failed], relays[pick[failed]])
    else:
        proposed_remote = np.empty(0, dtype=np.int64)
        proposed_relay = np.empty(0, dtype=np.int64)
        proposed_admitted = np.empty(0, dtype=bool)

    cellular = ctx.alive & ctx.in_coverage & (mode != int(TransmissionMode.SIDELINK))
    mode[cellular] = int(TransmissionMode.CELLULAR)
    active_relays = np.unique(relay_of[relay_of != NO_RELAY])
    mode[active_relays] = int(TransmissionMode.RELAY)
    return ArrayAssignment(
        mode=mode, relay_of=relay_of, relays=relays,
        rejected_pairs=np.asarray(rejected, dtype=np.uint64),
        proposed_remote=proposed_remote, proposed_relay=proposed_relay,
        proposed_admitted=proposed_admitted)


def assign_r12(ctx: LinkContext, cfg: SimConfig) -> ArrayAssignment:
    """Baseline without relaying: coverage decides everything."""
    n = len(ctx.alive)
    mode = np.full(n, int(TransmissionMode.UNSERVED), dtype=np.int8)
    mode[ctx.alive & ctx.in_coverage] = int(TransmissionMode.CELLULAR)
    return ArrayAssignment(
        mode=mode,
        relay_of=np.full(n, NO_RELAY, dtype=np.int64),
        relays=np.empty(0, dtype=np.int64),
        rejected_pairs=np.empty(0, dtype=np.uint64))


# --- Node-level wrappers -------------------------------------------------

def is_remote(node: SensorNode, cfg: SimConfig, cellular_daily_j: float) -> bool:
    """True iff the sensor must be configured to sidelink TM: no uplink
    coverage, or projected cellular battery life below the remaining
    requirement."""
    if node.coverage_class == CoverageClass.OUT_OF_COVERAGE:
        return True
    remaining = max(cfg.scenario.life_requirement_days - node.served_days, 0.0)
    return projected_life_days(node.battery_j, cellular_daily_j) < remaining


def relay_candidates(cluster_nodes: list[SensorNode], cfg: SimConfig,
                     snr_max_db: dict[int, float],
                     cellular_daily_j: dict[int, float]) -> list[int]:
    """Ordered candidate ids (descending SNR, ascending id tiebreak)."""
    out = []
    for node in cluster_nodes:
        if not node.alive:
            continue
        if node.coverage_class != CoverageClass.IN_COVERAGE:
            continue
        snr = snr_max_db[node.id]
        if snr < cfg.channel.relay_snr_db:
            continue
        if node.distance_m <= cfg.scenario.relay_min_distance_m:
            continue
        remaining = max(cfg.scenario.life_requirement_days - node.served_days, 0.0)
        proj = projected_life_days(node.battery_j, cellular_daily_j[node.id])
        if proj < cfg.scenario.relay_battery_margin * remaining:
            continue
        out.append((node.id, snr))
    out.sort(key=lambda t: (-t[1], t[0]))
    return [i for i, _ in out]
