"""Day-stepped simulation of the cell under one of the three schemes.

Each simulated day: (1) on TMS days, recluster alive sensors (context-aware
scheme), run the scheme's mode assignment on the BS-side context, charge the
signaling of the resulting reconfigurations; (2) drain every sensor by its
role's daily energy; (3) credit served days, pro-rata on the final day, with
remotes capped by their relay's up-fraction; (4) apply the cease-serving rule
(context-aware only) that freezes out-of-coverage remotes at exactly the
service requirement.

All per-day state is kept in flat numpy arrays; per-sensor joules are exact
cumulative sums so the energy ledger closes bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import (McsTable, cellular_pathloss, cellular_shadowing,
                      noise_floor_dbm, sidelink_pathloss, sidelink_shadowing)
from .clustering import kmeans_angular_arrays
from .config import SimConfig
from .energy import daily_energy, rx_energy, tx_energy
from .scenario import ConfigError, TransmissionMode, deployment_arrays
from .signaling import (BS, PairProposal, SignalingCosts, UpdateGroup,
                        run_attachment, run_tm_update)
from .channel import LinkState
from .tms import (NO_RELAY, LinkContext, assign_context_aware, assign_r12,
                  assign_r13, pair_key)

SCHEME_NAMES = {"r12": "R12", "r13": "R13", "context": "ContextAware"}

_CELL = int(TransmissionMode.CELLULAR)
_RELAY = int(TransmissionMode.RELAY)
_SIDE = int(TransmissionMode.SIDELINK)
_UNSERVED = int(TransmissionMode.UNSERVED)


@dataclass
class SimulationResult:
    """Per-sensor outcomes and headline aggregates for one scheme run."""

    scheme: str
    sensor_id: np.ndarray
    distance_m: np.ndarray
    angle_rad: np.ndarray
    coverage: np.ndarray              # 0 in coverage, 1 out of coverage
    served_days: np.ndarray
    death_day: np.ndarray             # NaN = survived the horizon
    final_mode: np.ndarray
    day1_mode: np.ndarray
    outage_fraction_day1: float
    fraction_meeting_requirement: float
    cdf: list[tuple[float, float]]
    life_requirement_days: int
    horizon_days: int
    # Energy ledger: final battery is maintained as initial minus cumulative
    # drain, so closure is exact by construction.
    initial_battery_j: float = 0.0
    total_drain_j: np.ndarray | None = None
    final_battery_j: np.ndarray | None = None


def build_cdf(values) -> list[tuple[float, float]]:
    """Empirical CDF: (x, fraction of values <= x) at sorted unique values."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("cannot build a CDF from an empty sample")
    xs, counts = np.unique(values, return_counts=True)
    cum = np.cumsum(counts) / values.size
    return [(float(x), float(c)) for x, c in zip(xs, cum)]


def split_by_coverage(result: SimulationResult,
                      ) -> tuple[SimulationResult, SimulationResult]:
    """Partition a result into (in-coverage, out-of-coverage) sub-results."""
    return (_subset(result, result.coverage == 0),
            _subset(result, result.coverage == 1))


def _subset(r: SimulationResult, mask: np.ndarray) -> SimulationResult:
    served = r.served_days[mask]
    n = served.size
    return SimulationResult(
        scheme=r.scheme,
        sensor_id=r.sensor_id[mask],
        distance_m=r.distance_m[mask],
        angle_rad=r.angle_rad[mask],
        coverage=r.coverage[mask],
        served_days=served,
        death_day=r.death_day[mask],
        final_mode=r.final_mode[mask],
        day1_mode=r.day1_mode[mask],
        outage_fraction_day1=(float(np.mean(r.day1_mode[mask] == _UNSERVED))
                              if n else 0.0),
        fraction_meeting_requirement=(
            float(np.mean(served >= r.life_requirement_days)) if n else 0.0),
        cdf=build_cdf(served) if n else [],
        life_requirement_days=r.life_requirement_days,
        horizon_days=r.horizon_days,
        initial_battery_j=r.initial_battery_j,
        total_drain_j=(r.total_drain_j[mask]
                       if r.total_drain_j is not None else None),
        final_battery_j=(r.final_battery_j[mask]
                         if r.final_battery_j is not None else None),
    )


def simulate(config: SimConfig, scheme: str,
             trace_fh=None) -> SimulationResult:
    """Run one scheme over the full horizon.  scheme: r12 | r13 | context."""
    if scheme not in SCHEME_NAMES:
        raise ConfigError(f"unknown scheme {scheme!r}; expected one of "
                          f"{sorted(SCHEME_NAMES)}")
    return _Engine(config, scheme, trace_fh).run()


class _Engine:
    def __init__(self, config: SimConfig, scheme: str, trace_fh=None):
        config.validate()
        self.cfg = config
        self.scheme = scheme
        self.trace_fh = trace_fh
        self.mcs = config.mcs_table()
        sc = config.scenario
        chc = config.channel
        self.prof = config.power
        self.n = sc.n_sensors
        self.bw = chc.bandwidth_hz

        self.dist, self.ang = deployment_arrays(sc)
        shadow = cellular_shadowing(self.n, sc.rng_seed, chc)
        self.pl_cell = cellular_pathloss(self.dist, chc) + shadow
        self.floor = noise_floor_dbm(chc)
        required = (chc.target_snr_cell_db + self.floor + self.pl_cell
                    - chc.antenna_gain_db)
        capped = required > chc.max_tx_dbm
        self.p_cell = np.where(capped, chc.max_tx_dbm, required)
        self.snr_max = (chc.max_tx_dbm - self.pl_cell + chc.antenna_gain_db
                        - self.floor)
        # Uncapped links sit exactly at the power-control target; computing
        # the SNR as a difference would reintroduce rounding noise and could
        # move a sensor across an MCS step.
        snr = np.where(capped, self.snr_max, chc.target_snr_cell_db)
        with np.errstate(invalid="ignore"):
            self.eff_cell = self.mcs.select_array(snr)
        self.in_cov = self.snr_max >= self.mcs.entries[0].min_snr_db
        with np.errstate(invalid="ignore", divide="ignore"):
            self.dur_cell = sc.payload_bits / (self.eff_cell * self.bw)
        self.cell_daily = self._cellular_daily_vec(self.p_cell, self.dur_cell)
        self.cell_daily[~self.in_cov] = np.inf
        self.unserved_daily = daily_energy(
            TransmissionMode.UNSERVED, None, [], config).total_j
        self.costs = SignalingCosts.derive(config, self.mcs)
        # Largest pathloss at which the robust discovery format still closes.
        self.control_pl_limit = (chc.max_tx_dbm + chc.antenna_gain_db
                                 - self.floor - chc.outage_snr_db)

        self.battery0 = sc.battery_j
        self.drain = np.zeros(self.n)
        self.served = np.zeros(self.n)
        self.alive = np.ones(self.n, dtype=bool)
        self.death_day = np.full(self.n, np.nan)
        self.mode = np.full(self.n, _UNSERVED, dtype=np.int8)
        self.relay_of = np.full(self.n, NO_RELAY, dtype=np.int64)
        self.bs_batt = np.full(self.n, self.battery0)
        self.cluster_of = np.full(self.n, -1, dtype=np.int64)
        self.blacklist = np.empty(0, dtype=np.uint64)
        self.established = np.empty(0, dtype=np.uint64)
        self.alive_dirty = True
        self.daily = None                  # rebuilt after assignment changes
        self.day1_mode = None
        self._r13_cache = None

    # --- link budget helpers --------------------------------------------

    def _pair_geometry(self, a, b):
        da, db = self.dist[a], self.dist[b]
        return np.sqrt(da * da + db * db
                       - 2.0 * da * db * np.cos(self.ang[a] - self.ang[b]))

    def _pair_pl(self, a, b):
        d = self._pair_geometry(a, b)
        return (sidelink_pathloss(d, self.cfg.channel)
                + sidelink_shadowing(a, b, self.cfg.scenario.rng_seed,
                                     self.cfg.channel))

    def _pair_links(self, a, b):
        """(pathloss, tx power, spectral efficiency) for sidelink pairs."""
        chc = self.cfg.channel
        pl = self._pair_pl(a, b)
        required = chc.target_snr_side_db + self.floor + pl - chc.antenna_gain_db
        capped = required > chc.max_tx_dbm
        p = np.where(capped, chc.max_tx_dbm, required)
        snr = np.where(capped,
                       chc.max_tx_dbm - pl + chc.antenna_gain_db - self.floor,
                       chc.target_snr_side_db)
        with np.errstate(invalid="ignore"):
            eff = self.mcs.select_array(snr)
        return pl, p, eff

    def _pair_matrix(self, remotes, relays):
        key = (remotes.tobytes(), relays.tobytes())
        if self._r13_cache is not None and self._r13_cache[0] == key:
            return self._r13_cache[1]
        m = self._pair_pl(np.repeat(remotes, len(relays)),
                          np.tile(relays, len(remotes)))
        m = m.reshape(len(remotes), len(relays))
        self._r13_cache = (key, m)
        return m

    # --- daily-energy closed forms (vectorized copies of energy.daily_energy)

    def _cellular_daily_vec(self, p_dbm, dur):
        sc, prof = self.cfg.scenario, self.prof
        n_rep = sc.reports_per_day
        cp = n_rep * (prof.p_cp_mw * prof.t_cp_s / 1000.0)
        sync = n_rep * (prof.p_clock_mw * prof.t_clock_s / 1000.0)
        paging = prof.drx_per_day * (prof.p_paging_mw * prof.t_paging_s / 1000.0)
        tx = n_rep * tx_energy(p_dbm, dur, prof)
        active = (prof.drx_per_day * prof.t_paging_s
                  + n_rep * (prof.t_cp_s + prof.t_clock_s + dur))
        sleep = prof.p_sleep_mw * (86400.0 - active) / 1000.0
        return tx + cp + sync + paging + sleep

    def _sidelink_daily_vec(self, p_dbm, eff):
        sc, prof = self.cfg.scenario, self.prof
        n_rep = sc.reports_per_day
        dur = sc.payload_bits / (eff * self.bw)
        ack_dur = sc.ack_bits / (eff * self.bw)
        sync = n_rep * (prof.p_clock_mw * prof.t_clock_s / 1000.0)
        paging = prof.drx_per_day * (prof.p_paging_mw * prof.t_paging_s / 1000.0)
        tx = n_rep * tx_energy(p_dbm, dur, prof)
        sig = rx_energy(ack_dur, prof)
        sig_dur = ack_dur
        if sc.allocation_mode == "random_access":
            g_dur = sc.grant_bits / (eff * self.bw)
            sig = sig + tx_energy(p_dbm, g_dur, prof) + rx_energy(g_dur, prof)
            sig_dur = sig_dur + 2.0 * g_dur
        sig = n_rep * sig
        active = (prof.drx_per_day * prof.t_paging_s
                  + n_rep * (prof.t_clock_s + dur + sig_dur))
        sleep = prof.p_sleep_mw * (86400.0 - active) / 1000.0
        return tx + sync + paging + sleep + sig

    def _rebuild_daily(self):
        sc, prof = self.cfg.scenario, self.prof
        n_rep = sc.reports_per_day
        daily = np.full(self.n, self.unserved_daily)

        cell = self.mode == _CELL
        daily[cell] = self.cell_daily[cell]

        side = self.mode == _SIDE
        side_ids = np.flatnonzero(side)
        if side_ids.size:
            _, p, eff = self._pair_links(side_ids, self.relay_of[side_ids])
            daily[side_ids] = self._sidelink_daily_vec(p, eff)

        relay_ids = np.flatnonzero(self.mode == _RELAY)
        if relay_ids.size:
            # Per-remote receive and ACK terms, accumulated onto each relay
            # in ascending remote-id order for reproducible summation.
            _, p_pair, eff_pair = self._pair_links(side_ids,
                                                   self.relay_of[side_ids])
            d_dur = sc.payload_bits / (eff_pair * self.bw)
            a_dur = sc.ack_bits / (eff_pair * self.bw)
            rx_terms = rx_energy(d_dur, prof)
            sig_terms = tx_energy(p_pair, a_dur, prof)
            dur_terms = d_dur + a_dur
            if sc.allocation_mode == "random_access":
                g_dur = sc.grant_bits / (eff_pair * self.bw)
                sig_terms = (sig_terms + rx_energy(g_dur, prof)
                             + tx_energy(p_pair, g_dur, prof))
                dur_terms = dur_terms + 2.0 * g_dur
            pos = np.searchsorted(relay_ids, self.relay_of[side_ids])
            rx_sum = np.zeros(relay_ids.size)
            sig_sum = np.zeros(relay_ids.size)
            dur_sum = np.zeros(relay_ids.size)
            cnt = np.zeros(relay_ids.size)
            np.add.at(rx_sum, pos, rx_terms)
            np.add.at(sig_sum, pos, sig_terms)
            np.add.at(dur_sum, pos, dur_terms)
            np.add.at(cnt, pos, 1.0)

            agg_bits = (1.0 + cnt) * sc.payload_bits * sc.aggregation_ratio
            agg_dur = agg_bits / (self.eff_cell[relay_ids] * self.bw)
            cp = n_rep * (prof.p_cp_mw * prof.t_cp_s / 1000.0)
            sync = n_rep * (prof.p_clock_mw * prof.t_clock_s / 1000.0)
            paging = prof.drx_per_day * (prof.p_paging_mw * prof.t_paging_s
                                         / 1000.0)
            tx = n_rep * tx_energy(self.p_cell[relay_ids], agg_dur, prof)
            active = (prof.drx_per_day * prof.t_paging_s
                      + n_rep * (prof.t_cp_s + prof.t_clock_s + agg_dur
                                 + dur_sum))
            sleep = prof.p_sleep_mw * (86400.0 - active) / 1000.0
            daily[relay_ids] = (tx + n_rep * rx_sum + cp + sync + paging
                                + sleep + n_rep * sig_sum)
        self.daily = daily

    # --- TMS round -------------------------------------------------------

    def _recluster(self):
        sc = self.cfg.scenario
        alive_ids = np.flatnonzero(self.alive)
        k = min(sc.n_clusters, alive_ids.size)
        self.cluster_of = np.full(self.n, -1, dtype=np.int64)
        if k >= 1 and alive_ids.size:
            assign, _ = kmeans_angular_arrays(self.ang[alive_ids], k,
                                              sc.kmeans_refine_passes)
            self.cluster_of[alive_ids] = assign

    def _context(self):
        return LinkContext(
            alive=self.alive, in_coverage=self.in_cov,
            snr_max_db=self.snr_max, distance_m=self.dist,
            cellular_daily_j=self.cell_daily, bs_battery_j=self.bs_batt,
            served_days=self.served, cluster_of=self.cluster_of,
            pair_pathloss=self._pair_pl, blacklist_keys=self.blacklist)

    def _tms_round(self, day: int) -> np.ndarray:
        """Run the assignment, charge reconfiguration signaling; returns the
        per-sensor extra joules of this round."""
        attach = day == 1
        if self.scheme == "context":
            if self.alive_dirty:
                self._recluster()
                self.alive_dirty = False
            asg = assign_context_aware(self._context(), self.cfg)
        elif self.scheme == "r13":
            asg = assign_r13(self._context(), self.cfg, self._pair_matrix)
        else:
            asg = assign_r12(self._context(), self.cfg)

        if asg.rejected_pairs.size:
            self.blacklist = np.unique(
                np.concatenate([self.blacklist, asg.rejected_pairs]))

        changed = ((asg.mode != self.mode)
                   | (asg.relay_of != self.relay_of)) & self.alive

        pr, prl, adm = (asg.proposed_remote, asg.proposed_relay,
                        asg.proposed_admitted)
        if attach:
            new = np.ones(pr.size, dtype=bool)
        else:
            new = (self.relay_of[pr] != prl) | (self.mode[pr] != _SIDE)
        npr, nprl, nadm = pr[new], prl[new], adm[new]
        order = np.argsort(npr)
        npr, nprl, nadm = npr[order], nprl[order], nadm[order]

        extra = np.zeros(self.n)
        if attach:
            # S-SIB + TmConfig receptions for every deployed sensor.
            extra[self.alive] = 2.0 * self.costs.paging_j
        else:
            # Page rides the DRX budget; TmConfig charges one paging slot.
            extra[changed] += self.costs.paging_j

        resumed = np.zeros(npr.size, dtype=bool)
        if npr.size:
            keys = pair_key(npr, nprl)
            if self.established.size:
                idx = np.searchsorted(self.established, keys)
                idx = np.clip(idx, 0, self.established.size - 1)
                resumed = self.established[idx] == keys
            pl, p, eff = self._pair_links(npr, nprl)
            decodable = pl <= self.control_pl_limit

            # Remote side: announce rx, then Ack + security or Nack.
            r_extra = np.full(npr.size, self.costs.announce_rx_j)
            sec_dur = np.where(nadm,
                               self.cfg.scenario.security_bits
                               / (np.where(nadm, eff, 1.0) * self.bw), 0.0)
            sec_tx = np.where(nadm, tx_energy(p, sec_dur, self.prof), 0.0)
            sec_rx = np.where(nadm, rx_energy(sec_dur, self.prof), 0.0)
            do_sec = nadm & ~resumed
            r_extra += np.where(nadm, self.costs.reply_tx_j,
                                np.where(decodable, self.costs.reply_tx_j, 0.0))
            r_extra += np.where(do_sec, sec_tx + sec_rx, 0.0)
            extra[npr] += r_extra

            # Relay side: per-pair reply rx and security; announces and the
            # result forward are per pair at attachment (the attachment flow
            # runs per new sensor) and once per relay at updates (multicast).
            replied = nadm | decodable
            l_extra = np.where(replied, self.costs.reply_rx_j, 0.0)
            l_extra += np.where(do_sec, sec_tx + sec_rx, 0.0)
            rf_dur = (self.cfg.scenario.grant_bits
                      / (self.eff_cell[nprl] * self.bw))
            rf_j = tx_energy(self.p_cell[nprl], rf_dur, self.prof)
            if attach:
                l_extra += self.costs.announce_tx_j + rf_j
                np.add.at(extra, nprl, l_extra)
            else:
                np.add.at(extra, nprl, l_extra)
                uniq = np.unique(nprl)
                u_dur = (self.cfg.scenario.grant_bits
                         / (self.eff_cell[uniq] * self.bw))
                extra[uniq] += (self.costs.announce_tx_j
                                + tx_energy(self.p_cell[uniq], u_dur, self.prof))

            est_keys = keys[nadm]
            if est_keys.size:
                self.established = np.unique(
                    np.concatenate([self.established, est_keys]))

        if self.trace_fh is not None:
            self._emit_trace(day, attach, changed, npr, nprl, nadm, resumed)

        rebuilt_needed = attach or changed.any()
        self.mode = asg.mode
        self.relay_of = asg.relay_of
        if rebuilt_needed or self.daily is None:
            self._rebuild_daily()
        if self.day1_mode is None:
            self.day1_mode = self.mode.copy()
        return extra

    # --- trace -----------------------------------------------------------

    def _link_state(self, pl, p, eff):
        e = float(eff) if np.isfinite(eff) else None
        return LinkState(float(pl), float(p), 0.0, e, None)

    def _emit_trace(self, day, attach, changed, npr, nprl, nadm, resumed):
        proposals = {}
        if npr.size:
            pl, p, eff = self._pair_links(npr, nprl)
            for i in range(npr.size):
                proposals[int(npr[i])] = PairProposal(
                    remote_id=int(npr[i]), relay_id=int(nprl[i]),
                    pair_link=self._link_state(pl[i], p[i], eff[i]),
                    admitted=bool(nadm[i]), resumed=bool(resumed[i]))
        t0 = (day - 1) * 86400.0
        if attach:
            for i in range(self.n):
                prop = proposals.get(i)
                relay_link = None
                if prop is not None:
                    r = prop.relay_id
                    relay_link = self._link_state(
                        self.pl_cell[r], self.p_cell[r], self.eff_cell[r])
                tr = run_attachment(i, self.cfg, self.mcs, prop,
                                    relay_link, t0=t0)
                tr.dump(self.trace_fh)
        else:
            loose = [int(i) for i in np.flatnonzero(changed)
                     if int(i) not in proposals]
            groups = []
            for r in np.unique(nprl) if npr.size else []:
                props = [proposals[int(i)] for i in npr[nprl == r]]
                relay_link = self._link_state(
                    self.pl_cell[r], self.p_cell[r], self.eff_cell[r])
                groups.append(UpdateGroup(int(r), relay_link, props, []))
            for tr in run_tm_update(groups, self.cfg, self.mcs,
                                    loose_reassigned_ids=loose, t0=t0):
                tr.dump(self.trace_fh)

    # --- main loop -------------------------------------------------------

    def run(self) -> SimulationResult:
        sc = self.cfg.scenario
        req = float(sc.life_requirement_days)
        for day in range(1, sc.horizon_days + 1):
            if (day - 1) % sc.tms_period_days == 0:
                extra = self._tms_round(day)
                if extra.any():
                    budget = self.battery0 - self.drain
                    spend = np.minimum(extra, np.maximum(budget, 0.0))
                    self.drain += spend

            battery = self.battery0 - self.drain
            daily = self.daily

            # Relay up-fraction caps its remotes' delivered fraction.
            f_relay = np.zeros(self.n)
            relay_ids = np.flatnonzero((self.mode == _RELAY) & self.alive)
            if relay_ids.size:
                f_relay[relay_ids] = np.minimum(
                    1.0, battery[relay_ids] / daily[relay_ids])
            g = np.ones(self.n)
            side = (self.mode == _SIDE) & self.alive
            g[side] = f_relay[self.relay_of[side]]

            e1 = g * daily
            need = e1 + (1.0 - g) * self.unserved_daily
            live = self.alive
            dies = live & (battery < need)
            spend = np.where(live, np.minimum(battery, need), 0.0)
            delivered = np.where(battery >= e1, g, battery / daily)
            delivered = np.clip(delivered, 0.0, 1.0)

            serving = live & (self.mode != _UNSERVED)
            credit = np.where(serving, delivered, 0.0)
            if self.scheme == "context":
                # Cease-serving: out-of-coverage remotes freeze at exactly
                # the requirement; they are withdrawn at the next TMS round.
                oc = ~self.in_cov
                credit[oc] = np.minimum(credit[oc],
                                        np.maximum(req - self.served[oc], 0.0))
            self.served += credit
            self.drain += spend

            if dies.any():
                # Death time within the day: serving-phase deaths use the
                # delivered fraction; tail deaths round to the serving end.
                frac = np.where(battery >= e1, g, delivered)
                self.death_day[dies] = day - 1 + frac[dies]
                self.alive[dies] = False
                self.mode[dies] = _UNSERVED
                self.relay_of[dies] = NO_RELAY
                self.alive_dirty = True

            reported = credit > 0.0
            self.bs_batt[reported] = self.battery0 - self.drain[reported]

        served = self.served
        return SimulationResult(
            scheme=SCHEME_NAMES[self.scheme],
            sensor_id=np.arange(self.n),
            distance_m=self.dist,
            angle_rad=self.ang,
            coverage=np.where(self.in_cov, 0, 1).astype(np.int8),
            served_days=served,
            death_day=self.death_day,
            final_mode=self.mode.copy(),
            day1_mode=self.day1_mode,
            outage_fraction_day1=float(np.mean(self.day1_mode == _UNSERVED)),
            fraction_meeting_requirement=float(np.mean(served >= req)),
            cdf=build_cdf(served),
            life_requirement_days=sc.life_requirement_days,
            horizon_days=sc.horizon_days,
            initial_battery_j=self.battery0,
            total_drain_j=self.drain,
            final_battery_j=self.battery0 - self.drain,
        )
