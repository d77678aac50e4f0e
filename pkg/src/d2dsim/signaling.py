"""Explicit signaling procedures: attachment, TM update, sidelink report cycle.

Every procedure yields a transcript of timestamped messages with the joule
charge to each end, built from the same per-message helpers as the daily
energy accounting so that the two reconcile exactly.

Conventions:
- Downlink control receptions (S-SIB, TmConfig) charge one paging-slot
  reception to the sensor.  The TMS Page itself charges nothing extra: the
  DRX paging budget in the daily breakdown already covers those wake-ups.
- Discovery announcements and their Ack/Nack replies use a robust control
  format (full power, lowest MCS step) because they happen before link
  adaptation is configured for the pair.
- The BS ACK closing a report cycle rides the always-on downlink control
  channel and charges nothing, matching the daily accounting.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .channel import LinkState, McsTable, tx_duration
from .config import SimConfig
from .energy import (fixed_event_energies, message_duration_s, rx_energy,
                     tx_energy)
from .scenario import PowerProfile

BS = -1
BROADCAST = -2


class MessageKind(enum.Enum):
    SSIB = "SSib"
    CONTEXT_REPORT = "ContextReport"
    TM_CONFIG = "TmConfig"
    PAGE = "Page"
    DISCOVERY_ANNOUNCE = "DiscoveryAnnounce"
    DISCOVERY_ACK = "DiscoveryAck"
    DISCOVERY_NACK = "DiscoveryNack"
    SECURITY_EXCHANGE = "SecurityExchange"
    RESULT_FORWARD = "ResultForward"
    RA_PREAMBLE = "RaPreamble"
    RESOURCE_GRANT = "ResourceGrant"
    DATA_PACKET = "DataPacket"
    ACK = "Ack"
    NACK = "Nack"
    AGGREGATED_UPLINK = "AggregatedUplink"


class Outcome(enum.Enum):
    ESTABLISHED = "Established"
    FALLBACK_CELLULAR = "FallbackCellular"
    DELIVERED = "Delivered"
    FAILED = "Failed"


@dataclass
class SignalingMessage:
    kind: MessageKind
    src: int                      # node id, or BS
    dst: int                      # node id, BS, or BROADCAST
    size_bits: int
    carried_ids: list[int] = field(default_factory=list)


@dataclass
class TranscriptEntry:
    timestamp_s: float
    message: SignalingMessage
    tx_energy_j: float            # charged to the sender (0 for the BS)
    rx_energy_j: float            # charged to each receiving sensor


@dataclass
class SignalingTranscript:
    entries: list[TranscriptEntry] = field(default_factory=list)
    outcome: Outcome = Outcome.ESTABLISHED

    def add(self, t: float, kind: MessageKind, src: int, dst: int,
            size_bits: int, tx_j: float, rx_j: float,
            carried_ids: list[int] | None = None) -> None:
        msg = SignalingMessage(kind, src, dst, size_bits, carried_ids or [])
        self.entries.append(TranscriptEntry(t, msg, tx_j, rx_j))

    def energy_by_node(self) -> dict[int, float]:
        """Total joules charged per sensor id (BS excluded).

        For a broadcast message the receive energy applies to every sensor in
        carried_ids; otherwise to the single destination.
        """
        out: dict[int, float] = {}
        for e in self.entries:
            if e.message.src >= 0:
                out[e.message.src] = out.get(e.message.src, 0.0) + e.tx_energy_j
            if e.message.dst >= 0:
                out[e.message.dst] = out.get(e.message.dst, 0.0) + e.rx_energy_j
            elif e.message.dst == BROADCAST:
                for i in e.message.carried_ids:
                    if i != e.message.src:
                        out[i] = out.get(i, 0.0) + e.rx_energy_j
        return out

    def dump(self, fh) -> None:
        for e in self.entries:
            ids = ",".join(str(i) for i in e.message.carried_ids)
            fh.write(f"t={e.timestamp_s:.6f} {e.message.kind.value} "
                     f"{_name(e.message.src)}->{_name(e.message.dst)} "
                     f"bits={e.message.size_bits} ids=[{ids}]\n")


def _name(i: int) -> str:
    if i == BS:
        return "BS"
    if i == BROADCAST:
        return "*"
    return str(i)


# --- Per-message energy helpers -----------------------------------------

def control_duration_s(size_bits: int, cfg: SimConfig, mcs: McsTable) -> float:
    """Airtime of a robust-format control message (lowest MCS step)."""
    return tx_duration(size_bits, mcs.entries[0].spectral_eff_bps_hz,
                       cfg.channel.bandwidth_hz)


def control_decodable(pathloss_db: float, cfg: SimConfig) -> bool:
    """Whether the robust control format closes the link at full power."""
    from .channel import achieved_snr
    snr = achieved_snr(cfg.channel.max_tx_dbm, pathloss_db, cfg.channel)
    return snr >= cfg.channel.outage_snr_db


@dataclass
class SignalingCosts:
    """Precomputed per-message joule charges shared by all procedures."""

    paging_j: float
    cp_j: float
    announce_tx_j: float
    announce_rx_j: float
    reply_tx_j: float             # discovery Ack/Nack, robust format
    reply_rx_j: float

    @classmethod
    def derive(cls, cfg: SimConfig, mcs: McsTable,
               profile: PowerProfile | None = None) -> "SignalingCosts":
        profile = profile or cfg.power
        fx = fixed_event_energies(profile)
        d_ann = control_duration_s(cfg.scenario.discovery_bits, cfg, mcs)
        d_rep = control_duration_s(cfg.scenario.ack_bits, cfg, mcs)
        p_max = cfg.channel.max_tx_dbm
        return cls(
            paging_j=fx["paging_j"],
            cp_j=fx["cp_j"],
            announce_tx_j=tx_energy(p_max, d_ann, profile),
            announce_rx_j=rx_energy(d_ann, profile),
            reply_tx_j=tx_energy(p_max, d_rep, profile),
            reply_rx_j=rx_energy(d_rep, profile),
        )


def security_energies(pair_link: LinkState, cfg: SimConfig,
                      profile: PowerProfile | None = None) -> tuple[float, float]:
    """(tx_j, rx_j) of one security message on the pair link."""
    profile = profile or cfg.power
    dur = message_duration_s(cfg.scenario.security_bits, pair_link,
                             cfg.channel.bandwidth_hz)
    return tx_energy(pair_link.tx_power_dbm, dur, profile), rx_energy(dur, profile)


def result_forward_energy(relay_cell_link: LinkState, cfg: SimConfig,
                          profile: PowerProfile | None = None) -> float:
    profile = profile or cfg.power
    dur = message_duration_s(cfg.scenario.grant_bits, relay_cell_link,
                             cfg.channel.bandwidth_hz)
    return tx_energy(relay_cell_link.tx_power_dbm, dur, profile)


# --- Procedures ----------------------------------------------------------

@dataclass
class PairProposal:
    """One remote-relay sidelink proposed by a TMS round."""

    remote_id: int
    relay_id: int
    pair_link: LinkState
    admitted: bool                # pathloss within the admission threshold
    resumed: bool = False         # stored security context, fast resumption


def _discovery_block(tr: SignalingTranscript, t: float, relay_id: int,
                     proposals: list[PairProposal], costs: SignalingCosts,
                     cfg: SimConfig, mcs: McsTable, multicast: bool,
                     profile: PowerProfile) -> tuple[float, int]:
    """Announce + per-remote Ack/Nack + security, shared by the attachment
    and TM-update procedures.

    Returns (time cursor, number of established pairs).
    """
    sc = cfg.scenario
    d_ann = control_duration_s(sc.discovery_bits, cfg, mcs)
    d_rep = control_duration_s(sc.ack_bits, cfg, mcs)
    remote_ids = [p.remote_id for p in proposals]
    if multicast:
        tr.add(t, MessageKind.DISCOVERY_ANNOUNCE, relay_id, BROADCAST,
               sc.discovery_bits, costs.announce_tx_j, costs.announce_rx_j,
               carried_ids=[relay_id] + remote_ids)
        t += d_ann
    established = 0
    for p in proposals:
        if not multicast:
            tr.add(t, MessageKind.DISCOVERY_ANNOUNCE, relay_id, p.remote_id,
                   sc.discovery_bits, costs.announce_tx_j, costs.announce_rx_j,
                   carried_ids=[relay_id, p.remote_id])
            t += d_ann
        if p.admitted:
            tr.add(t, MessageKind.DISCOVERY_ACK, p.remote_id, relay_id,
                   sc.ack_bits, costs.reply_tx_j, costs.reply_rx_j)
            t += d_rep
            if not p.resumed:
                s_tx, s_rx = security_energies(p.pair_link, cfg, profile)
                s_dur = message_duration_s(sc.security_bits, p.pair_link,
                                           cfg.channel.bandwidth_hz)
                tr.add(t, MessageKind.SECURITY_EXCHANGE, p.remote_id,
                       relay_id, sc.security_bits, s_tx, s_rx)
                t += s_dur
                tr.add(t, MessageKind.SECURITY_EXCHANGE, relay_id,
                       p.remote_id, sc.security_bits, s_tx, s_rx)
                t += s_dur
            established += 1
        elif control_decodable(p.pair_link.pathloss_db, cfg):
            tr.add(t, MessageKind.DISCOVERY_NACK, p.remote_id, relay_id,
                   sc.ack_bits, costs.reply_tx_j, costs.reply_rx_j)
            t += d_rep
        # An undecodable pair produces no reply at all; the relay times out
        # and reports the pair as failed.
    return t, established


def run_attachment(node_id: int, cfg: SimConfig, mcs: McsTable,
                   proposal: PairProposal | None = None,
                   relay_cell_link: LinkState | None = None,
                   profile: PowerProfile | None = None,
                   t0: float = 0.0) -> SignalingTranscript:
    """Initial attachment of one freshly deployed sensor.

    For a cellular or unserved decision the transcript is exactly S-SIB +
    context report + TmConfig.  When a sidelink pair is proposed (the new
    node on either end), the discovery flow follows, announced by the relay
    side; a failed discovery means FallbackCellular and the pair must be
    blacklisted by the caller.
    """
    profile = profile or cfg.power
    costs = SignalingCosts.derive(cfg, mcs, profile)
    sc = cfg.scenario
    tr = SignalingTranscript()
    t = t0
    tr.add(t, MessageKind.SSIB, BS, node_id, sc.page_bits, 0.0, costs.paging_j)
    t += profile.t_paging_s
    # Context report: submitted by the technician's equipment, no sensor cost.
    tr.add(t, MessageKind.CONTEXT_REPORT, node_id, BS, sc.payload_bits, 0.0, 0.0)
    t += profile.t_paging_s
    carried = [] if proposal is None else [proposal.relay_id, proposal.remote_id]
    tr.add(t, MessageKind.TM_CONFIG, BS, node_id, sc.grant_bits, 0.0,
           costs.paging_j, carried_ids=carried)
    t += profile.t_paging_s
    if proposal is None:
        tr.outcome = Outcome.ESTABLISHED
        return tr
    t, established = _discovery_block(
        tr, t, proposal.relay_id, [proposal], costs, cfg, mcs,
        multicast=False, profile=profile)
    if relay_cell_link is not None:
        tr.add(t, MessageKind.RESULT_FORWARD, proposal.relay_id, BS,
               sc.grant_bits, result_forward_energy(relay_cell_link, cfg, profile),
               0.0, carried_ids=[proposal.remote_id])
    tr.outcome = (Outcome.ESTABLISHED if established
                  else Outcome.FALLBACK_CELLULAR)
    return tr


@dataclass
class UpdateGroup:
    """The TM-update work for one relay: reassigned members and proposals."""

    relay_id: int
    relay_cell_link: LinkState
    proposals: list[PairProposal]
    paged_ids: list[int]          # reassigned sensors receiving Page+TmConfig


def run_tm_update(groups: list[UpdateGroup], cfg: SimConfig, mcs: McsTable,
                  loose_reassigned_ids: list[int] | None = None,
                  profile: PowerProfile | None = None,
                  t0: float = 0.0) -> list[SignalingTranscript]:
    """TM update after a TMS round: one transcript per relay group, plus one
    for reassigned sensors not involved in any discovery.

    Pages ride the DRX wake-ups already budgeted daily, so they charge no
    extra energy; each TmConfig reception charges one paging slot.
    """
    profile = profile or cfg.power
    costs = SignalingCosts.derive(cfg, mcs, profile)
    sc = cfg.scenario
    out = []

    def page_and_configure(tr, t, ids):
        for i in ids:
            tr.add(t, MessageKind.PAGE, BS, i, sc.page_bits, 0.0, 0.0)
            t += profile.t_paging_s
            tr.add(t, MessageKind.TM_CONFIG, BS, i, sc.grant_bits, 0.0,
                   costs.paging_j)
            t += profile.t_paging_s
        return t

    if loose_reassigned_ids:
        tr = SignalingTranscript()
        page_and_configure(tr, t0, loose_reassigned_ids)
        tr.outcome = Outcome.ESTABLISHED
        out.append(tr)

    for g in groups:
        tr = SignalingTranscript()
        t = page_and_configure(tr, t0, g.paged_ids)
        established = 0
        if g.proposals:
            t, established = _discovery_block(
                tr, t, g.relay_id, g.proposals, costs, cfg, mcs,
                multicast=True, profile=profile)
            tr.add(t, MessageKind.RESULT_FORWARD, g.relay_id, BS,
                   sc.grant_bits,
                   result_forward_energy(g.relay_cell_link, cfg, profile),
                   0.0, carried_ids=[p.remote_id for p in g.proposals])
        if g.proposals and not established:
            tr.outcome = Outcome.FALLBACK_CELLULAR
        out.append(tr)
    return out


def run_report_cycle(relay_id: int, relay_cell_link: LinkState,
                     remotes: list[tuple[int, LinkState]], cfg: SimConfig,
                     allocation_mode: str | None = None,
                     relay_battery_j: float | None = None,
                     profile: PowerProfile | None = None,
                     t0: float = 0.0) -> SignalingTranscript:
    """One sidelink report cycle: remote data in, one aggregated uplink out.

    With zero remotes this degenerates to the relay's plain cellular report.
    The single control-plane establishment charge rides the aggregated
    uplink entry regardless of the number of remotes.
    """
    profile = profile or cfg.power
    mode = allocation_mode or cfg.scenario.allocation_mode
    costs_cp = fixed_event_energies(profile)["cp_j"]
    sc = cfg.scenario
    bw = cfg.channel.bandwidth_hz
    tr = SignalingTranscript()
    t = t0
    for rid, link in remotes:
        if mode == "random_access":
            g_dur = message_duration_s(sc.grant_bits, link, bw)
            tr.add(t, MessageKind.RA_PREAMBLE, rid, relay_id, sc.grant_bits,
                   tx_energy(link.tx_power_dbm, g_dur, profile),
                   rx_energy(g_dur, profile))
            t += g_dur
            tr.add(t, MessageKind.RESOURCE_GRANT, relay_id, rid, sc.grant_bits,
                   tx_energy(link.tx_power_dbm, g_dur, profile),
                   rx_energy(g_dur, profile))
            t += g_dur
        d_dur = message_duration_s(sc.payload_bits, link, bw)
        tr.add(t, MessageKind.DATA_PACKET, rid, relay_id, sc.payload_bits,
               tx_energy(link.tx_power_dbm, d_dur, profile),
               rx_energy(d_dur, profile), carried_ids=[rid])
        t += d_dur
        a_dur = message_duration_s(sc.ack_bits, link, bw)
        tr.add(t, MessageKind.ACK, relay_id, rid, sc.ack_bits,
               tx_energy(link.tx_power_dbm, a_dur, profile),
               rx_energy(a_dur, profile))
        t += a_dur
    agg_bits = int((1 + len(remotes)) * sc.payload_bits * sc.aggregation_ratio)
    agg_dur = message_duration_s(agg_bits, relay_cell_link, bw)
    tr.add(t, MessageKind.AGGREGATED_UPLINK, relay_id, BS, agg_bits,
           costs_cp + tx_energy(relay_cell_link.tx_power_dbm, agg_dur, profile),
           0.0, carried_ids=[relay_id] + [rid for rid, _ in remotes])
    t += agg_dur
    tr.add(t, MessageKind.ACK, BS, relay_id, sc.ack_bits, 0.0, 0.0)
    tr.outcome = Outcome.DELIVERED
    if relay_battery_j is not None:
        spent = tr.energy_by_node().get(relay_id, 0.0)
        if spent > relay_battery_j:
            tr.outcome = Outcome.FAILED
    return tr
