//! Attenuation-negotiation strategies.
//!
//! A node with packets to send broadcasts a Request; every receiver answers
//! with its estimated attenuation toward the sink (plus the attenuation back
//! to the requester). When the collection window closes the node picks its
//! next hop(s) from the replies and drains its pending packets; with no
//! replies it re-requests.

use std::collections::VecDeque;

use rand::Rng;

use crate::engine::{
    ControlKind, Ctx, Destination, FanOut, Packet, PolicyChoice, RxMeta, Strategy, StrategyTimer,
};
use crate::topology::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttnKind {
    /// The single smallest attenuation-to-sink responder.
    MinAtt,
    /// The two smallest attenuation-to-sink responders.
    BothMinAtt,
    /// Of the two smallest attenuation-to-sink responders, the one with the
    /// smaller attenuation back to the requester.
    CloseToMe,
    /// A uniformly random responder.
    RandAtt,
}

/// One collected reply: responder, attenuation to sink, attenuation to the
/// requesting node (all dB).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reply {
    pub from: NodeId,
    pub to_sink_db: f64,
    pub to_source_db: f64,
}

/// Pick next hop(s) from the collected replies. Ties break on the lowest
/// node id everywhere. The result is non-empty iff `replies` is.
pub fn attenuation_select<R: Rng + ?Sized>(
    kind: AttnKind,
    replies: &[Reply],
    rng: &mut R,
) -> Vec<NodeId> {
    if replies.is_empty() {
        return Vec::new();
    }
    let mut by_sink: Vec<&Reply> = replies.iter().collect();
    by_sink.sort_by(|a, b| {
        a.to_sink_db
            .partial_cmp(&b.to_sink_db)
            .unwrap()
            .then(a.from.cmp(&b.from))
    });
    match kind {
        AttnKind::MinAtt => vec![by_sink[0].from],
        AttnKind::BothMinAtt => by_sink.iter().take(2).map(|r| r.from).collect(),
        AttnKind::CloseToMe => {
            let two = &by_sink[..by_sink.len().min(2)];
            let best = two
                .iter()
                .min_by(|a, b| {
                    a.to_source_db
                        .partial_cmp(&b.to_source_db)
                        .unwrap()
                        .then(a.from.cmp(&b.from))
                })
                .unwrap();
            vec![best.from]
        }
        AttnKind::RandAtt => vec![replies[rng.gen_range(0..replies.len())].from],
    }
}

pub struct Attenuation {
    kind: AttnKind,
    pending: VecDeque<Packet>,
    current_req: Option<u32>,
    next_req_id: u32,
    replies: Vec<Reply>,
}

impl Attenuation {
    pub fn new(kind: AttnKind) -> Self {
        Attenuation {
            kind,
            pending: VecDeque::new(),
            current_req: None,
            next_req_id: 0,
            replies: Vec::new(),
        }
    }

    fn issue_request(&mut self, ctx: &mut Ctx) {
        let req_id = self.next_req_id;
        self.next_req_id += 1;
        self.current_req = Some(req_id);
        self.replies.clear();
        ctx.send_control(ControlKind::Request { req_id }, Destination::Broadcast);
        ctx.set_timer(
            ctx.proto().request_timeout,
            StrategyTimer::RequestTimeout { req_id },
        );
    }

    fn take_packet(&mut self, ctx: &mut Ctx, packet: Packet) {
        self.pending.push_back(packet);
        if self.current_req.is_none() {
            self.issue_request(ctx);
        }
    }
}

impl Strategy for Attenuation {
    fn on_generated(&mut self, ctx: &mut Ctx, packet: Packet) {
        self.take_packet(ctx, packet);
    }

    fn on_data(&mut self, ctx: &mut Ctx, packet: Packet, _from: NodeId, _rx: RxMeta) {
        self.take_packet(ctx, packet);
    }

    fn on_control(&mut self, ctx: &mut Ctx, kind: ControlKind, from: NodeId) {
        match kind {
            ControlKind::Request { req_id } => {
                // Answer only when the sink is reachable from here; a node
                // with no sink-ward link is useless as a relay. The reply is
                // jittered: every receiver of the broadcast request answers,
                // and simultaneous replies would just collide.
                let me = ctx.me();
                if let Some(to_sink_db) = ctx.sinkward_min_mean(me) {
                    let Some(to_source_db) = ctx.link_mean_db(from) else {
                        return;
                    };
                    let jitter = ctx.proto().reply_jitter_max;
                    ctx.send_control_jittered(
                        ControlKind::Reply {
                            req_id,
                            to_sink_db,
                            to_source_db,
                        },
                        Destination::Unicast(from),
                        jitter,
                    );
                }
            }
            ControlKind::Reply {
                req_id,
                to_sink_db,
                to_source_db,
            }
                if self.current_req == Some(req_id) => {
                    let reply = Reply {
                        from,
                        to_sink_db,
                        to_source_db,
                    };
                    match self.replies.iter_mut().find(|r| r.from == from) {
                        Some(slot) => *slot = reply,
                        None => self.replies.push(reply),
                    }
                }
            _ => {}
        }
    }

    fn on_timer(&mut self, ctx: &mut Ctx, timer: StrategyTimer) {
        let StrategyTimer::RequestTimeout { req_id } = timer else {
            return;
        };
        if self.current_req != Some(req_id) {
            return;
        }
        self.current_req = None;
        if self.pending.is_empty() {
            self.replies.clear();
            return;
        }
        if self.replies.is_empty() {
            // Nobody answered in time: re-send the request.
            self.issue_request(ctx);
            return;
        }
        let targets = attenuation_select(self.kind, &self.replies, ctx.rng());
        self.replies.clear();
        while let Some(pkt) = self.pending.pop_front() {
            ctx.forward_data(pkt, FanOut::Unicasts(targets.clone()), PolicyChoice::Scenario);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reply(from: u8, to_sink: f64, to_source: f64) -> Reply {
        Reply {
            from: NodeId(from),
            to_sink_db: to_sink,
            to_source_db: to_source,
        }
    }

    #[test]
    fn minatt_takes_the_smallest() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let replies = [reply(3, 12.0, 0.0), reply(4, 9.0, 0.0)];
        assert_eq!(
            attenuation_select(AttnKind::MinAtt, &replies, &mut rng),
            vec![NodeId(4)]
        );
    }

    #[test]
    fn bothminatt_takes_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let replies = [reply(3, 12.0, 0.0), reply(4, 9.0, 0.0), reply(5, 20.0, 0.0)];
        assert_eq!(
            attenuation_select(AttnKind::BothMinAtt, &replies, &mut rng),
            vec![NodeId(4), NodeId(3)]
        );
        // A single responder still yields a singleton.
        assert_eq!(
            attenuation_select(AttnKind::BothMinAtt, &replies[..1], &mut rng),
            vec![NodeId(3)]
        );
    }

    #[test]
    fn closetome_filters_then_picks_nearest() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        // Two best to-sink are nodes 3 and 4; node 3 is closer to the source.
        let replies = [
            reply(3, 12.0, 5.0),
            reply(4, 9.0, 7.0),
            reply(5, 20.0, 1.0),
        ];
        assert_eq!(
            attenuation_select(AttnKind::CloseToMe, &replies, &mut rng),
            vec![NodeId(3)]
        );
    }

    #[test]
    fn randatt_is_uniform_over_responders() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let replies = [reply(2, 12.0, 0.0), reply(5, 9.0, 0.0)];
        let mut seen = [0u32; 2];
        for _ in 0..1000 {
            match attenuation_select(AttnKind::RandAtt, &replies, &mut rng)[0] {
                NodeId(2) => seen[0] += 1,
                NodeId(5) => seen[1] += 1,
                other => panic!("unexpected {other}"),
            }
        }
        assert!(seen[0] > 350 && seen[1] > 350, "{seen:?}");
    }

    #[test]
    fn ties_break_on_lowest_id() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let replies = [reply(6, 9.0, 3.0), reply(2, 9.0, 3.0)];
        assert_eq!(
            attenuation_select(AttnKind::MinAtt, &replies, &mut rng),
            vec![NodeId(2)]
        );
        assert_eq!(
            attenuation_select(AttnKind::CloseToMe, &replies, &mut rng),
            vec![NodeId(2)]
        );
    }

    #[test]
    fn empty_replies_select_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(attenuation_select(AttnKind::MinAtt, &[], &mut rng).is_empty());
    }
}
