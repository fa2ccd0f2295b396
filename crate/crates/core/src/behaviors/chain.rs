//! Leader-follower chain assembly and movement.
//!
//! Assembly is turn-taking: the lead elects the worker nearest to it, that
//! worker elects the next, and so on until the required count commits;
//! guides not leading append at the tail. During movement each follower
//! tracks the relative position of its parent inside a limited field of
//! view. Falling behind broadcasts a stop request to the parent, getting
//! too close halts and requests the parent to move, and losing sight of the
//! parent triggers a full-turn recovery rotation.

use crate::comms::{Body, LinkPhase, Message};
use crate::config::Tunables;
use crate::engine::{ChainLink, Command};
use crate::geom::Vec2;

/// Greedy turn-taking assignment: each elector picks the nearest available
/// worker (ties to the lower id), then the elected worker elects next.
/// Spare guides are appended after the last worker in id order.
pub fn chain_assemble(
    lead: (u16, Vec2),
    workers: &[(u16, Vec2)],
    spare_guides: &[u16],
    required_n: usize,
) -> Vec<(u16, ChainLink)> {
    let chain_id = 0; // assignment is positional; callers rebind the id
    let mut links = vec![(
        lead.0,
        ChainLink {
            chain_id,
            index: 0,
            parent: None,
            child: None,
            phase: LinkPhase::Forming,
        },
    )];
    let mut available: Vec<(u16, Vec2)> = workers.to_vec();
    let mut elector = lead;
    let mut index = 1u16;
    while (index as usize) <= required_n && !available.is_empty() {
        let best = available
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                elector
                    .1
                    .distance(a.1)
                    .total_cmp(&elector.1.distance(b.1))
                    .then(a.0.cmp(&b.0))
            })
            .map(|(i, _)| i)
            .unwrap();
        let elected = available.remove(best);
        links.last_mut().unwrap().1.child = Some(elected.0);
        links.push((
            elected.0,
            ChainLink {
                chain_id,
                index,
                parent: Some(elector.0),
                child: None,
                phase: LinkPhase::Forming,
            },
        ));
        elector = elected;
        index += 1;
    }
    let mut spares: Vec<u16> = spare_guides.to_vec();
    spares.sort_unstable();
    for guide in spares {
        let parent = links.last().unwrap().0;
        links.last_mut().unwrap().1.child = Some(guide);
        links.push((
            guide,
            ChainLink {
                chain_id,
                index,
                parent: Some(parent),
                child: None,
                phase: LinkPhase::Forming,
            },
        ));
        index += 1;
    }
    links
}

/// Follower bookkeeping that does not live in the link itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct FollowerMemory {
    /// Radians turned so far in the current recovery rotation.
    pub recover_rotated: f64,
    /// A stop request to the parent is outstanding.
    pub stop_outstanding: bool,
    /// LostParent has been reported for the current recovery.
    pub lost_reported: bool,
    /// Time of the last move request, for the periodic re-send.
    pub last_release_t: f64,
    /// Follower-local clock, advanced by `dt` each step.
    pub clock: f64,
    /// Latched from the parent's last status broadcast.
    pub parent_waiting: bool,
}

/// A close-up follower re-sends the move request this often, so a parent
/// whose release was missed cannot stay parked forever.
const RELEASE_PERIOD: f64 = 0.3;

/// What the follower controller decided beyond the motion command.
#[derive(Debug, Clone, Default)]
pub struct FollowerStep {
    pub messages: Vec<Message>,
    /// Set when a full recovery rotation failed to re-acquire the parent.
    pub lost_parent: bool,
    /// Set when recovery just re-acquired the parent.
    pub reacquired: bool,
}

/// One control step of a chain follower in Move/Wait/Recover.
///
/// `parent_obs` is `(range, bearing relative to heading)` when the parent
/// is visible inside the tracking field of view. `parent_waiting` reflects
/// the parent's last status broadcast: a paused parent is approached all
/// the way to the release distance so the move request actually fires.
pub fn follower_step(
    me: u16,
    link: &mut ChainLink,
    memory: &mut FollowerMemory,
    parent_obs: Option<(f64, f64)>,
    obstacle_ahead: Option<(f64, f64)>,
    parent_waiting: bool,
    parent_wait_rx: bool,
    parent_move_rx: bool,
    dt: f64,
    tun: &Tunables,
) -> (Command, FollowerStep) {
    let mut out = FollowerStep::default();
    let parent = link.parent.expect("follower links have a parent");
    memory.clock += dt;

    // A stop broadcast from our child puts us in Wait regardless of what
    // our own tracking is doing; only a move request releases it.
    if parent_wait_rx && link.phase != LinkPhase::Recover {
        link.phase = LinkPhase::Wait;
    }
    if link.phase == LinkPhase::Wait {
        if parent_move_rx {
            link.phase = LinkPhase::Move;
        } else {
            // Hold position, keep facing the parent if visible.
            let omega = parent_obs.map_or(0.0, |(_, bearing)| {
                (2.0 * bearing).clamp(-tun.omega_max, tun.omega_max)
            });
            return (Command { v: 0.0, omega }, out);
        }
    }

    match parent_obs {
        None => {
            if link.phase != LinkPhase::Recover {
                link.phase = LinkPhase::Recover;
                memory.recover_rotated = 0.0;
                memory.lost_reported = false;
            }
            let step = 0.9 * tun.omega_max * dt;
            memory.recover_rotated += step;
            if memory.recover_rotated >= std::f64::consts::TAU && !memory.lost_reported {
                memory.lost_reported = true;
                out.lost_parent = true;
            }
            (
                Command {
                    v: 0.0,
                    omega: 0.9 * tun.omega_max,
                },
                out,
            )
        }
        Some((range, bearing)) => {
            if link.phase == LinkPhase::Recover {
                link.phase = LinkPhase::Move;
                memory.recover_rotated = 0.0;
                memory.lost_reported = false;
                out.reacquired = true;
            }

            if range > tun.chain_stop && !memory.stop_outstanding {
                memory.stop_outstanding = true;
                out.messages
                    .push(Message::new(me, Body::ParentWait { parent }));
            }
            if range < tun.chain_resume {
                // Too close: halt and ask the parent to move. The request
                // repeats while we sit here, so a waiting parent always
                // hears it even if the first copy predated its pause.
                if memory.stop_outstanding
                    || memory.clock - memory.last_release_t >= RELEASE_PERIOD
                {
                    memory.stop_outstanding = false;
                    memory.last_release_t = memory.clock;
                    out.messages
                        .push(Message::new(me, Body::ParentMove { parent }));
                }
                return (
                    Command {
                        v: 0.0,
                        omega: (2.0 * bearing).clamp(-tun.omega_max, tun.omega_max),
                    },
                    out,
                );
            }
            // A wall between us and the parent's course: edge around it
            // slowly instead of wedging on the corner.
            if let Some((ob_bearing, ob_dist)) = obstacle_ahead {
                if ob_dist < 0.35 && bearing.abs() < 1.2 {
                    let away = if ob_bearing >= 0.0 { -1.0 } else { 1.0 };
                    return (
                        Command {
                            v: 0.08,
                            omega: away * 0.8 * tun.omega_max,
                        },
                        out,
                    );
                }
            }
            // Steer toward the point `chain_follow` behind the parent along
            // the line of sight; close to the release distance instead when
            // the parent is parked waiting for us.
            let setpoint = if parent_waiting {
                0.9 * tun.chain_resume
            } else {
                tun.chain_follow
            };
            let v = (1.2 * (range - setpoint)).clamp(0.0, tun.v_max);
            let omega = (2.5 * bearing).clamp(-tun.omega_max, tun.omega_max);
            // Tight turns first, then speed.
            let v = if bearing.abs() > 1.0 { 0.1 * tun.v_max } else { v };
            (Command { v, omega }, out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_workers(n: usize) -> Vec<(u16, Vec2)> {
        (0..n)
            .map(|i| (10 + i as u16, Vec2::new(1.0 + i as f64, 0.0)))
            .collect()
    }

    #[test]
    fn assembles_required_length() {
        let links = chain_assemble((0, Vec2::ZERO), &grid_workers(4), &[], 4);
        assert_eq!(links.len(), 5);
        for (expect_idx, (_, link)) in links.iter().enumerate() {
            assert_eq!(link.index as usize, expect_idx);
        }
        assert_eq!(links[0].1.parent, None);
        assert_eq!(links[0].1.child, Some(10));
        assert_eq!(links[1].1.parent, Some(0));
        // Nearest-first election: workers in position order.
        assert_eq!(links[4].1.parent, Some(12));
        assert_eq!(links[4].1.child, None);
    }

    #[test]
    fn spare_guides_append_at_tail() {
        let links = chain_assemble((0, Vec2::ZERO), &grid_workers(3), &[7, 5], 3);
        assert_eq!(links.len(), 6);
        // Spares in id order after the last worker.
        assert_eq!(links[4].0, 5);
        assert_eq!(links[5].0, 7);
        assert_eq!(links[4].1.parent, Some(links[3].0));
        assert_eq!(links[5].1.parent, Some(5));
        assert_eq!(links[4].1.index, 4);
    }

    #[test]
    fn equidistant_election_takes_lower_id() {
        let workers = vec![
            (21, Vec2::new(0.0, 1.0)),
            (4, Vec2::new(1.0, 0.0)), // same distance from the lead
        ];
        let links = chain_assemble((0, Vec2::ZERO), &workers, &[], 2);
        assert_eq!(links[1].0, 4);
        assert_eq!(links[2].0, 21);
    }

    #[test]
    fn short_supply_stalls_partial() {
        let links = chain_assemble((0, Vec2::ZERO), &grid_workers(2), &[], 10);
        // Two workers committed, chain incomplete but consistent.
        assert_eq!(links.len(), 3);
    }

    fn link() -> ChainLink {
        ChainLink {
            chain_id: 0,
            index: 1,
            parent: Some(0),
            child: None,
            phase: LinkPhase::Move,
        }
    }

    #[test]
    fn parent_ahead_at_setpoint_means_slow_follow() {
        let tun = Tunables::default();
        let mut l = link();
        let mut mem = FollowerMemory::default();
        let (cmd, step) = follower_step(1, &mut l, &mut mem, Some((1.0, 0.0)), None, false, false, false, 0.1, &tun);
        assert_eq!(l.phase, LinkPhase::Move);
        assert!(cmd.v.abs() < 1e-9); // at the setpoint: no closing speed
        assert!(step.messages.is_empty());
        // Parent further out: forward command.
        let (cmd, _) = follower_step(1, &mut l, &mut mem, Some((1.6, 0.0)), None, false, false, false, 0.1, &tun);
        assert!(cmd.v > 0.0);
    }

    #[test]
    fn falling_behind_requests_a_pause() {
        let tun = Tunables::default();
        let mut l = link();
        let mut mem = FollowerMemory::default();
        let (_, step) = follower_step(1, &mut l, &mut mem, Some((2.3, 0.0)), None, false, false, false, 0.1, &tun);
        assert_eq!(step.messages.len(), 1);
        assert!(matches!(step.messages[0].body, Body::ParentWait { parent: 0 }));
        // Not re-sent while outstanding.
        let (_, step2) = follower_step(1, &mut l, &mut mem, Some((2.4, 0.0)), None, false, false, false, 0.1, &tun);
        assert!(step2.messages.is_empty());
        // Caught up: the release goes out.
        let (_, step3) = follower_step(1, &mut l, &mut mem, Some((0.5, 0.0)), None, false, false, false, 0.1, &tun);
        assert!(matches!(step3.messages[0].body, Body::ParentMove { parent: 0 }));
    }

    #[test]
    fn wait_releases_only_on_move_request() {
        let tun = Tunables::default();
        let mut l = link();
        let mut mem = FollowerMemory::default();
        let (cmd, _) = follower_step(1, &mut l, &mut mem, Some((1.5, 0.0)), None, false, true, false, 0.1, &tun);
        assert_eq!(l.phase, LinkPhase::Wait);
        assert_eq!(cmd.v, 0.0);
        // Still waiting without the release.
        let (cmd, _) = follower_step(1, &mut l, &mut mem, Some((1.5, 0.0)), None, false, false, false, 0.1, &tun);
        assert_eq!(l.phase, LinkPhase::Wait);
        assert_eq!(cmd.v, 0.0);
        let (_, _) = follower_step(1, &mut l, &mut mem, Some((1.5, 0.0)), None, false, false, true, 0.1, &tun);
        assert_eq!(l.phase, LinkPhase::Move);
    }

    #[test]
    fn waiting_parent_is_approached_and_released() {
        // Child parked at the follow setpoint while its parent waits: it
        // must close in and send the move request, not sit there.
        let tun = Tunables::default();
        let mut l = link();
        let mut mem = FollowerMemory::default();
        let mut range = 1.0;
        let mut released = false;
        for _ in 0..200 {
            let (cmd, step) =
                follower_step(1, &mut l, &mut mem, Some((range, 0.0)), None, true, false, false, 0.1, &tun);
            range = (range - cmd.v * 0.1).max(0.0);
            if step
                .messages
                .iter()
                .any(|m| matches!(m.body, Body::ParentMove { parent: 0 }))
            {
                released = true;
                break;
            }
        }
        assert!(released, "parked child never released its waiting parent");
    }

    #[test]
    fn losing_sight_recovers_then_reports() {
        let tun = Tunables::default();
        let mut l = link();
        let mut mem = FollowerMemory::default();
        let (cmd, _) = follower_step(1, &mut l, &mut mem, None, None, false, false, false, 0.1, &tun);
        assert_eq!(l.phase, LinkPhase::Recover);
        assert!(cmd.omega != 0.0);
        assert_eq!(cmd.v, 0.0);

        // Re-acquire quickly: back to Move.
        let (_, step) = follower_step(1, &mut l, &mut mem, Some((1.0, 0.2)), None, false, false, false, 0.1, &tun);
        assert_eq!(l.phase, LinkPhase::Move);
        assert!(step.reacquired);

        // Lose it for a full rotation: exactly one LostParent report.
        let mut reports = 0;
        for _ in 0..600 {
            let (_, s) = follower_step(1, &mut l, &mut mem, None, None, false, false, false, 0.1, &tun);
            reports += s.lost_parent as u32;
        }
        assert_eq!(reports, 1);
        assert_eq!(l.phase, LinkPhase::Recover);
    }
}
