use std::collections::BTreeSet;

use super::{candidate_tasks, idle, park, Idle, ProtocolError, Token, TurnContext};
use crate::events::Action;
use crate::pathing::plan_path1;
use crate::{AgentId, TaskId};

/// Recursion state shared by one top-level request.
struct Swaps<'s> {
    cap: usize,
    /// Agents that already received a new path this timestep through a steal.
    served: &'s mut BTreeSet<AgentId>,
    /// Tasks stolen on the current recursion stack; deeper levels leave them alone.
    chain: Vec<TaskId>,
}

/// GetTask of token passing with task swaps.
///
/// Tries tasks by increasing heuristic distance to their pickup. A task assigned to
/// another agent is taken over only if `agent` reaches the pickup strictly earlier; the
/// former assignee then runs GetTask itself, and if it finds nothing the token is
/// restored and the next task is tried. Without a task the agent rests or parks, unless
/// `idle_fallback` is off, in which case the token is left untouched.
///
/// Returns whether `agent` ended up with a new path. Victims are added to `served`.
pub fn tpts_get_task(
    token: &mut Token,
    ctx: &mut TurnContext<'_>,
    agent: AgentId,
    idle_fallback: bool,
    served: &mut BTreeSet<AgentId>,
) -> Result<bool, ProtocolError> {
    let cap = (token.taskset().len() * token.num_agents()).max(1);
    let mut swaps = Swaps {
        cap,
        served,
        chain: Vec::new(),
    };
    get_task(token, ctx, agent, 0, idle_fallback, &mut swaps)
}

fn get_task(
    token: &mut Token,
    ctx: &mut TurnContext<'_>,
    agent: AgentId,
    depth: usize,
    idle_fallback: bool,
    swaps: &mut Swaps<'_>,
) -> Result<bool, ProtocolError> {
    if depth > swaps.cap {
        return Err(ProtocolError::RecursionCap {
            t: ctx.t,
            cap: swaps.cap,
        });
    }
    let loc = ctx.locations[agent];
    let hard = depth == 0 && idle_fallback && ctx.map.is_endpoint(loc);

    for id in candidate_tasks(token, ctx, agent, true) {
        let task = ctx.task(id);
        let (pickup, delivery) = (task.pickup, task.delivery);
        match token.agent_of(id) {
            None => {
                let rt = token.reservations_excluding(&[agent]);
                match plan_path1(ctx.map, agent, loc, ctx.t, pickup, delivery, &rt, ctx.h) {
                    Ok(planned) => {
                        token.assign(agent, id);
                        token.set_pickup_eta(agent, planned.pickup_time);
                        ctx.events
                            .record(ctx.t, agent, Action::Assign, Some(id), Some(planned.cost()));
                        token.set_path(agent, planned.path);
                        return Ok(true);
                    }
                    Err(source) if hard => {
                        return Err(ProtocolError::PlanningFailed {
                            t: ctx.t,
                            agent,
                            cell: loc,
                            source,
                        })
                    }
                    Err(_) => continue,
                }
            }
            Some(_) if swaps.chain.contains(&id) => continue,
            Some(victim) => {
                let Some(victim_eta) = token.pickup_eta(victim) else {
                    continue;
                };
                let snapshot = token.snapshot();
                let served_before = swaps.served.clone();
                token.unassign(victim);
                token.drop_path(victim);
                let rt = token.reservations_excluding(&[agent]);
                let planned = plan_path1(ctx.map, agent, loc, ctx.t, pickup, delivery, &rt, ctx.h);
                if let Ok(planned) = planned {
                    let eta = planned.pickup_time.expect("path1 records its pickup");
                    if eta < victim_eta {
                        token.assign(agent, id);
                        token.set_pickup_eta(agent, Some(eta));
                        ctx.events
                            .record(ctx.t, agent, Action::Steal, Some(id), Some(planned.cost()));
                        token.set_path(agent, planned.path);
                        swaps.served.insert(victim);
                        swaps.chain.push(id);
                        let found = get_task(token, ctx, victim, depth + 1, true, swaps);
                        swaps.chain.pop();
                        if found? {
                            return Ok(true);
                        }
                    }
                }
                token.restore(snapshot);
                *swaps.served = served_before;
                ctx.events.record(ctx.t, agent, Action::Restore, Some(id), None);
            }
        }
    }

    if !idle_fallback {
        return Ok(false);
    }
    let outcome = if ctx.map.is_endpoint(loc) {
        idle(token, ctx, agent)
    } else {
        let rt = token.reservations_excluding(&[agent]);
        park(token, ctx, agent, &rt)
    };
    match outcome {
        Idle::Rested | Idle::Parked => Ok(true),
        Idle::NoPath(source) if hard => Err(ProtocolError::PlanningFailed {
            t: ctx.t,
            agent,
            cell: loc,
            source,
        }),
        Idle::NoPath(_) => Ok(false),
    }
}
