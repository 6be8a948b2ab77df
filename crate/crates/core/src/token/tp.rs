use super::{candidate_tasks, idle, Idle, ProtocolError, Token, TurnContext};
use crate::events::Action;
use crate::pathing::plan_path1;
use crate::AgentId;

/// One token-passing turn for `agent`.
///
/// An agent at the end of its path takes the nearest task whose cells are not the path
/// end of another agent, or otherwise rests or parks. A mid-path agent (free request)
/// only takes a task, and keeps its path when none is available or planning fails.
pub fn tp_token_turn(
    token: &mut Token,
    ctx: &mut TurnContext<'_>,
    agent: AgentId,
) -> Result<(), ProtocolError> {
    let loc = ctx.locations[agent];
    let at_end = token.agent_at_path_end(agent, ctx.t);
    let hard = at_end && ctx.map.is_endpoint(loc);

    if let Some(&id) = candidate_tasks(token, ctx, agent, false).first() {
        let task = ctx.task(id);
        let (pickup, delivery) = (task.pickup, task.delivery);
        let rt = token.reservations_excluding(&[agent]);
        match plan_path1(ctx.map, agent, loc, ctx.t, pickup, delivery, &rt, ctx.h) {
            Ok(planned) => {
                token.taskset_mut().remove(&id);
                token.assign(agent, id);
                token.set_pickup_eta(agent, planned.pickup_time);
                ctx.events
                    .record(ctx.t, agent, Action::Assign, Some(id), Some(planned.cost()));
                token.set_path(agent, planned.path);
                return Ok(());
            }
            Err(source) if hard => {
                return Err(ProtocolError::PlanningFailed {
                    t: ctx.t,
                    agent,
                    cell: loc,
                    source,
                })
            }
            Err(_) if !at_end => return Ok(()),
            // Off an endpoint at the end of a path (a parked agent cannot be here); fall
            // through and try to reach an endpoint instead.
            Err(_) => {}
        }
    }

    if !at_end {
        return Ok(());
    }
    match idle(token, ctx, agent) {
        Idle::Rested | Idle::Parked => Ok(()),
        Idle::NoPath(source) if hard => Err(ProtocolError::PlanningFailed {
            t: ctx.t,
            agent,
            cell: loc,
            source,
        }),
        // Keep the current (finished) path and try again next timestep.
        Idle::NoPath(_) => Ok(()),
    }
}
