//! JSON-lines event log shared by all planners.

use serde::Serialize;

use crate::{AgentId, TaskId, Timestep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Assign,
    Steal,
    Restore,
    Rest,
    Park,
    Promote,
    AssignPickup,
    AssignParking,
    Replan,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Event {
    pub t: Timestep,
    pub agent: AgentId,
    pub action: Action,
    pub task: Option<TaskId>,
    pub path_cost: Option<u32>,
}

/// Collects events when enabled; a disabled log drops everything.
#[derive(Debug, Clone, Default)]
pub struct EventLog {
    enabled: bool,
    events: Vec<Event>,
}

impl EventLog {
    pub fn new(enabled: bool) -> Self {
        EventLog {
            enabled,
            events: Vec::new(),
        }
    }

    pub fn record(
        &mut self,
        t: Timestep,
        agent: AgentId,
        action: Action,
        task: Option<TaskId>,
        path_cost: Option<u32>,
    ) {
        if self.enabled {
            self.events.push(Event {
                t,
                agent,
                action,
                task,
                path_cost,
            });
        }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }
}

pub fn to_json_lines(events: &[Event]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("event serializes"));
        out.push('\n');
    }
    out
}
