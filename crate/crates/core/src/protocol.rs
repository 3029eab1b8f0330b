//! Per-switch routing-mode state machine: master loss, role requests to the
//! backup controllers, legacy fallback on unanimous rejection, and later
//! re-adoption by a controller.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Sdn,
    Legacy,
    /// Between master loss and the outcome of the role requests.
    Offline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Stable,
    AwaitingRoleReplies,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "event", content = "controller", rename_all = "snake_case")]
pub enum Event {
    MasterConnectionLost,
    RoleReplyRejectLegacy(NodeId),
    RoleReplyAccept(NodeId),
    Adopt(NodeId),
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::MasterConnectionLost => f.write_str("lost"),
            Event::RoleReplyRejectLegacy(c) => write!(f, "reject {c}"),
            Event::RoleReplyAccept(c) => write!(f, "accept {c}"),
            Event::Adopt(c) => write!(f, "adopt {c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    BroadcastRoleRequest { to: Vec<NodeId> },
    RecordRejection { from: NodeId },
    ActivateLegacyRouting,
    AcceptMaster { controller: NodeId },
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::BroadcastRoleRequest { to } => {
                let ids: Vec<String> = to.iter().map(|c| format!("C{c}")).collect();
                write!(f, "request role from {{{}}}", ids.join(","))
            }
            Action::RecordRejection { from } => write!(f, "rejected by C{from}"),
            Action::ActivateLegacyRouting => f.write_str("activate legacy routing"),
            Action::AcceptMaster { controller } => write!(f, "master C{controller}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SwitchSession {
    pub switch_id: NodeId,
    pub mode: Mode,
    pub master: Option<NodeId>,
    pub backups: Vec<NodeId>,
    pub phase: Phase,
    /// Backups that have rejected the pending role request.
    pub rejected: BTreeSet<NodeId>,
}

/// Why an event was refused; the session is left unchanged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub event: Event,
    pub reason: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "'{}' refused: {}", self.event, self.reason)
    }
}

impl SwitchSession {
    /// An SDN-mode session with a live master.
    pub fn new(switch_id: NodeId, master: NodeId, backups: Vec<NodeId>) -> Result<Self> {
        let unique: BTreeSet<NodeId> = backups.iter().copied().collect();
        if unique.len() != backups.len() || unique.contains(&master) {
            return Err(Error::InvalidArgument(
                "backups must be distinct and exclude the master".into(),
            ));
        }
        Ok(SwitchSession {
            switch_id,
            mode: Mode::Sdn,
            master: Some(master),
            backups,
            phase: Phase::Stable,
            rejected: BTreeSet::new(),
        })
    }

    /// Backups that have not replied yet.
    pub fn pending(&self) -> Vec<NodeId> {
        self.backups.iter().copied().filter(|c| !self.rejected.contains(c)).collect()
    }

    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        match (self.mode, self.master, self.phase) {
            (Mode::Sdn, None, _) => Err("SDN mode without a master".into()),
            (Mode::Legacy | Mode::Offline, Some(m), _) => Err(format!("{:?} mode with master {m}", self.mode)),
            (_, Some(m), Phase::AwaitingRoleReplies) => Err(format!("awaiting replies with master {m}")),
            (Mode::Offline, _, Phase::Stable) => Err("offline while stable".into()),
            (Mode::Legacy, _, Phase::AwaitingRoleReplies) => {
                Err(format!("{:?} mode while awaiting replies", self.mode))
            }
            _ if self.phase == Phase::Stable && !self.rejected.is_empty() => {
                Err("stale rejections while stable".into())
            }
            _ => Ok(()),
        }
    }

    fn state_label(&self) -> String {
        let mode = match self.mode {
            Mode::Sdn => "SDN",
            Mode::Legacy => "LEGACY",
            Mode::Offline => "OFFLINE",
        };
        let phase = match self.phase {
            Phase::Stable => "STABLE",
            Phase::AwaitingRoleReplies => "AWAITING",
        };
        let master = self.master.map_or("none".to_string(), |m| format!("C{m}"));
        format!("{mode}/{phase} master={master}")
    }
}

/// Applies one event. Deterministic; refused events leave `s` untouched.
pub fn step(s: &SwitchSession, e: Event) -> std::result::Result<(SwitchSession, Vec<Action>), Diagnostic> {
    let refuse = |reason: String| Err(Diagnostic { event: e, reason });
    let mut next = s.clone();
    let mut actions = Vec::new();
    match (s.phase, e) {
        (Phase::Stable, Event::MasterConnectionLost) => {
            if s.mode != Mode::Sdn {
                return refuse("no master connection to lose".into());
            }
            next.mode = Mode::Offline;
            next.master = None;
            next.phase = Phase::AwaitingRoleReplies;
            actions.push(Action::BroadcastRoleRequest { to: s.backups.clone() });
            if s.backups.is_empty() {
                fall_back(&mut next, &mut actions);
            }
        }
        (Phase::AwaitingRoleReplies, Event::RoleReplyRejectLegacy(c)) => {
            if !s.backups.contains(&c) {
                return refuse(format!("C{c} is not a backup"));
            }
            if s.rejected.contains(&c) {
                return refuse(format!("C{c} already replied"));
            }
            next.rejected.insert(c);
            actions.push(Action::RecordRejection { from: c });
            if next.rejected.len() == s.backups.len() {
                fall_back(&mut next, &mut actions);
            }
        }
        (Phase::AwaitingRoleReplies, Event::RoleReplyAccept(c)) => {
            if !s.backups.contains(&c) {
                return refuse(format!("C{c} is not a backup"));
            }
            if s.rejected.contains(&c) {
                return refuse(format!("C{c} already replied"));
            }
            become_master(&mut next, c, &mut actions);
        }
        (Phase::Stable, Event::Adopt(c)) => {
            if s.mode != Mode::Legacy {
                return refuse("only a legacy-mode switch can be adopted".into());
            }
            become_master(&mut next, c, &mut actions);
        }
        (Phase::Stable, _) => return refuse("no role request outstanding".into()),
        (Phase::AwaitingRoleReplies, _) => return refuse("role replies outstanding".into()),
    }
    Ok((next, actions))
}

fn fall_back(s: &mut SwitchSession, actions: &mut Vec<Action>) {
    s.mode = Mode::Legacy;
    s.phase = Phase::Stable;
    s.rejected.clear();
    actions.push(Action::ActivateLegacyRouting);
}

fn become_master(s: &mut SwitchSession, c: NodeId, actions: &mut Vec<Action>) {
    s.mode = Mode::Sdn;
    s.master = Some(c);
    s.phase = Phase::Stable;
    s.rejected.clear();
    s.backups.retain(|&b| b != c);
    actions.push(Action::AcceptMaster { controller: c });
}

/// One line per applied or refused event.
pub fn log_line(before: &SwitchSession, e: Event, outcome: &std::result::Result<(SwitchSession, Vec<Action>), Diagnostic>) -> String {
    match outcome {
        Ok((after, actions)) => {
            let acts: Vec<String> = actions.iter().map(ToString::to_string).collect();
            format!(
                "s{}: {} --{e}--> {}; {}",
                before.switch_id,
                before.state_label(),
                after.state_label(),
                acts.join("; ")
            )
        }
        Err(d) => format!("s{}: {} --{e}--> refused: {}", before.switch_id, before.state_label(), d.reason),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptCommand {
    Event(Event),
    /// Synthesized rejections from every backup still pending.
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Script {
    pub session: SwitchSession,
    pub commands: Vec<ScriptCommand>,
}

/// Parses an event script:
///
/// ```text
/// # comment
/// session switch=100 master=1 backups=2,3
/// lost
/// reject 2
/// accept 3
/// adopt 3
/// timeout
/// ```
pub fn parse_script(text: &str) -> Result<Script> {
    let bad = |n: usize, msg: &str| Error::parse("event script", format!("line {}: {msg}", n + 1));
    let mut session = None;
    let mut commands = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut words = line.split_whitespace();
        let head = words.next().expect("non-empty line");
        let controller = |w: Option<&str>| -> Result<NodeId> {
            let w = w.ok_or_else(|| bad(n, "missing controller id"))?;
            w.trim_start_matches('C')
                .parse()
                .map(NodeId)
                .map_err(|_| bad(n, &format!("bad controller id '{w}'")))
        };
        match head {
            "session" => {
                if session.is_some() {
                    return Err(bad(n, "session declared twice"));
                }
                let (mut sw, mut master, mut backups) = (None, None, Vec::new());
                for kv in words.by_ref() {
                    let (k, v) = kv.split_once('=').ok_or_else(|| bad(n, "expected key=value"))?;
                    match k {
                        "switch" => sw = Some(v.parse().map_err(|_| bad(n, "bad switch id"))?),
                        "master" => master = Some(controller(Some(v))?),
                        "backups" => {
                            backups = v
                                .split(',')
                                .filter(|s| !s.is_empty())
                                .map(|c| controller(Some(c)))
                                .collect::<Result<_>>()?
                        }
                        _ => return Err(bad(n, &format!("unknown key '{k}'"))),
                    }
                }
                let sw = sw.ok_or_else(|| bad(n, "missing switch"))?;
                let master = master.ok_or_else(|| bad(n, "missing master"))?;
                session = Some(SwitchSession::new(NodeId(sw), master, backups)?);
                continue;
            }
            _ if session.is_none() => return Err(bad(n, "events before the session line")),
            "lost" => commands.push(ScriptCommand::Event(Event::MasterConnectionLost)),
            "reject" => commands.push(ScriptCommand::Event(Event::RoleReplyRejectLegacy(controller(words.next())?))),
            "accept" => commands.push(ScriptCommand::Event(Event::RoleReplyAccept(controller(words.next())?))),
            "adopt" => commands.push(ScriptCommand::Event(Event::Adopt(controller(words.next())?))),
            "timeout" => commands.push(ScriptCommand::Timeout),
            other => return Err(bad(n, &format!("unknown event '{other}'"))),
        }
        if words.next().is_some() {
            return Err(bad(n, "trailing tokens"));
        }
    }
    let session = session.ok_or_else(|| Error::parse("event script", "no session line"))?;
    Ok(Script { session, commands })
}

/// Replays a script, returning the final session and the action log.
pub fn replay(script: &Script) -> (SwitchSession, Vec<String>) {
    let mut s = script.session.clone();
    let mut log = Vec::new();
    let apply = |s: &mut SwitchSession, e: Event, log: &mut Vec<String>| {
        let out = step(s, e);
        log.push(log_line(s, e, &out));
        if let Ok((next, _)) = out {
            *s = next;
        }
    };
    for cmd in &script.commands {
        match cmd {
            ScriptCommand::Event(e) => apply(&mut s, *e, &mut log),
            ScriptCommand::Timeout => {
                if s.phase != Phase::AwaitingRoleReplies {
                    log.push(format!("s{}: timeout ignored, no request outstanding", s.switch_id));
                }
                for c in s.pending() {
                    apply(&mut s, Event::RoleReplyRejectLegacy(c), &mut log);
                }
            }
        }
    }
    (s, log)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelCheckReport {
    pub depth: usize,
    pub alphabet: usize,
    pub states: usize,
    pub transitions: u64,
    pub violations: Vec<String>,
}

/// Breadth-first exploration of every event sequence up to `depth` from an
/// SDN session with `backups` backups. Events range over the master, the
/// backups and one outside controller. Sequences reaching an already seen
/// state are merged since `step` is deterministic.
pub fn model_check(backups: u32, depth: usize) -> ModelCheckReport {
    let master = NodeId(1);
    let backup_ids: Vec<NodeId> = (2..2 + backups).map(NodeId).collect();
    let start = SwitchSession::new(NodeId(0), master, backup_ids).expect("distinct ids");
    let controllers: Vec<NodeId> = (1..3 + backups).map(NodeId).collect();
    let mut alphabet = vec![Event::MasterConnectionLost];
    for &c in &controllers {
        alphabet.extend([Event::RoleReplyRejectLegacy(c), Event::RoleReplyAccept(c), Event::Adopt(c)]);
    }

    let mut seen: HashSet<SwitchSession> = HashSet::new();
    let mut violations = Vec::new();
    let mut transitions = 0;
    let mut queue = VecDeque::from([(start.clone(), 0usize)]);
    seen.insert(start.clone());
    if let Err(v) = start.check_invariants() {
        violations.push(format!("initial state: {v}"));
    }
    while let Some((s, d)) = queue.pop_front() {
        if d == depth {
            continue;
        }
        for &e in &alphabet {
            transitions += 1;
            let next = match step(&s, e) {
                Ok((next, _)) => next,
                Err(_) => continue,
            };
            if let Err(v) = next.check_invariants() {
                violations.push(format!("{} --{e}--> {v}", s.state_label()));
            }
            if seen.insert(next.clone()) {
                queue.push_back((next, d + 1));
            }
        }
    }
    ModelCheckReport {
        depth,
        alphabet: alphabet.len(),
        states: seen.len(),
        transitions,
        violations,
    }
}
