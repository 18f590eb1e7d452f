//! Threaded execution: one worker per agent, bounded inboxes, and an event
//! log that maps the run back onto a discrete [`Schedule`].
//!
//! Every agent runs index 0 together. After that each activation draws the
//! next global index from a coordinator before it computes. A worker only
//! absorbs messages tagged with an index below its own, so the index order
//! is a valid causal order and the effective delay of a message is simply
//! `receiver index - sender index`. Messages still queued when the run ends
//! are logged as delivered at the horizon `K`.
//!
//! With `tau_proc_cap` set, the coordinator admits an agent only if every
//! unfinished agent can still be activated within `tau_proc_cap` indices of
//! its previous activation (an earliest-deadline check). Fast agents
//! therefore block at the barrier while a straggler catches up.
//!
//! The first agent to use its whole budget ends the run: the others stop at
//! their next admission. Letting a slow agent finish its budget alone would
//! ship its push-sum weight to peers that never answer, and its `z` would
//! blow up.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use crossbeam_channel::{bounded, Receiver, Sender, TrySendError};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agp::{run_agp, AgpOptions, AgpRun, StepSizePolicy};
use crate::objectives::Objective;
use crate::schedule::Schedule;
use crate::topology::{AugmentedGraph, DelayMap, ReferenceGraph};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    Activation,
    Send,
    Deliver,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Activation => "activation",
            Self::Send => "send",
            Self::Deliver => "deliver",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EventKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "activation" => Ok(Self::Activation),
            "send" => Ok(Self::Send),
            "deliver" => Ok(Self::Deliver),
            other => Err(Error::IncompleteLog(format!("unknown event kind {other:?}"))),
        }
    }
}

/// One logged event. `peer` is the receiver of a send or the sender of a
/// delivery.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub index: usize,
    pub wall_ms: f64,
    pub agent: usize,
    pub kind: EventKind,
    pub msg_id: Option<u64>,
    pub peer: Option<usize>,
    pub digest: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventLog {
    pub n: usize,
    /// Number of indices `K`; deliveries at `K` mean the message was still
    /// in flight at the end.
    pub horizon: usize,
    pub records: Vec<EventRecord>,
}

impl EventLog {
    pub fn new(n: usize, horizon: usize, mut records: Vec<EventRecord>) -> Self {
        records.sort_by(|a, b| {
            (a.index, a.kind, a.agent, a.msg_id).cmp(&(b.index, b.kind, b.agent, b.msg_id))
        });
        Self { n, horizon, records }
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.records.iter().filter(|r| r.kind == kind).count()
    }
}

/// Rebuilds the discrete schedule from a log. Message delays are the
/// receiver's processing index minus the sender's index; declared bounds
/// are the observed maxima.
pub fn reconstruct_schedule(log: &EventLog) -> Result<Schedule> {
    let n = log.n;
    let horizon = log.horizon;
    if horizon == 0 {
        return Err(Error::IncompleteLog("log has no indices".into()));
    }
    let mut active = vec![Vec::new(); horizon];
    let mut sends: HashMap<u64, (usize, usize, usize)> = HashMap::new();
    let mut delivers: HashMap<u64, (usize, usize, usize)> = HashMap::new();
    for r in &log.records {
        if r.agent >= n {
            return Err(Error::IndexOutOfRange { index: r.agent, n });
        }
        match r.kind {
            EventKind::Activation => {
                if r.index >= horizon {
                    return Err(Error::IncompleteLog(format!(
                        "activation at index {} beyond horizon {horizon}",
                        r.index
                    )));
                }
                active[r.index].push(r.agent);
            }
            EventKind::Send | EventKind::Deliver => {
                let id = r
                    .msg_id
                    .ok_or_else(|| Error::IncompleteLog(format!("{} event without message id", r.kind)))?;
                let peer = r
                    .peer
                    .ok_or_else(|| Error::IncompleteLog(format!("{} event without peer", r.kind)))?;
                let table = if r.kind == EventKind::Send { &mut sends } else { &mut delivers };
                if table.insert(id, (r.index, r.agent, peer)).is_some() {
                    return Err(Error::IncompleteLog(format!("duplicate {} for message {id}", r.kind)));
                }
            }
        }
    }

    let mut delays = vec![DelayMap::new(); horizon];
    let mut max_delay = 0;
    for (id, &(k, from, to)) in &sends {
        let &(k_r, receiver, sender) = delivers
            .get(id)
            .ok_or_else(|| Error::IncompleteLog(format!("message {id} sent at index {k} was never delivered")))?;
        if receiver != to || sender != from {
            return Err(Error::IncompleteLog(format!("message {id} endpoints disagree")));
        }
        if k_r < k || k >= horizon {
            return Err(Error::IncompleteLog(format!(
                "message {id} delivered at {k_r} but sent at {k}"
            )));
        }
        let r = k_r - k;
        max_delay = max_delay.max(r);
        if delays[k].insert((from, to), r).is_some() {
            return Err(Error::IncompleteLog(format!(
                "two messages v{}->v{} at index {k}",
                from + 1,
                to + 1
            )));
        }
    }
    if let Some(id) = delivers.keys().find(|id| !sends.contains_key(id)) {
        return Err(Error::IncompleteLog(format!("message {id} delivered but never sent")));
    }

    let mut last = vec![None::<usize>; n];
    let mut max_gap = 1;
    for (k, set) in active.iter().enumerate() {
        for &i in set {
            if let Some(prev) = last[i] {
                max_gap = max_gap.max(k - prev);
            }
            last[i] = Some(k);
        }
    }
    Schedule::new(n, max_gap, max_delay, 0, active, delays)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThreadedConfig {
    /// Most activations any agent performs, index 0 included.
    pub budget: usize,
    /// Extra wall-time per iteration for each agent (empty for none).
    pub straggler_delays: Vec<Duration>,
    /// Random extra sleep in `[0, jitter)` per iteration.
    pub jitter: Duration,
    pub tau_proc_cap: Option<usize>,
    /// Inbox slots per agent; defaults to the most messages the agent can
    /// ever receive, so overflow only happens with an explicit setting.
    pub inbox_capacity: Option<usize>,
    /// A worker that cannot make progress for this long reports a deadlock.
    pub watchdog: Duration,
    pub seed: u64,
}

impl Default for ThreadedConfig {
    fn default() -> Self {
        Self {
            budget: 100,
            straggler_delays: Vec::new(),
            jitter: Duration::ZERO,
            tau_proc_cap: None,
            inbox_capacity: None,
            watchdog: Duration::from_secs(30),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ThreadedRun {
    pub log: EventLog,
    pub schedule: Schedule,
    pub x0: DMatrix<f64>,
    /// Resident numerators and weights of the real agents.
    pub final_x: DMatrix<f64>,
    pub final_y: DVector<f64>,
    pub final_z: DMatrix<f64>,
    /// Mass still queued at the end.
    pub in_flight_x: DVector<f64>,
    pub in_flight_y: f64,
    /// `sum` of every applied `alpha * gradient`.
    pub applied_gradient: DVector<f64>,
    pub final_xbar: DVector<f64>,
    pub iterations: Vec<usize>,
    /// `K` used by constant step-size kinds, fixed before the run as
    /// `1 + n (budget - 1)` unless the policy sets its own.
    pub step_horizon: usize,
}

impl ThreadedRun {
    /// Simulator run on the reconstructed schedule with the step sizes the
    /// workers used.
    pub fn replay(
        &self,
        g: &ReferenceGraph,
        objs: &[Objective],
        policy: &StepSizePolicy,
        opts: AgpOptions,
    ) -> Result<AgpRun> {
        let ag = AugmentedGraph::new(g.clone(), self.schedule.tau_msg_max());
        let policy = policy.clone().with_horizon(self.step_horizon);
        run_agp(&ag, &self.schedule, objs, &self.x0, &policy, opts)
    }

    /// Largest deviation from `1^T x + in-flight = 1^T x0 - applied` and
    /// `1^T y + in-flight = n`.
    pub fn conservation_residual(&self) -> f64 {
        let n = self.final_y.len() as f64;
        let resident = self.final_x.row_sum().transpose();
        let expected = self.x0.row_sum().transpose() - &self.applied_gradient;
        let dx = (resident + &self.in_flight_x - expected).amax();
        let dy = (self.final_y.sum() + self.in_flight_y - n).abs();
        dx.max(dy)
    }
}

#[derive(Debug, Clone)]
struct Message {
    id: u64,
    from: usize,
    index: usize,
    x: Vec<f64>,
    y: f64,
}

fn digest(x: &[f64], y: f64) -> u64 {
    let mut h = DefaultHasher::new();
    for v in x {
        v.to_bits().hash(&mut h);
    }
    y.to_bits().hash(&mut h);
    h.finish()
}

struct CoordState {
    next_index: usize,
    done_with_zero: usize,
    last: Vec<usize>,
    finished: Vec<bool>,
    stopping: bool,
    aborted: Option<Error>,
}

struct Coordinator {
    n: usize,
    cap: Option<usize>,
    watchdog: Duration,
    state: Mutex<CoordState>,
    cv: Condvar,
}

impl Coordinator {
    fn new(n: usize, budget: usize, cap: Option<usize>, watchdog: Duration) -> Self {
        Self {
            n,
            cap,
            watchdog,
            state: Mutex::new(CoordState {
                next_index: 1,
                done_with_zero: 0,
                last: vec![0; n],
                finished: vec![budget <= 1; n],
                stopping: false,
                aborted: None,
            }),
            cv: Condvar::new(),
        }
    }

    fn abort(&self, err: Error) {
        let mut st = self.state.lock().expect("coordinator lock");
        st.aborted.get_or_insert(err);
        self.cv.notify_all();
    }

    fn request_stop(&self) {
        let mut st = self.state.lock().expect("coordinator lock");
        st.stopping = true;
        self.cv.notify_all();
    }

    fn finish_zero(&self) {
        let mut st = self.state.lock().expect("coordinator lock");
        st.done_with_zero += 1;
        self.cv.notify_all();
    }

    fn admissible(&self, st: &CoordState, agent: usize, is_final: bool) -> bool {
        if st.done_with_zero < self.n {
            return false;
        }
        let Some(cap) = self.cap else { return true };
        let k = st.next_index;
        let mut deadlines: Vec<usize> = (0..self.n)
            .filter_map(|j| {
                if j == agent {
                    (!is_final).then_some(k + cap)
                } else {
                    (!st.finished[j]).then_some(st.last[j] + cap)
                }
            })
            .collect();
        deadlines.sort_unstable();
        deadlines.iter().enumerate().all(|(m, &dl)| dl > k + m)
    }

    /// Blocks until `agent` may take the next index, then returns it, or
    /// `None` once the run is stopping.
    fn admit(&self, agent: usize, is_final: bool) -> Result<Option<usize>> {
        let mut st = self.state.lock().expect("coordinator lock");
        let mut waited_since = Instant::now();
        let mut seen_index = st.next_index;
        loop {
            if let Some(e) = &st.aborted {
                return Err(e.clone());
            }
            if st.stopping {
                return Ok(None);
            }
            if self.admissible(&st, agent, is_final) {
                let k = st.next_index;
                st.next_index += 1;
                st.last[agent] = k;
                st.finished[agent] = is_final;
                self.cv.notify_all();
                return Ok(Some(k));
            }
            if st.next_index != seen_index {
                seen_index = st.next_index;
                waited_since = Instant::now();
            }
            let remaining = self.watchdog.saturating_sub(waited_since.elapsed());
            if remaining.is_zero() {
                let err = Error::Deadlock(format!(
                    "agent v{} waited {:?} without any progress at index {}",
                    agent + 1,
                    self.watchdog,
                    st.next_index
                ));
                st.aborted.get_or_insert(err.clone());
                self.cv.notify_all();
                return Err(err);
            }
            st = self.cv.wait_timeout(st, remaining).expect("coordinator lock").0;
        }
    }

    fn horizon(&self) -> usize {
        self.state.lock().expect("coordinator lock").next_index
    }
}

struct WorkerOutput {
    x: Vec<f64>,
    y: f64,
    pending: Vec<Message>,
    events: Vec<EventRecord>,
    applied: Vec<f64>,
    iterations: usize,
}

struct Worker<'a> {
    id: usize,
    g: &'a ReferenceGraph,
    obj: &'a Objective,
    x: Vec<f64>,
    y: f64,
    budget: usize,
    delay: Duration,
    jitter: Duration,
    rng: ChaCha8Rng,
    inbox: Receiver<Message>,
    outboxes: Vec<(usize, Sender<Message>)>,
    capacity: usize,
    steps: &'a crate::agp::ResolvedSteps,
    coord: &'a Coordinator,
    start: Instant,
}

impl Worker<'_> {
    fn run(mut self) -> Result<WorkerOutput> {
        let d = self.x.len();
        let mut pending: Vec<Message> = Vec::new();
        let mut events = Vec::new();
        let mut applied = vec![0.0; d];
        let mut seq: u64 = 0;
        let mut iterations = 0;
        let share = 1.0 / self.g.out_degree(self.id) as f64;
        for iter in 0..self.budget {
            let k = if iter == 0 {
                0
            } else {
                self.pause();
                match self.coord.admit(self.id, iter + 1 == self.budget)? {
                    Some(k) => k,
                    None => break,
                }
            };
            iterations += 1;
            let now = |start: Instant| start.elapsed().as_secs_f64() * 1e3;
            events.push(EventRecord {
                index: k,
                wall_ms: now(self.start),
                agent: self.id,
                kind: EventKind::Activation,
                msg_id: None,
                peer: None,
                digest: digest(&self.x, self.y),
            });

            // Local computation.
            let z = DVector::from_iterator(d, self.x.iter().map(|v| v / self.y));
            let grad = self.obj.gradient(&z)?;
            let alpha = self.steps.alpha(self.id, iter + 1);
            for c in 0..d {
                self.x[c] -= alpha * grad[c];
                applied[c] += alpha * grad[c];
            }

            // Asynchronous gossip: push shares, then absorb what has arrived.
            for (to, tx) in &self.outboxes {
                let msg = Message {
                    id: ((self.id as u64) << 32) | seq,
                    from: self.id,
                    index: k,
                    x: self.x.iter().map(|v| v * share).collect(),
                    y: self.y * share,
                };
                seq += 1;
                events.push(EventRecord {
                    index: k,
                    wall_ms: now(self.start),
                    agent: self.id,
                    kind: EventKind::Send,
                    msg_id: Some(msg.id),
                    peer: Some(*to),
                    digest: digest(&msg.x, msg.y),
                });
                match tx.try_send(msg) {
                    Ok(()) => {}
                    Err(TrySendError::Full(_)) => {
                        return Err(Error::QueueOverflow {
                            agent: *to,
                            capacity: self.capacity,
                        })
                    }
                    Err(TrySendError::Disconnected(_)) => {
                        return Err(Error::Deadlock(format!("inbox of v{} closed", to + 1)))
                    }
                }
            }
            pending.extend(self.inbox.try_iter());
            for v in self.x.iter_mut() {
                *v *= share;
            }
            self.y *= share;
            let (ready, later): (Vec<_>, Vec<_>) = pending.into_iter().partition(|m| m.index < k);
            pending = later;
            for msg in ready {
                for (xv, mv) in self.x.iter_mut().zip(&msg.x) {
                    *xv += mv;
                }
                self.y += msg.y;
                events.push(EventRecord {
                    index: k,
                    wall_ms: now(self.start),
                    agent: self.id,
                    kind: EventKind::Deliver,
                    msg_id: Some(msg.id),
                    peer: Some(msg.from),
                    digest: digest(&msg.x, msg.y),
                });
            }
            if iter == 0 {
                self.coord.finish_zero();
            }
        }
        if iterations == self.budget {
            self.coord.request_stop();
        }
        Ok(WorkerOutput {
            x: self.x,
            y: self.y,
            pending,
            events,
            applied,
            iterations,
        })
    }

    fn pause(&mut self) {
        let mut total = self.delay;
        if !self.jitter.is_zero() {
            total += self.jitter.mul_f64(self.rng.random::<f64>());
        }
        if !total.is_zero() {
            thread::sleep(total);
        }
    }
}

/// Runs every agent on its own thread until it has used its local budget.
pub fn run_threaded(
    g: &ReferenceGraph,
    objs: &[Objective],
    x0: &DMatrix<f64>,
    policy: &StepSizePolicy,
    config: &ThreadedConfig,
) -> Result<ThreadedRun> {
    let n = g.n();
    if objs.len() != n || x0.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "graph has {n} agents, objectives {}, initial state {} rows",
            objs.len(),
            x0.nrows()
        )));
    }
    if objs.iter().any(|o| o.dim() != x0.ncols()) {
        return Err(Error::DimensionMismatch("objective and state widths differ".into()));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial state".into()));
    }
    if config.budget == 0 {
        return Err(Error::InvalidRuntimeConfig("budget must be positive".into()));
    }
    if !config.straggler_delays.is_empty() && config.straggler_delays.len() != n {
        return Err(Error::InvalidRuntimeConfig(format!(
            "{} straggler delays for {n} agents",
            config.straggler_delays.len()
        )));
    }
    if let Some(cap) = config.tau_proc_cap {
        if cap < n {
            return Err(Error::InvalidRuntimeConfig(format!(
                "tau_proc_cap {cap} is below the agent count {n}; one activation per index needs at least {n}"
            )));
        }
    }
    if config.inbox_capacity == Some(0) {
        return Err(Error::InvalidRuntimeConfig("inbox capacity must be positive".into()));
    }
    if policy.kind.needs_schedule() {
        return Err(Error::InvalidPolicy(format!(
            "{} needs the schedule in advance, which a threaded run cannot know",
            policy.kind.name()
        )));
    }
    let step_horizon = policy.horizon.unwrap_or(1 + n * (config.budget - 1));
    let steps = policy.resolve_without_schedule(n, step_horizon)?;
    let d = x0.ncols();

    let capacities: Vec<usize> = (0..n)
        .map(|j| {
            config
                .inbox_capacity
                .unwrap_or((g.in_degree(j) - 1) * config.budget + 1)
        })
        .collect();
    let (txs, rxs): (Vec<_>, Vec<_>) = capacities.iter().map(|&c| bounded::<Message>(c)).unzip();
    let coord = Coordinator::new(n, config.budget, config.tau_proc_cap, config.watchdog);
    let start = Instant::now();

    let outputs: Vec<Result<WorkerOutput>> = thread::scope(|scope| {
        let handles: Vec<_> = (0..n)
            .map(|i| {
                let worker = Worker {
                    id: i,
                    g,
                    obj: &objs[i],
                    x: x0.row(i).iter().copied().collect(),
                    y: 1.0,
                    budget: config.budget,
                    delay: config.straggler_delays.get(i).copied().unwrap_or(Duration::ZERO),
                    jitter: config.jitter,
                    rng: ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(i as u64)),
                    inbox: rxs[i].clone(),
                    outboxes: g
                        .out_neighbors(i)
                        .iter()
                        .filter(|&&j| j != i)
                        .map(|&j| (j, txs[j].clone()))
                        .collect(),
                    capacity: capacities[i],
                    steps: &steps,
                    coord: &coord,
                    start,
                };
                let coord = &coord;
                scope.spawn(move || {
                    let out = worker.run();
                    if let Err(e) = &out {
                        coord.abort(e.clone());
                    }
                    out
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Deadlock("worker panicked".into()))))
            .collect()
    });

    let mut results = Vec::with_capacity(n);
    let mut first_err = None;
    for out in outputs {
        match out {
            Ok(o) => results.push(o),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_err {
        // The first abort is the root cause; later errors are its echoes.
        let root = coord.state.lock().expect("coordinator lock").aborted.clone();
        return Err(root.unwrap_or(e));
    }
    let horizon_seen = coord.horizon();

    let mut records = Vec::new();
    let mut final_x = DMatrix::zeros(n, d);
    let mut final_y = DVector::zeros(n);
    let mut applied = DVector::zeros(d);
    let mut in_flight_x = DVector::zeros(d);
    let mut in_flight_y = 0.0;
    let mut iterations = Vec::with_capacity(n);
    let end_ms = start.elapsed().as_secs_f64() * 1e3;
    for (i, mut out) in results.into_iter().enumerate() {
        out.pending.extend(rxs[i].try_iter());
        for msg in &out.pending {
            for c in 0..d {
                in_flight_x[c] += msg.x[c];
            }
            in_flight_y += msg.y;
            records.push(EventRecord {
                index: horizon_seen,
                wall_ms: end_ms,
                agent: i,
                kind: EventKind::Deliver,
                msg_id: Some(msg.id),
                peer: Some(msg.from),
                digest: digest(&msg.x, msg.y),
            });
        }
        for c in 0..d {
            final_x[(i, c)] = out.x[c];
            applied[c] += out.applied[c];
        }
        final_y[i] = out.y;
        iterations.push(out.iterations);
        records.extend(out.events);
    }
    let log = EventLog::new(n, horizon_seen, records);
    let schedule = reconstruct_schedule(&log)?;
    let final_z = DMatrix::from_fn(n, d, |i, c| final_x[(i, c)] / final_y[i]);
    let final_xbar = (final_x.row_sum().transpose() + &in_flight_x) / n as f64;
    Ok(ThreadedRun {
        log,
        schedule,
        x0: x0.clone(),
        final_x,
        final_y,
        final_z,
        in_flight_x,
        in_flight_y,
        applied_gradient: applied,
        final_xbar,
        iterations,
        step_horizon,
    })
}

/// Per-index activation counts of a log, for quick summaries.
pub fn activations_per_agent(log: &EventLog) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    for r in log.records.iter().filter(|r| r.kind == EventKind::Activation) {
        *out.entry(r.agent).or_insert(0) += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::QuadraticObjective;
    use crate::schedule::verify_bounds;

    fn rec(index: usize, agent: usize, kind: EventKind, msg: Option<(u64, usize)>) -> EventRecord {
        EventRecord {
            index,
            wall_ms: 0.0,
            agent,
            kind,
            msg_id: msg.map(|m| m.0),
            peer: msg.map(|m| m.1),
            digest: 0,
        }
    }

    #[test]
    fn lockstep_log_is_semi_synchronous() {
        let g = ReferenceGraph::complete(2).unwrap();
        let mut records = Vec::new();
        let mut id = 0;
        for k in 0..5 {
            for i in 0..2 {
                records.push(rec(k, i, EventKind::Activation, None));
                records.push(rec(k, i, EventKind::Send, Some((id, 1 - i))));
                records.push(rec(k + 1, 1 - i, EventKind::Deliver, Some((id, i))));
                id += 1;
            }
        }
        let log = EventLog::new(2, 5, records);
        let s = reconstruct_schedule(&log).unwrap();
        for k in 0..5 {
            assert_eq!(s.active(k), &[0, 1]);
            assert!(s.delays(k).values().all(|&r| r <= 1));
        }
        assert_eq!(s.tau_proc_max(), 1);
        assert!(verify_bounds(&s, &g).ok);
    }

    #[test]
    fn delay_is_index_difference() {
        let records = vec![
            rec(0, 0, EventKind::Activation, None),
            rec(0, 1, EventKind::Activation, None),
            rec(5, 0, EventKind::Activation, None),
            rec(5, 0, EventKind::Send, Some((7, 1))),
            rec(8, 1, EventKind::Activation, None),
            rec(8, 1, EventKind::Deliver, Some((7, 0))),
        ];
        let s = reconstruct_schedule(&EventLog::new(2, 9, records)).unwrap();
        assert_eq!(s.delay(5, 0, 1), Some(3));
        assert_eq!(s.delay(5, 0, 0), Some(0));
    }

    #[test]
    fn undelivered_send_is_incomplete() {
        let records = vec![
            rec(0, 0, EventKind::Activation, None),
            rec(0, 0, EventKind::Send, Some((1, 1))),
        ];
        assert!(matches!(
            reconstruct_schedule(&EventLog::new(2, 1, records)),
            Err(Error::IncompleteLog(_))
        ));
    }

    #[test]
    fn single_agent_logs_only_activations() {
        let g = ReferenceGraph::new(1, &[], true).unwrap();
        let objs: Vec<Objective> = vec![QuadraticObjective::scalar(2.0, 1.0).unwrap().into()];
        let x0 = DMatrix::from_element(1, 1, 3.0);
        let cfg = ThreadedConfig {
            budget: 10,
            ..Default::default()
        };
        let run = run_threaded(&g, &objs, &x0, &StepSizePolicy::diminishing(0.2, 0.6), &cfg).unwrap();
        assert_eq!(run.log.count(EventKind::Activation), 10);
        assert_eq!(run.log.records.len(), 10);
        let mut x: f64 = 3.0;
        for c in 1..=10 {
            x -= 0.2 / (c as f64).powf(0.6) * 2.0 * (x - 1.0);
        }
        assert!((run.final_xbar[0] - x).abs() < 1e-13);
    }

    #[test]
    fn config_validation() {
        let g = ReferenceGraph::directed_ring(4).unwrap();
        let objs: Vec<Objective> = (0..4)
            .map(|i| QuadraticObjective::scalar(1.0, i as f64).unwrap().into())
            .collect();
        let x0 = DMatrix::zeros(4, 1);
        let policy = StepSizePolicy::diminishing(0.1, 0.6);
        let low_cap = ThreadedConfig {
            tau_proc_cap: Some(3),
            ..Default::default()
        };
        assert!(matches!(
            run_threaded(&g, &objs, &x0, &policy, &low_cap),
            Err(Error::InvalidRuntimeConfig(_))
        ));
        let kr = StepSizePolicy::new(crate::agp::StepKind::KnownRatesConstant, 0.1, 0.5);
        assert!(matches!(
            run_threaded(&g, &objs, &x0, &kr, &ThreadedConfig::default()),
            Err(Error::InvalidPolicy(_))
        ));
    }

    #[test]
    fn tiny_inbox_overflows() {
        let g = ReferenceGraph::complete(3).unwrap();
        let objs: Vec<Objective> = (0..3)
            .map(|i| QuadraticObjective::scalar(1.0, i as f64).unwrap().into())
            .collect();
        let x0 = DMatrix::zeros(3, 1);
        let cfg = ThreadedConfig {
            budget: 50,
            inbox_capacity: Some(1),
            straggler_delays: vec![Duration::ZERO, Duration::ZERO, Duration::from_millis(5)],
            ..Default::default()
        };
        let err = run_threaded(&g, &objs, &x0, &StepSizePolicy::diminishing(0.1, 0.6), &cfg).unwrap_err();
        assert!(matches!(err, Error::QueueOverflow { capacity: 1, .. }), "{err:?}");
    }
}
