//! Activation sets and message delays for every time index.
//!
//! Index 0 is special: every agent is treated as active there, so the local
//! iteration counter starts at one and `pi(i, 1) = 0`.
//!
//! Delays follow the effective-delay convention. A message sent by `i` at
//! index `k` with delay `r` is absorbed by `j` during `j`'s activation at
//! `k + r`, so `j` must be active at `k + r` unless that index lies beyond
//! the horizon. Generated schedules always satisfy this alignment, which is
//! what makes the matrix and buffer formulations of the optimizer agree.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::topology::{build_consensus_matrix, AugmentedGraph, ConsensusMatrix, DelayMap, ReferenceGraph};
use crate::{Error, Result};

const HEADER: &str = "# gradpush schedule v1";

/// How activations are generated.
#[derive(Debug, Clone, PartialEq)]
pub enum SchedulePolicy {
    /// Every agent active at every index.
    SemiSynchronous,
    /// Each agent activates independently with the given probability, and is
    /// forced active whenever its gap would otherwise exceed the bound.
    UniformRandom { activation_prob: f64 },
    /// Agent `i` completes one iteration every `multipliers[i]` ticks of a
    /// shared clock. A barrier stops any agent from running more than
    /// `tau_proc_max` indices ahead of an agent that has not yet finished.
    RateRatio(Vec<f64>),
}

impl SchedulePolicy {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SemiSynchronous => "semi_synchronous",
            Self::UniformRandom { .. } => "uniform_random",
            Self::RateRatio(_) => "rate_ratio",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    n: usize,
    tau_proc_max: usize,
    tau_msg_max: usize,
    seed: u64,
    active: Vec<Vec<usize>>,
    delays: Vec<DelayMap>,
    activations: Vec<Vec<usize>>,
}

impl Schedule {
    /// Assembles a schedule from explicit activation sets and delay maps.
    /// Only structural checks are made here; bound checks live in
    /// [`verify_bounds`].
    pub fn new(
        n: usize,
        tau_proc_max: usize,
        tau_msg_max: usize,
        seed: u64,
        mut active: Vec<Vec<usize>>,
        delays: Vec<DelayMap>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        if active.len() != delays.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} activation sets but {} delay maps",
                active.len(),
                delays.len()
            )));
        }
        let mut clean = Vec::with_capacity(delays.len());
        for (set, map) in active.iter_mut().zip(delays) {
            set.sort_unstable();
            set.dedup();
            if let Some(&i) = set.iter().find(|&&i| i >= n) {
                return Err(Error::IndexOutOfRange { index: i, n });
            }
            let mut kept = DelayMap::new();
            for ((i, j), r) in map {
                if i >= n || j >= n {
                    return Err(Error::IndexOutOfRange { index: i.max(j), n });
                }
                if i == j {
                    if r != 0 {
                        return Err(Error::NonzeroSelfDelay { agent: i, delay: r });
                    }
                    continue;
                }
                kept.insert((i, j), r);
            }
            clean.push(kept);
        }
        let mut activations = vec![Vec::new(); n];
        for (k, set) in active.iter().enumerate() {
            for &i in set {
                activations[i].push(k);
            }
        }
        Ok(Self {
            n,
            tau_proc_max,
            tau_msg_max,
            seed,
            active,
            delays: clean,
            activations,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of time indices `K`.
    pub fn horizon(&self) -> usize {
        self.active.len()
    }

    pub fn tau_proc_max(&self) -> usize {
        self.tau_proc_max
    }

    pub fn tau_msg_max(&self) -> usize {
        self.tau_msg_max
    }

    /// `tau_msg_max + tau_proc_max - 1`.
    pub fn tau_bar(&self) -> usize {
        (self.tau_msg_max + self.tau_proc_max).saturating_sub(1)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Sorted activation set at index `k`.
    pub fn active(&self, k: usize) -> &[usize] {
        &self.active[k]
    }

    pub fn is_active(&self, i: usize, k: usize) -> bool {
        self.active[k].binary_search(&i).is_ok()
    }

    /// Delays of messages sent at index `k`, self-loops omitted.
    pub fn delays(&self, k: usize) -> &DelayMap {
        &self.delays[k]
    }

    /// Delay of `i -> j` at index `k`; self-messages always have delay 0.
    pub fn delay(&self, k: usize, i: usize, j: usize) -> Option<usize> {
        if i == j {
            return self.is_active(i, k).then_some(0);
        }
        self.delays[k].get(&(i, j)).copied()
    }

    /// Sorted activation indices of agent `i`.
    pub fn activations(&self, i: usize) -> &[usize] {
        &self.activations[i]
    }

    /// Most recent activation of `i` strictly before `k`, or 0 if none.
    pub fn pi(&self, i: usize, k: usize) -> usize {
        let acts = &self.activations[i];
        let pos = acts.partition_point(|&a| a < k);
        if pos == 0 {
            0
        } else {
            acts[pos - 1]
        }
    }

    /// `c_i[k]`: one for index 0 by convention plus the activations in
    /// `1..=k`.
    pub fn local_iteration_counter(&self, i: usize, k: usize) -> usize {
        let acts = &self.activations[i];
        let upto = acts.partition_point(|&a| a <= k);
        let at_zero = usize::from(acts.first() == Some(&0));
        1 + upto - at_zero
    }

    /// Consensus matrix for index `k`.
    pub fn matrix(&self, ag: &AugmentedGraph, k: usize) -> Result<ConsensusMatrix> {
        build_consensus_matrix(ag, &self.active[k], &self.delays[k])
    }

    /// Line-oriented text form; agents are written one-based.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(HEADER);
        s.push('\n');
        s.push_str(&format!(
            "n={} K={} tau_proc_max={} tau_msg_max={} seed={}\n",
            self.n,
            self.horizon(),
            self.tau_proc_max,
            self.tau_msg_max,
            self.seed
        ));
        for k in 0..self.horizon() {
            let act: Vec<String> = self.active[k].iter().map(|i| (i + 1).to_string()).collect();
            s.push_str(&format!("{k} | active: {} | delay", act.join(",")));
            for (&(i, j), r) in &self.delays[k] {
                s.push_str(&format!(" {}->{}: {r}", i + 1, j + 1));
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let perr = |line: usize, reason: &str| Error::ScheduleParse {
            line,
            reason: reason.to_string(),
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, l)) if l.trim() == HEADER => {}
            Some((no, _)) => return Err(perr(no + 1, "missing schedule header")),
            None => return Err(perr(1, "empty input")),
        }
        let (hline, header) = lines.next().ok_or_else(|| perr(2, "missing parameter line"))?;
        let (mut n, mut horizon, mut tp, mut tm, mut seed) = (None, None, None, None, None);
        for field in header.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| perr(hline + 1, "expected key=value"))?;
            let bad = || perr(hline + 1, &format!("bad value for {key}"));
            match key {
                "n" => n = Some(value.parse::<usize>().map_err(|_| bad())?),
                "K" => horizon = Some(value.parse::<usize>().map_err(|_| bad())?),
                "tau_proc_max" => tp = Some(value.parse::<usize>().map_err(|_| bad())?),
                "tau_msg_max" => tm = Some(value.parse::<usize>().map_err(|_| bad())?),
                "seed" => seed = Some(value.parse::<u64>().map_err(|_| bad())?),
                _ => return Err(perr(hline + 1, &format!("unknown key {key}"))),
            }
        }
        let (Some(n), Some(horizon), Some(tp), Some(tm), Some(seed)) = (n, horizon, tp, tm, seed) else {
            return Err(perr(hline + 1, "incomplete parameter line"));
        };

        let mut active = Vec::with_capacity(horizon);
        let mut delays = Vec::with_capacity(horizon);
        for (no, line) in lines {
            let lineno = no + 1;
            let parts: Vec<&str> = line.split('|').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(perr(lineno, "expected three '|' separated fields"));
            }
            let k: usize = parts[0].parse().map_err(|_| perr(lineno, "bad index"))?;
            if k != active.len() {
                return Err(perr(lineno, "indices must be consecutive from 0"));
            }
            let list = parts[1]
                .strip_prefix("active:")
                .ok_or_else(|| perr(lineno, "expected 'active:'"))?
                .trim();
            let mut set = Vec::new();
            for tok in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                let a: usize = tok.parse().map_err(|_| perr(lineno, "bad agent"))?;
                if a == 0 || a > n {
                    return Err(perr(lineno, "agent out of range"));
                }
                set.push(a - 1);
            }
            let rest = parts[2]
                .strip_prefix("delay")
                .ok_or_else(|| perr(lineno, "expected 'delay'"))?;
            let toks: Vec<&str> = rest.split_whitespace().collect();
            if !toks.len().is_multiple_of(2) {
                return Err(perr(lineno, "unpaired delay entry"));
            }
            let mut map = DelayMap::new();
            for pair in toks.chunks(2) {
                let edge = pair[0]
                    .strip_suffix(':')
                    .ok_or_else(|| perr(lineno, "expected 'i->j:'"))?;
                let (a, b) = edge
                    .split_once("->")
                    .ok_or_else(|| perr(lineno, "expected 'i->j:'"))?;
                let a: usize = a.parse().map_err(|_| perr(lineno, "bad sender"))?;
                let b: usize = b.parse().map_err(|_| perr(lineno, "bad receiver"))?;
                let r: usize = pair[1].parse().map_err(|_| perr(lineno, "bad delay"))?;
                if a == 0 || b == 0 || a > n || b > n {
                    return Err(perr(lineno, "agent out of range"));
                }
                map.insert((a - 1, b - 1), r);
            }
            active.push(set);
            delays.push(map);
        }
        if active.len() != horizon {
            return Err(perr(
                text.lines().count(),
                &format!("expected {horizon} index lines, found {}", active.len()),
            ));
        }
        Self::new(n, tp, tm, seed, active, delays)
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_text(s)
    }
}

/// Generates a schedule over `g` satisfying the declared bounds.
///
/// Delays are drawn uniformly from the values that respect both the bound
/// and receiver alignment. Under `UniformRandom` a receiver with no
/// feasible slot is forced active `tau_msg_max` indices later; the other
/// policies report [`Error::InfeasiblePolicy`] instead.
pub fn generate_schedule(
    g: &ReferenceGraph,
    horizon: usize,
    tau_proc_max: usize,
    tau_msg_max: usize,
    policy: &SchedulePolicy,
    seed: u64,
) -> Result<Schedule> {
    if tau_proc_max == 0 {
        return Err(Error::InfeasiblePolicy("tau_proc_max must be at least 1".into()));
    }
    if horizon == 0 {
        return Err(Error::InfeasiblePolicy("horizon must be positive".into()));
    }
    let n = g.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut act = match policy {
        SchedulePolicy::SemiSynchronous => vec![vec![true; n]; horizon],
        SchedulePolicy::UniformRandom { activation_prob } => {
            uniform_activations(n, horizon, tau_proc_max, *activation_prob, &mut rng)?
        }
        SchedulePolicy::RateRatio(m) => rate_ratio_activations(n, horizon, tau_proc_max, m)?,
    };

    let mut delays = vec![DelayMap::new(); horizon];
    let mut feasible = Vec::with_capacity(tau_msg_max + 1);
    let mut sent = vec![false; n];
    for k in 0..horizon {
        // With tau_msg_max = 0 a forced activation lands on the current index,
        // so sweep until every active agent has sent.
        sent.fill(false);
        while let Some(i) = (0..n).find(|&i| act[k][i] && !sent[i]) {
            sent[i] = true;
            for &j in g.out_neighbors(i) {
                if j == i {
                    continue;
                }
                feasible.clear();
                feasible.extend((0..=tau_msg_max).filter(|&r| k + r >= horizon || act[k + r][j]));
                if feasible.is_empty() {
                    match policy {
                        SchedulePolicy::UniformRandom { .. } => {
                            act[k + tau_msg_max][j] = true;
                            feasible.push(tau_msg_max);
                        }
                        _ => {
                            return Err(Error::InfeasiblePolicy(format!(
                                "message v{}->v{} sent at index {k} cannot reach an activation of v{} within tau_msg_max={tau_msg_max}",
                                i + 1,
                                j + 1,
                                j + 1
                            )))
                        }
                    }
                }
                let r = feasible[rng.random_range(0..feasible.len())];
                delays[k].insert((i, j), r);
            }
        }
    }

    let active = act
        .iter()
        .map(|row| (0..n).filter(|&i| row[i]).collect())
        .collect();
    Schedule::new(n, tau_proc_max, tau_msg_max, seed, active, delays)
}

fn uniform_activations(
    n: usize,
    horizon: usize,
    tau_proc_max: usize,
    p: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<bool>>> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InfeasiblePolicy(format!(
            "activation probability {p} outside (0, 1]"
        )));
    }
    let mut act = vec![vec![false; n]; horizon];
    act[0].fill(true);
    let mut last = vec![0usize; n];
    for (k, row) in act.iter_mut().enumerate().skip(1) {
        for i in 0..n {
            let draw = rng.random_bool(p);
            if draw || k - last[i] >= tau_proc_max {
                row[i] = true;
                last[i] = k;
            }
        }
    }
    Ok(act)
}

/// Event-driven barrier simulation. Agent `i` finishes an iteration every
/// `m[i]` ticks after its previous activation. At each new index the agents
/// whose gap has reached `tau_proc_max` must run, so the index jumps to the
/// latest of their completion times and everyone who has finished by then
/// (including agents held at the barrier) activates together. Otherwise the
/// index goes to the earliest pending completion.
fn rate_ratio_activations(
    n: usize,
    horizon: usize,
    tau_proc_max: usize,
    m: &[f64],
) -> Result<Vec<Vec<bool>>> {
    if m.len() != n {
        return Err(Error::InfeasiblePolicy(format!(
            "{} rate multipliers for {n} agents",
            m.len()
        )));
    }
    if let Some(bad) = m.iter().find(|v| !(v.is_finite() && **v >= 1.0)) {
        return Err(Error::InfeasiblePolicy(format!(
            "rate multiplier {bad} must be finite and at least 1"
        )));
    }
    let mut act = vec![vec![false; n]; horizon];
    act[0].fill(true);
    let mut last = vec![0usize; n];
    let mut next: Vec<f64> = m.to_vec();
    for (k, row) in act.iter_mut().enumerate().skip(1) {
        let forced = (0..n).filter(|&j| k - last[j] >= tau_proc_max);
        let t = forced
            .map(|j| next[j])
            .reduce(f64::max)
            .unwrap_or_else(|| next.iter().copied().fold(f64::INFINITY, f64::min));
        for i in 0..n {
            if next[i] <= t + 1e-9 {
                row[i] = true;
                last[i] = k;
                next[i] = t + m[i];
            }
        }
    }
    Ok(act)
}

/// A single way in which a schedule breaks its declared bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NotActiveAtStart { agent: usize },
    ProcGap { agent: usize, from: usize, to: usize, gap: usize },
    MissingDelay { k: usize, from: usize, to: usize },
    UnexpectedDelay { k: usize, from: usize, to: usize },
    DelayOutOfBounds { k: usize, from: usize, to: usize, delay: usize },
    Misaligned { k: usize, from: usize, to: usize, delay: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::NotActiveAtStart { agent } => write!(f, "agent v{} not active at index 0", agent + 1),
            Self::ProcGap { agent, from, to, gap } => write!(
                f,
                "agent v{} idle between indices {from} and {to} (gap {gap})",
                agent + 1
            ),
            Self::MissingDelay { k, from, to } => {
                write!(f, "index {k}: no delay for v{}->v{}", from + 1, to + 1)
            }
            Self::UnexpectedDelay { k, from, to } => write!(
                f,
                "index {k}: delay given for v{}->v{} which does not send",
                from + 1,
                to + 1
            ),
            Self::DelayOutOfBounds { k, from, to, delay } => write!(
                f,
                "index {k}: delay {delay} on v{}->v{} exceeds the bound",
                from + 1,
                to + 1
            ),
            Self::Misaligned { k, from, to, delay } => write!(
                f,
                "index {k}: v{}->v{} with delay {delay} lands on an index where v{} is idle",
                from + 1,
                to + 1,
                to + 1
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundsReport {
    pub ok: bool,
    pub max_observed_proc_gap: usize,
    pub max_observed_msg_delay: usize,
    pub violations: Vec<Violation>,
}

/// Checks every activation gap and message delay against the declared
/// bounds. Violations are returned as data.
pub fn verify_bounds(s: &Schedule, g: &ReferenceGraph) -> BoundsReport {
    let mut violations = Vec::new();
    let mut max_gap = 0;
    let mut max_delay = 0;
    let horizon = s.horizon();
    for i in 0..s.n() {
        let acts = s.activations(i);
        if acts.first() != Some(&0) {
            violations.push(Violation::NotActiveAtStart { agent: i });
        }
        for w in acts.windows(2) {
            let gap = w[1] - w[0];
            max_gap = max_gap.max(gap);
            if gap > s.tau_proc_max() {
                violations.push(Violation::ProcGap { agent: i, from: w[0], to: w[1], gap });
            }
        }
    }
    for k in 0..horizon {
        for &i in s.active(k) {
            for &j in g.out_neighbors(i).iter().filter(|&&j| j != i) {
                match s.delays(k).get(&(i, j)) {
                    None => violations.push(Violation::MissingDelay { k, from: i, to: j }),
                    Some(&r) => {
                        max_delay = max_delay.max(r);
                        if r > s.tau_msg_max() {
                            violations.push(Violation::DelayOutOfBounds { k, from: i, to: j, delay: r });
                        }
                        if k + r < horizon && !s.is_active(j, k + r) {
                            violations.push(Violation::Misaligned { k, from: i, to: j, delay: r });
                        }
                    }
                }
            }
        }
        for &(i, j) in s.delays(k).keys() {
            if !s.is_active(i, k) || !g.has_edge(i, j) {
                violations.push(Violation::UnexpectedDelay { k, from: i, to: j });
            }
        }
    }
    BoundsReport {
        ok: violations.is_empty(),
        max_observed_proc_gap: max_gap,
        max_observed_msg_delay: max_delay,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair() -> ReferenceGraph {
        ReferenceGraph::new(2, &[(0, 1), (1, 0)], true).unwrap()
    }

    #[test]
    fn semi_synchronous_is_always_active() {
        let g = ReferenceGraph::four_agent_example();
        let s = generate_schedule(&g, 20, 1, 2, &SchedulePolicy::SemiSynchronous, 3).unwrap();
        for k in 0..20 {
            assert_eq!(s.active(k), &[0, 1, 2, 3]);
        }
        let rep = verify_bounds(&s, &g);
        assert!(rep.ok, "{:?}", rep.violations);
        assert_eq!(rep.max_observed_proc_gap, 1);
        for i in 0..4 {
            assert_eq!(s.pi(i, 1), 0);
            for k in 1..20 {
                assert_eq!(s.pi(i, k), k - 1);
            }
            for k in 0..20 {
                assert_eq!(s.local_iteration_counter(i, k), k + 1);
            }
        }
    }

    #[test]
    fn rate_ratio_one_two() {
        let g = pair();
        let s = generate_schedule(&g, 12, 2, 1, &SchedulePolicy::RateRatio(vec![1.0, 2.0]), 0).unwrap();
        for k in 0..12 {
            assert!(s.is_active(0, k));
            assert_eq!(s.is_active(1, k), k % 2 == 0, "k={k}");
        }
        assert_eq!(s.local_iteration_counter(1, 5), 3);
        assert!(verify_bounds(&s, &g).ok);
    }

    #[test]
    fn rate_ratio_needs_a_delivery_slot() {
        let err = generate_schedule(&pair(), 12, 2, 0, &SchedulePolicy::RateRatio(vec![1.0, 2.0]), 0)
            .unwrap_err();
        assert!(matches!(err, Error::InfeasiblePolicy(_)));
    }

    #[test]
    fn rate_ratio_rejects_bad_multipliers() {
        for m in [vec![1.0], vec![1.0, 0.5], vec![1.0, f64::NAN]] {
            assert!(matches!(
                generate_schedule(&pair(), 5, 2, 1, &SchedulePolicy::RateRatio(m), 0),
                Err(Error::InfeasiblePolicy(_))
            ));
        }
    }

    #[test]
    fn barrier_caps_the_gap_of_slow_agents() {
        let g = ReferenceGraph::directed_ring(4).unwrap();
        let m = vec![1.0, 1.0, 64.0, 64.0];
        let s = generate_schedule(&g, 400, 8, 7, &SchedulePolicy::RateRatio(m), 1).unwrap();
        let rep = verify_bounds(&s, &g);
        assert!(rep.ok, "{:?}", rep.violations);
        assert_eq!(rep.max_observed_proc_gap, 8);
        let fast = s.local_iteration_counter(0, 399);
        let slow = s.local_iteration_counter(2, 399);
        assert_eq!(fast, 400);
        assert_eq!(slow, 50);
    }

    #[test]
    fn zero_message_delay_bound() {
        let g = ReferenceGraph::four_agent_example();
        let policy = SchedulePolicy::UniformRandom { activation_prob: 0.4 };
        let s = generate_schedule(&g, 200, 3, 0, &policy, 11).unwrap();
        for k in 0..200 {
            assert!(s.delays(k).values().all(|&r| r == 0));
        }
        let rep = verify_bounds(&s, &g);
        assert!(rep.ok, "{:?}", rep.violations);
    }

    #[test]
    fn pi_examples() {
        let active = vec![vec![0], vec![0], vec![], vec![0], vec![0]];
        let s = Schedule::new(1, 3, 0, 0, active, vec![DelayMap::new(); 5]).unwrap();
        assert_eq!(s.pi(0, 4), 3);
        assert_eq!(s.pi(0, 3), 1);
        assert_eq!(s.pi(0, 1), 0);
    }

    #[test]
    fn idle_agent_is_reported() {
        let g = pair();
        let mut active = vec![vec![0, 1]];
        for _ in 0..4 {
            active.push(vec![0]);
        }
        active.push(vec![0, 1]);
        let delays: Vec<DelayMap> = active
            .iter()
            .enumerate()
            .map(|(k, set)| {
                set.iter()
                    .map(|&i| ((i, 1 - i), if i == 0 && k < 5 { 5 - k } else { 0 }))
                    .collect()
            })
            .collect();
        let s = Schedule::new(2, 3, 5, 0, active, delays).unwrap();
        let rep = verify_bounds(&s, &g);
        assert!(!rep.ok);
        assert_eq!(rep.max_observed_proc_gap, 5);
        assert_eq!(rep.violations, vec![Violation::ProcGap { agent: 1, from: 0, to: 5, gap: 5 }]);
        assert!(rep.violations[0].to_string().contains("v2"));
    }

    #[test]
    fn other_violations() {
        let g = pair();
        let active = vec![vec![0], vec![0, 1]];
        let delays = vec![
            DelayMap::from([((0, 1), 0), ((1, 0), 0)]),
            DelayMap::from([((0, 1), 4)]),
        ];
        let s = Schedule::new(2, 2, 1, 0, active, delays).unwrap();
        let rep = verify_bounds(&s, &g);
        assert!(rep.violations.contains(&Violation::NotActiveAtStart { agent: 1 }));
        assert!(rep.violations.contains(&Violation::Misaligned { k: 0, from: 0, to: 1, delay: 0 }));
        assert!(rep.violations.contains(&Violation::UnexpectedDelay { k: 0, from: 1, to: 0 }));
        assert!(rep.violations.contains(&Violation::DelayOutOfBounds { k: 1, from: 0, to: 1, delay: 4 }));
        assert!(rep.violations.contains(&Violation::MissingDelay { k: 1, from: 1, to: 0 }));
    }

    #[test]
    fn text_round_trip() {
        let g = ReferenceGraph::four_agent_example();
        let policy = SchedulePolicy::UniformRandom { activation_prob: 0.5 };
        let s = generate_schedule(&g, 30, 3, 2, &policy, 5).unwrap();
        let text = s.to_text();
        assert!(text.starts_with(HEADER));
        let back: Schedule = text.parse().unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn text_errors_carry_line_numbers() {
        let bad = format!("{HEADER}\nn=2 K=1 tau_proc_max=1 tau_msg_max=0 seed=0\n0 | active: 3 | delay\n");
        assert!(matches!(
            Schedule::from_text(&bad),
            Err(Error::ScheduleParse { line: 3, .. })
        ));
        assert!(matches!(Schedule::from_text("nope"), Err(Error::ScheduleParse { line: 1, .. })));
    }

    #[test]
    fn generation_is_deterministic() {
        let g = ReferenceGraph::four_agent_example();
        let policy = SchedulePolicy::UniformRandom { activation_prob: 0.3 };
        let a = generate_schedule(&g, 50, 4, 3, &policy, 9).unwrap();
        let b = generate_schedule(&g, 50, 4, 3, &policy, 9).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        let c = generate_schedule(&g, 50, 4, 3, &policy, 10).unwrap();
        assert_ne!(a.to_text(), c.to_text());
    }
}
