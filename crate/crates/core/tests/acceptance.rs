//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so every line is printed. Pass criterion
//! numbers as arguments to run a subset, e.g.
//! `cargo test --release --test acceptance -- 1 4`.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng as _;
use rand_distr::StandardNormal;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use ltlmod_core::agent::{
    loss_and_grad, Agent, Architecture, Cache, ConditioningConfig, ConditioningMode, Network, Targets, TrainerConfig,
};
use ltlmod_core::curriculum::{CurriculumMode, CurriculumState, Scenario, ScenarioName};
use ltlmod_core::env::{Action, EnvKind, EnvState, Layout, NavAction};
use ltlmod_core::harness::{fuzz_progression, train, FuzzConfig, RunConfig, Setup, TrainOutput};
use ltlmod_core::ltl::{progress, trace_oracle, Closure, Formula, SymbolId, TruthAssignment, Verdict, DEFAULT_CLOSURE_CAP};
use ltlmod_core::mapping::{evaluate, Evaluator, MappingSpec};
use ltlmod_core::mdp::{rollout, Policy, ProductState, TaskableMdp, STEP_PENALTY};
use ltlmod_core::par::Execution;
use ltlmod_core::rng::{stream, Rng};
use ltlmod_core::scripted::WaypointPolicy;

/// Step budget shared by every arm of the ablation.
const ABLATION_STEPS: u64 = 1_500_000;
/// Shared by every ablation arm. At the default 0.01 all three arms
/// intermittently lock onto wall-pushing on fresh task-embedding rows, and
/// the seed-to-seed spread swamps the arm differences.
const ABLATION_ENTROPY: f64 = 0.03;
const SEEDS: [u64; 3] = [1, 2, 3];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn main() -> ExitCode {
    let wanted: BTreeSet<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(usize, &str, fn() -> Outcome); 9] = [
        (1, "progression matches trace oracle", progression_oracle),
        (2, "closure soundness", closure_soundness),
        (3, "reward semantics", reward_semantics),
        (4, "mapping geometry", mapping_geometry),
        (5, "FiLM identity and gradients", film_identity_and_gradients),
        (6, "curriculum state machine", curriculum_state_machine),
        (7, "training smoke", training_smoke),
        (8, "ablation direction", ablation_direction),
        (9, "determinism", determinism),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|e| outcome(false, format!("panicked: {}", panic_message(&e))));
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        println!("criterion {id} [{name}]: {verdict} ({}; {:.1}s)", result.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!result.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn panic_message(e: &Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()
}

fn setup(name: ScenarioName) -> Setup {
    Setup::new(&RunConfig::for_scenario(name)).expect("builtin scenario")
}

// ---------------------------------------------------------------- 1

fn progression_oracle() -> Outcome {
    let cfg = FuzzConfig::new(10_000, 2024);
    let start = Instant::now();
    let report = fuzz_progression(&cfg, Execution::default());
    let elapsed = start.elapsed();
    let total = report.satisfied + report.violated + report.undecided;
    let pass = report.mismatches.is_empty() && total == 10_000 && elapsed < Duration::from_secs(60);
    outcome(
        pass,
        format!(
            "{} mismatches over {total} cases (depth <= {}, symbols <= {}, trace <= {}; {} satisfied, {} violated, {} undecided) in {:.2}s",
            report.mismatches.len(),
            cfg.max_depth,
            cfg.max_symbols,
            cfg.max_trace,
            report.satisfied,
            report.violated,
            report.undecided,
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- 2

fn closure_soundness() -> Outcome {
    let s = Scenario::builtin(ScenarioName::NavS2);
    let n = s.symbols.len();
    let tasks: Vec<Formula> = s.all_levels().concat();

    let start = Instant::now();
    let closure = Closure::build(&tasks, DEFAULT_CLOSURE_CAP).expect("closure is finite");
    let build_time = start.elapsed();
    let top = s.enumerate_tasks(s.max_level).unwrap();
    let start = Instant::now();
    let top_closure = Closure::build(&top, DEFAULT_CLOSURE_CAP).expect("level-6 closure is finite");
    let top_time = start.elapsed();

    // every assignment over all symbols is a superset of the reachable ones
    let mut escapes = 0;
    let mut checked = 0;
    for c in [&closure, &top_closure] {
        for phi in c.members() {
            for mask in 0..1u64 << n {
                let sigma = TruthAssignment::from_ids((0..n).filter(|i| mask >> i & 1 == 1).map(|i| SymbolId(i as u16)));
                checked += 1;
                if !c.contains(&progress(phi, &sigma)) {
                    escapes += 1;
                }
            }
        }
    }
    let tasks_in = tasks.iter().all(|t| closure.contains(t));
    let pass = escapes == 0 && tasks_in && build_time < Duration::from_secs(10) && top_time < Duration::from_secs(10);
    outcome(
        pass,
        format!(
            "{escapes} escapes over {checked} progressions; full closure {} members in {:.3}s, level-{} closure {} members in {:.3}s",
            closure.len(),
            build_time.as_secs_f64(),
            s.max_level,
            top_closure.len(),
            top_time.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- 3

#[derive(Clone)]
struct UniformPolicy;

impl Policy for UniformPolicy {
    fn act(&mut self, mdp: &TaskableMdp, _ps: &ProductState, rng: &mut Rng) -> ltlmod_core::Result<Action> {
        Ok(match mdp.world.max_step() {
            None => Action::Nav(NavAction::from_index(rng.random_range(0..3))),
            Some(m) => Action::Inspect(std::array::from_fn(|_| rng.random_range(-m..=m))),
        })
    }
}

fn reward_semantics() -> Outcome {
    let setups = [setup(ScenarioName::NavS1), setup(ScenarioName::NavS2), setup(ScenarioName::Inspect)];
    let mut rng = stream(33, &[]);
    let mut counts = [0usize; 3];
    let mut failures = Vec::new();
    for episode in 0..1000 {
        let s = &setups[episode % 3];
        let ids: Vec<SymbolId> = s.mdp.symbols.ids().collect();
        let task = if rng.random_bool(0.3) {
            // a violable task: avoid one occurrence until another holds
            let a = ids[rng.random_range(0..ids.len())];
            let b = loop {
                let b = ids[rng.random_range(0..ids.len())];
                if b != a {
                    break b;
                }
            };
            Formula::until(Formula::neg_atom(a), Formula::atom(b))
        } else {
            let all = s.tasks_up_to(s.scenario.max_level);
            all[rng.random_range(0..all.len())].clone()
        };
        let spec_set = s.mdp.grounding.sample_spec_set(&task.symbols(), &mut rng);
        let seed = rng.random();
        let ro = if rng.random_bool(0.5) {
            rollout(&s.mdp, &mut WaypointPolicy, &task, spec_set, seed)
        } else {
            rollout(&s.mdp, &mut UniformPolicy, &task, spec_set, seed)
        }
        .expect("rollout runs");

        let trace: Vec<TruthAssignment> = ro
            .steps
            .iter()
            .map(|st| TruthAssignment::from_ids(st.satisfied.iter().map(|n| s.mdp.symbols.lookup(n).expect("known symbol"))))
            .collect();
        let (c, expected_len) = match trace_oracle(&task, &trace) {
            Verdict::Satisfied(t) => (1i64, t),
            Verdict::Violated(t) => (-1, t),
            Verdict::Unsatisfied => (0, s.mdp.horizon()),
        };
        counts[(1 - c) as usize] += 1;
        let len = ro.len();
        let ret = ro.undiscounted_return();
        let hundredths = (ret * 100.0).round() as i64;
        let exact = c as f64 - 0.01 * len as f64;
        let per_step_ok = ro.steps[..len - 1].iter().all(|st| st.reward == STEP_PENALTY);
        if len != expected_len || hundredths != 100 * c - len as i64 || (ret - exact).abs() > 1e-9 || !per_step_ok {
            failures.push(format!("episode {episode}: len {len} (oracle {expected_len}), return {ret} (expected {exact})"));
        }
    }
    outcome(
        failures.is_empty() && counts.iter().all(|&k| k > 0),
        format!(
            "{} of 1000 rollouts off ({} satisfied, {} timed out, {} violated){}",
            failures.len(),
            counts[0],
            counts[1],
            counts[2],
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    )
}

// ---------------------------------------------------------------- 4

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Closed-form verdict and its distance from the nearest decision boundary.
struct Truth {
    holds: bool,
    margin: f64,
}

fn nav_truth(layout: &Layout, base: &str, spec: &MappingSpec, x: f64, y: f64, heading: f64) -> Truth {
    if let Some(b) = layout.nav.boxes.iter().find(|b| b.name == base) {
        let r = (x - b.pos[0]).hypot(y - b.pos[1]);
        return Truth { holds: r <= layout.nav.reach_radius, margin: (r - layout.nav.reach_radius).abs() };
    }
    let l = layout.nav.letters.iter().find(|l| l.name == base).expect("letter");
    let MappingSpec::Nav2D { d, theta, r_d } = *spec else { panic!("letter without a nav spec") };
    let phi = l.normal[1].atan2(l.normal[0]) + theta.to_radians();
    let center = [l.pos[0] + d * phi.cos(), l.pos[1] + d * phi.sin()];
    let r = (x - center[0]).hypot(y - center[1]);
    let (wx, wy) = (l.pos[0] - x, l.pos[1] - y);
    let h = heading.to_radians();
    let cos = ((h.cos() * wx + h.sin() * wy) / wx.hypot(wy)).clamp(-1.0, 1.0);
    let angle = cos.acos().to_degrees();
    let tol = layout.nav.view_tolerance_deg;
    Truth { holds: r <= r_d && angle <= tol, margin: (r - r_d).abs().min((angle - tol).abs() * 1e-3) }
}

fn cone_truth(layout: &Layout, base: &str, spec: &MappingSpec, pos: [f64; 3]) -> Truth {
    let o = layout.inspect.objects.iter().find(|o| o.name == base).expect("object");
    let MappingSpec::Cone3D { d, r_c, theta, r_d } = *spec else { panic!("object without a cone spec") };
    let (a, u) = (o.axis, o.u);
    let v = [a[1] * u[2] - a[2] * u[1], a[2] * u[0] - a[0] * u[2], a[0] * u[1] - a[1] * u[0]];
    let t = theta.to_radians();
    let center = [0, 1, 2].map(|k| o.center[k] + d * a[k] + r_c * t.cos() * u[k] + r_c * t.sin() * v[k]);
    let r = dist(pos, center);
    Truth { holds: r <= r_d, margin: (r - r_d).abs() }
}

fn truth(layout: &Layout, base: &str, spec: &MappingSpec, state: &EnvState) -> Truth {
    match *state {
        EnvState::Nav { x, y, heading } => nav_truth(layout, base, spec, x, y, heading),
        EnvState::Inspect { pos } => cone_truth(layout, base, spec, pos),
    }
}

/// Center of an occurrence's region, computed from the layout.
fn region_center(layout: &Layout, base: &str, spec: &MappingSpec) -> [f64; 3] {
    match *spec {
        MappingSpec::None => {
            let b = layout.nav.boxes.iter().find(|b| b.name == base).unwrap();
            [b.pos[0], b.pos[1], 0.0]
        }
        MappingSpec::Nav2D { d, theta, .. } => {
            let l = layout.nav.letters.iter().find(|l| l.name == base).unwrap();
            let phi = l.normal[1].atan2(l.normal[0]) + theta.to_radians();
            [l.pos[0] + d * phi.cos(), l.pos[1] + d * phi.sin(), 0.0]
        }
        MappingSpec::Cone3D { d, r_c, theta, .. } => {
            let o = layout.inspect.objects.iter().find(|o| o.name == base).unwrap();
            let (a, u) = (o.axis, o.u);
            let v = [a[1] * u[2] - a[2] * u[1], a[2] * u[0] - a[0] * u[2], a[0] * u[1] - a[1] * u[0]];
            let t = theta.to_radians();
            [0, 1, 2].map(|k| o.center[k] + d * a[k] + r_c * t.cos() * u[k] + r_c * t.sin() * v[k])
        }
    }
}

/// 10,000 random (state, spec set) pairs per environment; states are drawn
/// near a random occurrence's region half of the time so both verdicts occur.
fn sampled_geometry(name: ScenarioName, rng: &mut Rng) -> (usize, usize, usize, usize) {
    let s = setup(name);
    let layout = Layout::default();
    let ids: Vec<SymbolId> = s.mdp.symbols.ids().collect();
    let (mut pos, mut neg, mut skipped, mut wrong) = (0, 0, 0, 0);
    for _ in 0..10_000 {
        let specs = s.mdp.grounding.sample_spec_set(&ids, rng);
        let focus = ids[rng.random_range(0..ids.len())];
        let base = s.mdp.symbols.base(focus);
        let c = region_center(&layout, base, specs.get(focus).unwrap());
        let state = match s.mdp.world.kind() {
            EnvKind::Nav => {
                let (x, y) = if rng.random_bool(0.5) {
                    let r = 1.5 * rng.random::<f64>().sqrt();
                    let a = rng.random_range(0.0..std::f64::consts::TAU);
                    ((c[0] + r * a.cos()).clamp(0.0, 10.0), (c[1] + r * a.sin()).clamp(0.0, 10.0))
                } else {
                    (rng.random_range(0.0..=10.0), rng.random_range(0.0..=10.0))
                };
                let anchor = Evaluator::for_symbol(base, &layout, EnvKind::Nav).unwrap().anchor();
                let toward = (anchor[1] - y).atan2(anchor[0] - x).to_degrees();
                let heading = if rng.random_bool(0.5) {
                    (toward + rng.random_range(-35.0..35.0)).rem_euclid(360.0)
                } else {
                    rng.random_range(0.0..360.0)
                };
                EnvState::Nav { x, y, heading }
            }
            EnvKind::Inspect => {
                let p = if rng.random_bool(0.5) {
                    [0, 1, 2].map(|k| (c[k] + rng.random_range(-0.2..0.2)).clamp(0.0, 1.0))
                } else {
                    [0, 1, 2].map(|_| rng.random_range(0.0..=1.0))
                };
                EnvState::Inspect { pos: p }
            }
        };
        let got = s.mdp.grounding.map_symbols(&specs, &state);
        for id in &ids {
            let t = truth(&layout, s.mdp.symbols.base(*id), specs.get(*id).unwrap(), &state);
            if t.margin < 1e-9 {
                skipped += 1;
                continue;
            }
            if t.holds {
                pos += 1;
            } else {
                neg += 1;
            }
            wrong += usize::from(t.holds != got.contains(*id));
        }
    }
    (pos, neg, skipped, wrong)
}

/// Points exactly on, just inside and just outside region boundaries. The
/// layout uses dyadic coordinates so the boundary points are exact.
fn boundary_cases(rng: &mut Rng) -> (usize, usize) {
    let mut layout = Layout::default();
    layout.nav.reach_radius = 0.75;
    layout.inspect.spec_ranges.r_d = 0.125;
    layout.inspect.objects[0].center = [0.25, 0.5, 0.625];
    layout.inspect.objects[1].center = [0.5, 0.75, 0.375];
    layout.inspect.objects[2].center = [0.75, 0.375, 0.625];
    let eps = 1e-9;
    let (mut cases, mut wrong) = (0, 0);
    let mut check = |e: &Evaluator, spec: &MappingSpec, state: EnvState, expect: bool| {
        cases += 1;
        wrong += usize::from(evaluate(e, spec, &state) != expect);
    };
    for _ in 0..1000 {
        // letters: centre d along the wall normal, agent offset by r_d along each axis
        for l in &layout.nav.letters {
            let e = Evaluator::for_symbol(&l.name, &layout, EnvKind::Nav).unwrap();
            let d = rng.random_range(256..=1024) as f64 / 256.0;
            let r_d = layout.nav.spec_ranges.r_d;
            let spec = MappingSpec::Nav2D { d, theta: 0.0, r_d };
            let cx = l.pos[0] + d * l.normal[0];
            let cy = l.pos[1];
            let out = l.normal[0];
            for (dx, dy) in [(out, 0.0), (0.0, 1.0), (0.0, -1.0)] {
                for (k, expect) in [(0.0, true), (-eps, true), (eps, false)] {
                    let x = cx + dx * (r_d + k);
                    let y = cy + dy * (r_d + k);
                    let heading = (l.pos[1] - y).atan2(l.pos[0] - x).to_degrees().rem_euclid(360.0);
                    check(&e, &spec, EnvState::Nav { x, y, heading }, expect);
                }
            }
        }
        for b in &layout.nav.boxes {
            let e = Evaluator::for_symbol(&b.name, &layout, EnvKind::Nav).unwrap();
            let r = layout.nav.reach_radius;
            let dir = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)][rng.random_range(0..4)];
            for (k, expect) in [(0.0, true), (-eps, true), (eps, false)] {
                let state = EnvState::Nav { x: b.pos[0] + dir.0 * (r + k), y: b.pos[1] + dir.1 * (r + k), heading: 0.0 };
                check(&e, &MappingSpec::None, state, expect);
            }
        }
        for o in &layout.inspect.objects {
            let e = Evaluator::for_symbol(&o.name, &layout, EnvKind::Inspect).unwrap();
            let d = rng.random_range(13..=38) as f64 / 64.0;
            let r_c = rng.random_range(0..=19) as f64 / 64.0;
            let r_d = layout.inspect.spec_ranges.r_d;
            let spec = MappingSpec::Cone3D { d, r_c, theta: 0.0, r_d };
            let c: [f64; 3] = [0, 1, 2].map(|k| o.center[k] + d * o.axis[k] + r_c * o.u[k]);
            let axis = rng.random_range(0..3);
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            for (k, expect) in [(0.0, true), (-eps, true), (eps, false)] {
                let mut p = c;
                p[axis] += sign * (r_d + k);
                check(&e, &spec, EnvState::Inspect { pos: p }, expect);
            }
        }
    }
    (cases, wrong)
}

/// Rotating the spec angle and the agent rigidly about the letter keeps the
/// verdict.
fn rotations(rng: &mut Rng) -> (usize, usize, usize) {
    let layout = Layout::default();
    let (mut checked, mut skipped, mut wrong) = (0, 0, 0);
    for _ in 0..1000 {
        let l = &layout.nav.letters[rng.random_range(0..layout.nav.letters.len())];
        let e = Evaluator::for_symbol(&l.name, &layout, EnvKind::Nav).unwrap();
        let r_d = layout.nav.spec_ranges.r_d;
        let (d, theta) = (rng.random_range(1.0..=4.0), rng.random_range(-60.0..=60.0));
        let c = region_center(&layout, &l.name, &MappingSpec::Nav2D { d, theta, r_d });
        let r = 1.3 * rng.random::<f64>().sqrt();
        let a = rng.random_range(0.0..std::f64::consts::TAU);
        let (x, y) = (c[0] + r * a.cos(), c[1] + r * a.sin());
        let toward = (l.pos[1] - y).atan2(l.pos[0] - x).to_degrees();
        let heading = (toward + rng.random_range(-30.0..30.0)).rem_euclid(360.0);
        let alpha: f64 = rng.random_range(-180.0..180.0);
        let (sa, ca) = alpha.to_radians().sin_cos();
        let (px, py) = (x - l.pos[0], y - l.pos[1]);
        let rotated = EnvState::Nav {
            x: l.pos[0] + ca * px - sa * py,
            y: l.pos[1] + sa * px + ca * py,
            heading: (heading + alpha).rem_euclid(360.0),
        };
        let spec = MappingSpec::Nav2D { d, theta, r_d };
        let spec_rot = MappingSpec::Nav2D { d, theta: theta + alpha, r_d };
        let before = EnvState::Nav { x, y, heading };
        if nav_truth(&layout, &l.name, &spec, x, y, heading).margin < 1e-7 {
            skipped += 1;
            continue;
        }
        checked += 1;
        wrong += usize::from(evaluate(&e, &spec, &before) != evaluate(&e, &spec_rot, &rotated));
    }
    (checked, skipped, wrong)
}

fn mapping_geometry() -> Outcome {
    let mut rng = stream(44, &[]);
    let nav = sampled_geometry(ScenarioName::NavS2, &mut rng);
    let inspect = sampled_geometry(ScenarioName::Inspect, &mut rng);
    let (b_cases, b_wrong) = boundary_cases(&mut rng);
    let (r_checked, r_skipped, r_wrong) = rotations(&mut rng);
    let balanced = |(p, n, _, _): (usize, usize, usize, usize)| p >= 1000 && n >= 1000;
    let pass = nav.3 == 0
        && inspect.3 == 0
        && balanced(nav)
        && balanced(inspect)
        && b_wrong == 0
        && r_wrong == 0
        && r_checked >= 990;
    outcome(
        pass,
        format!(
            "nav {} wrong of {}+/{}- ({} on boundary); inspect {} wrong of {}+/{}- ({} on boundary); boundary {b_wrong} wrong of {b_cases}; rotations {r_wrong} wrong of {r_checked} ({r_skipped} on boundary)",
            nav.3, nav.0, nav.1, nav.2, inspect.3, inspect.0, inspect.1, inspect.2
        ),
    )
}

// ---------------------------------------------------------------- 5

fn random_batch(arch: &Architecture, rows: usize, rng: &mut Rng) -> Cache {
    let mut cache = Cache::default();
    for _ in 0..rows {
        let obs: Vec<f64> = (0..arch.obs_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let spec: Vec<f64> = (0..arch.spec_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        cache.push(&obs, &spec, rng.random_range(0..arch.n_tasks));
    }
    cache
}

/// Returns the largest deviation between modulated-with-identity and
/// unmodulated outputs.
fn identity_gap(agent: &Agent, rng: &mut Rng) -> f64 {
    let net = &agent.net;
    let mut p: Vec<f64> = agent.params.iter().map(|v| v + 0.1 * rng.sample::<f64, _>(StandardNormal)).collect();
    let w = net.block("spec_encoder.w").unwrap();
    p[w.offset..w.offset + w.len].fill(0.0);
    let b = net.block("spec_encoder.b").unwrap();
    let h = net.arch.hidden;
    for (j, v) in p[b.offset..b.offset + b.len].iter_mut().enumerate() {
        // alpha blocks of width h alternate with beta blocks
        *v = if (j / h) % 2 == 0 { 1.0 } else { 0.0 };
    }
    let mut cache = random_batch(&net.arch, 64, rng);
    net.forward(&p, &mut cache);
    let (out, value) = (cache.out.clone(), cache.value.clone());
    net.forward_unmodulated(&p, &mut cache);
    out.iter().zip(&cache.out).chain(value.iter().zip(&cache.value)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Worst relative error between analytic and central-difference gradients of
/// the full PPO loss, over up to 32 entries of every parameter block.
fn gradient_error(agent: &Agent, rng: &mut Rng) -> (f64, String, usize) {
    let net: &Network = &agent.net;
    let mut p: Vec<f64> = agent.params.iter().map(|v| v + 0.05 * rng.sample::<f64, _>(StandardNormal)).collect();
    let rows = 12;
    let mut cache = random_batch(&net.arch, rows, rng);
    net.forward(&p, &mut cache);
    let sampler = Agent { params: p.clone(), ..agent.clone() };
    let mut t = Targets::default();
    for row in 0..rows {
        let s = sampler.sample_row(&cache, row, rng, false);
        t.actions.push(s.index);
        t.raw_actions.extend(&s.raw);
        t.logp_old.push(s.logp + 0.3 * rng.sample::<f64, _>(StandardNormal));
        t.advantages.push(rng.sample(StandardNormal));
        t.returns.push(rng.sample(StandardNormal));
    }
    let cfg = TrainerConfig::default();
    let scale = 1.0 / rows as f64;
    let mut grad = vec![0.0; net.n_params()];
    loss_and_grad(net, &p, &mut cache, &t, &cfg, scale, Some(&mut grad));
    let h = 1e-5;
    let (mut worst, mut where_, mut blocks) = (0.0f64, String::new(), 0);
    for block in net.blocks() {
        blocks += 1;
        let picks: Vec<usize> =
            if block.len <= 32 { (0..block.len).collect() } else { (0..32).map(|_| rng.random_range(0..block.len)).collect() };
        for i in picks {
            let k = block.offset + i;
            let orig = p[k];
            p[k] = orig + h;
            let up = loss_and_grad(net, &p, &mut cache, &t, &cfg, scale, None).total;
            p[k] = orig - h;
            let down = loss_and_grad(net, &p, &mut cache, &t, &cfg, scale, None).total;
            p[k] = orig;
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - grad[k]).abs() / fd.abs().max(grad[k].abs()).max(1e-6);
            if rel > worst {
                worst = rel;
                where_ = format!("{}[{i}]", block.name);
            }
        }
    }
    (worst, where_, blocks)
}

fn film_identity_and_gradients() -> Outcome {
    let mut rng = stream(55, &[]);
    let nav = setup(ScenarioName::NavS1);
    let inspect = setup(ScenarioName::Inspect);
    let cases = [
        (&nav, ConditioningConfig::film(&[3])),
        (&nav, ConditioningConfig::film(&[1, 2, 3])),
        (&nav, ConditioningConfig::naive()),
        (&inspect, ConditioningConfig::film(&[1, 2, 3])),
        (&inspect, ConditioningConfig::film(&[2])),
        (&inspect, ConditioningConfig::naive()),
    ];
    let mut worst_identity = 0.0f64;
    let mut worst_grad = (0.0f64, String::new());
    let mut blocks = 0;
    for (s, cond) in cases {
        let film = cond.mode == ConditioningMode::Film;
        let agent = Agent::new(&s.mdp, s.closure.clone(), cond, &mut rng).unwrap();
        if film {
            worst_identity = worst_identity.max(identity_gap(&agent, &mut rng));
        }
        let (err, at, n) = gradient_error(&agent, &mut rng);
        blocks += n;
        if err >= worst_grad.0 {
            worst_grad = (err, format!("{} {at}", s.scenario.name.as_str()));
        }
    }
    outcome(
        worst_identity <= 1e-12 && worst_grad.0 < 1e-4,
        format!(
            "identity gap {worst_identity:.1e}; worst gradient rel. error {:.1e} at {} over {blocks} blocks",
            worst_grad.0, worst_grad.1
        ),
    )
}

// ---------------------------------------------------------------- 6

/// Independent model of the level rule: rates are `k / 20`, so the mean
/// exceeds 0.9 exactly when the integer sum exceeds `18 n`.
fn oracle_active(mode: CurriculumMode, level: usize, max: usize) -> Vec<usize> {
    match mode {
        CurriculumMode::Normal => (1..=level).collect(),
        CurriculumMode::Anti => (max - level + 1..=max).collect(),
        CurriculumMode::None => (1..=max).collect(),
    }
}

fn state_at(levels: &[Vec<Formula>], mode: CurriculumMode, level: usize) -> CurriculumState {
    let mut cs = CurriculumState::new(mode, levels.to_vec()).unwrap();
    while cs.level() < level {
        let all: BTreeMap<Formula, f64> = levels.concat().into_iter().map(|t| (t, 1.0)).collect();
        cs.record_eval_and_maybe_advance(&all).unwrap();
    }
    cs
}

fn chi_square(cs: &CurriculumState, expected: &[Formula], rng: &mut Rng) -> (bool, f64, f64, f64) {
    let draws = 10_000;
    let mut counts: BTreeMap<&Formula, usize> = expected.iter().map(|t| (t, 0)).collect();
    let mut outside = 0;
    for _ in 0..draws {
        let t = cs.sample_task(rng);
        match counts.get_mut(&t) {
            Some(c) => *c += 1,
            None => outside += 1,
        }
    }
    let e = draws as f64 / expected.len() as f64;
    let stat: f64 = counts.values().map(|&c| (c as f64 - e).powi(2) / e).sum();
    let critical = ChiSquared::new((expected.len() - 1) as f64).unwrap().inverse_cdf(0.95);
    let max_dev = counts.values().map(|&c| (c as f64 / draws as f64 - 1.0 / expected.len() as f64).abs()).fold(0.0, f64::max);
    (outside == 0 && stat < critical && max_dev <= 0.01, stat, critical, max_dev)
}

fn curriculum_state_machine() -> Outcome {
    let s = Scenario::builtin(ScenarioName::NavS1);
    let levels = s.all_levels();
    let max = levels.len();
    let mut rng = stream(66, &[]);

    let mut transitions = 0;
    let mut disagreements = 0;
    let mut non_monotone = 0;
    for mode in [CurriculumMode::Normal, CurriculumMode::Anti, CurriculumMode::None] {
        for _ in 0..200 {
            let mut cs = CurriculumState::new(mode, levels.clone()).unwrap();
            let mut level = if mode == CurriculumMode::None { max } else { 1 };
            for _ in 0..12 {
                let regime = rng.random_range(0..4);
                let ks: BTreeMap<Formula, u32> = levels
                    .concat()
                    .into_iter()
                    .map(|t| {
                        let k = match regime {
                            0 => 18,
                            1 => rng.random_range(17..=20),
                            2 => rng.random_range(0..=20),
                            _ => 19,
                        };
                        (t, k)
                    })
                    .collect();
                let rates: BTreeMap<Formula, f64> = ks.iter().map(|(t, &k)| (t.clone(), k as f64 / 20.0)).collect();
                let active: Vec<&Formula> = oracle_active(mode, level, max).into_iter().flat_map(|k| &levels[k - 1]).collect();
                let sum: u32 = active.iter().map(|t| ks[*t]).sum();
                let advance = mode != CurriculumMode::None && sum > 18 * active.len() as u32 && level < max;
                let before = cs.level();
                let advanced = cs.record_eval_and_maybe_advance(&rates).unwrap();
                if advance {
                    level += 1;
                }
                transitions += 1;
                disagreements += usize::from(advanced != advance || cs.level() != level);
                non_monotone += usize::from(cs.level() < before);
            }
        }
    }

    let mut uniform = Vec::new();
    let cases = [
        ("normal@2", CurriculumMode::Normal, 2, [&levels[0][..], &levels[1][..]].concat()),
        ("anti@1", CurriculumMode::Anti, 1, levels[max - 1].clone()),
        ("anti@2", CurriculumMode::Anti, 2, [&levels[max - 2][..], &levels[max - 1][..]].concat()),
        ("none", CurriculumMode::None, max, levels.concat()),
    ];
    let mut uniform_ok = true;
    for (label, mode, level, expected) in cases {
        let cs = state_at(&levels, mode, level);
        let (ok, stat, critical, dev) = chi_square(&cs, &expected, &mut rng);
        uniform_ok &= ok;
        uniform.push(format!("{label} chi2 {stat:.1} < {critical:.1}, max dev {dev:.4}"));
    }
    outcome(
        disagreements == 0 && non_monotone == 0 && uniform_ok,
        format!("{disagreements} disagreements over {transitions} evaluations, {non_monotone} level decreases; {}", uniform.join(", ")),
    )
}

// ---------------------------------------------------------------- 7, 8, 9

fn nav_config(conditioning: ConditioningConfig, curriculum: CurriculumMode, total_steps: u64) -> RunConfig {
    RunConfig { conditioning, curriculum, total_steps, ..RunConfig::for_scenario(ScenarioName::NavS1) }
}

fn level_mean(out: &TrainOutput, names: &[String], step_limit: u64) -> Option<f64> {
    out.metrics
        .iter()
        .filter(|r| r.step <= step_limit)
        .map(|r| names.iter().map(|n| r.per_task_success[n]).sum::<f64>() / names.len() as f64)
        .fold(None, |best: Option<f64>, m| Some(best.map_or(m, |b| b.max(m))))
}

fn training_smoke() -> Outcome {
    let s = setup(ScenarioName::NavS1);
    let level1: Vec<String> = s.tasks_up_to(1).iter().map(|t| t.display(&s.mdp.symbols).to_string()).collect();
    let mut lines = Vec::new();
    let mut good = 0;
    for seed in SEEDS {
        let cfg = RunConfig {
            stop_at_level: Some(2),
            final_eval_episodes: 0,
            ..nav_config(ConditioningConfig::film(&[3]), CurriculumMode::Normal, 3_000_000)
        };
        let start = Instant::now();
        let out = train(&cfg, seed, None).expect("training runs");
        let elapsed = start.elapsed();
        let best = level_mean(&out, &level1, 1_000_000).unwrap_or(0.0);
        let reached = out.metrics.iter().find(|r| r.advanced).map(|r| r.step);
        let ok = best >= 0.8 && out.level >= 2 && reached.is_some_and(|st| st <= 3_000_000) && elapsed < Duration::from_secs(45 * 60);
        good += usize::from(ok);
        lines.push(format!(
            "seed {seed}: level-1 {best:.3} by 1M, level 2 at {}, {:.0}s",
            reached.map_or("never".into(), |st| format!("step {st}")),
            elapsed.as_secs_f64()
        ));
    }
    outcome(good >= 2, format!("{good}/3 seeds pass; {}", lines.join("; ")))
}

fn ablation_direction() -> Outcome {
    let arms = [
        ("film", ConditioningConfig::film(&[3]), CurriculumMode::Normal),
        ("naive", ConditioningConfig::naive(), CurriculumMode::Normal),
        ("no-curriculum", ConditioningConfig::film(&[3]), CurriculumMode::None),
    ];
    let mut means = Vec::new();
    for (label, cond, mode) in arms {
        let per_seed: Vec<f64> = SEEDS
            .iter()
            .map(|&seed| {
                let base = nav_config(cond.clone(), mode, ABLATION_STEPS);
                let cfg = RunConfig { trainer: TrainerConfig { entropy_coef: ABLATION_ENTROPY, ..base.trainer.clone() }, ..base };
                let out = train(&cfg, seed, None).expect("training runs");
                out.final_eval.expect("final evaluation").mean_success
            })
            .collect();
        means.push((label, per_seed.iter().sum::<f64>() / per_seed.len() as f64, per_seed));
    }
    let (film, naive, none) = (means[0].1, means[1].1, means[2].1);
    let shown: Vec<String> =
        means.iter().map(|(l, m, s)| format!("{l} {m:.3} {:?}", s.iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>())).collect();
    outcome(
        film >= naive && none < film,
        format!("mean success over all tasks at {ABLATION_STEPS} steps, entropy {ABLATION_ENTROPY}: {}", shown.join(", ")),
    )
}

fn read(dir: &Path, file: &str) -> Vec<u8> {
    std::fs::read(dir.join(file)).unwrap_or_else(|e| panic!("{}: {e}", dir.join(file).display()))
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        eval_interval: 4,
        final_eval_episodes: 5,
        ..nav_config(ConditioningConfig::film(&[3]), CurriculumMode::Normal, 100_000)
    };
    let runs = [("a", cfg.clone()), ("b", cfg.clone()), ("sequential", RunConfig { execution: Execution::Sequential, ..cfg })];
    for (name, cfg) in &runs {
        train(cfg, 9, Some(&tmp.path().join(name))).expect("training runs");
    }
    let a = tmp.path().join("a");
    let mut differing = Vec::new();
    for other in ["b", "sequential"] {
        let b = tmp.path().join(other);
        for file in ["metrics.jsonl", "final_eval.csv", "checkpoint/params.bin"] {
            if read(&a, file) != read(&b, file) {
                differing.push(format!("{other}/{file}"));
            }
        }
    }
    let metrics = read(&a, "metrics.jsonl");
    let records = metrics.split(|&c| c == b'\n').filter(|l| !l.is_empty()).count();
    outcome(
        differing.is_empty() && records > 0,
        format!(
            "{records} metrics records, {} bytes; identical across repeated and sequential runs{}",
            metrics.len(),
            if differing.is_empty() { String::new() } else { format!(" except {differing:?}") }
        ),
    )
}
