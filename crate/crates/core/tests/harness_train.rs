use std::path::Path;
use std::process::Command;

use taud::harness::{
    evaluate, initial_states, train, EvalReport, HarnessError, InputMode, MetricsRow, TrainObserver, TrainerConfig,
};
use taud::mdp::ExtendedState;
use taud::plant::RngStream;
use taud::sac::Actor;

const DOUBLE_INTEGRATOR: &str = include_str!("../../../configs/double_integrator.toml");

fn small_config() -> TrainerConfig {
    let mut cfg = TrainerConfig::from_toml_str(DOUBLE_INTEGRATOR).unwrap();
    cfg.sac.hidden = vec![16, 16];
    cfg.sac.batch_size = 16;
    cfg.run.total_steps = 600;
    cfg.eval.every = 300;
    cfg.eval.episodes = 4;
    cfg
}

fn with_delays(mut cfg: TrainerConfig, d_sc: usize, d_ca: usize) -> TrainerConfig {
    cfg.delays.d_sc = d_sc;
    cfg.delays.d_ca = d_ca;
    cfg.delays.d_sc_max = d_sc.max(1);
    cfg.delays.d_ca_max = d_ca.max(1);
    cfg
}

#[derive(Default)]
struct Recorder {
    decisions: Vec<(usize, usize, usize)>,
    transitions: Vec<(usize, usize, usize)>,
    evaluations: usize,
}

impl TrainObserver for Recorder {
    fn decision(&mut self, episode: usize, k: usize, t: usize) {
        self.decisions.push((episode, k, t));
    }
    fn transition(&mut self, episode: usize, k: usize, t: usize) {
        self.transitions.push((episode, k, t));
    }
    fn evaluation(&mut self, _row: &MetricsRow, _report: &EvalReport) {
        self.evaluations += 1;
    }
}

#[test]
fn decisions_follow_the_sensor_delay_and_transitions_close_one_step_later() {
    let exp = with_delays(small_config(), 3, 2).resolve().unwrap();
    let mut rec = Recorder::default();
    let out = train(&exp, 7, None, &mut rec).unwrap();
    let len = exp.episode_len();
    assert_eq!(out.episodes, 600 / len);
    assert_eq!(out.steps, out.episodes * len);
    assert_eq!(rec.evaluations, 2);

    assert!(rec.decisions.iter().all(|&(_, k, t)| t == k + 3));
    assert_eq!(rec.decisions.iter().filter(|d| d.0 == 0).count(), len - 3);
    assert!(rec.transitions.iter().all(|&(_, k, t)| t == k + 1 + 3));
    for ep in 0..out.episodes {
        let d = rec.decisions.iter().filter(|x| x.0 == ep).count();
        let tr = rec.transitions.iter().filter(|x| x.0 == ep).count();
        assert_eq!(tr, d - 1, "episode {ep}");
    }
    assert_eq!(out.transitions, rec.transitions.len());
}

#[test]
fn first_decision_without_delay_is_at_zero() {
    let exp = small_config().resolve().unwrap();
    let mut rec = Recorder::default();
    train(&exp, 1, None, &mut rec).unwrap();
    assert_eq!(rec.decisions[0], (0, 0, 0));
}

#[test]
fn input_dimension_per_mode() {
    let mut cfg = with_delays(small_config(), 1, 1);
    let exp = cfg.resolve().unwrap();
    let z = ExtendedState::init(&[0.0, 0.0], exp.spec.tau(), exp.delays.d(), exp.n_u());
    cfg.run.input = InputMode::TauMdp;
    let tau_mdp = cfg.resolve().unwrap();
    assert_eq!(tau_mdp.input_dim(), exp.n_x() + exp.spec.subs().len());
    cfg.run.input = InputMode::NoPreprocess;
    assert_eq!(cfg.resolve().unwrap().input_dim(), z.flat_len());
    assert_eq!(exp.input_dim(), exp.spec.subs().len() + exp.n_x() + exp.delays.d() * exp.n_u());
}

fn untrained_actor(cfg: &TrainerConfig) -> (taud::harness::Experiment, Actor) {
    let exp = cfg.resolve().unwrap();
    let actor = Actor::new(
        exp.input_dim(),
        &[8],
        exp.model.action_low(),
        exp.model.action_high(),
        &mut RngStream::new(3),
    )
    .unwrap();
    (exp, actor)
}

fn geometric(gamma: f64, terms: usize) -> f64 {
    (0..terms).map(|k| gamma.powi(k as i32)).sum()
}

#[test]
fn evaluation_return_is_a_geometric_series_for_constant_rewards() {
    for (formula, level_of) in [
        ("G[0,10](G[0,3](x0 >= 100))", (|_b: f64| -1.0) as fn(f64) -> f64),
        ("G[0,10](G[0,3](x0 <= 100))", |b: f64| -(-b).exp()),
    ] {
        let mut cfg = with_delays(small_config(), 1, 2);
        cfg.spec.formula = formula.into();
        let (exp, actor) = untrained_actor(&cfg);
        let init = initial_states(&exp, 3, &mut RngStream::new(9));
        let report = evaluate(&actor, &exp, &init, 11, 0).unwrap();
        let terms = exp.episode_len() - 3;
        let expected = level_of(cfg.spec.beta) * geometric(exp.sac.gamma, terms);
        for r in &report.returns {
            assert!((r - expected).abs() < 1e-12, "{formula}: {r} vs {expected}");
        }
    }
}

#[test]
fn evaluation_needs_an_episode_and_averages_exactly() {
    let (exp, actor) = untrained_actor(&small_config());
    assert!(matches!(evaluate(&actor, &exp, &[], 0, 0), Err(HarnessError::Config(_))));
    let init = initial_states(&exp, 1, &mut RngStream::new(2));
    let r = evaluate(&actor, &exp, &init, 5, 0).unwrap();
    assert_eq!(r.returns.len(), 1);
    assert_eq!(r.mean_return, r.returns[0]);
    assert!(r.success_rate == 0.0 || r.success_rate == 1.0);
}

#[test]
fn evaluation_is_deterministic_and_leaves_the_actor_untouched() {
    let (exp, actor) = untrained_actor(&with_delays(small_config(), 2, 1));
    let before = actor.net().params().to_flat();
    let init = initial_states(&exp, 5, &mut RngStream::new(4));
    let a = evaluate(&actor, &exp, &init, 21, 3).unwrap();
    let b = evaluate(&actor, &exp, &init, 21, 3).unwrap();
    assert_eq!(a, b);
    assert_eq!(actor.net().params().to_flat(), before);
}

#[test]
fn non_finite_update_aborts_with_a_diagnostic_checkpoint() {
    let mut cfg = small_config();
    cfg.sac.learning_rate = 1e300;
    let exp = cfg.resolve().unwrap();
    let dir = tempfile::tempdir().unwrap();
    match train(&exp, 1, Some(dir.path()), &mut ()) {
        Err(HarnessError::NonFinite { checkpoint: Some(path), .. }) => {
            assert!(path.exists());
            assert!(path.join("actor.bin").exists());
        }
        other => panic!("expected a non-finite abort, got {other:?}"),
    }
}

#[test]
fn training_is_reproducible() {
    let exp = with_delays(small_config(), 1, 1).resolve().unwrap();
    let a = train(&exp, 5, None, &mut ()).unwrap();
    let b = train(&exp, 5, None, &mut ()).unwrap();
    assert_eq!(a.metrics.len(), b.metrics.len());
    for (x, y) in a.metrics.iter().zip(&b.metrics) {
        assert_eq!(format!("{x:?}"), format!("{y:?}"));
    }
    assert_eq!(a.final_report, b.final_report);
}

fn taud(args: &[&str]) -> (bool, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_taud")).args(args).env("RUST_LOG", "warn").output().unwrap();
    (out.status.success(), String::from_utf8_lossy(&out.stdout).into_owned(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn cli_train_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.toml");
    std::fs::write(&config, small_config().to_toml()).unwrap();
    let runs = dir.path().join("runs");
    let (ok, stdout, stderr) = taud(&["train", "--config", p(&config), "--seed", "2", "--out", p(&runs), "--steps", "300"]);
    assert!(ok, "{stderr}");
    let len = small_config().resolve().unwrap().episode_len();
    assert!(stdout.contains(&format!("seed 2: steps {} ", 300 / len * len)), "{stdout}");
    let seed_dir = runs.join("seed_2");
    for f in ["metrics.csv", "learning_curve.svg"] {
        assert!(seed_dir.join(f).exists(), "{f}");
    }
    assert!(runs.join("config.toml").exists());

    let trace = dir.path().join("trace.csv");
    let checkpoint = seed_dir.join("checkpoint");
    let (ok, stdout, stderr) =
        taud(&["eval", "--checkpoint", p(&checkpoint), "--config", p(&config), "-n", "3", "--trace", p(&trace)]);
    assert!(ok, "{stderr}");
    assert!(stdout.contains("episodes 3"));
    assert!(stdout.contains("success_rate"));
    let text = std::fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("t,x0,x1,u0,reward"));

    let (ok, _, stderr) = taud(&["eval", "--checkpoint", p(&checkpoint), "--config", p(&config), "--ablation", "no-preprocess"]);
    assert!(!ok);
    assert!(stderr.contains("inputs"), "{stderr}");
}

#[test]
fn cli_monitor_reports_robustness() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    std::fs::write(&trace, "t,x0\n0,0.0\n1,0.5\n2,2.0\n3,1.0\n").unwrap();
    let (ok, stdout, stderr) = taud(&["monitor", "--spec", "F[0,1](G[0,1](x0 >= 0.25))", "--trace", p(&trace)]);
    assert!(ok, "{stderr}");
    assert!(stdout.contains("robustness 0.25"), "{stdout}");
    assert!(stdout.contains("satisfied true"));

    let (ok, _, stderr) = taud(&["monitor", "--spec", "F[0,1](x0 >=", "--trace", p(&trace)]);
    assert!(!ok);
    assert!(stderr.starts_with("error:"));
    let (ok, _, _) = taud(&["train", "--ablation", "bogus"]);
    assert!(!ok);
}
