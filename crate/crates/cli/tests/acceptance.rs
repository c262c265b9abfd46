//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero on any
//! failure.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use burgerlab_cli::load_scenario;
use burgerlab_core::control::{feedback_fluxes, feedforward_fluxes, FeedforwardInputs};
use burgerlab_core::{
    convergence_study, run_closed_loop, ControllerVariant, DtRule, Expr, Grid, Scenario,
    ScenarioMode,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BIN: &str = env!("CARGO_BIN_EXE_burgerlab");
const CONFIGS: [&str; 4] = ["paper_fig1_t1", "paper_fig1_t2", "zero", "heat"];

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("examples")
        .join(format!("{name}.cfg"))
}

fn scenario(name: &str) -> Scenario {
    load_scenario(&config(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(|c| c.parse::<f64>().unwrap()).collect())
        .collect()
}

fn tracking_envelope() -> Outcome {
    let out = tempfile::tempdir().unwrap();
    let mut notes = Vec::new();
    let mut ok = true;
    for name in ["paper_fig1_t1", "paper_fig1_t2"] {
        let start = Instant::now();
        let status = Command::new(BIN)
            .args(["simulate", "--config"])
            .arg(config(name))
            .arg("--out")
            .arg(out.path())
            .output()
            .unwrap();
        let elapsed = start.elapsed();
        if !status.status.success() {
            ok = false;
            notes.push(format!("{name}: exit {:?}", status.status.code()));
            continue;
        }
        let text = std::fs::read_to_string(out.path().join(format!("{name}.csv"))).unwrap();
        let header_ok = text.lines().next()
            == Some("t,u_a,r,e,bound,norm_uhat,meanU_residual,superpos_residual");
        let rows = csv_rows(&out.path().join(format!("{name}.csv")));
        let first_ok = rows[0][..5] == [0.0, 0.0, 6.0, -6.0, 6.0];
        let worst = rows
            .iter()
            .map(|r| r[3].abs() - (6.0 * (-2.5 * r[0]).exp() + 0.02))
            .fold(f64::NEG_INFINITY, f64::max);
        let covers = rows.last().map(|r| r[0]) == Some(5.0);
        let this_ok =
            header_ok && first_ok && covers && worst <= 0.0 && elapsed < Duration::from_secs(30);
        ok &= this_ok;
        notes.push(format!(
            "{name}: {} rows, max(|e| - env) = {worst:.3e}, {:.2}s",
            rows.len(),
            elapsed.as_secs_f64()
        ));
    }
    outcome(ok, notes.join("; "))
}

fn energy_decay() -> Outcome {
    let rec = run_closed_loop(&scenario("paper_fig1_t1")).unwrap();
    let lambda = rec.lambda.unwrap();
    let ratio = rec
        .samples
        .iter()
        .map(|s| s.norm_uhat / (rec.norm0 * (-0.5 * lambda * s.t).exp()))
        .fold(0.0, f64::max);
    let step = rec.monitors.energy_increase.value;
    outcome(
        rec.status.is_completed() && ratio <= 1.05 && step <= 1e-10,
        format!("max ‖û‖/envelope = {ratio:.6}, max per-step increase = {step:.3e}"),
    )
}

fn mean_identity() -> Outcome {
    let s = scenario("paper_fig1_t1");
    let rec = run_closed_loop(&s).unwrap();
    let worst = rec.monitors.mean_u.value;
    let study = convergence_study(&s, &[51, 101, 201], DtRule::Linear(0.2)).unwrap();
    let orders = study.mean_u_orders();
    outcome(
        worst <= 5e-3 && orders.iter().all(|&p| p >= 1.7),
        format!("max |∫U - r| = {worst:.3e}, orders {orders:.3?}"),
    )
}

fn superposition() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    let mut ok = true;
    for name in CONFIGS {
        let base = scenario(name);
        let variants: &[ControllerVariant] = match base.mode {
            ScenarioMode::Heat => &[ControllerVariant::Theorem2],
            ScenarioMode::ClosedLoop => &[ControllerVariant::Theorem1, ControllerVariant::Theorem2],
        };
        for &v in variants {
            let mut s = base.clone();
            s.variant = v;
            let rec = run_closed_loop(&s).unwrap();
            ok &= rec.status.is_completed();
            worst = worst.max(rec.monitors.superposition.value);
            runs += 1;
        }
    }
    outcome(
        ok && worst <= 1e-8,
        format!("{runs} runs, max ‖u - (û + U)‖∞ / max(1, ‖u‖∞) = {worst:.3e}"),
    )
}

fn heat_oracle() -> Outcome {
    let mut s = scenario("heat");
    s.snapshot_times = vec![s.t_end];
    let rec = run_closed_loop(&s).unwrap();
    let grid = Grid::new(s.n).unwrap();
    let snap = rec.snapshots.last().unwrap();
    let t = snap.t;
    let err = (0..grid.len())
        .map(|i| {
            let x = grid.x(i);
            let exact =
                (-s.nu * std::f64::consts::PI.powi(2) * t).exp() * (std::f64::consts::PI * x).cos();
            (snap.uhat[i] - exact).abs()
        })
        .fold(0.0, f64::max);
    let study = convergence_study(&s, &[51, 101, 201], DtRule::Linear(0.2)).unwrap();
    let orders = study.exact_orders().unwrap();
    // the same study through the command line
    let cli = Command::new(BIN)
        .args(["converge", "--config"])
        .arg(config("heat"))
        .args(["--grids", "51,101,201"])
        .output()
        .unwrap();
    outcome(
        (t - 0.1).abs() < 1e-12
            && err <= 2e-3
            && orders.iter().all(|&p| p >= 1.8)
            && cli.status.success(),
        format!("error at t = {t} is {err:.3e}, spatial orders {orders:.3?}"),
    )
}

fn controller_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    let cases = 200;
    for _ in 0..cases {
        let k = rng.gen_range(0.2..40.0);
        let (h0, h1): (f64, f64) = (rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0));
        let (u0, u1): (f64, f64) = (rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0));
        let rp = rng.gen_range(-20.0..20.0);
        let integral = rng.gen_range(-50.0..50.0);

        let f1 = feedback_fluxes(ControllerVariant::Theorem1, k, h0, h1);
        worst = worst.max(rel(f1.left, k * (h0 + h0.powi(3))));
        worst = worst.max(rel(f1.right, -k * (h1 + h1.powi(3))));
        let f2 = feedback_fluxes(ControllerVariant::Theorem2, k, h0, h1);
        worst = worst.max(rel(f2.left, k * h0));
        worst = worst.max(rel(f2.right, -k * h1));

        let inp = FeedforwardInputs {
            uhat0: h0,
            uhat1: h1,
            reg0: u0,
            reg1: u1,
            r_prime: rp,
            coupling_integral: integral,
        };
        let g1 = feedforward_fluxes(ControllerVariant::Theorem1, &inp);
        worst = worst.max(rel(g1.left, h0 * u0 + u0 * u0 / 2.0));
        worst = worst.max(rel(g1.right, h1 * u1 + u1 * u1 / 2.0 + rp - integral));
        let g2 = feedforward_fluxes(ControllerVariant::Theorem2, &inp);
        worst = worst.max(rel(g2.left, h0 * u0 + u0 * u0 / 2.0 + h0 * h0 / 2.0));
        worst = worst.max(rel(
            g2.right,
            h1 * u1 + u1 * u1 / 2.0 + h1 * h1 / 2.0 + rp - integral,
        ));
    }
    outcome(
        worst <= 1e-12,
        format!("{cases} random inputs, max relative deviation {worst:.3e}"),
    )
}

fn differentiation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for name in CONFIGS {
        let s = scenario(name);
        let exprs: Vec<&Expr> = [
            Some(&s.a),
            Some(&s.ud),
            Some(&s.r),
            Some(&s.u0),
            s.exact_uhat.as_ref(),
        ]
        .into_iter()
        .flatten()
        .collect();
        for e in exprs {
            let d = e.differentiate_t();
            for _ in 0..50 {
                let (x, t) = (rng.gen_range(0.0..1.0), rng.gen_range(h..5.0));
                let fd = (e.eval(x, t + h).unwrap() - e.eval(x, t - h).unwrap()) / (2.0 * h);
                worst = worst.max((d.eval(x, t).unwrap() - fd).abs());
            }
            count += 1;
        }
    }
    let r = scenario("paper_fig1_t1").r.differentiate_t();
    let r0 = r.eval(0.0, 0.0).unwrap();
    let r0_err = (r0 + 3.0 * std::f64::consts::PI).abs();
    outcome(
        worst <= 1e-6 && r0_err <= 1e-12,
        format!("{count} expressions, max |symbolic - fd| = {worst:.3e}, r'(0) = {r0:.12}"),
    )
}

fn gain_thresholds() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let variant_cfg = |base: &str, k: &str, file: &str| {
        let text = std::fs::read_to_string(config(base)).unwrap();
        let text: String = text
            .lines()
            .map(|l| {
                if l.starts_with("k =") {
                    format!("k = {k}")
                } else {
                    l.to_string()
                }
            })
            .collect::<Vec<_>>()
            .join("\n");
        let p = dir.path().join(file);
        std::fs::write(&p, text).unwrap();
        p
    };
    let verify = |p: &Path| {
        let o = Command::new(BIN)
            .args(["verify", "--config"])
            .arg(p)
            .output()
            .unwrap();
        (
            o.status.code(),
            String::from_utf8_lossy(&o.stderr).into_owned(),
        )
    };
    let (at, at_err) = verify(&variant_cfg("paper_fig1_t1", "\"1/6\"", "at.cfg"));
    let (above, _) = verify(&variant_cfg("paper_fig1_t1", "\"1/6 + 1e-9\"", "above.cfg"));
    let (t2, t2_err) = verify(&variant_cfg("paper_fig1_t2", "0", "t2.cfg"));
    let ok = at == Some(2)
        && at_err.starts_with("error[config]:")
        && at_err.contains("theorem1 requires k > 1/6")
        && above == Some(0)
        && t2 == Some(2)
        && t2_err.contains("theorem2 requires k > 0");
    outcome(
        ok,
        format!("exit codes: T1 k=1/6 -> {at:?}, T1 k=1/6+1e-9 -> {above:?}, T2 k=0 -> {t2:?}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        (
            "1 tracking envelope (simulate, both variants)",
            tracking_envelope,
        ),
        ("2 theorem1 energy decay", energy_decay),
        ("3 regulator mean identity", mean_identity),
        ("4 discrete superposition", superposition),
        ("5 heat-equation oracle", heat_oracle),
        ("6 controller laws vs transcription", controller_oracle),
        ("7 symbolic time derivatives", differentiation),
        ("8 gain thresholds (verify)", gain_thresholds),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let o = f();
        println!(
            "{} [{name}] {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.passed);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
