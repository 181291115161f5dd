//! Development probe: prints EMR tables for the benchmark grids so the
//! acceptance bands can be checked quickly. Not part of the deliverable
//! surface; run with `cargo run --release -p degcausal-core --example probe -- <what>`.

use degcausal_core::discovery::Method;
use degcausal_core::eval::{
    apply_level, default_levels, run_benchmark, BenchmarkPlan, SweepFactor,
};
use degcausal_core::graph::PairwiseOutcome;
use degcausal_core::sim::{simulate_filter_case, FilterComponentSpec, SystemSpec};
use degcausal_core::strategy::{build_s2, Strategy};

fn print_emr(run: &degcausal_core::eval::BenchmarkRun, title: &str) {
    println!("== {title}");
    let mut methods: Vec<Method> = run.emr.iter().map(|r| r.method).collect();
    methods.dedup();
    for row in &run.emr {
        println!(
            "  {:16} {} n={:2}  emr={:.2}",
            row.method.to_string(),
            row.strategy,
            row.n,
            row.emr
        );
    }
    for t in &run.tallies {
        if t.outcome != "x1->x2" {
            println!(
                "  tally {:16} {} n={:2} {}={}",
                t.method.to_string(),
                t.strategy,
                t.n,
                t.outcome,
                t.count
            );
        }
    }
}

fn main() {
    let what = std::env::args().nth(1).unwrap_or_else(|| "c2".into());
    match what.as_str() {
        "c1" => {
            let spec = SystemSpec::independent_pair();
            let truth = spec.truth_graph().unwrap();
            let mut plan = BenchmarkPlan::new(spec, truth);
            plan.strategies = vec![Strategy::S1];
            plan.n_values = vec![10];
            plan.seed = 20260810;
            let run = run_benchmark(&plan).unwrap();
            print_emr(&run, "criterion 1: independent system, S1, n=10");
        }
        "c1mlp" => {
            let inner: usize = std::env::args()
                .nth(2)
                .and_then(|s| s.parse().ok())
                .unwrap_or(600);
            let lr: f64 = std::env::args()
                .nth(3)
                .and_then(|s| s.parse().ok())
                .unwrap_or(0.02);
            let spec = SystemSpec::independent_pair();
            let truth = spec.truth_graph().unwrap();
            let mut plan = BenchmarkPlan::new(spec, truth);
            plan.methods = vec![Method::NotearsMlp];
            plan.strategies = vec![Strategy::S1];
            plan.n_values = vec![10];
            plan.seed = 20260810;
            plan.config.notears_mlp.max_inner_iter = inner;

            let run = run_benchmark(&plan).unwrap();
            print_emr(&run, &format!("S1 mlp inner={inner} lr={lr}"));
        }
        "c2" => {
            let spec = SystemSpec::independent_pair();
            let truth = spec.truth_graph().unwrap();
            let mut plan = BenchmarkPlan::new(spec, truth);
            plan.methods = vec![
                Method::NotearsLinear,
                Method::NotearsMlp,
                Method::DirectLingam,
            ];
            plan.strategies = vec![Strategy::S2];
            plan.seed = 20260810;
            let run = run_benchmark(&plan).unwrap();
            print_emr(&run, "criterion 2: independent system, S2");
        }
        "c3" => {
            let spec = SystemSpec::causal_pair();
            let truth = spec.truth_graph().unwrap();
            let mut plan = BenchmarkPlan::new(spec, truth);
            plan.methods = vec![Method::NotearsMlp, Method::StablePc, Method::Ges];
            plan.strategies = vec![Strategy::S2];
            plan.seed = 20260810;
            let run = run_benchmark(&plan).unwrap();
            print_emr(&run, "criterion 3: causal system, S2");
        }
        "c3lin" => {
            let spec = SystemSpec::causal_pair();
            let truth = spec.truth_graph().unwrap();
            let mut plan = BenchmarkPlan::new(spec, truth);
            plan.methods = vec![Method::NotearsLinear, Method::DirectLingam];
            plan.strategies = vec![Strategy::S2];
            plan.seed = 20260810;
            let run = run_benchmark(&plan).unwrap();
            print_emr(&run, "causal system, S2, linear + lingam");
        }
        "c4beta18" => {
            let base = SystemSpec::causal_pair();
            let levels = default_levels(SweepFactor::Beta);
            let spec = apply_level(&base, SweepFactor::Beta, &levels[8]).unwrap();
            let truth = spec.truth_graph().unwrap();
            let mut plan = BenchmarkPlan::new(spec, truth);
            plan.methods = vec![Method::NotearsLinear];
            plan.strategies = vec![Strategy::S2];
            plan.n_values = (5..=10).collect();
            plan.seed = 20260810;
            let run = run_benchmark(&plan).unwrap();
            print_emr(&run, "criterion 4: beta=1.8 alpha=0.014");
        }
        "c4beta02" => {
            let base = SystemSpec::causal_pair();
            let levels = default_levels(SweepFactor::Beta);
            let spec = apply_level(&base, SweepFactor::Beta, &levels[0]).unwrap();
            let truth = spec.truth_graph().unwrap();
            let mut plan = BenchmarkPlan::new(spec, truth);
            plan.strategies = vec![Strategy::S2];
            plan.seed = 20260810;
            let run = run_benchmark(&plan).unwrap();
            print_emr(&run, "criterion 4: beta=0.2 alpha=70");
        }
        "c4sigma0" => {
            let base = SystemSpec::causal_pair();
            let spec = apply_level(
                &base,
                SweepFactor::Sigma,
                &degcausal_core::eval::SweepLevel::plain(0.0),
            )
            .unwrap();
            let truth = spec.truth_graph().unwrap();
            let mut plan = BenchmarkPlan::new(spec, truth);
            plan.strategies = vec![Strategy::S2];
            plan.seed = 20260810;
            let run = run_benchmark(&plan).unwrap();
            print_emr(&run, "criterion 4: sigma=0");
        }
        "c5" => {
            use degcausal_core::discovery::{ges, stable_pc, GesConfig, StablePcConfig};
            let mut spec = FilterComponentSpec::standard();
            match std::env::args().nth(2).as_deref() {
                Some("physical") => {
                    spec.performance_from_observed = false;
                }
                Some("nonoise") => {
                    spec.sigma_f0 = 0.0;
                    spec.sigma_gain = 0.0;
                }
                Some(s) => {
                    // "<sigma_f0>,<sigma_gain>"
                    let parts: Vec<&str> = s.split(',').collect();
                    spec.sigma_f0 = parts[0].parse().unwrap();
                    spec.sigma_gain = parts[1].parse().unwrap();
                }
                _ => {}
            }
            println!("sigma_f0={} sigma_gain={}", spec.sigma_f0, spec.sigma_gain);
            let truth_skel = FilterComponentSpec::truth_graph().skeleton();
            let mut pc_ok = 0;
            let mut ges_ok = 0;
            let total = 20;
            for rep in 0..total {
                let seed = degcausal_core::seeds::derive(20260810, &[rep]);
                let d = simulate_filter_case(&spec, seed).unwrap();
                let m = build_s2(&d).unwrap();
                let g_pc = stable_pc(&m, &StablePcConfig::default()).unwrap();
                let g_ges = ges(&m, &GesConfig::default()).unwrap();
                let pc_match = g_pc.skeleton().structural_eq(&truth_skel).unwrap();
                let ges_match = g_ges.skeleton().structural_eq(&truth_skel).unwrap();
                if pc_match {
                    pc_ok += 1;
                }
                if ges_match {
                    ges_ok += 1;
                }
                let diff = |g: &degcausal_core::graph::CausalGraph| {
                    let mut extra = Vec::new();
                    let mut missing = Vec::new();
                    for i in 0..7 {
                        for j in (i + 1)..7 {
                            let have = g.adjacent(i, j);
                            let want = truth_skel.adjacent(i, j);
                            if have && !want {
                                extra.push((i, j));
                            }
                            if !have && want {
                                missing.push((i, j));
                            }
                        }
                    }
                    (extra, missing)
                };
                if !pc_match {
                    let (e, m) = diff(&g_pc);
                    println!("rep {rep} pc : extra {e:?} missing {m:?}");
                }
                if !ges_match {
                    let (e, m) = diff(&g_ges);
                    println!("rep {rep} ges: extra {e:?} missing {m:?}");
                }
            }
            println!("filter case: stable-pc {pc_ok}/{total}, ges {ges_ok}/{total}");
        }
        "c3mlp" => {
            // Inner-solver sensitivity: args are inner_iters, lr, n values.
            let inner: usize = std::env::args()
                .nth(2)
                .and_then(|s| s.parse().ok())
                .unwrap_or(600);
            let lr: f64 = std::env::args()
                .nth(3)
                .and_then(|s| s.parse().ok())
                .unwrap_or(0.02);
            let spec = SystemSpec::causal_pair();
            let truth = spec.truth_graph().unwrap();
            let mut plan = BenchmarkPlan::new(spec, truth);
            plan.methods = vec![Method::NotearsMlp];
            plan.strategies = vec![Strategy::S2];
            plan.n_values = vec![7, 8];
            plan.seed = 20260810;
            plan.config.notears_mlp.max_inner_iter = inner;

            let run = run_benchmark(&plan).unwrap();
            print_emr(&run, &format!("mlp inner={inner} lr={lr}"));
        }
        "c5corr" => {
            let mut spec = FilterComponentSpec::standard();
            spec.sigma_f0 = 0.0;
            spec.sigma_gain = 0.15;
            let crit = 1.96 / ((400f64 - 3.0).sqrt());
            println!("critical |r| at level 0: {crit:.4}");
            for rep in 0..20u64 {
                let seed = degcausal_core::seeds::derive(20260810, &[rep]);
                let d = simulate_filter_case(&spec, seed).unwrap();
                let m = build_s2(&d).unwrap();
                let r = degcausal_core::stats::partial_correlation(&m, 1, 5, &[]).unwrap();
                println!("rep {rep:2}: corr(dR2, df0) = {r:.4}  keep={}", r.abs() > crit);
            }
        }
        "granger" => {
            use degcausal_core::discovery::{granger_pairwise, GrangerConfig};
            let spec = SystemSpec::causal_pair();
            for rep in 0..5 {
                let seed = degcausal_core::seeds::derive(99, &[rep]);
                let d = degcausal_core::sim::simulate_system(&spec, 1, seed).unwrap();
                let g = granger_pairwise(&d, &GrangerConfig::default()).unwrap();
                println!("rep {rep}: adj {:?}", g.adj());
            }
        }
        "tally11" => {
            let spec = SystemSpec::causal_pair();
            let truth = spec.truth_graph().unwrap();
            let mut plan = BenchmarkPlan::new(spec, truth);
            plan.strategies = vec![Strategy::S2];
            plan.seed = 20260810;
            let run = run_benchmark(&plan).unwrap();
            for method in Method::NON_TEMPORAL {
                for n in [4, 7, 10] {
                    let und = run.outcome_rate(method, Strategy::S2, n, PairwiseOutcome::Undirected, 20);
                    let fwd = run.outcome_rate(method, Strategy::S2, n, PairwiseOutcome::X1ToX2, 20);
                    let rev = run.outcome_rate(method, Strategy::S2, n, PairwiseOutcome::X2ToX1, 20);
                    let empty = run.outcome_rate(method, Strategy::S2, n, PairwiseOutcome::Empty, 20);
                    println!(
                        "{method} n={n}: empty={empty:.2} x1->x2={fwd:.2} x2->x1={rev:.2} und={und:.2}"
                    );
                }
            }
        }
        other => eprintln!("unknown probe {other}"),
    }
}
