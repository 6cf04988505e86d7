//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criterion 1 states an out-of-hull fraction of 1/3 for BLX-0.5, while the
//! operator extends each side by `Range·a` and so leaves the hull with
//! probability 2a/(1+2a) = 1/2. The line reports FAIL against the stated
//! value and shows the measured fraction next to 1/2. It is the only
//! criterion allowed to fail without failing the target.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use mmx_blx::alcotask::{auc, EncodingSpec, Label, LEADS, SAMPLES};
use mmx_blx::blx::{blend_scalar, blx, BlendBounds};
use mmx_blx::crossover::{build_bags, crossover_chromosome, random_chromosome, random_sub, CrossoverParams, DrawTally, Mode};
use mmx_blx::data::{build_subject, reject_artifacts, Trial};
use mmx_blx::evolution::{pair_and_reproduce, GaConfig};
use mmx_blx::genome::{validate_chromosome, AttrKind, Chromosome, Problem};
use mmx_blx::tpd::{psi, scan_phi, Signal, ToleranceSpec};
use mmx_blx::RandomSource;
use mmx_blx_cli::{cmd_evaluate, cmd_evolve, cmd_synth, Overrides, RunConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, budget_s: f64) -> bool {
    elapsed.as_secs_f64() < budget_s
}

fn blx_respect() -> Outcome {
    let mut rng = RandomSource::new(101);
    let mut escapes = 0usize;
    for _ in 0..100_000 {
        let dims = rng.uniform_int(1, 4) as usize;
        let vmin: Vec<f64> = (0..dims).map(|_| rng.uniform(-10.0, 0.0)).collect();
        let vmax: Vec<f64> = vmin.iter().map(|m| m + rng.uniform(0.0, 10.0)).collect();
        let kinds = vec![AttrKind::Real; dims];
        let bounds = BlendBounds::new(vmax.clone(), vmin.clone(), kinds).unwrap();
        let v1: Vec<f64> = (0..dims).map(|k| rng.uniform(vmin[k], vmax[k])).collect();
        let v2: Vec<f64> = (0..dims).map(|k| rng.uniform(vmin[k], vmax[k])).collect();
        let out = blx(&v1, &v2, &bounds, 0.0, &mut rng).unwrap();
        for k in 0..dims {
            if out[k] < v1[k].min(v2[k]) || out[k] > v1[k].max(v2[k]) {
                escapes += 1;
            }
        }
    }
    let n = 100_000;
    let outside = (0..n)
        .filter(|_| {
            let v = blend_scalar(2.0, 6.0, 100.0, -100.0, 0.5, &mut rng).unwrap();
            !(2.0..=6.0).contains(&v)
        })
        .count();
    let frac = outside as f64 / n as f64;
    let sigma = |p: f64| (p * (1.0 - p) / n as f64).sqrt();
    let stated = (frac - 1.0 / 3.0).abs() <= 3.0 * sigma(1.0 / 3.0);
    let derived = (frac - 0.5).abs() <= 3.0 * sigma(0.5);
    outcome(
        escapes == 0 && stated,
        format!(
            "a=0 escapes {escapes}/1e5; a=0.5 outside fraction {frac:.4} vs stated 1/3 (3σ {:.4}): {}; vs operator-derived 1/2: {}",
            3.0 * sigma(1.0 / 3.0),
            if stated { "ok" } else { "off" },
            if derived { "ok" } else { "off" },
        ),
    )
}

fn problem() -> Problem {
    EncodingSpec::default().problem().unwrap()
}

fn self_cross() -> Outcome {
    let pr = problem();
    let params = CrossoverParams::new(0.0, 1.4, 0.85, 0.75, Mode::Exploit).unwrap();
    let mut rng = RandomSource::new(202);
    let failures = (0..1000)
        .filter(|_| {
            let c = random_chromosome(&pr, &mut rng);
            let (child, _) = crossover_chromosome(&c, &c, &pr, &params, &mut rng).unwrap();
            !child.same_genotype(&c)
        })
        .count();
    outcome(failures == 0, format!("{failures}/1000 self-crosses changed the parent"))
}

fn bag_partition() -> Outcome {
    let pr = problem();
    let mut rng = RandomSource::new(303);
    let (mut bad_bags, mut bad_children) = (0usize, 0usize);
    for k in 0..10_000 {
        let mode = if k % 2 == 0 { Mode::Exploit } else { Mode::Explore };
        let params = CrossoverParams::standard(mode);
        let (a, b) = (random_chromosome(&pr, &mut rng), random_chromosome(&pr, &mut rng));
        for (i, spec) in pr.tasks().iter().enumerate() {
            let bags = build_bags(a.sub(i), b.sub(i), spec, &params, &mut rng).unwrap();
            let ids: Vec<u32> = [&bags.common, &bags.unique, &bags.absent]
                .iter()
                .flat_map(|bag| bag.iter().map(|f| f.id))
                .collect();
            let set: BTreeSet<u32> = ids.iter().copied().collect();
            if set.len() != ids.len() || set != spec.universe().collect() {
                bad_bags += 1;
            }
        }
        let (child, _) = crossover_chromosome(&a, &b, &pr, &params, &mut rng).unwrap();
        // duplicates, length bounds and linked lengths
        if !validate_chromosome(&child, &pr).is_ok() {
            bad_children += 1;
        }
    }
    outcome(
        bad_bags == 0 && bad_children == 0,
        format!("1e4 pairs: {bad_bags} bad partitions, {bad_children} invalid offspring"),
    )
}

fn converged_population(seed: u64) -> Vec<Chromosome> {
    let pr = problem();
    let mut rng = RandomSource::new(seed);
    let subs = pr
        .tasks()
        .iter()
        .enumerate()
        .map(|(i, t)| random_sub(i, t, t.subset_max(), &mut rng))
        .collect();
    vec![Chromosome::new(subs); 50]
}

fn ccm_contrast() -> Outcome {
    let pr = problem();
    let mut exploit = DrawTally::default();
    let mut explore = DrawTally::default();
    for generation in 0..40 {
        let pop = converged_population(400 + generation as u64);
        for (mode, acc) in [(Mode::Exploit, &mut exploit), (Mode::Explore, &mut explore)] {
            let ga = GaConfig::new(50, 1, CrossoverParams::standard(mode), 404);
            let (_, t) = pair_and_reproduce(&pop, &pr, &ga, generation).unwrap();
            *acc += t.into_iter().sum::<DrawTally>();
        }
    }
    let n = explore.total() as f64;
    let p = 0.15;
    let frac = explore.from_absent as f64 / n;
    let three_sigma = 3.0 * (p * (1.0 - p) / n).sqrt();
    outcome(
        exploit.from_absent == 0 && (frac - p).abs() <= three_sigma,
        format!(
            "exploit absent draws {}; explore absent fraction {frac:.4} over {n} slots, expected 0.15 ± {three_sigma:.4}",
            exploit.from_absent
        ),
    )
}

fn oracle_phi(f: &[f64], gammas: &[usize], supports: &[f64], amp: f64, cutoff: f64, order: u32) -> f64 {
    let m = *gammas.iter().max().unwrap();
    let mut total = 0.0;
    for x in (m + 1)..=f.len() {
        let mut prod = 1.0;
        for (g, s) in gammas.iter().zip(supports) {
            let d = f[x - 1] - f[x - 1 - g];
            prod *= amp / (1.0 + ((d - s) / cutoff).powf(2.0 * order as f64));
        }
        total += prod;
    }
    total
}

fn tpd_analytics() -> Outcome {
    let mut worst_shape = 0.0f64;
    let cutoffs = [0.1, 0.2, 0.5, 1.0, 2.0, 3.5, 5.0, 7.5, 10.0, 12.5, 15.0, 17.5, 20.0];
    for &c in &cutoffs {
        for order in 1..=15 {
            for &(amp, sup) in &[(1.0, 0.0), (0.37, -2.5), (0.8, 11.0)] {
                let spec = ToleranceSpec::new(vec![1], vec![sup], amp, c, order).unwrap();
                worst_shape = worst_shape
                    .max((psi(sup, sup, &spec) - amp).abs())
                    .max((psi(sup + c, sup, &spec) - amp / 2.0).abs())
                    .max((psi(sup - c, sup, &spec) - amp / 2.0).abs());
            }
        }
    }
    let mut rng = RandomSource::new(505);
    let mut worst_rel = 0.0f64;
    for _ in 0..100 {
        let len = rng.uniform_int(40, 256) as usize;
        let f: Vec<f64> = (0..len).map(|_| rng.normal(0.0, 3.0)).collect();
        let n = rng.uniform_int(1, 8) as usize;
        let gammas: Vec<usize> = rng.sample_indices(36, n).into_iter().map(|g| g + 1).collect();
        let supports: Vec<f64> = (0..n).map(|_| rng.uniform(-5.0, 5.0)).collect();
        let (amp, cutoff, order) = (rng.uniform(0.5, 1.0), rng.uniform(1.0, 20.0), rng.uniform_int(1, 15) as u32);
        let spec = ToleranceSpec::new(gammas.clone(), supports.clone(), amp, cutoff, order).unwrap();
        let got = scan_phi(&Signal::new(f.clone()).unwrap(), &spec).unwrap();
        let want = oracle_phi(&f, &gammas, &supports, amp, cutoff, order);
        if want != 0.0 {
            worst_rel = worst_rel.max((got - want).abs() / want.abs());
        }
    }
    outcome(
        worst_shape <= 1e-12 && worst_rel <= 1e-12,
        format!("peak/half-power max error {worst_shape:.1e}; scan vs brute force max relative error {worst_rel:.1e}"),
    )
}

fn auc_oracle() -> Outcome {
    let mut rng = RandomSource::new(606);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let n = rng.uniform_int(1, 60) as usize;
        let m = rng.uniform_int(1, 60) as usize;
        let levels = rng.uniform_int(2, 30);
        let pos: Vec<f64> = (0..n).map(|_| rng.uniform_int(0, levels) as f64 * 0.25).collect();
        let neg: Vec<f64> = (0..m).map(|_| rng.uniform_int(0, levels) as f64 * 0.25).collect();
        let mut twice = 0u64;
        for p in &pos {
            for q in &neg {
                twice += if p > q { 2 } else if p == q { 1 } else { 0 };
            }
        }
        if auc(&pos, &neg).unwrap() != twice as f64 / (2 * n * m) as f64 {
            mismatches += 1;
        }
    }
    let separated = 1.0 - auc(&[5.0, 6.0, 7.0], &[1.0, 2.0]).unwrap();
    let identical = 1.0 - auc(&[3.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap();
    outcome(
        mismatches == 0 && separated == 0.0 && identical == 0.5,
        format!("{mismatches}/1000 mismatches against pairwise counting; penalties separated {separated}, identical {identical}"),
    )
}

struct RunResult {
    train: f64,
    test: f64,
    monotone: bool,
    seconds: f64,
}

fn shipped_config() -> RunConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/synthetic.toml");
    RunConfig::load(&path).unwrap()
}

/// Synthesizes into `dir` and points the config's data section at it.
fn prepared_config(dir: &Path) -> RunConfig {
    let mut cfg = shipped_config();
    let report = cmd_synth(
        &cfg,
        &Overrides {
            out: Some(dir.to_path_buf()),
            ..Overrides::default()
        },
    )
    .unwrap();
    let data = cfg.data.as_mut().unwrap();
    data.train_manifest = report.train_manifest;
    data.test_manifest = report.test_manifest;
    cfg
}

fn evolve(cfg: &RunConfig, mode: Mode, seed: u64, threads: usize, out: &Path) -> RunResult {
    let mut cfg = cfg.clone();
    cfg.crossover.mode = match mode {
        Mode::Exploit => mmx_blx_cli::config::ModeName::Exploit,
        Mode::Explore => mmx_blx_cli::config::ModeName::Explore,
    };
    let ov = Overrides {
        seed: Some(seed),
        out: Some(out.to_path_buf()),
        threads: Some(threads),
    };
    let t0 = Instant::now();
    let report = cmd_evolve(&cfg, &ov).unwrap();
    let seconds = t0.elapsed().as_secs_f64();
    let test = cmd_evaluate(&cfg, &out.join("best.txt"), None).unwrap();
    RunResult {
        train: report.best.penalty().unwrap(),
        test,
        monotone: report.history.windows(2).all(|w| w[1].best_penalty <= w[0].best_penalty),
        seconds,
    }
}

fn end_to_end(dir: &Path) -> Outcome {
    let cfg = prepared_config(&dir.join("data"));
    let mut pass = cfg.ga.generations <= 500 && cfg.ga.population_size == 50;
    let mut parts = Vec::new();
    for mode in [Mode::Exploit, Mode::Explore] {
        let mut good = 0;
        let mut cells = Vec::new();
        for seed in 1..=3 {
            let r = evolve(&cfg, mode, seed, 1, &dir.join(format!("{mode:?}-{seed}")));
            if r.train <= 0.10 && r.test <= 0.20 {
                good += 1;
            }
            pass &= r.monotone && r.seconds < 600.0;
            cells.push(format!("{:.3}/{:.3} {:.0}s", r.train, r.test, r.seconds));
        }
        pass &= good >= 2;
        parts.push(format!("{mode:?} {good}/3 [{}]", cells.join(", ")));
    }
    outcome(
        pass,
        format!("{} generations, train/test penalty: {}", cfg.ga.generations, parts.join("; ")),
    )
}

fn determinism(dir: &Path) -> Outcome {
    let cfg = prepared_config(&dir.join("data"));
    let read = |d: &str, f: &str| std::fs::read(dir.join(d).join(f)).unwrap();
    evolve(&cfg, Mode::Explore, 1, 1, &dir.join("again"));
    evolve(&cfg, Mode::Explore, 1, 4, &dir.join("threads"));
    let reference = dir.join("Explore-1");
    let mut same = true;
    for f in ["history.csv", "sensors.csv", "best.txt"] {
        let base = std::fs::read(reference.join(f)).unwrap();
        same &= base == read("again", f) && base == read("threads", f);
    }
    outcome(
        same,
        "repeat run and threads=4 run byte-identical to the explore seed-1 run (history, sensors, best)".into(),
    )
}

fn preprocessing_pins() -> Outcome {
    let flat = |peak: f64| {
        let mut m = vec![3.0; LEADS * SAMPLES];
        m[LEADS * SAMPLES / 2] = peak;
        m
    };
    let kept = reject_artifacts(vec![
        Trial::new("s", 0, flat(100.0)).unwrap(),
        Trial::new("s", 1, flat(100.5)).unwrap(),
        Trial::new("s", 2, flat(-100.0)).unwrap(),
        Trial::new("s", 3, flat(-100.5)).unwrap(),
    ]);
    let kept: Vec<u32> = kept.iter().map(|t| t.trial_index).collect();
    let trials = |n: u32| (0..n).map(|i| Trial::new("s", i, flat(f64::from(i))).unwrap()).collect::<Vec<_>>();
    let mut rng = RandomSource::new(909);
    let with39 = build_subject("s", Label::Control, &trials(39), 36, &mut rng).unwrap();
    let with40 = build_subject("s", Label::Control, &trials(40), 36, &mut rng).unwrap();
    outcome(
        kept == [0, 2] && with39.is_none() && with40.is_some(),
        format!(
            "kept trials {kept:?} of peaks [100, 100.5, -100, -100.5]; 39 trials {}, 40 trials {}",
            if with39.is_none() { "excluded" } else { "included" },
            if with40.is_some() { "included" } else { "excluded" },
        ),
    )
}

fn main() -> ExitCode {
    let work = tempfile::tempdir().unwrap();
    let e2e = work.path().to_path_buf();
    type Check<'a> = (u32, &'a str, f64, Box<dyn Fn() -> Outcome + 'a>);
    let checks: Vec<Check> = vec![
        (1, "BLX respect", 5.0, Box::new(blx_respect)),
        (2, "self-cross fixpoint", 5.0, Box::new(self_cross)),
        (3, "bag partition", 10.0, Box::new(bag_partition)),
        (4, "CCM vs quasi-constant mutation", 10.0, Box::new(ccm_contrast)),
        (5, "TPD analytics", 5.0, Box::new(tpd_analytics)),
        (6, "AUC oracle", 5.0, Box::new(auc_oracle)),
        (7, "end-to-end desk-scale run", 6.0 * 600.0, Box::new(|| end_to_end(&e2e))),
        (8, "determinism", 3.0 * 600.0, Box::new(|| determinism(&e2e))),
        (9, "preprocessing pins", 1.0, Box::new(preprocessing_pins)),
    ];
    let mut unexpected = Vec::new();
    for (id, name, budget, check) in checks {
        let t0 = Instant::now();
        let out = check();
        let elapsed = t0.elapsed();
        let pass = out.pass && within(elapsed, budget);
        println!(
            "criterion {id} {}: {name}: {} ({:.2}s, budget {budget}s)",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64()
        );
        if !pass && id != 1 {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
