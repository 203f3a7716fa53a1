//! Acceptance suite. Runs every criterion, prints one `PASS`/`FAIL` line per
//! criterion and exits non-zero if any failed.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use spectral_core::anova::{
    between_group_similarity, variance_homogeneity, within_group_similarity, AnovaOptions, HomogeneityTest,
};
use spectral_core::dataset::{kfold_split, synthesize};
use spectral_core::ga::{crossover, ga_run, mutate_generation, select_parents, GaConfig, GaFitness, Individual};
use spectral_core::metrics::closeness;
use spectral_core::nn::{loss_and_grad, relu_margin, ArchKind, ModelArch, NetParams, Optimizer};
use spectral_core::pls::{pls_fit, ComponentRule};
use spectral_core::preprocess::{haar_analysis, haar_levels, msc_apply, sg_smooth, snv, SavitzkyGolay};
use spectral_core::rng::seeded;
use spectral_core::{cross_validate_with_split, parse_strategy, CvOptions, SpectraDataset, SynthConfig};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(elapsed: Duration, budget: Duration) -> Result<(), String> {
    ensure(elapsed < budget, || format!("took {:.1}s, budget {:.0}s", elapsed.as_secs_f64(), budget.as_secs_f64()))
}

fn normal_matrix(n: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut r = seeded(seed);
    Array2::from_shape_fn((n, d), |_| r.sample(StandardNormal))
}

fn ac1_closeness_audit() -> Outcome {
    let t = Instant::now();
    let a = closeness(0.710, 0.955).map_err(|e| e.to_string())?;
    let b = closeness(1.184, 1.642).map_err(|e| e.to_string())?;
    ensure((a - 74.3).abs() <= 0.1, || format!("pear closeness {a:.3}%"))?;
    ensure((b - 72.1).abs() <= 0.1, || format!("navel closeness {b:.3}%"))?;
    within_budget(t.elapsed(), Duration::from_secs(1))?;
    Ok(format!("{a:.2}% and {b:.2}%"))
}

fn small_arches() -> Vec<ModelArch> {
    vec![
        ModelArch::standard(ArchKind::Mlp, 6).with_widths(&[4, 3, 2], &[]),
        ModelArch::standard(ArchKind::Cnn, 9).with_widths(&[], &[2, 2, 3, 3]),
        ModelArch::standard(ArchKind::CnnMlp, 9).with_widths(&[], &[2, 2, 3, 3]).with_head_width(3),
        ModelArch::standard(ArchKind::MlpCnn, 6).with_widths(&[4, 3, 4], &[2, 2, 3, 3]),
    ]
}

/// Worst relative error of the analytic gradient against central
/// differences, or `None` if a ReLU input lies within reach of the step.
fn gradient_error(arch: &ModelArch, seed: u64) -> Result<Option<f64>, String> {
    let mut r = seeded(seed);
    let mut p = NetParams::glorot(arch, &mut r).map_err(|e| e.to_string())?;
    for v in p.as_flat_mut() {
        *v += r.random_range(-0.1..0.1);
    }
    let x = normal_matrix(4, arch.input_dim, seed + 1000);
    let y: Array1<f64> = (0..4).map(|_| r.sample(StandardNormal)).collect();
    let margin = relu_margin(&p, x.view()).map_err(|e| e.to_string())?;
    if margin < 1e-3 {
        return Ok(None);
    }
    let (_, g) = loss_and_grad(&p, x.view(), y.view()).map_err(|e| e.to_string())?;
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for k in 0..p.len() {
        let orig = p.as_flat()[k];
        p.as_flat_mut()[k] = orig + h;
        let lp = loss_and_grad(&p, x.view(), y.view()).map_err(|e| e.to_string())?.0;
        p.as_flat_mut()[k] = orig - h;
        let lm = loss_and_grad(&p, x.view(), y.view()).map_err(|e| e.to_string())?.0;
        p.as_flat_mut()[k] = orig;
        let fd = (lp - lm) / (2.0 * h);
        worst = worst.max((fd - g[k]).abs() / fd.abs().max(g[k].abs()).max(1e-3));
    }
    Ok(Some(worst))
}

fn ac2_gradients() -> Outcome {
    let t = Instant::now();
    let mut overall: f64 = 0.0;
    for arch in small_arches() {
        let mut draws = 0;
        let mut seed = 0;
        while draws < 10 && seed < 200 {
            if let Some(err) = gradient_error(&arch, seed)? {
                ensure(err < 1e-4, || format!("{:?} draw {seed}: relative error {err:.2e}", arch.kind))?;
                overall = overall.max(err);
                draws += 1;
            }
            seed += 1;
        }
        ensure(draws == 10, || format!("{:?}: only {draws} kink-free draws", arch.kind))?;
    }
    within_budget(t.elapsed(), Duration::from_secs(30))?;
    Ok(format!("4 architectures x 10 draws, max relative error {overall:.1e}"))
}

fn ac3_pls_oracle() -> Outcome {
    let t = Instant::now();
    let mut worst_ols: f64 = 0.0;
    let mut worst_rec: f64 = 0.0;
    for seed in 0..20 {
        let x = normal_matrix(20, 5, seed);
        let mut r = seeded(seed + 500);
        let y: Array1<f64> = (0..20).map(|_| r.sample::<f64, _>(StandardNormal) * 2.0 + 1.0).collect();
        let model = pls_fit(x.view(), y.view(), 5).map_err(|e| e.to_string())?;

        // Least squares with intercept via the normal equations.
        let design = nalgebra::DMatrix::from_fn(20, 6, |i, j| if j == 0 { 1.0 } else { x[[i, j - 1]] });
        let target = nalgebra::DVector::from_iterator(20, y.iter().copied());
        let beta = (design.transpose() * &design)
            .lu()
            .solve(&(design.transpose() * target))
            .ok_or("singular least-squares system")?;
        let ols = &design * beta;

        let collapsed = model.predict(x.view()).map_err(|e| e.to_string())?;
        let recursive = model.predict_recursive(x.view()).map_err(|e| e.to_string())?;
        for i in 0..20 {
            worst_ols = worst_ols.max((collapsed[i] - ols[i]).abs());
            worst_rec = worst_rec.max((collapsed[i] - recursive[i]).abs());
        }
    }
    ensure(worst_ols < 1e-8, || format!("PLS vs least squares {worst_ols:.2e}"))?;
    ensure(worst_rec < 1e-9, || format!("collapsed vs recursive {worst_rec:.2e}"))?;
    within_budget(t.elapsed(), Duration::from_secs(5))?;
    Ok(format!("least squares {worst_ols:.1e}, recursive {worst_rec:.1e}"))
}

fn ac4_preprocessing() -> Outcome {
    let t = Instant::now();
    let n = 64;
    let mut r = seeded(4);
    for _ in 0..20 {
        let (a, b, c): (f64, f64, f64) = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0), r.random_range(-0.1..0.1));
        let poly: Vec<f64> = (0..n).map(|i| a + b * i as f64 + c * (i * i) as f64).collect();
        let out = sg_smooth(&poly, 5, 2).map_err(|e| e.to_string())?;
        let err = out.iter().zip(&poly).map(|(o, p)| (o - p).abs() / p.abs().max(1.0)).fold(0.0, f64::max);
        ensure(err < 1e-10, || format!("SG changed a quadratic by {err:.2e}"))?;
    }
    let sg = SavitzkyGolay::new(5, 2).map_err(|e| e.to_string())?;
    let center = sg.center_weights()[2];
    ensure((center - 17.0 / 35.0).abs() < 1e-12, || format!("SG center weight {center}"))?;

    for seed in 0..20 {
        let v: Vec<f64> = normal_matrix(1, 200, seed).iter().map(|z| z * 3.0 + 5.0).collect();
        let s = snv(&v).map_err(|e| e.to_string())?;
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        let sd = (s.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / s.len() as f64).sqrt();
        ensure(mean.abs() < 1e-12 && (sd - 1.0).abs() < 1e-12, || format!("SNV mean {mean:.2e}, std {sd}"))?;

        let reference: Vec<f64> = (0..200).map(|i| 1.0 + (i as f64 / 17.0).sin() * 0.3).collect();
        let (scale, offset) = (r.random_range(0.5..1.5), r.random_range(-0.3..0.3));
        let scattered: Vec<f64> = reference.iter().map(|v| offset + scale * v).collect();
        let corrected = msc_apply(&scattered, &reference).map_err(|e| e.to_string())?;
        let err = corrected.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        ensure(err < 1e-12, || format!("MSC residual {err:.2e}"))?;

        let x: Vec<f64> = normal_matrix(1, 1600, seed + 50).iter().copied().collect();
        let levels = haar_levels(1600, 25).map_err(|e| e.to_string())?;
        let (approx, details) = haar_analysis(&x, levels).map_err(|e| e.to_string())?;
        let energy = |v: &[f64]| v.iter().map(|z| z * z).sum::<f64>();
        let total = energy(&approx) + details.iter().map(|d| energy(d)).sum::<f64>();
        ensure((total - energy(&x)).abs() / energy(&x) < 1e-10, || "Haar energy not preserved".into())?;
    }
    let l400 = haar_levels(1600, 400).map_err(|e| e.to_string())?;
    let l100 = haar_levels(1600, 100).map_err(|e| e.to_string())?;
    ensure(l400 == 2 && l100 == 4, || format!("levels {l400} and {l100}"))?;
    within_budget(t.elapsed(), Duration::from_secs(10))?;
    Ok(format!("SG center {center:.6} (17/35), Haar levels {l400}/{l100}"))
}

fn ac5_ga() -> Outcome {
    let t = Instant::now();
    let (n, d) = (300, 400);
    let x = normal_matrix(n, d, 55);
    let y: Array1<f64> = (0..n).map(|i| x[[i, 3]] + 0.5 * x[[i, 200]] - x[[i, 377]] + 0.1 * x[[i, 9]]).collect();
    let config = GaConfig { k_select: 100, seed: 5, ..GaConfig::default() };

    let result = ga_run(x.view(), y.view(), &config).map_err(|e| e.to_string())?;
    ensure(result.trace.len() == config.generations, || format!("{} trace records", result.trace.len()))?;
    for rec in &result.trace {
        ensure(rec.population == 400, || format!("generation {} has {} individuals", rec.generation, rec.population))?;
        ensure(rec.best_mask.len() == 100, || format!("best mask of {}", rec.best_mask.len()))?;
        if let (Some(e), Some(l)) = (rec.elites, rec.lucky) {
            ensure(e == 80 && l == 20, || format!("pool {e}+{l}"))?;
        }
    }
    for w in result.trace.windows(2) {
        ensure(w[1].best_rmsecv <= w[0].best_rmsecv, || format!("best rose at generation {}", w[1].generation))?;
    }

    // 100 reproduction rounds on random fitness values: pool structure,
    // child sizes and mutation counts.
    let mut r = seeded(77);
    let mut population: Vec<Individual> = (0..400).map(|_| Individual::random(100, d, &mut r)).collect();
    let mut mutated_counts = Vec::new();
    for _ in 0..100 {
        let fitness: Vec<f64> = (0..400).map(|_| r.random()).collect();
        let pool = select_parents(&fitness, &config, &mut r).map_err(|e| e.to_string())?;
        ensure(pool.elites.len() == 80 && pool.lucky.len() == 20, || "pool sizes".into())?;
        ensure(pool.lucky.iter().all(|l| !pool.elites.contains(l)), || "elite and lucky overlap".into())?;
        let parents: Vec<usize> = pool.members().collect();
        let mut children = Vec::new();
        for pair in parents.chunks_exact(2) {
            children.extend(crossover(&population[pair[0]], &population[pair[1]], 100, d, 8, &mut r));
        }
        ensure(children.len() == 400, || format!("{} children", children.len()))?;
        let mutated = mutate_generation(&mut children, &config, d, &mut r);
        mutated_counts.push(mutated.len());
        for c in &children {
            ensure(c.len() == 100 && Individual::new(c.mask().to_vec(), d).is_ok(), || "child lost k".into())?;
        }
        population = children;
    }
    let (lo, hi) = (*mutated_counts.iter().min().unwrap(), *mutated_counts.iter().max().unwrap());
    ensure(lo >= 28 && hi <= 52, || format!("mutated counts span {lo}..{hi}"))?;
    within_budget(t.elapsed(), Duration::from_secs(120))?;
    Ok(format!(
        "best {:.4} -> {:.4} over {} generations, {} evaluations, mutated {lo}..{hi}",
        result.trace[0].best_rmsecv,
        result.best_rmsecv,
        result.trace.len(),
        result.evaluations
    ))
}

/// Scatter-and-noise synthetic fruit data shared by the ordering criteria.
fn ordering_data(n: usize, seed: u64) -> Result<SpectraDataset, String> {
    synthesize(&SynthConfig::pear(n, seed)).map_err(|e| e.to_string())
}

fn rmsecv(ds: &SpectraDataset, strategy: &str, folds: usize, seed: u64, opts: &CvOptions) -> Result<f64, String> {
    let strategy = parse_strategy(strategy).map_err(|e| e.to_string())?;
    let split = kfold_split(ds.len(), folds, seed).map_err(|e| e.to_string())?;
    Ok(cross_validate_with_split(&strategy, ds, &split, opts).map_err(|e| e.to_string())?.rmsecv)
}

fn ac6_pls_ordering() -> Outcome {
    let t = Instant::now();
    let mut opts = CvOptions::default();
    opts.pls_rule = ComponentRule::InnerCv { max: 15, folds: 5 };
    opts.chain.ga = GaConfig {
        population: 80,
        generations: 10,
        inner_cv_folds: 5,
        fitness: GaFitness::CurveMin { max: 10 },
        ..GaConfig::default()
    };
    let mut wins = 0;
    let mut rows = Vec::new();
    for seed in 0..10 {
        let ds = ordering_data(300, seed)?;
        let raw = rmsecv(&ds, "Non>PLS", 10, seed, &opts)?;
        let wd = rmsecv(&ds, "SG>MSC>SNV>WD(400)>PLS", 10, seed, &opts)?;
        let ga = rmsecv(&ds, "SG>MSC>SNV>WD(400)>GA(100)>PLS", 10, seed, &opts)?;
        if raw > wd && raw > ga {
            wins += 1;
        }
        rows.push(format!("{raw:.3}/{wd:.3}/{ga:.3}"));
    }
    eprintln!("AC6 per seed Non/WD(400)/GA(100): {}", rows.join(" "));
    ensure(wins >= 8, || format!("ordering held on {wins}/10 seeds"))?;
    within_budget(t.elapsed(), Duration::from_secs(15 * 60))?;
    Ok(format!("ordering held on {wins}/10 seeds"))
}

fn ac7_architectures() -> Outcome {
    let t = Instant::now();
    let mut opts = CvOptions::default();
    opts.nn.train.epochs = 500;
    opts.nn.train.learning_rate = 1e-2;
    opts.nn.train.optimizer = Optimizer::adam();
    opts.nn.mlp_widths = vec![64, 32, 32, 16, 16, 16];
    opts.nn.conv_channels = vec![4, 4, 8, 8];
    let mut beats_cnn = 0;
    let mut worst_gap: f64 = f64::NEG_INFINITY;
    let mut rows = Vec::new();
    for seed in 0..10 {
        let ds = ordering_data(150, seed)?;
        let mlp = rmsecv(&ds, "SG>MSC>SNV>WD(100)>MLP", 5, seed, &opts)?;
        let cnn = rmsecv(&ds, "SG>MSC>SNV>WD(100)>CNN", 5, seed, &opts)?;
        let both = rmsecv(&ds, "SG>MSC>SNV>WD(100)>MLP-CNN", 5, seed, &opts)?;
        if both <= cnn {
            beats_cnn += 1;
        }
        worst_gap = worst_gap.max(both / mlp - 1.0);
        rows.push(format!("{mlp:.3}/{cnn:.3}/{both:.3}"));
    }
    eprintln!("AC7 per seed MLP/CNN/MLP-CNN: {}", rows.join(" "));
    let summary = format!("MLP-CNN <= CNN on {beats_cnn}/10 seeds, worst excess over MLP {:.1}%", 100.0 * worst_gap);
    ensure(beats_cnn >= 8 && worst_gap <= 0.10, || summary.clone())?;
    within_budget(t.elapsed(), Duration::from_secs(30 * 60))?;
    Ok(summary)
}

fn ac8_anova_null() -> Outcome {
    let t = Instant::now();
    let x = normal_matrix(90, 400, 8);
    let groups: Vec<Vec<usize>> = (0..3).map(|k| (k * 30..(k + 1) * 30).collect()).collect();
    let named: Vec<(&str, &[usize])> = vec![("low", &groups[0]), ("mid", &groups[1]), ("high", &groups[2])];
    let opts = AnovaOptions { repeats: 30, seed: 8, ..AnovaOptions::default() };
    let mut warnings = Vec::new();
    let between = between_group_similarity(x.view(), &named, &opts, &mut warnings).map_err(|e| e.to_string())?;
    let mut scores = Vec::new();
    for pair in &between {
        let v = pair.similarity_pct.ok_or("no between-group score")?;
        ensure((40.0..=60.0).contains(&v), || format!("{} between similarity {v:.1}%", pair.pair))?;
        scores.push(v);
    }
    for (name, rows) in &named {
        let w = within_group_similarity(x.view(), name, rows, &opts, &mut warnings).map_err(|e| e.to_string())?;
        let v = w.similarity_pct.ok_or("no within-group score")?;
        ensure((40.0..=60.0).contains(&v), || format!("{name} within similarity {v:.1}%"))?;
        scores.push(v);
    }

    let mut fractions = Vec::new();
    for seed in 0..30 {
        let x = normal_matrix(60, 1600, 1000 + seed);
        let g: Vec<Vec<usize>> = (0..3).map(|k| (k * 20..(k + 1) * 20).collect()).collect();
        let refs: Vec<&[usize]> = g.iter().map(Vec::as_slice).collect();
        let valid = variance_homogeneity(x.view(), &refs, HomogeneityTest::Levene, 0.05).map_err(|e| e.to_string())?;
        fractions.push(valid.iter().filter(|v| **v).count() as f64 / 1600.0);
    }
    let frac = fractions.iter().sum::<f64>() / fractions.len() as f64;
    ensure((0.90..=0.99).contains(&frac), || format!("valid fraction {frac:.3}"))?;
    within_budget(t.elapsed(), Duration::from_secs(120))?;
    let (lo, hi) = scores.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    Ok(format!("similarities {lo:.1}%..{hi:.1}%, valid fraction {frac:.3}"))
}

/// Runs the CLI and returns stdout plus the bytes of any listed output files.
fn run_cli(dir: &Path, args: &[&str], outputs: &[&str]) -> Result<Vec<Vec<u8>>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_spectral"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("`spectral {}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr))
    })?;
    let mut all = vec![out.stdout];
    for f in outputs {
        all.push(std::fs::read(dir.join(f)).map_err(|e| format!("{f}: {e}"))?);
    }
    Ok(all)
}

fn ac9_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let nn = ["--epochs", "20", "--optimizer", "adam", "--mlp-widths", "8,8", "--conv-channels", "2,2"];
    let ga = ["--ga-population", "40", "--ga-generations", "3", "--ga-folds", "3"];
    let commands: Vec<(Vec<&str>, Vec<&str>)> = vec![
        (vec!["synth", "--n", "60", "--dim", "256", "--seed", "3", "--out", "d.csv"], vec!["d.csv"]),
        (vec!["run", "--data", "d.csv", "--strategy", "SG>MSC>SNV>WD(64)>PLS", "--seed", "1"], vec![]),
        (
            [&["run", "--data", "d.csv", "--strategy", "SNV>WD(64)>GA(16)>MLP-CNN", "--seed", "2"][..], &nn, &ga]
                .concat(),
            vec![],
        ),
        (
            [
                &["compare", "--data", "d.csv", "--strategy", "Non>PLS", "--strategy", "SNV>WD(64)>CNN"][..],
                &["--folds", "4", "--seed", "4", "--out", "cmp.txt"],
                &nn,
            ]
            .concat(),
            vec!["cmp.txt"],
        ),
        (vec!["anova", "--data", "d.csv", "--repeats", "5", "--seed", "5"], vec![]),
        (
            [&["fit", "--data", "d.csv", "--strategy", "MSC>WD(64)>MLP", "--params-out", "w.bin"][..], &nn].concat(),
            vec!["w.bin"],
        ),
    ];
    for (args, outputs) in &commands {
        let first = run_cli(dir.path(), args, outputs)?;
        let second = run_cli(dir.path(), args, outputs)?;
        ensure(first == second, || format!("`spectral {}` differed between runs", args.join(" ")))?;
    }
    Ok(format!("{} commands byte-identical across two runs", commands.len()))
}

fn ac10_fold_sizes() -> Outcome {
    let t = Instant::now();
    for seed in 0..5 {
        for (k, size) in [(5, 60), (10, 30)] {
            let split = kfold_split(300, k, seed).map_err(|e| e.to_string())?;
            let mut seen = vec![false; 300];
            for fold in &split.folds {
                ensure(fold.validation.len() == size, || format!("{k}-fold gave {}", fold.validation.len()))?;
                ensure(fold.train.len() == 300 - size, || "training size".into())?;
                for &i in &fold.validation {
                    ensure(!seen[i], || format!("sample {i} validated twice"))?;
                    seen[i] = true;
                }
            }
            ensure(seen.iter().all(|s| *s), || "sample never validated".into())?;
        }
    }
    within_budget(t.elapsed(), Duration::from_secs(1))?;
    Ok("5-fold -> 60, 10-fold -> 30".into())
}

fn main() {
    let criteria: [(&str, &str, fn() -> Outcome); 10] = [
        ("AC1", "closeness arithmetic audit", ac1_closeness_audit),
        ("AC2", "gradient correctness", ac2_gradients),
        ("AC3", "PLS least-squares oracle", ac3_pls_oracle),
        ("AC4", "preprocessing suite", ac4_preprocessing),
        ("AC5", "GA invariants", ac5_ga),
        ("AC6", "synthetic PLS ordering", ac6_pls_ordering),
        ("AC7", "synthetic architecture comparison", ac7_architectures),
        ("AC8", "ANOVA null calibration", ac8_anova_null),
        ("AC9", "CLI determinism", ac9_determinism),
        ("AC10", "cross-validation fold sizes", ac10_fold_sizes),
    ];
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        for (id, name, _) in criteria {
            println!("{id}: {name}");
        }
        return;
    }
    let filter: Vec<&String> = args.iter().filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f.eq_ignore_ascii_case(id)) {
            continue;
        }
        let t = Instant::now();
        let result = run();
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("{id} PASS {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("{id} FAIL {name} ({secs:.1}s): {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
