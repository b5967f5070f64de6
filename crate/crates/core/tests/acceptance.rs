//! Acceptance suite. Prints one `[PASS]` or `[FAIL]` line per criterion and
//! exits nonzero when any criterion fails.
//!
//! Run with `cargo test -p wtaenn --test acceptance`. Set `WTAENN_IRIS_CSV` to
//! use another Iris-format file instead of the bundled fixture.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, RngAlgorithm, TestRng, TestRunner};

use wtaenn::bench::{
    least_squares_oracle, run_experiment, DataSource, ExpansionConfig, Experiment, ModelConfig,
    RunConfig, SplitConfig,
};
use wtaenn::data::{gen_function, CsvSchema, FeatureRange, Noise, TargetFunction, Targets};
use wtaenn::ga::{self, decode, encode, GaConfig};
use wtaenn::random::{seeded, uniform, WtaRng};
use wtaenn::select::{kwta, solve_box_lp, solve_ksum_lp, solve_simplex_lp, wta};
use wtaenn::model::EmotionalUnit;
use wtaenn::{ExpansionSpec, Mode, ModelShape, OutputActivation, WtaennModel};

const PROPERTY_CASES: u32 = 1000;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

type Check = fn() -> Result<Outcome, String>;

fn main() -> ExitCode {
    let criteria: [(&str, Check); 10] = [
        ("C1 curve fitting", c1_curve_fitting),
        ("C2 oracle dominance and proximity", c2_oracle_proximity),
        ("C3 representability", c3_representability),
        ("C4 classification", c4_classification),
        ("C5 k-selector", c5_kselector),
        ("C6 linear programs", c6_linear_programs),
        ("C7 prediction pipeline", c7_prediction),
        ("C8 noise studies", c8_noise),
        ("C9 determinism", c9_determinism),
        ("C10 invariants", c10_invariants),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let outcome = check().unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] {name}: {} ({:.1}s)",
            outcome.detail,
            started.elapsed().as_secs_f64()
        );
        failures += usize::from(!outcome.pass);
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn config(seed: u64, data: DataSource, order: usize, model: ModelConfig, ga: GaConfig) -> RunConfig {
    RunConfig {
        format_version: 1,
        seed,
        data,
        expansion: ExpansionConfig {
            order,
            include_bias: true,
        },
        model,
        ga,
        split: SplitConfig::default(),
        density: None,
    }
}

fn units(m: usize) -> ModelConfig {
    ModelConfig {
        units: Some(m),
        units_per_class: None,
        activation: OutputActivation::Identity,
    }
}

fn f1(n_samples: usize) -> DataSource {
    DataSource::Function {
        function: TargetFunction::F1,
        n_samples,
    }
}

fn run(config: &RunConfig) -> Result<(Experiment, f64), String> {
    let started = Instant::now();
    let exp = run_experiment(config).map_err(|e| e.to_string())?;
    Ok((exp, started.elapsed().as_secs_f64()))
}

fn metric(exp: &Experiment, name: &str) -> Result<f64, String> {
    exp.report
        .metrics
        .get(name)
        .copied()
        .ok_or_else(|| format!("report has no {name}"))
}

fn list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn c1_curve_fitting() -> Result<Outcome, String> {
    let mut rmse = Vec::new();
    let mut slowest: f64 = 0.0;
    for seed in 0..3 {
        let (exp, secs) = run(&config(seed, f1(100), 3, units(4), GaConfig::default()))?;
        rmse.push(metric(&exp, "rmse")?);
        slowest = slowest.max(secs);
    }
    let best = rmse.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Outcome::new(
        best <= 0.05 && slowest <= 60.0,
        format!(
            "test rmse {} best {best:.4} (<= 0.05), slowest seed {slowest:.2}s (<= 60s)",
            list(&rmse)
        ),
    ))
}

/// Per seed: (GA training RMSE, oracle RMSE on the same training split).
fn oracle_pairs(data: DataSource) -> Result<Vec<(f64, f64)>, String> {
    (0..5)
        .map(|seed| {
            let (exp, _) = run(&config(seed, data.clone(), 3, units(1), GaConfig::default()))?;
            let oracle = exp.report.oracle.as_ref().ok_or("report has no oracle")?;
            Ok((metric(&exp, "train_rmse")?, oracle.train_rmse))
        })
        .collect()
}

fn c2_oracle_proximity() -> Result<Outcome, String> {
    let pairs = oracle_pairs(f1(100))?;
    let dominated = pairs.iter().all(|&(ga, oracle)| ga >= oracle - 1e-9);
    let best = pairs
        .iter()
        .copied()
        .min_by(|a, b| (a.0 / a.1).total_cmp(&(b.0 / b.1)))
        .unwrap();
    let proximate = best.0 >= best.1 && best.0 <= 1.10 * best.1;

    let noisy = oracle_pairs(DataSource::Noisy {
        function: TargetFunction::F1,
        noise: Noise::Constant { sigma: 0.1 },
        n_samples: 100,
    })?;
    let noisy_ratios: Vec<f64> = noisy.iter().map(|(g, o)| g / o).collect();

    Ok(Outcome::new(
        dominated && proximate,
        format!(
            "noiseless f1: best GA train rmse {:.3e} vs oracle {:.3e}, ratio {:.3e} (<= 1.10); \
             dominance {}; noisy f1 sigma=0.1 ratios {} (diagnostic)",
            best.0,
            best.1,
            best.0 / best.1,
            if dominated { "holds" } else { "violated" },
            list(&noisy_ratios)
        ),
    ))
}

fn c3_representability() -> Result<Outcome, String> {
    let data = gen_function(TargetFunction::F1, 100, 0).map_err(|e| e.to_string())?;
    let spec = ExpansionSpec::new(1, 2).map_err(|e| e.to_string())?;
    let fit = least_squares_oracle(&data, &spec).map_err(|e| e.to_string())?;
    Ok(Outcome::new(
        fit.rmse <= 1e-9,
        format!("oracle rmse at K=2 is {:.3e} (<= 1e-9)", fit.rmse),
    ))
}

fn iris_path() -> PathBuf {
    std::env::var_os("WTAENN_IRIS_CSV")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/iris.csv"))
}

fn iris() -> DataSource {
    DataSource::Csv {
        path: iris_path(),
        schema: CsvSchema {
            target_column: None,
            header: None,
            mode: Mode::Classification,
        },
    }
}

fn per_class(n: usize) -> ModelConfig {
    ModelConfig {
        units: None,
        units_per_class: Some(n),
        activation: OutputActivation::Identity,
    }
}

fn c4_classification() -> Result<Outcome, String> {
    let mut acc = Vec::new();
    let mut slowest: f64 = 0.0;
    for seed in 0..5 {
        let (exp, secs) = run(&config(seed, iris(), 1, per_class(2), GaConfig::default()))?;
        let Targets::Classification { labels, .. } = exp.test.targets() else {
            return Err("expected class labels".into());
        };
        let present = (0..3).all(|c| labels.contains(&c));
        if !present || exp.model.units().len() != 6 {
            return Err("expected all 3 classes in the test split and 6 units".into());
        }
        acc.push(metric(&exp, "accuracy")?);
        slowest = slowest.max(secs);
    }
    let med = median(&acc);
    Ok(Outcome::new(
        med >= 0.90 && slowest <= 120.0,
        format!(
            "{}: test accuracy {} median {med:.4} (>= 0.90), slowest seed {slowest:.2}s (<= 120s)",
            iris_path().display(),
            list(&acc)
        ),
    ))
}

/// Random scores; every other instance draws small integers so ties are common.
fn scores(rng: &mut WtaRng, n: usize, tied: bool) -> Vec<f64> {
    (0..n)
        .map(|_| {
            if tied {
                (uniform(rng) * 7.0).floor() - 3.0
            } else {
                uniform(rng) * 20.0 - 10.0
            }
        })
        .collect()
}

fn below(rng: &mut WtaRng, n: usize) -> usize {
    ((uniform(rng) * n as f64) as usize).min(n - 1)
}

fn sort_oracle(x: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

fn c5_kselector() -> Result<Outcome, String> {
    let mut rng = seeded(5);
    let instances: Vec<(Vec<f64>, usize)> = (0..1000)
        .map(|i| {
            let n = 1 + below(&mut rng, 64);
            let k = 1 + below(&mut rng, n);
            (scores(&mut rng, n, i % 2 == 0), k)
        })
        .collect();
    let started = Instant::now();
    let mut exact = 0;
    for (x, k) in &instances {
        let got = kwta(x, *k).map_err(|e| e.to_string())?;
        exact += usize::from(got.winners == sort_oracle(x, *k));
    }
    let secs = started.elapsed().as_secs_f64();
    Ok(Outcome::new(
        exact == 1000 && secs < 1.0,
        format!("{exact}/1000 winner sets equal the sort oracle (half with ties) in {secs:.4}s (< 1s)"),
    ))
}

fn dot(c: &[f64], x: &[f64]) -> f64 {
    c.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// First maximiser over `candidates`, in enumeration order.
fn enumerate_best(c: &[f64], candidates: impl Iterator<Item = Vec<f64>>) -> (Vec<f64>, f64) {
    let mut best: Option<(Vec<f64>, f64)> = None;
    for x in candidates {
        let value = dot(c, &x);
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((x, value));
        }
    }
    best.expect("at least one candidate")
}

fn c6_linear_programs() -> Result<Outcome, String> {
    let mut rng = seeded(6);
    let mut simplex_ok = 0;
    for i in 0..1000 {
        let n = 1 + below(&mut rng, 64);
        let c = scores(&mut rng, n, i % 2 == 0);
        let vertices = (0..n).map(|j| {
            let mut x = vec![0.0; n];
            x[j] = 1.0;
            x
        });
        let (x, obj) = enumerate_best(&c, vertices);
        let got = solve_simplex_lp(&c).map_err(|e| e.to_string())?;
        simplex_ok += usize::from(got.x == x && got.objective.to_bits() == obj.to_bits());
    }

    let mut box_ok = 0;
    for i in 0..1000 {
        let n = 1 + below(&mut rng, 10);
        let c = scores(&mut rng, n, i % 2 == 0);
        let lower: Vec<f64> = (0..n).map(|_| uniform(&mut rng) * 4.0 - 2.0).collect();
        let upper: Vec<f64> = lower.iter().map(|l| l + uniform(&mut rng) * 3.0).collect();
        // bit j of the mask picks the upper bound of coordinate j
        let corners = (0..1usize << n).map(|mask| {
            (0..n)
                .map(|j| if mask >> j & 1 == 1 { upper[j] } else { lower[j] })
                .collect()
        });
        let (x, obj) = enumerate_best(&c, corners);
        let got = solve_box_lp(&c, &lower, &upper).map_err(|e| e.to_string())?;
        box_ok += usize::from(got.x == x && got.objective.to_bits() == obj.to_bits());
    }

    let mut ksum_ok = 0;
    for i in 0..200 {
        let n = 1 + below(&mut rng, 12);
        let k = 1 + below(&mut rng, n);
        let c = scores(&mut rng, n, i % 2 == 0);
        // masks ordered so the lexicographically smallest index set comes first
        let mut masks: Vec<usize> = (0..1usize << n).filter(|m| m.count_ones() as usize == k).collect();
        masks.sort_by_key(|&m| (0..n).filter(|j| m >> j & 1 == 1).collect::<Vec<_>>());
        let subsets = masks
            .into_iter()
            .map(|m| (0..n).map(|j| (m >> j & 1) as f64).collect());
        let (x, obj) = enumerate_best(&c, subsets);
        let got = solve_ksum_lp(&c, k).map_err(|e| e.to_string())?;
        ksum_ok += usize::from(got.x == x && got.objective.to_bits() == obj.to_bits());
    }

    Ok(Outcome::new(
        simplex_ok == 1000 && box_ok == 1000 && ksum_ok == 200,
        format!(
            "simplex {simplex_ok}/1000 vs vertices, box {box_ok}/1000 vs corners, \
             ksum {ksum_ok}/200 vs subsets"
        ),
    ))
}

/// Budget for the chaotic series; the default 200 generations stop short.
fn prediction_ga() -> GaConfig {
    GaConfig {
        population_size: 100,
        generations: 2000,
        sigma_decay: 0.998,
        fitness_stagnation_patience: 2000,
        ..GaConfig::default()
    }
}

fn c7_prediction() -> Result<Outcome, String> {
    let data = DataSource::MackeyGlass {
        length: 1500,
        window: 4,
        horizon: 1,
    };
    let mut nrmse = Vec::new();
    let mut slowest: f64 = 0.0;
    for seed in 0..3 {
        let (exp, secs) = run(&config(seed, data.clone(), 2, units(4), prediction_ga()))?;
        nrmse.push(metric(&exp, "nrmse")?);
        slowest = slowest.max(secs);
    }
    let worst = nrmse.iter().copied().fold(0.0, f64::max);
    Ok(Outcome::new(
        worst <= 0.35 && slowest <= 120.0,
        format!(
            "test nrmse {} worst {worst:.4} (<= 0.35), slowest seed {slowest:.2}s (<= 120s)",
            list(&nrmse)
        ),
    ))
}

fn noisy_run(noise: Noise) -> Result<Experiment, String> {
    let data = DataSource::Noisy {
        function: TargetFunction::F1,
        noise,
        n_samples: 10_000,
    };
    Ok(run(&config(0, data, 2, units(1), GaConfig::default()))?.0)
}

fn c8_noise() -> Result<Outcome, String> {
    let constant = noisy_run(Noise::Constant { sigma: 0.1 })?;
    let residual_std = metric(&constant, "residual_std")?;
    let constant_ok = (0.08..=0.13).contains(&residual_std);

    let hetero = noisy_run(Noise::Heteroscedastic { sigma0: 0.2 })?;
    let test = &hetero.test;
    let Targets::Regression(y) = test.targets() else {
        return Err("expected regression targets".into());
    };
    let predictions = hetero
        .model
        .predict_batch(test.inputs())
        .map_err(|e| e.to_string())?;
    let mut bins: [Vec<f64>; 3] = Default::default();
    for (i, p) in predictions.iter().enumerate() {
        let x = test.raw_input(i)[0];
        let bin = ((x * 3.0) as usize).min(2);
        bins[bin].push(y[i] - p.output.as_f64());
    }
    let stds: Vec<f64> = bins.iter().map(|b| wtaenn::bench::metrics::std_dev(b)).collect();
    let increasing = stds.windows(2).all(|w| w[1] > w[0]);

    Ok(Outcome::new(
        constant_ok && increasing,
        format!(
            "constant sigma=0.1 residual std {residual_std:.4} (in [0.08, 0.13]); \
             heteroscedastic sigma0=0.2 residual std by x-bin {} ({})",
            list(&stds),
            if increasing { "increasing" } else { "not increasing" }
        ),
    ))
}

/// Model JSON, metric bit patterns and trace CSV.
type Fingerprint = (String, Vec<(String, u64)>, String);

fn fingerprint(exp: &Experiment) -> Result<Fingerprint, String> {
    let metrics = exp
        .report
        .metrics
        .iter()
        .map(|(k, v)| (k.clone(), v.to_bits()))
        .collect();
    let mut trace = Vec::new();
    exp.trace.write_csv(&mut trace).map_err(|e| e.to_string())?;
    Ok((
        exp.model.to_json().map_err(|e| e.to_string())?,
        metrics,
        String::from_utf8(trace).map_err(|e| e.to_string())?,
    ))
}

fn c9_determinism() -> Result<Outcome, String> {
    let ga = GaConfig {
        generations: 80,
        ..GaConfig::default()
    };
    let configs = [
        ("f1", config(11, f1(120), 3, units(4), ga.clone())),
        ("iris", config(12, iris(), 1, per_class(2), ga)),
    ];
    let mut identical = 0;
    let mut total = 0;
    for (_, cfg) in &configs {
        let first = fingerprint(&run(cfg)?.0)?;
        let second = fingerprint(&run(cfg)?.0)?;
        let mut sequential = cfg.clone();
        sequential.ga.parallel = false;
        let third = fingerprint(&run(&sequential)?.0)?;
        identical += usize::from(first == second) + usize::from(first == third);
        total += 2;
    }
    Ok(Outcome::new(
        identical == total,
        format!(
            "{identical}/{total} reruns bit-identical in model JSON, metrics and trace \
             (f1 and iris, parallel rerun and sequential rerun)"
        ),
    ))
}

fn runner() -> TestRunner {
    let config = PropConfig {
        cases: PROPERTY_CASES,
        failure_persistence: None,
        ..PropConfig::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn property<S: Strategy>(
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    runner()
        .run(&strategy, test)
        .map_err(|e| format!("{name}: {e}"))
}

fn small_model() -> impl Strategy<Value = WtaennModel> {
    (1usize..4, 0usize..4, 1usize..5).prop_flat_map(|(n, k, m)| {
        let shape = ModelShape::regression(
            ExpansionSpec::new(n, k).unwrap(),
            m,
            OutputActivation::Identity,
        )
        .unwrap();
        let width = shape.spec.expanded_dim();
        prop::collection::vec(
            (
                prop::collection::vec(-5.0f64..5.0, width),
                prop::collection::vec(-5.0f64..5.0, width),
            ),
            m,
        )
        .prop_map(move |units| {
            let units = units.into_iter().map(|(v, w)| EmotionalUnit { v, w }).collect();
            WtaennModel::new(shape.clone(), units).unwrap()
        })
    })
}

fn c10_invariants() -> Result<Outcome, String> {
    property(
        "wta shift/scale invariance",
        (
            prop::collection::vec(-1000i32..1000, 1..64),
            1i32..100,
            -1000i32..1000,
        ),
        |(x, a, b)| {
            let x: Vec<f64> = x.into_iter().map(f64::from).collect();
            let moved: Vec<f64> = x.iter().map(|v| f64::from(a) * v + f64::from(b)).collect();
            prop_assert_eq!(wta(&x).unwrap(), wta(&moved).unwrap());
            Ok(())
        },
    )?;

    property(
        "kwta nesting",
        prop::collection::vec(-3i32..4, 2..64).prop_flat_map(|x| {
            let n = x.len();
            (Just(x), 1..n)
        }),
        |(x, k)| {
            let x: Vec<f64> = x.into_iter().map(f64::from).collect();
            let small = kwta(&x, k).unwrap().winners;
            let large = kwta(&x, k + 1).unwrap().winners;
            prop_assert_eq!(&small[..], &large[..k]);
            Ok(())
        },
    )?;

    let data = gen_function(TargetFunction::F1, 12, 3).map_err(|e| e.to_string())?;
    let shape = ModelShape::regression(
        ExpansionSpec::new(1, 1).unwrap(),
        2,
        OutputActivation::Identity,
    )
    .map_err(|e| e.to_string())?;
    property(
        "elitism monotonicity",
        (any::<u64>(), 4usize..12, 1usize..3),
        |(seed, population_size, elitism_count)| {
            let config = GaConfig {
                population_size,
                elitism_count,
                generations: 6,
                parallel: false,
                seed,
                ..GaConfig::default()
            };
            let trace = ga::train(&shape, &data, &config).unwrap();
            for w in trace.generations.windows(2) {
                prop_assert!(w[1].best >= w[0].best, "{} < {}", w[1].best, w[0].best);
            }
            Ok(())
        },
    )?;

    property("encode/decode round trip", small_model(), |model| {
        let back = decode(&encode(&model), model.shape()).unwrap();
        prop_assert_eq!(back, model);
        Ok(())
    })?;

    property(
        "normalization inversion",
        (-1e6f64..1e6, 1e-3f64..1e6, 0.0f64..=1.0),
        |(min, width, t)| {
            let range = FeatureRange {
                min,
                max: min + width,
            };
            let x = min + t * width;
            let back = range.denormalize(range.normalize(x));
            prop_assert!((back - x).abs() <= 1e-9 * (1.0 + x.abs()), "{x} -> {back}");
            Ok(())
        },
    )?;

    Ok(Outcome::new(
        true,
        format!(
            "wta shift/scale, kwta nesting, elitism, encode/decode and normalization inversion: \
             {PROPERTY_CASES} cases each, all passed"
        ),
    ))
}
