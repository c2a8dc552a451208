use std::path::Path;
use std::time::Instant;

use cmikit::cit::{metrics_for, post_nonlinear_specs, run_cit_benchmark, CitBenchmark, CitMetrics};
use cmikit::datagen::{DatasetMetadata, ModelKind, ModelSpec, OracleOptions};
use cmikit::divergence::{classifier_dkl, FMineConfig};
use cmikit::estimators::{generator_classifier_cmi, mi_diff_cmi, CmiEstimate, DivergenceBackend, EstimatorConfig};
use cmikit::knn::ksg_cmi_multi;
use cmikit::{seed, Block, SampleSet};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::output::{self, usage, CliResult};
use crate::{CalibrateArgs, CitArgs, Common, DimArgs, EstimateArgs, GenArgs, Method, Model, ModelArgs, SweepArgs};

const ORACLE_STREAM: u64 = 0x0ac1e;
const RUN_STREAM: u64 = 1000;

fn model_spec(m: &ModelArgs, dz: Option<usize>, n: usize, seed: u64) -> CliResult<ModelSpec> {
    let need_dz = || dz.ok_or_else(|| usage(format!("--dz is required for model {:?}", m.model)));
    let kind = match m.model {
        Model::GaussCorr => ModelKind::GaussCorr {
            dim: m.dim,
            rho: m.rho.ok_or_else(|| usage("--rho is required for gauss-corr"))?,
        },
        Model::LinearI => ModelKind::LinearI {
            d_z: need_dz()?,
            sigma: m.sigma,
        },
        Model::LinearII => ModelKind::LinearII {
            d_z: need_dz()?,
            sigma: m.sigma,
        },
        Model::Nonlinear => ModelKind::Nonlinear {
            d_z: need_dz()?,
            a_xy: m.a_xy,
        },
        Model::PostNonlinear => ModelKind::PostNonlinear {
            d_z: need_dz()?,
            dependent: m.dependent,
        },
    };
    Ok(ModelSpec::new(kind, n, seed))
}

fn oracle(m: &ModelArgs, spec_seed: u64) -> OracleOptions {
    OracleOptions {
        n: m.oracle_n,
        seed: seed::derive(spec_seed, ORACLE_STREAM),
    }
}

/// Method defaults, overlaid with `--config`, with the seed from `--seed`.
fn estimator_config(method: Method, common: &Common) -> CliResult<(EstimatorConfig, Value)> {
    let base = match method {
        Method::GenClassifier => EstimatorConfig::generator_classifier(),
        Method::FMineDiff => EstimatorConfig {
            divergence: DivergenceBackend::FMine(FMineConfig::default()),
            ..EstimatorConfig::ccmi()
        },
        Method::Ccmi | Method::Ksg => EstimatorConfig::ccmi(),
    };
    resolve(&base, common)
}

fn resolve<T: Serialize + for<'de> Deserialize<'de>>(base: &T, common: &Common) -> CliResult<(T, Value)> {
    let mut v = serde_json::to_value(base)?;
    if let Some(path) = &common.config {
        output::merge(&mut v, output::read_json_file(path)?);
    }
    if let Value::Object(map) = &mut v {
        map.insert("seed".into(), json!(common.seed));
    }
    let cfg: T = serde_json::from_value(v.clone()).map_err(|e| usage(format!("invalid config: {e}")))?;
    let resolved = serde_json::to_value(&cfg)?;
    Ok((cfg, resolved))
}

fn load_dataset(input: &Path, dims: &DimArgs) -> CliResult<SampleSet> {
    let meta_path = output::sidecar(input, "meta.json");
    let meta: Option<DatasetMetadata> = if meta_path.exists() {
        Some(serde_json::from_value(output::read_json_file(&meta_path)?)?)
    } else {
        None
    };
    let pick = |flag: Option<usize>, from_meta: Option<usize>, name: &str| {
        flag.or(from_meta)
            .ok_or_else(|| usage(format!("--{name} is required (no {} sidecar)", meta_path.display())))
    };
    let dx = pick(dims.dx, meta.as_ref().map(|m| m.d_x), "dx")?;
    let dy = pick(dims.dy, meta.as_ref().map(|m| m.d_y), "dy")?;
    let dz = dims.dz.or(meta.as_ref().map(|m| m.d_z)).unwrap_or(0);
    Ok(SampleSet::load_csv(input, dx, dy, dz)?)
}

pub fn gen(a: &GenArgs) -> CliResult<()> {
    let start = Instant::now();
    let spec = model_spec(&a.model, a.dz, a.n, a.common.seed)?;
    let generated = spec.generate()?;
    let truth = spec.ground_truth(oracle(&a.model, spec.seed))?;
    let (d_x, d_y, d_z) = generated.data.dims();
    let meta = DatasetMetadata {
        spec,
        d_x,
        d_y,
        d_z,
        n: generated.data.n(),
        ground_truth: truth,
        label: generated.label,
    };
    let mut csv_bytes = Vec::new();
    generated.data.write_csv(&mut csv_bytes)?;
    output::atomic_write(&a.common.out, &csv_bytes)?;
    output::write_json(&output::sidecar(&a.common.out, "meta.json"), &meta)?;
    let config = json!({ "spec": meta.spec, "oracle_n": a.model.oracle_n });
    output::write_manifest(&a.common.out, "gen", config, a.common.seed, start.elapsed(), serde_json::to_value(&meta)?)
}

fn estimate_json(est: &CmiEstimate, f: f64) -> Value {
    let accuracies: Vec<Option<f64>> = est.divergences.iter().map(|d| d.mean_eval_accuracy).collect();
    json!({
        "value": est.value * f,
        "components": est.components.map(|(a, b)| [a * f, b * f]),
        "per_bootstrap": est.per_bootstrap.iter().map(|v| v * f).collect::<Vec<_>>(),
        "diagnostics": {
            "truncated": est.truncated,
            "bootstrap_std": est.bootstrap_std() * f,
            "divergence_values": est.divergences.iter().map(|d| d.value * f).collect::<Vec<_>>(),
            "mean_eval_accuracy": accuracies,
        },
    })
}

pub fn estimate(a: &EstimateArgs) -> CliResult<()> {
    let start = Instant::now();
    let d = load_dataset(&a.input, &a.dims)?;
    let f = a.units.factor();
    let (method_name, mut result, config) = match a.method {
        Method::Ksg => {
            if a.k.is_empty() {
                return Err(usage("--k needs at least one value"));
            }
            let values = ksg_cmi_multi(&d, &a.k, a.common.seed)?;
            let result = json!({
                "value": values[0] * f,
                "components": Value::Null,
                "per_bootstrap": [],
                "k": a.k,
                "per_k": values.iter().map(|v| v * f).collect::<Vec<_>>(),
                "diagnostics": { "jitter_seed": a.common.seed },
            });
            ("ksg", result, json!({ "k": a.k, "seed": a.common.seed }))
        }
        m => {
            let (cfg, resolved) = estimator_config(m, &a.common)?;
            let (name, est) = match m {
                Method::GenClassifier => ("gen-classifier", generator_classifier_cmi(&d, &cfg)?),
                Method::FMineDiff => ("f-mine-diff", mi_diff_cmi(&d, &cfg)?),
                _ => ("ccmi", mi_diff_cmi(&d, &cfg)?),
            };
            (name, estimate_json(&est, f), resolved)
        }
    };
    let (dx, dy, dz) = d.dims();
    if let Value::Object(map) = &mut result {
        map.insert("method".into(), json!(method_name));
        map.insert("unit".into(), json!(a.units.name()));
        map.insert("n".into(), json!(d.n()));
        map.insert("dims".into(), json!([dx, dy, dz]));
    }
    output::write_json(&a.common.out, &result)?;
    output::write_manifest(&a.common.out, "estimate", config, a.common.seed, start.elapsed(), result)
}

/// CIT benchmark configuration. Either explicit `datasets`, or a balanced
/// post non-linear collection of `count` datasets.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct BenchConfig {
    datasets: Option<Vec<ModelSpec>>,
    count: usize,
    d_z: usize,
    n: usize,
    /// Seed of the generated collection (defaults to `--seed`).
    data_seed: Option<u64>,
    /// Estimator reseeds; datasets stay fixed across runs.
    runs: usize,
    estimator: EstimatorConfig,
    seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            datasets: None,
            count: 20,
            d_z: 5,
            n: 2000,
            data_seed: None,
            runs: 1,
            estimator: EstimatorConfig::ccmi(),
            seed: 0,
        }
    }
}

#[derive(Debug, Serialize)]
struct CitSummary {
    auroc: f64,
    auroc_std: f64,
    precision: Option<f64>,
    recall: f64,
    threshold: f64,
    datasets: usize,
    dependent: usize,
    runs: Vec<CitMetrics>,
}

pub fn cit(a: &CitArgs) -> CliResult<()> {
    let start = Instant::now();
    let (bench, resolved) = resolve(&BenchConfig::default(), &a.common)?;
    if bench.runs == 0 {
        return Err(usage("runs must be ≥ 1"));
    }
    let specs = match &bench.datasets {
        Some(s) => s.clone(),
        None => post_nonlinear_specs(bench.count, bench.d_z, bench.n, bench.data_seed.unwrap_or(a.common.seed)),
    };
    let runs: Vec<CitBenchmark> = (0..bench.runs)
        .map(|r| run_cit_benchmark(&specs, &bench.estimator, seed::derive(a.common.seed, r as u64)))
        .collect::<Result<_, _>>()?;
    let f = a.units.factor();

    let mut w = csv::Writer::from_writer(Vec::new());
    let multi = runs.len() > 1;
    if multi {
        w.write_record(["run", "dataset_id", "label", "cmi_score"])?;
    } else {
        w.write_record(["dataset_id", "label", "cmi_score"])?;
    }
    for (r, b) in runs.iter().enumerate() {
        for res in &b.results {
            let mut rec = vec![
                res.dataset_id.to_string(),
                res.label.as_int().to_string(),
                (res.cmi_score * f).to_string(),
            ];
            if multi {
                rec.insert(0, r.to_string());
            }
            w.write_record(&rec)?;
        }
    }
    let csv_bytes = w.into_inner().map_err(|e| output::CliError::Io(e.into_error()))?;
    let results_path = a.results.clone().unwrap_or_else(|| output::sidecar(&a.common.out, "csv"));
    output::atomic_write(&results_path, &csv_bytes)?;

    let metrics: Vec<CitMetrics> = runs.iter().map(|b| b.metrics.clone()).collect();
    let aurocs: Vec<f64> = metrics.iter().map(|m| m.auroc).collect();
    let mean = aurocs.iter().sum::<f64>() / aurocs.len() as f64;
    let var = aurocs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / aurocs.len() as f64;
    // precision and recall of the pooled predictions over all runs
    let scores: Vec<f64> = runs.iter().flat_map(|b| b.scores()).collect();
    let labels: Vec<_> = runs.iter().flat_map(|b| b.labels()).collect();
    let pooled = metrics_for(&scores, &labels, 0.0)?;
    let summary = CitSummary {
        auroc: mean,
        auroc_std: var.sqrt(),
        precision: pooled.precision,
        recall: pooled.recall,
        threshold: 0.0,
        datasets: specs.len(),
        dependent: metrics[0].dependent,
        runs: metrics,
    };
    output::write_json(&a.common.out, &summary)?;
    output::write_manifest(&a.common.out, "cit", resolved, a.common.seed, start.elapsed(), serde_json::to_value(&summary)?)
}

#[derive(Debug, Serialize)]
struct SweepRow {
    n: usize,
    d_z: usize,
    run: usize,
    estimate: f64,
    truth: f64,
}

pub fn sweep(a: &SweepArgs) -> CliResult<()> {
    let start = Instant::now();
    if a.model.model == Model::GaussCorr {
        return Err(usage("sweep needs a model with a conditioning block"));
    }
    if a.runs == 0 {
        return Err(usage("--runs must be ≥ 1"));
    }
    let mut ns = a.ns.clone();
    ns.sort_unstable();
    ns.dedup();
    let mut dzs = a.dzs.clone();
    dzs.sort_unstable();
    dzs.dedup();
    let (cfg, mut resolved) = estimator_config(a.method, &a.common)?;

    let cells: Vec<ModelSpec> = ns
        .iter()
        .flat_map(|&n| dzs.iter().map(move |&dz| (n, dz)))
        .map(|(n, dz)| {
            let cell_seed = seed::derive(seed::derive(a.common.seed, n as u64), dz as u64);
            model_spec(&a.model, Some(dz), n, cell_seed)
        })
        .collect::<CliResult<_>>()?;
    let prepared: Vec<(SampleSet, f64)> = cells
        .par_iter()
        .map(|spec| -> CliResult<(SampleSet, f64)> {
            let truth = spec.ground_truth(oracle(&a.model, spec.seed))?.value;
            Ok((spec.generate()?.data, truth))
        })
        .collect::<CliResult<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..a.runs).map(move |r| (c, r))).collect();
    let f = a.units.factor();
    let rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(c, run)| -> CliResult<SweepRow> {
            let (data, truth) = &prepared[c];
            let run_seed = seed::derive(cells[c].seed, RUN_STREAM + run as u64);
            let value = match a.method {
                Method::Ksg => ksg_cmi_multi(data, &[a.k], run_seed)?[0],
                Method::GenClassifier => generator_classifier_cmi(data, &cfg.clone().with_seed(run_seed))?.value,
                Method::Ccmi | Method::FMineDiff => mi_diff_cmi(data, &cfg.clone().with_seed(run_seed))?.value,
            };
            Ok(SweepRow {
                n: cells[c].n,
                d_z: data.dims().2,
                run,
                estimate: value * f,
                truth: truth * f,
            })
        })
        .collect::<CliResult<_>>()?;

    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| output::CliError::Io(e.into_error()))?;
    output::atomic_write(&a.common.out, &bytes)?;
    if let Value::Object(map) = &mut resolved {
        map.insert("grid".into(), json!({ "n": ns, "d_z": dzs, "runs": a.runs, "k": a.k }));
    }
    let payload = json!({ "rows": rows.len(), "unit": a.units.name() });
    output::write_manifest(&a.common.out, "sweep", resolved, a.common.seed, start.elapsed(), payload)
}

pub fn calibrate(a: &CalibrateArgs) -> CliResult<()> {
    let start = Instant::now();
    let d = load_dataset(&a.input, &a.dims)?;
    let (cfg, resolved) = estimator_config(Method::Ccmi, &a.common)?;
    let mut div = match cfg.divergence {
        DivergenceBackend::Classifier(c) => c,
        DivergenceBackend::FMine(_) => return Err(usage("calibration needs the classifier divergence")),
    };
    div.calibration_bins = Some(a.bins);
    div.seed = seed::derive(a.common.seed, 1);
    // p(x, y, z) against p(x) p(y, z)
    let all = [Block::X, Block::Y, Block::Z];
    let joint = d.project(&all)?;
    let product = d.product_shuffle(seed::derive(a.common.seed, 0))?.project(&all)?;
    let est = classifier_dkl(&joint, &product, &div)?;
    let curve = est.calibration.clone().expect("calibration requested");
    let f = a.units.factor();
    let result = json!({
        "unit": a.units.name(),
        "value": est.value * f,
        "mean_eval_accuracy": est.mean_eval_accuracy,
        "expected_calibration_error": curve.expected_calibration_error(),
        "max_gap": curve.max_gap(),
        "curve": curve,
    });
    output::write_json(&a.common.out, &result)?;
    output::write_manifest(&a.common.out, "calibrate", resolved, a.common.seed, start.elapsed(), result)
}
