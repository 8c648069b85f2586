use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use glc_core::cascade::{batch_simulate, pool_measurements, read_traces_file, write_traces_file};
use glc_core::diagnostics::{
    gram_matrix, hessian_concentration, hessian_with_floor, lf_constants, re_estimate, ConcentrationConfig,
};
use glc_core::evaluation::{emit_plot, run_experiment, write_csv, EvaluationError, ExperimentConfig, GraphSpec};
use glc_core::graph::{read_graph_file, write_graph_file};
use glc_core::recovery::{
    infer_graph, GreedyConfig, InferenceSettings, LambdaRule, NodeStatus, SolverConfig,
};
use glc_core::seed::{self, tag};
use serde_json::json;

use crate::manifest::{manifest_path, with_suffix, Manifest};
use crate::{CliError, DiagnoseArgs, ExperimentArgs, GenerateArgs, InferArgs, ModelArgs, SimulateArgs};

fn show(path: &Path) -> String {
    path.to_string_lossy().into_owned()
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => Ok(fs::create_dir_all(dir)?),
        _ => Ok(()),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path)?))
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.12e}")
    } else {
        "nan".into()
    }
}

fn model_echo(args: &ModelArgs) -> serde_json::Value {
    json!({
        "model": args.model.map(|m| m.to_string()),
        "epsilon": args.epsilon,
        "threshold": args.threshold,
        "horizon": args.horizon,
    })
}

pub fn generate(a: &GenerateArgs) -> Result<(), CliError> {
    let mut spec = GraphSpec::new(a.kind, a.nodes, a.edges_target);
    spec.neighbors = a.neighbors;
    spec.attachment = a.attachment;
    spec.beta = a.beta;
    spec.p_triad = a.p_triad;
    spec.power = a.power;
    spec.weight_low = a.wlow;
    spec.weight_high = a.whigh;
    spec.weak_edge_prob = a.weak_prob;
    spec.weak_low = a.weak_low;
    spec.weak_high = a.weak_high;
    let graph = spec.build(
        a.model,
        seed::derive(a.seed, &[tag::TOPOLOGY]),
        seed::derive(a.seed, &[tag::WEIGHTS, 0]),
        seed::derive(a.seed, &[tag::WEAK_EDGES, 0]),
    )?;
    ensure_parent(&a.out)?;
    write_graph_file(&graph, &a.out)?;
    let config = json!({
        "kind": a.kind.to_string(),
        "nodes": a.nodes,
        "edges_target": a.edges_target,
        "neighbors": a.neighbors,
        "attachment": a.attachment,
        "beta": a.beta,
        "p_triad": a.p_triad,
        "power": a.power,
        "model": a.model.to_string(),
        "wlow": a.wlow,
        "whigh": a.whigh,
        "weak_prob": a.weak_prob,
        "weak_low": a.weak_low,
        "weak_high": a.weak_high,
        "out": show(&a.out),
    });
    Manifest::new("generate", Some(a.seed), config).write(&manifest_path(&a.out), &[a.out.clone()])?;
    eprintln!(
        "wrote {} ({} nodes, {} edges)",
        a.out.display(),
        graph.num_nodes(),
        graph.num_edges()
    );
    Ok(())
}

pub fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    if a.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    if !(a.p_init > 0.0 && a.p_init <= 1.0) {
        return Err(CliError::Usage(format!("--p-init must lie in (0, 1], got {}", a.p_init)));
    }
    let graph = read_graph_file(&a.graph)?;
    let model = a.model.resolve(Some(graph.model()))?;
    let traces = batch_simulate(&graph, &model, a.n, a.p_init, seed::derive(a.seed, &[tag::CASCADES, 0, 0]))?;
    ensure_parent(&a.out)?;
    write_traces_file(&traces, &a.out)?;
    let config = json!({
        "graph": show(&a.graph),
        "n": a.n,
        "p_init": a.p_init,
        "model": model_echo(&a.model),
        "out": show(&a.out),
    });
    Manifest::new("simulate", Some(a.seed), config).write(&manifest_path(&a.out), &[a.out.clone()])?;
    eprintln!("wrote {} ({} cascades)", a.out.display(), traces.len());
    Ok(())
}

pub fn infer(a: &InferArgs) -> Result<(), CliError> {
    let traces = read_traces_file(&a.traces, a.nodes)?;
    let first = traces
        .first()
        .ok_or_else(|| CliError::Data(format!("{} contains no cascades", a.traces.display())))?;
    let num_nodes = first.num_nodes;
    let model = a.model.resolve(Some(first.kind))?;

    let lambda = if a.estimator.is_penalized() {
        match (a.lambda, a.alpha) {
            (Some(l), _) => LambdaRule::Fixed(l),
            (None, Some(alpha)) => LambdaRule::Theorem {
                alpha,
                delta: a.delta,
                scale: a.lambda_scale,
            },
            (None, None) => {
                return Err(CliError::Usage(format!(
                    "--estimator {} needs --lambda or --alpha",
                    a.estimator.as_str()
                )))
            }
        }
    } else {
        LambdaRule::Fixed(0.0)
    };
    let mut solver = SolverConfig::default();
    if let Some(t) = a.tolerance {
        solver.tolerance = t;
    }
    if let Some(k) = a.max_iterations {
        solver.max_iterations = k;
    }
    let mut greedy = GreedyConfig::default();
    if let Some(k) = a.max_parents {
        greedy.max_parents = k;
    }
    let settings = InferenceSettings {
        estimator: a.estimator,
        lambda,
        eta: a.eta,
        solver,
        greedy,
    };
    let result = infer_graph(num_nodes, &traces, &model, &settings)?;

    ensure_parent(&a.out)?;
    write_graph_file(&result.estimate, &a.out)?;
    let sidecar = with_suffix(&a.out, ".nodes.jsonl");
    let mut out = create(&sidecar)?;
    result.write_sidecar(&mut out)?;
    out.flush()?;
    let config = json!({
        "traces": show(&a.traces),
        "nodes": num_nodes,
        "model": model_echo(&a.model),
        "estimator": a.estimator.as_str(),
        "lambda": a.lambda,
        "alpha": a.alpha,
        "delta": a.delta,
        "lambda_scale": a.lambda_scale,
        "eta": a.eta,
        "tolerance": a.tolerance,
        "max_iterations": a.max_iterations,
        "max_parents": a.max_parents,
        "out": show(&a.out),
    });
    Manifest::new("infer", None, config).write(&manifest_path(&a.out), &[a.out.clone(), sidecar])?;

    let failed: Vec<usize> = result
        .reports
        .iter()
        .filter(|r| r.status == NodeStatus::Failed)
        .map(|r| r.node)
        .collect();
    let skipped = result.reports.iter().filter(|r| r.status == NodeStatus::Skipped).count();
    eprintln!(
        "wrote {} ({} edges; {} nodes skipped, {} failed)",
        a.out.display(),
        result.estimate.num_edges(),
        skipped,
        failed.len()
    );
    if !failed.is_empty() {
        return Err(CliError::Numerical(format!("inference failed on nodes {failed:?}")));
    }
    Ok(())
}

pub fn experiment(a: &ExperimentArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&a.config)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", a.config.display())))?;
    let mut config = ExperimentConfig::parse(&text)?;
    if a.no_timing {
        config.timing = false;
    }
    let dir = a
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("results").join(&config.name));
    fs::create_dir_all(&dir)?;

    let rows = run_experiment(&config);
    let mut files = Vec::new();
    let csv = dir.join("results.csv");
    let mut out = create(&csv)?;
    write_csv(&rows, &mut out)?;
    out.flush()?;
    files.push(csv);
    for &kind in &config.plots {
        match emit_plot(&rows, kind) {
            Ok(artifacts) => {
                for art in artifacts {
                    for (ext, body) in [("svg", &art.svg), ("csv", &art.csv)] {
                        let path = dir.join(format!("{}.{ext}", art.stem));
                        fs::write(&path, body)?;
                        files.push(path);
                    }
                }
            }
            Err(EvaluationError::EmptyData(msg)) => eprintln!("skipping {kind}: {msg}"),
            Err(e) => return Err(e.into()),
        }
    }
    let echo = json!({
        "config": show(&a.config),
        "text": text,
        "no_timing": a.no_timing,
        "out": show(&dir),
    });
    Manifest::new("experiment", Some(config.seed), echo).write(&dir.join("manifest.json"), &files)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    eprintln!(
        "wrote {} ({} rows, {} failed cells)",
        dir.display(),
        rows.len(),
        failed
    );
    Ok(())
}

pub fn diagnose(a: &DiagnoseArgs) -> Result<(), CliError> {
    let graph = read_graph_file(&a.graph)?;
    let model = a.model.resolve(Some(graph.model()))?;
    let m = graph.num_nodes();
    if let Some(&bad) = a.node.iter().find(|&&v| v >= m) {
        return Err(CliError::Usage(format!("--node {bad} out of range for a graph with {m} nodes")));
    }
    if a.re_samples == 0 {
        return Err(CliError::Usage("--re-samples must be at least 1".into()));
    }
    if a.trials > 0 && (a.n_grid.is_empty() || a.n_grid.contains(&0)) {
        return Err(CliError::Usage("--n-grid needs positive measurement counts".into()));
    }
    let traces = read_traces_file(&a.traces, Some(m))?;
    if let Some(t) = traces.iter().find(|t| t.kind != model.kind) {
        return Err(CliError::Usage(format!(
            "traces were generated by the {} model, the graph is {}",
            t.kind, model.kind
        )));
    }

    let mut re_csv = String::from("node,matrix,n,support_size,gamma_upper,gamma_sampled,num_samples\n");
    let mut lf_csv = String::from("node,n,max_first,max_second,alpha_lf,alpha_lf2,used,excluded\n");
    let mut conc_csv = String::from("node,n,trial,max_dev,gamma_upper,gamma_sampled\n");
    let mut summary_csv = String::from("node,n,median_max_dev,fraction_re_half,expected_gamma_sampled\n");
    for &node in &a.node {
        let support: Vec<usize> = graph.incoming(node).iter().map(|&(src, _)| src).collect();
        let theta = graph.column(node)?;
        let set = pool_measurements(&traces, node, m)?;
        if set.is_empty() {
            eprintln!("node {node}: no measurements in the traces");
            for matrix in ["gram", "hessian"] {
                re_csv += &format!("{node},{matrix},0,{},nan,nan,0\n", support.len());
            }
            lf_csv += &format!("{node},0,nan,nan,nan,nan,0,0\n");
        } else {
            let gram = gram_matrix(&set)?;
            let (hessian, _) = hessian_with_floor(&theta, &set, &model)?;
            for (k, (matrix, mat)) in [("gram", &gram), ("hessian", &hessian)].into_iter().enumerate() {
                if support.is_empty() {
                    re_csv += &format!("{node},{matrix},{},0,nan,nan,0\n", set.len());
                    continue;
                }
                let re_seed = seed::derive(a.seed, &[tag::DIAGNOSTICS, node as u64, k as u64]);
                let re = re_estimate(mat, &support, a.re_samples, re_seed)?;
                re_csv += &format!(
                    "{node},{matrix},{},{},{},{},{}\n",
                    set.len(),
                    support.len(),
                    num(re.gamma_upper),
                    num(re.gamma_sampled),
                    re.num_samples
                );
            }
            let lf = lf_constants(&model, &set, &theta)?;
            lf_csv += &format!(
                "{node},{},{},{},{},{},{},{}\n",
                set.len(),
                num(lf.max_first),
                num(lf.max_second),
                num(lf.alpha_lf),
                num(lf.alpha_lf2),
                lf.used,
                lf.excluded
            );
        }
        if a.trials == 0 {
            continue;
        }
        if support.is_empty() {
            eprintln!("node {node}: no parents, skipping the concentration study");
            continue;
        }
        let config = ConcentrationConfig {
            n_grid: a.n_grid.clone(),
            trials: a.trials,
            p_init: a.p_init,
            re_samples: a.re_samples,
            seed: a.seed,
        };
        let report = hessian_concentration(&graph, &model, node, &config)?;
        for r in &report.rows {
            conc_csv += &format!(
                "{node},{},{},{},{},{}\n",
                r.n,
                r.trial,
                num(r.max_dev),
                num(r.gamma_upper),
                num(r.gamma_sampled)
            );
        }
        for s in &report.summary {
            summary_csv += &format!(
                "{node},{},{},{:.6},{}\n",
                s.n,
                num(s.median_max_dev),
                s.fraction_re_half,
                num(report.expected.gamma_sampled)
            );
        }
    }

    ensure_parent(&a.out)?;
    let mut files = vec![(with_suffix(&a.out, ".re.csv"), re_csv), (with_suffix(&a.out, ".lf.csv"), lf_csv)];
    if a.trials > 0 {
        files.push((with_suffix(&a.out, ".concentration.csv"), conc_csv));
        files.push((with_suffix(&a.out, ".concentration_summary.csv"), summary_csv));
    }
    for (path, body) in &files {
        fs::write(path, body)?;
    }
    let config = json!({
        "graph": show(&a.graph),
        "traces": show(&a.traces),
        "node": a.node,
        "re_samples": a.re_samples,
        "n_grid": a.n_grid,
        "trials": a.trials,
        "p_init": a.p_init,
        "model": model_echo(&a.model),
        "out": show(&a.out),
    });
    let paths: Vec<PathBuf> = files.into_iter().map(|(p, _)| p).collect();
    Manifest::new("diagnose", Some(a.seed), config).write(&manifest_path(&a.out), &paths)?;
    eprintln!("wrote {} report files with prefix {}", paths.len(), a.out.display());
    Ok(())
}
