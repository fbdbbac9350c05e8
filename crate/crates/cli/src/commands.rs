use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use dendrowave::generate::{random_data, random_dendrogram};
use dendrowave::haar::{self, max_abs_error, row_errors, weighted_squared_error};
use dendrowave::hcluster::{agglomerate_labeled, pairwise_euclidean};
use dendrowave::padic::{self, cluster_code, BranchMatrix};
use dendrowave::ultrametric::{self, canonical_form, cophenetic, is_ultrametric, triangle_classify, DEFAULT_TOLERANCE};
use dendrowave::{
    Dendrogram, Dissimilarity, Linkage, Mode, NodeRef, ThresholdRule, Verdict, WaveletDecomposition, Weighting,
};
use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::io::{self, out_path, sig12};
use crate::{CheckArgs, FilterArgs, HeightArg, ModeArg, PadicOp, RuleArg, Status, TransformArgs};

fn node_name(d: &Dendrogram, node: NodeRef) -> String {
    match node {
        NodeRef::Terminal(i) => d.labels()[i].clone(),
        NodeRef::Cluster(r) => format!("q{r}"),
    }
}

fn cluster_names(d: &Dendrogram) -> Vec<String> {
    (1..=d.n_clusters()).map(|r| format!("q{r}")).collect()
}

fn resolve(d: &Dendrogram, name: &str) -> Result<NodeRef> {
    d.resolve(name)
        .with_context(|| format!("unknown node {name:?}; use a label, x<k> or q<k>"))
}

pub fn cluster(csv: &Path, linkage: Linkage, matrix: bool, outdir: &Path) -> Result<Status> {
    let table = io::read_table(csv)?;
    let (diss, labels) = if matrix {
        let labels = if table.has_labels { table.labels.clone() } else { table.columns.clone() };
        (Dissimilarity::new(table.values)?, labels)
    } else {
        (pairwise_euclidean(table.values.view())?, table.labels)
    };
    let d = agglomerate_labeled(&diss, linkage, labels.clone())?;
    let levels = d.levels().expect("agglomeration records levels");
    println!("linkage: {linkage}");
    println!("terminals: {}", d.n_terminals());
    for (rank, [a, b]) in d.merges() {
        println!(
            "rank {rank}: {} + {} at level {}",
            node_name(&d, a),
            node_name(&d, b),
            sig12(levels[rank - 1])
        );
    }
    if !d.has_monotone_levels() {
        eprintln!("warning: merge levels are not monotone, so cophenetic.csv is not an ultrametric");
    }
    let tree_path = out_path(outdir, "dendrogram.json")?;
    io::write_tree(&tree_path, &d)?;
    let coph_path = out_path(outdir, "cophenetic.csv")?;
    io::write_table(&coph_path, "label", &labels, &labels, &cophenetic(&d, ultrametric::Height::Levels)?)?;
    println!("wrote {} and {}", tree_path.display(), coph_path.display());
    Ok(Status::Ok)
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    mode: Mode,
    weighting: Weighting,
    features: Vec<String>,
}

/// Rows of `table` in the terminal order of `d`, matched by label when the
/// table has a label column.
fn align(d: &Dendrogram, table: &io::Table) -> Result<Array2<f64>> {
    let n = d.n_terminals();
    ensure!(
        table.values.nrows() == n,
        "data has {} rows but the tree has {n} terminals",
        table.values.nrows()
    );
    if !table.has_labels {
        return Ok(table.values.clone());
    }
    let mut x = Array2::zeros((n, table.values.ncols()));
    for (i, label) in d.labels().iter().enumerate() {
        let row = table
            .labels
            .iter()
            .position(|l| l == label)
            .with_context(|| format!("terminal {label:?} has no data row"))?;
        x.row_mut(i).assign(&table.values.row(row));
    }
    Ok(x)
}

fn write_bundle(w: &WaveletDecomposition, features: &[String], dir: &Path) -> Result<()> {
    let d = w.tree();
    let clusters = cluster_names(d);
    io::write_tree(&out_path(dir, "tree.json")?, d)?;
    io::write_table(&out_path(dir, "C.csv")?, "label", &clusters, d.labels(), w.branch().matrix())?;
    io::write_table(&out_path(dir, "D.csv")?, "label", features, &clusters, w.details())?;
    let smooth = w.smooth().clone().insert_axis(ndarray::Axis(0));
    io::write_table(&out_path(dir, "smooth.csv")?, "label", features, &["smooth".to_owned()], &smooth)?;
    let manifest = Manifest {
        mode: w.mode(),
        weighting: w.weighting(),
        features: features.to_vec(),
    };
    fs::write(out_path(dir, "manifest.json")?, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}

fn load_bundle(dir: &Path) -> Result<(WaveletDecomposition, Vec<String>)> {
    let manifest_path = dir.join("manifest.json");
    let manifest: Manifest = serde_json::from_str(
        &fs::read_to_string(&manifest_path).with_context(|| format!("cannot open {}", manifest_path.display()))?,
    )
    .with_context(|| format!("{}: invalid manifest", manifest_path.display()))?;
    let tree = io::read_tree(&dir.join("tree.json"))?;
    let (_, c) = io::read_int_table(&dir.join("C.csv"))?;
    ensure!(
        BranchMatrix::from_dendrogram(&tree).matrix() == c,
        "C.csv does not match tree.json"
    );
    let details = io::read_table(&dir.join("D.csv"))?.values;
    let smooth = io::read_table(&dir.join("smooth.csv"))?.values;
    ensure!(smooth.nrows() == 1, "smooth.csv must hold exactly one row");
    let smooth: Array1<f64> = smooth.row(0).to_owned();
    let w = WaveletDecomposition::from_parts(tree, details, smooth, manifest.mode, manifest.weighting)?;
    Ok((w, manifest.features))
}

pub fn transform(a: &TransformArgs, outdir: &Path) -> Result<Status> {
    let d = io::read_tree(&a.tree)?;
    let n = d.n_terminals();
    let weighting = if a.weighted { Weighting::Cardinality } else { Weighting::Haar };
    let (x, features, mode) = match a.mode {
        ModeArg::Indicator => {
            if a.data.is_some() {
                eprintln!("warning: --data is ignored in indicator mode");
            }
            (Array2::eye(n), d.labels().to_vec(), Mode::Indicator)
        }
        ModeArg::Ultrametric => {
            let path = a.data.as_ref().context("--data is required in ultrametric mode")?;
            let table = io::read_table(path)?;
            (align(&d, &table)?, table.columns.clone(), Mode::Ultrametric)
        }
    };
    let w = match weighting {
        Weighting::Haar => haar::forward(x.view(), &d)?,
        Weighting::Cardinality => haar::forward_weighted(x.view(), &d)?,
    };
    let w = WaveletDecomposition::from_parts(d, w.details().clone(), w.smooth().clone(), mode, weighting)?;
    write_bundle(&w, &features, outdir)?;
    println!("wrote bundle to {}", outdir.display());
    if !a.check {
        return Ok(Status::Ok);
    }
    let (reloaded, _) = load_bundle(outdir)?;
    let err = max_abs_error(&reloaded.inverse(), &x);
    println!("max abs error: {}", sig12(err));
    if err < 1e-9 {
        println!("check: PASS");
        Ok(Status::Ok)
    } else {
        println!("check: FAIL");
        Ok(Status::Invalid)
    }
}

struct Errors {
    energy: f64,
    frobenius: f64,
}

fn errors(w: &WaveletDecomposition, full: &Array2<f64>, rec: &Array2<f64>) -> Errors {
    Errors {
        energy: weighted_squared_error(full, rec, &w.terminal_weights()),
        frobenius: haar::frobenius_error(full, rec),
    }
}

pub fn filter(a: &FilterArgs, outdir: &Path) -> Result<Status> {
    let (w, features) = load_bundle(&a.bundle)?;
    ensure!(a.param >= 0.0, "--param must be >= 0, got {}", a.param);
    let (rule, label) = match a.rule {
        RuleArg::KeepK => {
            ensure!(a.param.fract() == 0.0, "keep-k needs an integer --param, got {}", a.param);
            (ThresholdRule::KeepRows(a.param as usize), "keep-k")
        }
        RuleArg::Absolute => (ThresholdRule::Absolute(a.param), "absolute"),
        RuleArg::RowNorm => (ThresholdRule::RowNorm(a.param), "row-norm"),
    };
    let d = w.tree();
    let full = w.inverse();
    let filtered = w.hard_threshold(rule)?;
    let rec = filtered.inverse();
    let kept = filtered.details().rows().into_iter().filter(|r| r.iter().any(|&v| v != 0.0)).count();
    let e = errors(&w, &full, &rec);

    let mut report = String::new();
    writeln!(report, "rule: {label} {}", sig12(a.param))?;
    writeln!(report, "nonzero detail rows: {kept} of {}", d.n_clusters())?;
    writeln!(report, "frobenius error: {}", sig12(e.frobenius))?;
    writeln!(report, "energy error: {}", sig12(e.energy))?;
    writeln!(report, "max abs error: {}", sig12(max_abs_error(&full, &rec)))?;
    writeln!(report, "row errors:")?;
    let rows = row_errors(&full, &rec);
    for (label, err) in d.labels().iter().zip(&rows) {
        writeln!(report, "  {label} {}", sig12(*err))?;
    }
    if a.sweep {
        writeln!(report, "sweep:")?;
        writeln!(report, "  k energy_error frobenius_error")?;
        let mut table = Array2::zeros((d.n_clusters() + 1, 2));
        for k in 0..=d.n_clusters() {
            let rec_k = w.hard_threshold(ThresholdRule::KeepRows(k))?.inverse();
            let e = errors(&w, &full, &rec_k);
            writeln!(report, "  {k} {} {}", sig12(e.energy), sig12(e.frobenius))?;
            table[[k, 0]] = e.energy;
            table[[k, 1]] = e.frobenius;
        }
        let ks: Vec<String> = (0..=d.n_clusters()).map(|k| k.to_string()).collect();
        let cols = ["energy_error".to_owned(), "frobenius_error".to_owned()];
        io::write_table(&out_path(outdir, "sweep.csv")?, "k", &cols, &ks, &table)?;
    }
    fs::write(out_path(outdir, "error_report.txt")?, &report)?;
    io::write_table(&out_path(outdir, "reconstruction.csv")?, "label", &features, d.labels(), &rec)?;
    io::write_table(&out_path(outdir, "D_filtered.csv")?, "label", &features, &cluster_names(d), filtered.details())?;
    print!("{report}");
    Ok(Status::Ok)
}

pub fn padic(p: u64, op: &PadicOp, outdir: &Path) -> Result<Status> {
    if p == 2 {
        eprintln!("warning: with p = 2 distinct codes can share a decimal value; use p >= 3 for unique decimals");
    }
    match op {
        PadicOp::Encode { tree } => {
            let d = io::read_tree(tree)?;
            let (codes, c) = padic::encode(&d, p)?;
            io::write_table(&out_path(outdir, "C.csv")?, "label", &cluster_names(&d), d.labels(), c.matrix())?;
            println!("label,code,decimal");
            for (label, code) in d.labels().iter().zip(&codes) {
                println!("{label},{},{}", code.to_symbolic(), code.decimal_value());
            }
        }
        PadicOp::Dist { tree, a, b } => {
            let d = io::read_tree(tree)?;
            println!("{}", padic::pdistance_nodes(&d, resolve(&d, a)?, resolve(&d, b)?, p)?);
        }
        PadicOp::Norm { tree, node } => {
            let d = io::read_tree(tree)?;
            println!("{}", padic::pnorm(&d, resolve(&d, node)?)?);
        }
        PadicOp::Dilate { tree, all, node } => {
            let d = io::read_tree(tree)?;
            if *all {
                let lifted = padic::dilate_tree(&d)?;
                io::write_tree(&out_path(outdir, "dilated.json")?, &lifted)?;
                for i in 0..d.n_terminals() {
                    let code = cluster_code(&d, NodeRef::Terminal(i), p)?;
                    println!("{} {}", d.labels()[i], padic::dilate(&code).to_base_string());
                }
            } else {
                let name = node.as_deref().expect("clap requires a node without --all");
                let code = cluster_code(&d, resolve(&d, name)?, p)?;
                println!("{name} {}", padic::dilate(&code).to_base_string());
            }
        }
        PadicOp::Decode { codes } => {
            let (labels, c) = io::read_int_table(codes)?;
            let d = BranchMatrix::from_matrix(c)?.decode(Some(labels))?;
            let path = out_path(outdir, "dendrogram.json")?;
            io::write_tree(&path, &d)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(Status::Ok)
}

pub fn check(a: &CheckArgs) -> Result<Status> {
    let input = a.input.as_deref().expect("clap requires an input without --demo");
    let is_json = input.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let (m, labels, tree_order) = if is_json {
        let d = io::read_tree(input)?;
        let height = match a.height {
            HeightArg::Ranks => ultrametric::Height::Ranks,
            HeightArg::Levels => ultrametric::Height::Levels,
        };
        (cophenetic(&d, height)?, d.labels().to_vec(), Some(d.leaf_order()))
    } else {
        let table = io::read_table(input)?;
        if a.points {
            (pairwise_euclidean(table.values.view())?.into_matrix(), table.labels, None)
        } else {
            let labels = if table.has_labels { table.labels } else { table.columns };
            let (r, c) = table.values.dim();
            ensure!(r == c, "matrix is {r} x {c}, expected square");
            (table.values, labels, None)
        }
    };
    let tol = DEFAULT_TOLERANCE;
    let verdict = is_ultrametric(&m, tol)?;
    let census = triangle_classify(&m, tol)?;
    let order = match tree_order {
        Some(order) => order,
        // for an ultrametric, single linkage recovers a compatible leaf order
        None => Dissimilarity::new(m.clone())
            .ok()
            .filter(|_| verdict.holds())
            .and_then(|diss| agglomerate_labeled(&diss, Linkage::Single, labels.clone()).ok())
            .map_or_else(|| (0..labels.len()).collect(), |d| d.leaf_order()),
    };
    let (_, canonical) = canonical_form(&m, &order, tol)?;

    println!("terminals: {}", labels.len());
    match verdict {
        Verdict::Ultrametric => println!("verdict: PASS"),
        Verdict::Violated(w) => {
            println!("verdict: FAIL");
            println!(
                "witness: {} {} {} (d({0},{2}) = {} > max(d({0},{1}), d({1},{2})) = {})",
                labels[w.x],
                labels[w.y],
                labels[w.z],
                sig12(m[[w.x, w.z]]),
                sig12(m[[w.x, w.y]].max(m[[w.y, w.z]])),
            );
        }
    }
    println!(
        "triangles: {} (equilateral {}, isosceles with small base {}, violating {})",
        census.total(),
        census.equilateral,
        census.isosceles_small_base,
        census.violating
    );
    let names: Vec<&str> = order.iter().map(|&i| labels[i].as_str()).collect();
    println!("canonical form: {} (order {})", if canonical { "yes" } else { "no" }, names.join(" "));
    Ok(if verdict.holds() { Status::Ok } else { Status::Invalid })
}

pub fn generate(n: usize, m: usize, seed: u64, outdir: &Path) -> Result<Status> {
    if n == 0 || m == 0 {
        bail!("--n and --m must be positive");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = random_dendrogram(&mut rng, n);
    let x = random_data(&mut rng, n, m);
    let tree_path = out_path(outdir, "tree.json")?;
    io::write_tree(&tree_path, &d)?;
    let data_path = out_path(outdir, "data.csv")?;
    let features: Vec<String> = (1..=m).map(|j| format!("f{j}")).collect();
    io::write_table(&data_path, "label", &features, d.labels(), &x)?;
    println!("wrote {} and {}", tree_path.display(), data_path.display());
    Ok(Status::Ok)
}
