use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use bicogan_core::bicogan::{load_checkpoint, save_checkpoint, BiCoGan, ExtrinsicKind, ExtrinsicSpec, Trainer};
use bicogan_core::data::Dataset;
use bicogan_core::diagnostics::{gradient_suite, OpCheck};
use bicogan_core::eval::{evaluate, MetricsReport};
use bicogan_core::rng::derive_rng;
use bicogan_core::Tensor;
use serde::{Deserialize, Serialize};

use crate::config::{CheckpointMeta, RunConfig};
use crate::error::{CliError, CliResult};
use crate::grid::{pgm_grid, points_csv};

pub const METRICS_FILE: &str = "metrics.csv";
pub const EVALUATIONS_FILE: &str = "evaluations.csv";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";
pub const CHECKPOINT_DIR: &str = "checkpoint";
pub const GRID_PGM: &str = "grid.pgm";
pub const GRID_CSV: &str = "grid.csv";
pub const GRID_JSON: &str = "grid.json";

pub const METRICS_HEADER: &str = "epoch,gamma,d_loss,ge_loss,efl,steps";

fn create_out(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::usage(format!("cannot create {}: {e}", dir.display())))
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Trains per `cfg`, writing `metrics.csv`, `evaluations.csv`, the
/// checkpoint and `report.json` under `cfg.out_dir`.
///
/// A checkpoint of the untrained model is written first, so a numeric
/// failure always leaves the last good one behind.
pub fn cmd_train(cfg: &RunConfig) -> CliResult<MetricsReport> {
    cfg.validate()?;
    let out = &cfg.out_dir;
    create_out(out)?;
    let (train, test) = cfg.datasets()?;
    let tc = &cfg.training;
    let model = BiCoGan::<f64>::new(train.x_dim(), tc.prior, train.extrinsic, tc.mode, &tc.architecture, tc.seed)?;
    let meta = CheckpointMeta {
        run: cfg.clone(),
        image_shape: train.image_shape,
    }
    .to_value();
    let ckpt = out.join(CHECKPOINT_DIR);
    save_checkpoint(&model, &meta, &ckpt)?;

    let mut trainer = Trainer::new(model, tc.clone(), train.c.clone())?;
    let mut metrics = fs::File::create(out.join(METRICS_FILE))?;
    writeln!(metrics, "{METRICS_HEADER}")?;
    let mut evals = fs::File::create(out.join(EVALUATIONS_FILE))?;
    writeln!(evals, "{}", MetricsReport::csv_header())?;

    let mut last = None;
    for epoch in 0..tc.epochs {
        let r = trainer.train_epoch(&train.x, &train.c, epoch)?;
        writeln!(
            metrics,
            "{},{},{},{},{},{}",
            r.epoch,
            r.gamma,
            r.d_loss,
            r.ge_loss,
            opt(r.efl),
            r.steps
        )?;
        let done = epoch + 1;
        if done == tc.epochs || (cfg.eval_every > 0 && done % cfg.eval_every == 0) {
            save_checkpoint(&trainer.model, &meta, &ckpt)?;
            let report = evaluate(&trainer.model, &train, &test, &cfg.eval, tc.gamma, done, tc.seed)?;
            writeln!(evals, "{}", report.csv_row())?;
            last = Some(report);
        }
    }
    let report = last.expect("at least one epoch");
    write_report(out, &report)?;
    Ok(report)
}

fn write_report(out: &Path, report: &MetricsReport) -> CliResult<()> {
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    fs::write(out.join(REPORT_JSON), json)?;
    Ok(())
}

/// A checkpoint together with the run that produced it, if the CLI wrote it.
pub struct Loaded {
    pub model: BiCoGan<f64>,
    pub meta: Option<CheckpointMeta>,
}

pub fn load(checkpoint: &Path) -> CliResult<Loaded> {
    let (model, header) = load_checkpoint::<f64>(checkpoint)
        .map_err(|e| CliError::usage(format!("cannot load checkpoint {}: {e}", checkpoint.display())))?;
    Ok(Loaded {
        model,
        meta: CheckpointMeta::from_value(&header.config),
    })
}

impl Loaded {
    /// The run config given on the command line, else the one stored in
    /// the checkpoint.
    fn run(&self, override_cfg: Option<&RunConfig>) -> CliResult<RunConfig> {
        override_cfg
            .cloned()
            .or_else(|| self.meta.as_ref().map(|m| m.run.clone()))
            .ok_or_else(|| CliError::usage("checkpoint carries no dataset; pass --config"))
    }

    fn datasets(&self, override_cfg: Option<&RunConfig>) -> CliResult<(Dataset, Dataset)> {
        let (train, test) = self.run(override_cfg)?.datasets()?;
        if train.x_dim() != self.model.x_dim || train.extrinsic != self.model.extrinsic {
            return Err(CliError::usage("dataset does not match the checkpoint's model"));
        }
        Ok((train, test))
    }

    fn image_shape(&self) -> Option<(usize, usize)> {
        self.meta.as_ref().and_then(|m| m.image_shape)
    }
}

/// Evaluates a checkpoint and writes `report.json` and `report.csv`.
pub fn cmd_eval(
    checkpoint: &Path,
    out: &Path,
    cfg: Option<&RunConfig>,
    seed: Option<u64>,
) -> CliResult<MetricsReport> {
    let loaded = load(checkpoint)?;
    let run = loaded.run(cfg)?;
    let (train, test) = loaded.datasets(cfg)?;
    create_out(out)?;
    let report = evaluate(
        &loaded.model,
        &train,
        &test,
        &run.eval,
        run.training.gamma,
        run.training.epochs,
        seed.unwrap_or(run.training.seed),
    )?;
    write_report(out, &report)?;
    fs::write(
        out.join(REPORT_CSV),
        format!("{}\n{}\n", MetricsReport::csv_header(), report.csv_row()),
    )?;
    Ok(report)
}

/// What produced one grid cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Sample,
    Original,
    Reconstruction,
    Variation,
    Interpolant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub row: usize,
    pub col: usize,
    pub kind: CellKind,
    /// Intrinsic code fed to the generator; empty for originals.
    pub z: Vec<f64>,
    /// Extrinsic code fed to the generator, or the true label of an original.
    pub c: Vec<f64>,
    /// Test-split index of the source sample, if any.
    pub source: Option<usize>,
}

/// Sidecar describing a grid file cell by cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSidecar {
    pub command: String,
    pub rows: usize,
    pub cols: usize,
    /// `(rows, cols)` of each cell image; `None` for point grids.
    pub cell_shape: Option<(usize, usize)>,
    pub cells: Vec<CellRecord>,
}

/// Writes the grid as PGM when cells are images, CSV otherwise, plus the
/// JSON sidecar. Returns the grid file's path.
fn write_grid(out: &Path, cells: &[Vec<f64>], sidecar: &GridSidecar) -> CliResult<PathBuf> {
    create_out(out)?;
    let path = match sidecar.cell_shape {
        Some(shape) => {
            let p = out.join(GRID_PGM);
            fs::write(&p, pgm_grid(cells, sidecar.rows, sidecar.cols, shape)?)?;
            p
        }
        None => {
            let p = out.join(GRID_CSV);
            fs::write(&p, points_csv(cells, sidecar.cols))?;
            p
        }
    };
    let mut json = serde_json::to_string_pretty(sidecar)?;
    json.push('\n');
    fs::write(out.join(GRID_JSON), json)?;
    Ok(path)
}

fn rows_of(t: &Tensor) -> Vec<Vec<f64>> {
    (0..t.rows()).map(|i| t.row(i).to_vec()).collect()
}

/// Codes that span an extrinsic form: every class, no attribute then each
/// attribute alone, or `n` evenly spaced values.
pub fn code_sweep(spec: &ExtrinsicSpec, n: usize) -> Vec<Vec<f64>> {
    match spec.kind {
        ExtrinsicKind::Categorical => (0..spec.k).map(|i| spec.one_hot(i)).collect(),
        ExtrinsicKind::BinaryVector => std::iter::once(vec![0.0; spec.k])
            .chain((0..spec.k).map(|i| spec.one_hot(i)))
            .collect(),
        ExtrinsicKind::Continuous => (0..n.max(1))
            .map(|j| {
                let v = if n <= 1 { 0.0 } else { -1.0 + 2.0 * j as f64 / (n - 1) as f64 };
                vec![v; spec.k]
            })
            .collect(),
    }
}

/// Samples `rows` intrinsic codes and decodes each against every code of
/// the sweep. Rows share z; columns share c.
pub fn cmd_generate(checkpoint: &Path, out: &Path, rows: usize, cols: usize, seed: u64) -> CliResult<PathBuf> {
    if rows == 0 {
        return Err(CliError::usage("rows must be at least 1"));
    }
    let loaded = load(checkpoint)?;
    let m = &loaded.model;
    let codes = if m.mode.conditional() {
        code_sweep(&m.extrinsic, cols)
    } else {
        vec![Vec::new()]
    };
    let ncols = codes.len();
    let z = m.prior.sample::<f64>(rows, &mut derive_rng(seed, "cli/generate"));
    let zs = rows_of(&z);

    let mut z_all = Vec::with_capacity(rows * ncols);
    let mut c_all = Vec::with_capacity(rows * ncols);
    let mut cells = Vec::with_capacity(rows * ncols);
    for (r, zr) in zs.iter().enumerate() {
        for (col, code) in codes.iter().enumerate() {
            z_all.extend_from_slice(zr);
            c_all.extend_from_slice(code);
            cells.push(CellRecord {
                row: r,
                col,
                kind: CellKind::Sample,
                z: zr.clone(),
                c: code.clone(),
                source: None,
            });
        }
    }
    let n = rows * ncols;
    let x = m.generate(
        &Tensor::new(vec![n, m.prior.z_dim], z_all)?,
        &Tensor::new(vec![n, m.c_dim()], c_all)?,
    )?;
    let sidecar = GridSidecar {
        command: "generate".into(),
        rows,
        cols: ncols,
        cell_shape: loaded.image_shape(),
        cells,
    };
    write_grid(out, &rows_of(&x), &sidecar)
}

/// Replacement codes for a sample whose decided code is `c`: the next
/// classes in cyclic order, single-attribute flips, or evenly spaced values.
pub fn variations_of(spec: &ExtrinsicSpec, c: &[f64], n: usize) -> Vec<Vec<f64>> {
    match spec.kind {
        ExtrinsicKind::Categorical => {
            let y = c.iter().position(|&v| v == 1.0).unwrap_or(0);
            (1..spec.k).take(n).map(|d| spec.one_hot((y + d) % spec.k)).collect()
        }
        ExtrinsicKind::BinaryVector => (0..spec.k)
            .take(n)
            .map(|i| {
                let mut v = c.to_vec();
                v[i] = 1.0 - v[i];
                v
            })
            .collect(),
        ExtrinsicKind::Continuous => code_sweep(spec, n),
    }
}

/// First `count` test samples, one per row: `[original, reconstruction,
/// variation…]`.
pub fn cmd_reconstruct(
    checkpoint: &Path,
    out: &Path,
    cfg: Option<&RunConfig>,
    count: usize,
    variations: Option<usize>,
) -> CliResult<PathBuf> {
    let loaded = load(checkpoint)?;
    let m = &loaded.model;
    m.encoder()?;
    let (_, test) = loaded.datasets(cfg)?;
    if count == 0 || count > test.len() {
        return Err(CliError::usage(format!("count must be in 1..={}", test.len())));
    }
    let n_var = if m.mode.conditional() {
        variations.unwrap_or(match m.extrinsic.kind {
            ExtrinsicKind::Categorical => m.extrinsic.k - 1,
            ExtrinsicKind::BinaryVector => m.extrinsic.k,
            ExtrinsicKind::Continuous => 5,
        })
    } else {
        0
    };

    let idx: Vec<usize> = (0..count).collect();
    let x = test.x.select_rows(&idx);
    let (z, c) = m.embed(&x)?;
    let recon = m.generate(&z, &c)?;
    let mut cells = Vec::new();
    let mut records = Vec::new();
    let mut cols = 0;
    for i in 0..count {
        let zi = z.row(i).to_vec();
        let ci = if m.mode.conditional() { c.row(i).to_vec() } else { Vec::new() };
        let vars = if n_var > 0 { variations_of(&m.extrinsic, &ci, n_var) } else { Vec::new() };
        let mut row_cells = vec![x.row(i).to_vec(), recon.row(i).to_vec()];
        let mut row_records = vec![
            CellRecord {
                row: i,
                col: 0,
                kind: CellKind::Original,
                z: Vec::new(),
                c: test.c.row(i).to_vec(),
                source: Some(i),
            },
            CellRecord {
                row: i,
                col: 1,
                kind: CellKind::Reconstruction,
                z: zi.clone(),
                c: ci,
                source: Some(i),
            },
        ];
        if !vars.is_empty() {
            let zrep: Vec<f64> = zi.iter().copied().cycle().take(zi.len() * vars.len()).collect();
            let xv = m.generate(
                &Tensor::new(vec![vars.len(), zi.len()], zrep)?,
                &Tensor::new(vec![vars.len(), m.c_dim()], vars.concat())?,
            )?;
            for (j, code) in vars.into_iter().enumerate() {
                row_cells.push(xv.row(j).to_vec());
                row_records.push(CellRecord {
                    row: i,
                    col: 2 + j,
                    kind: CellKind::Variation,
                    z: zi.clone(),
                    c: code,
                    source: Some(i),
                });
            }
        }
        cols = row_cells.len();
        cells.extend(row_cells);
        records.extend(row_records);
    }
    let sidecar = GridSidecar {
        command: "reconstruct".into(),
        rows: count,
        cols,
        cell_shape: loaded.image_shape(),
        cells: records,
    };
    write_grid(out, &cells, &sidecar)
}

/// One row of `steps` decodings between the embeddings of two test samples.
pub fn cmd_interpolate(
    checkpoint: &Path,
    out: &Path,
    cfg: Option<&RunConfig>,
    from: usize,
    to: usize,
    steps: usize,
) -> CliResult<PathBuf> {
    let loaded = load(checkpoint)?;
    let m = &loaded.model;
    m.encoder()?;
    let (_, test) = loaded.datasets(cfg)?;
    if from >= test.len() || to >= test.len() {
        return Err(CliError::usage(format!("sample indices must be below {}", test.len())));
    }
    if steps < 2 {
        return Err(CliError::usage("steps must be at least 2"));
    }
    let (x1, x2) = (test.x.select_rows(&[from]), test.x.select_rows(&[to]));
    let frames = m.interpolate(&x1, &x2, steps)?;
    let (z1, c1) = m.embed(&x1)?;
    let (z2, c2) = m.embed(&x2)?;
    let lerp = |a: &Tensor, b: &Tensor, w: f64| -> Vec<f64> {
        a.data().iter().zip(b.data()).map(|(&p, &q)| p + (q - p) * w).collect()
    };
    let records = (0..steps)
        .map(|s| {
            let w = s as f64 / (steps - 1) as f64;
            CellRecord {
                row: 0,
                col: s,
                kind: CellKind::Interpolant,
                z: lerp(&z1, &z2, w),
                c: lerp(&c1, &c2, w),
                source: None,
            }
        })
        .collect();
    let cells: Vec<Vec<f64>> = frames.iter().map(|f| f.row(0).to_vec()).collect();
    let sidecar = GridSidecar {
        command: "interpolate".into(),
        rows: 1,
        cols: steps,
        cell_shape: loaded.image_shape(),
        cells: records,
    };
    write_grid(out, &cells, &sidecar)
}

/// Runs the finite-difference suite; the caller decides the exit status.
pub fn cmd_gradcheck(points: usize, seed: u64) -> CliResult<Vec<OpCheck>> {
    if points == 0 {
        return Err(CliError::usage("points must be at least 1"));
    }
    Ok(gradient_suite(points, seed)?)
}
