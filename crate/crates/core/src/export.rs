//! File formats: MUB JSON/CSV, netlist JSON, POVM/tally/sweep CSV, λ CSV.
//!
//! CSV numbers carry 12 significant digits and every CSV starts with `#`
//! comment lines naming the field and its modulus.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::galois::FieldCtx;
use crate::matrix::ComplexMatrix;
use crate::mub::{Basis, Construction, MubFamily};
use crate::optics::{DelayLine, Interferometer, NetworkLayout, SwitchMode, Topology};
use crate::protocol::TallyMatrix;
use crate::security::{LambdaMatrix, SecurityError, SweepRow};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error(transparent)]
    Security(#[from] SecurityError),
}

/// Twelve significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.11e}")
}

fn write_header(
    out: &mut impl Write,
    ctx: Option<&FieldCtx>,
    lines: &[String],
) -> std::io::Result<()> {
    if let Some(ctx) = ctx {
        writeln!(out, "# field: {ctx}")?;
    }
    for line in lines {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}

/// A MUB family as JSON; each basis is a row-major list of `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MubDocument {
    pub field: FieldCtx,
    pub construction: Construction,
    pub dimension: usize,
    /// Phase bases `0..d`, then the Z basis.
    pub bases: Vec<Vec<[f64; 2]>>,
}

impl MubDocument {
    pub fn from_family(family: &MubFamily) -> Self {
        MubDocument {
            field: family.ctx.clone(),
            construction: family.construction,
            dimension: family.dim(),
            bases: family
                .bases
                .iter()
                .map(|b| b.as_slice().iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }

    pub fn matrices(&self) -> Result<Vec<ComplexMatrix>, ExportError> {
        self.bases
            .iter()
            .enumerate()
            .map(|(r, b)| {
                if b.len() != self.dimension * self.dimension {
                    return Err(ExportError::Malformed(format!(
                        "basis {r} has {} entries, expected {}",
                        b.len(),
                        self.dimension * self.dimension
                    )));
                }
                let data = b.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
                ComplexMatrix::from_row_major(data)
                    .ok_or_else(|| ExportError::Malformed(format!("basis {r} is not square")))
            })
            .collect()
    }
}

/// Rows `r, m, n, re, im` with the Z basis labelled `r = Z`.
pub fn write_mub_csv(out: &mut impl Write, family: &MubFamily) -> Result<(), ExportError> {
    let construction = match family.construction {
        Construction::WoottersFields => "wootters_fields",
        Construction::Durt => "durt",
    };
    write_header(
        out,
        Some(&family.ctx),
        &[format!("construction: {construction}")],
    )?;
    let d = family.dim();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r", "m", "n", "re", "im"])?;
    for (r, b) in family.bases.iter().enumerate() {
        let label = match Basis::from_index(r, d) {
            Basis::Phase(r) => r.to_string(),
            Basis::Z => "Z".to_string(),
        };
        for m in 0..d {
            for n in 0..d {
                let z = b[(m, n)];
                w.write_record([
                    label.clone(),
                    m.to_string(),
                    n.to_string(),
                    fmt_num(z.re),
                    fmt_num(z.im),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionEntry {
    pub n: usize,
    pub port: usize,
    pub slot: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Netlist {
    pub field: FieldCtx,
    pub topology: Topology,
    pub switch_mode: SwitchMode,
    pub stage_count: usize,
    pub stages: Vec<Interferometer>,
    pub delay_lines: Vec<DelayLine>,
    pub inter_stage_delays: Vec<i64>,
    pub detectors: Vec<usize>,
    pub detection: Vec<DetectionEntry>,
    pub loss_factor: f64,
    pub loss_db: f64,
}

impl Netlist {
    pub fn from_layout(layout: &NetworkLayout) -> Self {
        Netlist {
            field: layout.ctx.clone(),
            topology: layout.topology,
            switch_mode: layout.switch_mode,
            stage_count: layout.stage_count(),
            stages: layout.interferometers().cloned().collect(),
            delay_lines: layout.delay_lines().cloned().collect(),
            inter_stage_delays: layout.inter_stage_delays.clone(),
            detectors: layout.detectors.clone(),
            detection: layout
                .detection
                .outcomes
                .iter()
                .enumerate()
                .map(|(n, &(port, slot))| DetectionEntry { n, port, slot })
                .collect(),
            loss_factor: layout.loss_factor(),
            loss_db: layout.loss_db(),
        }
    }
}

/// Rows `n, row, col, re, im`.
pub fn write_povm_csv(
    out: &mut impl Write,
    ctx: &FieldCtx,
    povm: &[ComplexMatrix],
    notes: &[String],
) -> Result<(), ExportError> {
    write_header(out, Some(ctx), notes)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "row", "col", "re", "im"])?;
    for (n, e) in povm.iter().enumerate() {
        for i in 0..e.dim() {
            for j in 0..e.dim() {
                let z = e[(i, j)];
                w.write_record([
                    n.to_string(),
                    i.to_string(),
                    j.to_string(),
                    fmt_num(z.re),
                    fmt_num(z.im),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Rows `r_a, n_a, r_b, n_b, count, prob`; `prob` is conditional on detection.
pub fn write_tally_csv(
    out: &mut impl Write,
    ctx: &FieldCtx,
    tally: &TallyMatrix,
) -> Result<(), ExportError> {
    let d = tally.d;
    write_header(
        out,
        Some(ctx),
        &[
            format!("basis index {d} is Z; labels follow the Durt-form bases"),
            format!(
                "detected {}, undetected {}",
                tally.total_detected(),
                tally.total_undetected()
            ),
        ],
    )?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r_a", "n_a", "r_b", "n_b", "count", "prob"])?;
    for a in Basis::all(d) {
        for n_a in 0..d {
            for b in Basis::all(d) {
                for n_b in 0..d {
                    let prob = tally.conditional(a, n_a, b, n_b).unwrap_or(f64::NAN);
                    w.write_record([
                        a.index(d).to_string(),
                        n_a.to_string(),
                        b.index(d).to_string(),
                        n_b.to_string(),
                        tally.count(a, n_a, b, n_b).to_string(),
                        fmt_num(prob),
                    ])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Rows `d, e_bar, r_two_basis, r_d_plus_1_bound, r_d_plus_1_correlated`.
pub fn write_sweep_csv(
    out: &mut impl Write,
    rows: &[SweepRow],
    notes: &[String],
) -> Result<(), ExportError> {
    write_header(out, None, notes)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "d",
        "e_bar",
        "r_two_basis",
        "r_d_plus_1_bound",
        "r_d_plus_1_correlated",
    ])?;
    for row in rows {
        w.write_record([
            row.d.to_string(),
            fmt_num(row.e_bar),
            fmt_num(row.r_two_basis),
            fmt_num(row.r_d_plus_1_bound),
            fmt_num(row.r_d_plus_1_correlated),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `d` rows of `d` numbers; `#` lines are comments.
pub fn read_lambda_csv(input: impl Read) -> Result<LambdaMatrix, ExportError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| ExportError::Malformed(format!("not a number: {f:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    let d = rows.len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(ExportError::Malformed("λ must be a square table".into()));
    }
    Ok(LambdaMatrix::new(d, rows.into_iter().flatten().collect())?)
}

pub fn write_lambda_csv(out: &mut impl Write, lambda: &LambdaMatrix) -> Result<(), ExportError> {
    write_header(out, None, &["rows j, columns k".to_string()])?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    for j in 0..lambda.d {
        w.write_record((0..lambda.d).map(|k| fmt_num(lambda.get(j, k))))?;
    }
    w.flush()?;
    Ok(())
}
