use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use mubkit::export::{
    read_lambda_csv, write_povm_csv, write_sweep_csv, write_tally_csv, ExportError, MubDocument,
    Netlist,
};
use mubkit::galois::{FieldCtx, GaloisError};
use mubkit::matrix::ComplexMatrix;
use mubkit::mub::{verify_bases, verify_mub, Basis, MubError, MubFamily};
use mubkit::optics::{extract_povm, NetworkLayout, OpticsError, SwitchMode, Topology};
use mubkit::protocol::{
    report_from_stats, run_protocol, stats_from_tally, Backend, ChannelModel, ProtocolError,
    RunConfig,
};
use mubkit::security::{
    key_rate_avg_bound, key_rate_from_lambda00, key_rate_full, sweep, threshold_avg_bound,
    threshold_two_basis, ErrorStats, SecurityError,
};

use crate::{BackendArg, ChannelArg, Cli, Command, FieldArgs, Format, LayoutArgs};

/// Exit status 2: invalid input or failed verification.
const VALIDATION: u8 = 2;
/// Exit status 3: unphysical λ.
const UNPHYSICAL: u8 = 3;

/// Materializing `(d+1)·d²` amplitudes beyond this many bytes is refused.
const MAX_FAMILY_BYTES: usize = 4 << 30;

pub struct CmdError {
    pub code: u8,
    pub message: String,
}

impl CmdError {
    fn validation(message: impl Into<String>) -> Self {
        CmdError {
            code: VALIDATION,
            message: message.into(),
        }
    }
}

impl From<GaloisError> for CmdError {
    fn from(e: GaloisError) -> Self {
        CmdError::validation(e.to_string())
    }
}

impl From<MubError> for CmdError {
    fn from(e: MubError) -> Self {
        CmdError::validation(e.to_string())
    }
}

impl From<OpticsError> for CmdError {
    fn from(e: OpticsError) -> Self {
        CmdError::validation(e.to_string())
    }
}

impl From<SecurityError> for CmdError {
    fn from(e: SecurityError) -> Self {
        let code = match e {
            SecurityError::Unphysical(_) => UNPHYSICAL,
            _ => VALIDATION,
        };
        CmdError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<ProtocolError> for CmdError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::Security(s) => s.into(),
            other => CmdError::validation(other.to_string()),
        }
    }
}

impl From<ExportError> for CmdError {
    fn from(e: ExportError) -> Self {
        let code = match e {
            ExportError::Io(_) => 1,
            ExportError::Security(s) => return s.into(),
            _ => VALIDATION,
        };
        CmdError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError {
            code: 1,
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for CmdError {
    fn from(e: serde_json::Error) -> Self {
        CmdError::validation(e.to_string())
    }
}

pub fn run(cli: &Cli) -> Result<(), CmdError> {
    let out = &cli.out_dir;
    match &cli.command {
        Command::GenMub {
            field,
            construction,
            format,
        } => gen_mub(out, *field, (*construction).into(), *format),
        Command::VerifyMub { input, tol } => verify_file(input, *tol),
        Command::Netlist(args) => netlist(out, *args),
        Command::Povm(args) => povm(out, *args),
        Command::Simulate {
            field,
            trials,
            seed,
            channel,
            param,
            symbol_error,
            lambda,
            backend,
            topology,
            switch_mode,
            basis_probs,
            threads,
        } => {
            let ctx = field_ctx(*field)?;
            let d = ctx.order();
            let channel = match channel {
                ChannelArg::Identity => ChannelModel::Identity,
                ChannelArg::Depolarizing => match (param, symbol_error) {
                    (Some(s), _) => ChannelModel::Depolarizing(*s),
                    (None, Some(e)) => ChannelModel::depolarizing_for_error(d, *e),
                    _ => {
                        return Err(CmdError::validation(
                            "depolarizing needs --param or --symbol-error",
                        ))
                    }
                },
                ChannelArg::Correlated => ChannelModel::CorrelatedShift(
                    param.ok_or_else(|| CmdError::validation("correlated needs --param e_Z"))?,
                ),
                ChannelArg::BellDiagonal => {
                    let path = lambda
                        .as_ref()
                        .ok_or_else(|| CmdError::validation("bell-diagonal needs --lambda FILE"))?;
                    ChannelModel::BellDiagonal(read_lambda_csv(File::open(path)?)?)
                }
            };
            let config = RunConfig {
                basis_probs: basis_probs
                    .clone()
                    .unwrap_or_else(|| vec![1.0 / (d + 1) as f64; d + 1]),
                backend: match backend {
                    BackendArg::Ideal => Backend::IdealPovm,
                    BackendArg::Optics => Backend::Optics {
                        topology: (*topology).into(),
                        switch_mode: (*switch_mode).into(),
                    },
                },
                threads: *threads,
                ..RunConfig::uniform(&ctx, *trials, *seed)
            };
            simulate(out, &config, &channel)
        }
        Command::Keyrate {
            d,
            lambda00,
            e_bar,
            stats,
            lambda,
        } => keyrate(
            out,
            *d,
            *lambda00,
            *e_bar,
            stats.as_deref(),
            lambda.as_deref(),
        ),
        Command::Sweep { d, points, e_max } => sweep_cmd(out, d, *points, *e_max),
    }
}

fn field_ctx(args: FieldArgs) -> Result<FieldCtx, CmdError> {
    Ok(FieldCtx::new(args.p, args.n)?)
}

fn output_path(dir: &Path, name: &str) -> Result<PathBuf, CmdError> {
    fs::create_dir_all(dir)?;
    Ok(dir.join(name))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CmdError> {
    let file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(file, value)?;
    Ok(())
}

fn gen_mub(
    out: &Path,
    field: FieldArgs,
    construction: mubkit::mub::Construction,
    format: Format,
) -> Result<(), CmdError> {
    let ctx = match FieldCtx::new(field.p, field.n) {
        Ok(ctx) => ctx,
        Err(e) => {
            println!(
                "{}",
                serde_json::json!({ "ok": false, "error": e.to_string() })
            );
            return Err(e.into());
        }
    };
    let d = ctx.order();
    if (d + 1).saturating_mul(d * d).saturating_mul(16) > MAX_FAMILY_BYTES {
        return Err(CmdError::validation(format!(
            "d = {d}: {} bases of {d}×{d} amplitudes do not fit in memory",
            d + 1
        )));
    }
    let family = MubFamily::build(&ctx, construction);
    let report = verify_mub(&family);
    let tag = match construction {
        mubkit::mub::Construction::WoottersFields => "wf",
        mubkit::mub::Construction::Durt => "durt",
    };
    let stem = format!("mub_p{}_N{}_{tag}", field.p, field.n);
    let path = match format {
        Format::Json => {
            let path = output_path(out, &format!("{stem}.json"))?;
            write_json(&path, &MubDocument::from_family(&family))?;
            path
        }
        Format::Csv => {
            let path = output_path(out, &format!("{stem}.csv"))?;
            mubkit::export::write_mub_csv(&mut BufWriter::new(File::create(&path)?), &family)?;
            path
        }
    };
    let report_path = output_path(out, &format!("{stem}_report.json"))?;
    write_json(&report_path, &report)?;
    println!("field: {ctx}");
    println!("bases: {}", report.basis_count);
    println!("worst overlap deviation: {:e}", report.worst_pair_deviation);
    println!(
        "worst unitarity deviation: {:e}",
        report.worst_unitarity_deviation
    );
    println!("ok: {}", report.ok);
    println!("wrote {} and {}", path.display(), report_path.display());
    if report.ok {
        Ok(())
    } else {
        Err(CmdError::validation("MUB verification failed"))
    }
}

fn verify_file(input: &Path, tol: f64) -> Result<(), CmdError> {
    let doc: MubDocument = serde_json::from_reader(File::open(input)?)?;
    let report = verify_bases(&doc.matrices()?, tol);
    println!("field: {}", doc.field);
    println!("{}", serde_json::to_string_pretty(&report)?);
    if report.ok && report.basis_count == doc.dimension + 1 {
        Ok(())
    } else {
        Err(CmdError::validation("MUB verification failed"))
    }
}

fn build_layout(args: LayoutArgs) -> Result<(NetworkLayout, String), CmdError> {
    let ctx = field_ctx(args.field)?;
    let topology: Topology = args.topology.into();
    let switch_mode: SwitchMode = args.switch_mode.into();
    let layout = NetworkLayout::new(&ctx, topology, switch_mode)?;
    let topo = match topology {
        Topology::TimeDivisionMultiplexed => "tdm",
        Topology::Tree => "tree",
    };
    let mode = match switch_mode {
        SwitchMode::Passive => "passive",
        SwitchMode::ActiveSwitch => "active",
    };
    let stem = format!("p{}_N{}_{topo}_{mode}", args.field.p, args.field.n);
    Ok((layout, stem))
}

fn print_layout_summary(layout: &NetworkLayout) {
    println!("field: {}", layout.ctx);
    println!("stages: {}", layout.stage_count());
    println!("loss factor: {}", layout.loss_factor());
    println!("loss: {:.4} dB", layout.loss_db());
}

fn netlist(out: &Path, args: LayoutArgs) -> Result<(), CmdError> {
    let (layout, stem) = build_layout(args)?;
    let path = output_path(out, &format!("netlist_{stem}.json"))?;
    write_json(&path, &Netlist::from_layout(&layout))?;
    print_layout_summary(&layout);
    println!("wrote {}", path.display());
    Ok(())
}

fn povm(out: &Path, args: LayoutArgs) -> Result<(), CmdError> {
    let (layout, stem) = build_layout(args)?;
    let d = layout.ctx.order();
    let elements = extract_povm(&layout);
    let sum = elements
        .iter()
        .fold(ComplexMatrix::zeros(d), |acc, e| acc.add(e));
    let completeness = sum.max_abs_diff(&ComplexMatrix::identity(d));
    let path = output_path(out, &format!("povm_{stem}.csv"))?;
    let notes = vec![
        format!("stages: {}", layout.stage_count()),
        format!("loss factor: {}", layout.loss_factor()),
        format!("completeness deviation: {completeness:e}"),
    ];
    write_povm_csv(
        &mut BufWriter::new(File::create(&path)?),
        &layout.ctx,
        &elements,
        &notes,
    )?;
    print_layout_summary(&layout);
    println!("completeness deviation: {completeness:e}");
    println!("resolution of identity: {}", completeness <= 1e-10);
    println!("wrote {}", path.display());
    Ok(())
}

fn simulate(out: &Path, config: &RunConfig, channel: &ChannelModel) -> Result<(), CmdError> {
    let ctx = &config.ctx;
    let d = ctx.order();
    let tally = run_protocol(config, channel)?;
    let tally_path = output_path(out, "tally.csv")?;
    write_tally_csv(&mut BufWriter::new(File::create(&tally_path)?), ctx, &tally)?;
    println!("field: {ctx}");
    println!(
        "detected: {}, undetected: {}",
        tally.total_detected(),
        tally.total_undetected()
    );

    let stats = stats_from_tally(ctx, &tally)?;
    for b in Basis::all(d) {
        let e = match b {
            Basis::Phase(r) => stats.e_phase(r),
            Basis::Z => stats.e_z(),
        };
        println!("symbol error {b:?}: {e:.6}");
    }
    println!(
        "average symbol error (all bases): {:.6}",
        stats.average_error()
    );
    let stats_path = output_path(out, "stats.json")?;
    write_json(&stats_path, &stats)?;
    let report = report_from_stats(ctx, stats)?;
    let rate_path = output_path(out, "rate.json")?;
    write_json(&rate_path, &report)?;
    match &report.full {
        Some(full) => println!("r_inf (full λ): {:.6}", full.r_inf),
        None => println!("r_inf (full λ): unavailable, sampled λ has negative entries"),
    }
    println!("r_inf (average-error bound): {:.6}", report.bound.r_inf);
    println!(
        "wrote {}, {} and {}",
        tally_path.display(),
        stats_path.display(),
        rate_path.display()
    );
    Ok(())
}

fn keyrate(
    out: &Path,
    d: Option<usize>,
    lambda00: Option<f64>,
    e_bar: Option<f64>,
    stats: Option<&Path>,
    lambda: Option<&Path>,
) -> Result<(), CmdError> {
    let path = output_path(out, "keyrate.json")?;
    let report = match (d, lambda00, e_bar, stats, lambda) {
        (Some(d), Some(l), _, _, _) => {
            FieldCtx::from_order(d)?;
            key_rate_from_lambda00(d, l)?
        }
        (Some(d), None, Some(e), _, _) => {
            FieldCtx::from_order(d)?;
            key_rate_avg_bound(d, e)?
        }
        (_, None, None, Some(stats_path), _) => {
            let stats: ErrorStats = serde_json::from_reader(File::open(stats_path)?)?;
            stats.validate()?;
            let ctx = FieldCtx::from_order(stats.d())?;
            println!("field: {ctx}");
            let report = report_from_stats(&ctx, stats)?;
            write_json(&path, &report)?;
            match &report.full {
                Some(full) => println!("r_inf (full λ): {:.6}", full.r_inf),
                None => println!(
                    "r_inf (full λ): unavailable, negative entries {:?}",
                    report.bound.diagnostics.negative
                ),
            }
            println!("r_inf (average-error bound): {:.6}", report.bound.r_inf);
            println!("wrote {}", path.display());
            return Ok(());
        }
        (_, None, None, None, Some(lambda_path)) => {
            let lambda = read_lambda_csv(File::open(lambda_path)?)?;
            let ctx = FieldCtx::from_order(lambda.d)?;
            println!("field: {ctx}");
            key_rate_full(&lambda)?
        }
        _ => {
            return Err(CmdError::validation(
                "give --d with --lambda00 or --e-bar, or --stats FILE, or --lambda FILE",
            ))
        }
    };
    write_json(&path, &report)?;
    if let (Some(i), Some(chi)) = (report.i_ab, report.chi_ae) {
        println!("I(A:B): {i:.6}");
        println!("chi(A:E): {chi:.6}");
    }
    println!("r_inf: {:.6} ({:?})", report.r_inf, report.mode);
    println!("wrote {}", path.display());
    Ok(())
}

fn sweep_cmd(out: &Path, dims: &[usize], points: usize, e_max: f64) -> Result<(), CmdError> {
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for &d in dims {
        let ctx = FieldCtx::from_order(d)?;
        let bound = threshold_avg_bound(d)?;
        let two = threshold_two_basis(d)?;
        let line = format!("d={d} ({ctx}): threshold bound {bound:.6}, two-basis {two:.6}");
        println!("{line}");
        notes.push(line);
        rows.extend(sweep(d, e_max, points)?);
    }
    let path = output_path(out, "sweep.csv")?;
    write_sweep_csv(&mut BufWriter::new(File::create(&path)?), &rows, &notes)?;
    println!("wrote {}", path.display());
    Ok(())
}
