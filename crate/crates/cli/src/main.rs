//! `protocc` command-line interface.
//!
//! Every subcommand writes its result files plus a `<stem>.manifest.json`
//! into the output directory. `protocc replay <manifest>` re-runs the
//! recorded configuration and checks that the result files are identical.
//!
//! Exit codes: 0 on success, 1 when a computation fails (or a replay
//! differs), 2 for bad input.

mod args;
mod manifest;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use args::{
    AnalyzeArgs, BoundArgs, Cli, CodeArgs, Command, ExpandArgs, Format, LiftArgs, MindistArgs, OutputArgs,
    ReplayArgs, SimulateArgs, SpectralArgs, UnwrapArgs,
};
use manifest::{file_digest, Outputs, RunManifest};
use protocc::decode::DecoderConfig;
use protocc::oracle::exact_spectrum;
use protocc::sim::{ber_curve, CodeDescriptor, SimCode, StopRule};
use protocc::spectral::{conv_bound, growth_rate, GrowthOptions, GrowthStatus, ShapeOptions};
use protocc::{lift, LiftSpec, Protograph, SparseBinaryMatrix, Unwrapping};

#[derive(Debug)]
enum Failure {
    /// Bad files, flags or arguments.
    Input(String),
    /// A computation failed or a replay did not reproduce.
    Compute(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Compute(_) => 1,
        }
    }
}

impl From<protocc::Error> for Failure {
    fn from(e: protocc::Error) -> Self {
        use protocc::Error::*;
        match e {
            NonConvergence { .. } | OptimizerUnreliable { .. } => Failure::Compute(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn write_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Compute(format!("cannot write {}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cli.workers {
        pool = pool.num_threads(w.max(1));
    }
    if let Err(e) = pool.build_global() {
        eprintln!("error: cannot start worker pool: {e}");
        return ExitCode::from(1);
    }
    let result = match cli.command {
        Command::Replay(r) => replay(&r),
        cmd => execute(cmd, None).map(|_| ()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Input(m) | Failure::Compute(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn absolute(path: &Path) -> CliResult<PathBuf> {
    fs::canonicalize(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn absolute_dir(path: &Path) -> CliResult<PathBuf> {
    fs::create_dir_all(path).map_err(|e| write_failure(path, e))?;
    fs::canonicalize(path).map_err(|e| write_failure(path, e))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".into())
}

/// Runs a command with absolute paths, optionally redirecting its output
/// directory, and returns the manifest path.
fn execute(mut cmd: Command, out_override: Option<&Path>) -> CliResult<PathBuf> {
    let (input, out) = match &mut cmd {
        Command::Analyze(a) => (&mut a.protograph, &mut a.output.out),
        Command::BoundCurve(a) => (&mut a.protograph, &mut a.output.out),
        Command::Lift(a) => (&mut a.protograph, &mut a.out),
        Command::Unwrap(a) => (&mut a.protograph, &mut a.output.out),
        Command::Mindist(a) => (&mut a.input, &mut a.output.out),
        Command::Simulate(a) => (&mut a.protograph, &mut a.output.out),
        Command::Replay(_) => return Err(Failure::Input("a manifest cannot record a replay".into())),
    };
    *input = absolute(input)?;
    if let Some(o) = out_override {
        *out = o.to_path_buf();
    }
    *out = absolute_dir(out)?;
    let (input, dir) = (input.clone(), out.clone());
    let stem = format!("{}.{}", stem(&input), cmd.name());
    let outputs = match &cmd {
        Command::Analyze(a) => analyze(a, &stem)?,
        Command::BoundCurve(a) => bound_curve(a, &stem)?,
        Command::Lift(a) => lift_cmd(a, &stem)?,
        Command::Unwrap(a) => unwrap_cmd(a, &stem)?,
        Command::Mindist(a) => mindist(a, &stem)?,
        Command::Simulate(a) => simulate(a, &stem)?,
        Command::Replay(_) => unreachable!(),
    };
    let manifest = outputs
        .finish(&dir, &stem, &cmd, &[input])
        .map_err(|e| write_failure(&dir, e))?;
    println!("manifest: {}", manifest.display());
    Ok(manifest)
}

fn replay(r: &ReplayArgs) -> CliResult<()> {
    let text = fs::read_to_string(&r.manifest)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", r.manifest.display())))?;
    let recorded: RunManifest =
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("malformed manifest: {e}")))?;
    for (path, digest) in &recorded.inputs {
        let now = file_digest(Path::new(path)).map_err(|e| Failure::Input(format!("cannot read input {path}: {e}")))?;
        if &now != digest {
            return Err(Failure::Input(format!("input {path} changed since the recorded run")));
        }
    }
    let manifest_dir = absolute(&r.manifest)?
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let out = r.out.clone().unwrap_or(manifest_dir);
    let new_manifest = execute(recorded.config.clone(), Some(&out))?;
    let dir = new_manifest.parent().expect("manifest has a directory");
    let mut differing = Vec::new();
    for (name, digest) in &recorded.outputs {
        match file_digest(&dir.join(name)) {
            Ok(d) if &d == digest => println!("identical: {name}"),
            _ => differing.push(name.clone()),
        }
    }
    if differing.is_empty() {
        Ok(())
    } else {
        Err(Failure::Compute(format!("replay differs in {}", differing.join(", "))))
    }
}

fn load(path: &Path, expand: &ExpandArgs) -> CliResult<Protograph> {
    let p = Protograph::load(path)?;
    Ok(match expand.expand_m {
        Some(m) => p.expand(m, expand.expand_seed)?,
        None => p,
    })
}

fn growth_options(s: &SpectralArgs) -> GrowthOptions {
    GrowthOptions {
        delta_lo: s.delta_lo,
        delta_step: s.delta_step,
        delta_max: s.delta_max,
        tol: s.tol,
        shape: ShapeOptions {
            starts: s.starts,
            seed: s.seed,
            max_iterations: s.max_iterations,
            normalization: s.normalization.into(),
            ..ShapeOptions::default()
        },
    }
}

fn json(value: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("result serializes");
    s.push('\n');
    s
}

fn emit(out: &mut Outputs, o: &OutputArgs, stem: &str, csv: impl FnOnce() -> String, structured: impl FnOnce() -> String) {
    match o.format {
        Format::Csv => out.add(format!("{stem}.csv"), csv()),
        Format::Structured => out.add(format!("{stem}.json"), structured()),
    }
}

fn describe_status(status: &GrowthStatus) -> String {
    match status {
        GrowthStatus::Linear { delta_min, lo, hi } => format!("delta_min = {delta_min:.5} (bracket [{lo:.6}, {hi:.6}])"),
        GrowthStatus::NoLinearGrowth => "no linear distance growth: r(delta) >= 0 at the smallest delta".into(),
        GrowthStatus::NoZeroCrossingInRange { delta_max } => {
            format!("no zero crossing of r(delta) up to delta_max = {delta_max:.4}")
        }
    }
}

fn analyze(a: &AnalyzeArgs, stem: &str) -> CliResult<Outputs> {
    let p = load(&a.protograph, &a.expand)?;
    let curve = growth_rate(&p, &growth_options(&a.spectral))?;
    println!("{}", describe_status(&curve.status));
    let mut out = Outputs::default();
    emit(
        &mut out,
        &a.output,
        stem,
        || {
            let mut s = String::from("delta,r\n");
            for (d, r) in curve.rows() {
                let _ = writeln!(s, "{d},{r}");
            }
            s
        },
        || json(&curve),
    );
    Ok(out)
}

fn bound_curve(a: &BoundArgs, stem: &str) -> CliResult<Outputs> {
    let p = Protograph::load(&a.protograph)?;
    let bound = conv_bound(
        &p,
        a.lambda_max,
        a.expand.expand_m,
        a.expand.expand_seed,
        &growth_options(&a.spectral),
    )?;
    for (lambda, b) in bound.rows() {
        println!("lambda {lambda}: bound {b:.5}");
    }
    match &bound.plateau {
        Some(pl) => println!("plateau {:.4} from lambda = {}", pl.value, pl.onset),
        None => println!("no plateau within lambda <= {}", a.lambda_max),
    }
    let mut out = Outputs::default();
    emit(
        &mut out,
        &a.output,
        stem,
        || {
            let mut s = String::from("lambda,bound\n");
            for (l, b) in bound.rows() {
                let _ = writeln!(s, "{l},{b}");
            }
            s
        },
        || json(&bound),
    );
    Ok(out)
}

/// Base matrix of the block or tail-biting code selected by `code`.
fn code_base(p: &Protograph, code: &CodeArgs) -> CliResult<Protograph> {
    if code.lambda == 1 {
        Ok(p.clone())
    } else {
        Ok(Unwrapping::cut(p)?.tailbite(code.lambda)?)
    }
}

fn lift_spec(code: &CodeArgs) -> CliResult<LiftSpec> {
    Ok(LiftSpec::new(code.n, code.style.into(), code.lift_seed)?)
}

fn lift_cmd(a: &LiftArgs, stem: &str) -> CliResult<Outputs> {
    let p = load(&a.protograph, &a.code.expand)?;
    let base = code_base(&p, &a.code)?;
    let h = lift(&base, &lift_spec(&a.code)?)?;
    println!("{} x {} parity-check matrix, {} ones", h.rows(), h.cols(), h.nnz());
    let mut out = Outputs::default();
    out.add(format!("{stem}.alist"), h.to_alist());
    Ok(out)
}

fn matrix_text(m: &[Vec<u32>]) -> String {
    m.iter()
        .map(|r| r.iter().map(u32::to_string).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join("\n")
}

fn unwrap_cmd(a: &UnwrapArgs, stem: &str) -> CliResult<Outputs> {
    let p = load(&a.protograph, &a.expand)?;
    let u = Unwrapping::cut(&p)?;
    if a.lambda.is_empty() || a.lambda.contains(&0) {
        return Err(Failure::Input("unwrapping factors must be >= 1".into()));
    }
    println!("P_l =\n{}", matrix_text(u.lower()));
    println!("P_u =\n{}", matrix_text(u.upper()));
    println!("y = {}", u.y());
    if u.reduced_period() < u.y() {
        println!("smallest band period: {}", u.reduced_period());
    }
    let mut out = Outputs::default();
    let mut params = Vec::new();
    for &lambda in &a.lambda {
        let d = u.derived_params(a.n, lambda);
        println!(
            "lambda = {lambda}: T = {}, nu_s = {}, m_s = {}, tail-biting length = {}",
            d.period, d.constraint_length, d.syndrome_memory, d.tail_biting_length
        );
        params.push((lambda, d));
        let tb = u.tailbite(lambda)?;
        out.add(format!("{stem}.tb{lambda}.json"), tb.to_json());
    }
    emit(
        &mut out,
        &a.output,
        stem,
        || {
            let mut s = String::from("lambda,y,period,constraint_length,syndrome_memory,tail_biting_length\n");
            for (l, d) in &params {
                let _ = writeln!(
                    s,
                    "{l},{},{},{},{},{}",
                    u.y(),
                    d.period,
                    d.constraint_length,
                    d.syndrome_memory,
                    d.tail_biting_length
                );
            }
            s
        },
        || {
            let rows: Vec<_> = params
                .iter()
                .map(|(l, d)| serde_json::json!({ "lambda": l, "params": d }))
                .collect();
            json(&serde_json::json!({
                "lower": u.lower(),
                "upper": u.upper(),
                "y": u.y(),
                "reduced_period": u.reduced_period(),
                "n": a.n,
                "factors": rows,
            }))
        },
    );
    Ok(out)
}

fn mindist(a: &MindistArgs, stem: &str) -> CliResult<Outputs> {
    let h: SparseBinaryMatrix = if a.input.extension().is_some_and(|e| e == "alist") {
        let text = fs::read_to_string(&a.input)
            .map_err(|e| Failure::Input(format!("cannot read {}: {e}", a.input.display())))?;
        SparseBinaryMatrix::from_alist(&text)?
    } else {
        let p = load(&a.input, &a.code.expand)?;
        lift(&code_base(&p, &a.code)?, &lift_spec(&a.code)?)?
    };
    let spectrum = exact_spectrum(&h, a.k_limit)?;
    match spectrum.d_min {
        Some(d) => println!("n = {}, k = {}, d_min = {d}", spectrum.n, spectrum.k),
        None => println!("n = {}, k = {}, no nonzero codewords", spectrum.n, spectrum.k),
    }
    let mut out = Outputs::default();
    emit(&mut out, &a.output, stem, || spectrum.to_csv(), || json(&spectrum));
    Ok(out)
}

fn simulate(a: &SimulateArgs, stem: &str) -> CliResult<Outputs> {
    let p = load(&a.protograph, &a.code.expand)?;
    let spec = lift_spec(&a.code)?;
    let rate = *p.rates().1.numer() as f64 / *p.rates().1.denom() as f64;
    let (code, kind, segment_periods) = if a.convolutional {
        let u = Unwrapping::cut(&p)?;
        let code = SimCode::Convolutional {
            u,
            spec,
            period: a.code.lambda,
            segment_periods: a.segment_periods,
        };
        (code, "convolutional", Some(a.segment_periods))
    } else {
        let base = code_base(&p, &a.code)?;
        let h = lift(&base, &spec)?;
        let punctured = (0..h.cols()).map(|j| base.is_punctured(j / spec.n)).collect();
        let kind = if a.code.lambda == 1 { "block" } else { "tail_biting" };
        (SimCode::Block { h, punctured }, kind, None)
    };
    let descriptor = CodeDescriptor {
        protograph: p.name().to_string(),
        kind: kind.into(),
        lambda: a.code.lambda,
        n: a.code.n,
        expansion: a.code.expand.expand_m,
        expansion_seed: a.code.expand.expand_seed,
        lift_seed: a.code.lift_seed,
        lift_style: format!("{:?}", a.code.style).to_lowercase(),
        transmitted_bits_per_frame: 0,
        rate,
        segment_periods,
    };
    let cfg = DecoderConfig {
        max_iterations: a.max_iterations,
        llr_clamp: a.llr_clamp,
        stopping: a.stopping.into(),
        window_periods: a.window_periods,
        window_iterations_per_shift: a.window_iterations,
    };
    let stop = StopRule {
        min_frame_errors: a.min_frame_errors,
        max_frames: a.max_frames,
    };
    let record = ber_curve(&code, descriptor, &cfg, &a.snr, stop, a.seed, a.random_codewords)?;
    for r in &record.rows {
        println!(
            "Eb/N0 {:.2} dB: BER {:.3e}, FER {:.3e} over {} frames",
            r.ebn0_db, r.ber, r.fer, r.frames
        );
    }
    let mut out = Outputs::default();
    emit(&mut out, &a.output, stem, || record.to_csv(), || json(&record));
    Ok(out)
}
