use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use recon_core::channel::BscParams;
use recon_core::codes::{degree_sequence, girth, parse_ensemble, peg_construct, read_alist, write_alist, ParityCheckCode};
use recon_core::density_evolution::{self, stability_bound, DeConfig};
use recon_core::prng::{derive_seed, SplitMix64};
use recon_core::protocol::{
    efficiency, run_alice_stream, run_bob_stream, run_session, Alice, Bob, Mode, RatePolicy,
    ReconciliationReport, SessionConfig, SessionSeeds,
};
use recon_core::rate_adapt::{achievable_range, parse_efficiency_csv};
use recon_core::sim::{max_correctable, CrossoverGrid, FerSpec, FrameSimulator};
use recon_core::{Channel, Decoder, Ensemble};

use crate::config::Config;
use crate::grid::{parse_range, parse_values};
use crate::{CliError, ConstructArgs, EnsembleArgs, ReconcileArgs, StabilityArgs, SweepArgs, ThresholdArgs};

// Sub-seeds of the session seed.
const SEED_PAYLOAD: u64 = 1;
const SEED_NOISE: u64 = 2;
const SEED_FILL: u64 = 3;
const SEED_SAMPLE: u64 = 4;

fn usage(err: impl std::fmt::Display) -> CliError {
    CliError::Usage(err.to_string())
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Writes to `out`, or stdout when absent.
fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|()| stdout.flush())
                .map_err(|e| CliError::Io(format!("stdout: {e}")))
        }
    }
}

fn load_ensemble(args: &EnsembleArgs, cfg: &Config) -> Result<Ensemble, CliError> {
    if let Some(path) = cfg.pick_opt::<PathBuf>(args.ensemble.clone(), "ensemble")? {
        return parse_ensemble(&read_text(&path)?).map_err(usage);
    }
    let Some(pair) = cfg.pick_opt::<String>(args.regular.clone(), "regular")? else {
        return Err(CliError::Usage("give --ensemble FILE or --regular DV,DC".into()));
    };
    let degrees: Vec<usize> = pair
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("--regular: cannot parse `{pair}`")))?;
    match degrees[..] {
        [dv, dc] => Ensemble::regular(dv, dc).map_err(usage),
        _ => Err(CliError::Usage("--regular takes two degrees".into())),
    }
}

fn load_code(flag: Option<PathBuf>, cfg: &Config) -> Result<ParityCheckCode, CliError> {
    let path: PathBuf = cfg
        .pick_opt(flag, "alist")?
        .ok_or_else(|| CliError::Usage("--alist is required".into()))?;
    read_alist(&read_text(&path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn decoder(flag: Option<usize>, cfg: &Config) -> Result<Decoder, CliError> {
    let mut dec = Decoder::default();
    dec.max_iterations = cfg.pick(flag, "max-iterations", dec.max_iterations)?;
    dec.validate().map_err(usage)?;
    Ok(dec)
}

pub fn construct(args: ConstructArgs, cfg: &Config) -> Result<(), CliError> {
    let dist = load_ensemble(&args.ensemble, cfg)?;
    let n = cfg.pick(args.n, "n", 10_000)?;
    let seed = cfg.pick(args.seed, "seed", 0u64)?;
    let out: PathBuf = cfg
        .pick_opt(args.out, "out")?
        .ok_or_else(|| CliError::Usage("--out is required".into()))?;
    let seq = degree_sequence(&dist, n).map_err(usage)?;
    let code = peg_construct(&seq, seed).map_err(usage)?;
    fs::write(&out, write_alist(&code)).map_err(|e| CliError::io(&out, e))?;
    let rank = code.rank();
    let mut text = String::new();
    let _ = writeln!(text, "n={}", code.n());
    let _ = writeln!(text, "m={}", code.m());
    let _ = writeln!(text, "design_rate={}", code.mother_rate());
    let _ = writeln!(text, "rate={}", (code.n() - rank) as f64 / code.n() as f64);
    let _ = writeln!(text, "girth={}", girth(&code).map_or("inf".to_string(), |g| g.to_string()));
    let _ = writeln!(text, "rank={rank}");
    emit(None, &text)
}

fn parse_mode(text: &str) -> Result<Mode, CliError> {
    match text {
        "data" => Ok(Mode::Data),
        "key" => Ok(Mode::Key),
        other => Err(CliError::Usage(format!("unknown mode `{other}`, expected data or key"))),
    }
}

fn print_report(report: &ReconciliationReport) -> Result<(), CliError> {
    emit(None, &format!("{}\n", report.to_json()))?;
    if report.success {
        Ok(())
    } else {
        Err(CliError::Failure("reconciliation failed".into()))
    }
}

pub fn reconcile(args: ReconcileArgs, cfg: &Config) -> Result<(), CliError> {
    let code = Arc::new(load_code(args.alist, cfg)?);
    let n = code.n();
    let delta = cfg.pick(args.delta, "delta", 0.1)?;
    let t = cfg.pick(args.t, "t", (n / 20).max(1))?;
    let seed = cfg.pick(args.seed, "seed", 0u64)?;
    let mode = parse_mode(&cfg.pick(args.mode, "mode", "data".to_string())?)?;

    let mut session = SessionConfig::new(code, delta, t, mode);
    if let Some(rate) = cfg.pick_opt(args.rate, "rate")? {
        session.rate_policy = RatePolicy::Fixed(rate);
    } else if let Some(path) = cfg.pick_opt::<PathBuf>(args.efficiency, "efficiency")? {
        session.rate_policy = RatePolicy::Efficiency(parse_efficiency_csv(&read_text(&path)?).map_err(usage)?);
    }
    session.rate_step = cfg.pick_opt(args.rate_step, "rate-step")?;
    session.layout_seed = cfg.pick(args.layout_seed, "layout-seed", seed)?;
    session.nonce = cfg.pick(args.nonce, "nonce", 0)?;
    session.decoder = decoder(args.max_iterations, cfg)?;
    session.validate().map_err(usage)?;

    let seeds = SessionSeeds {
        fill: derive_seed(seed, SEED_FILL),
        sample: derive_seed(seed, SEED_SAMPLE),
    };
    let listen: Option<String> = cfg.pick_opt(args.listen, "listen")?;
    let connect: Option<String> = cfg.pick_opt(args.connect, "connect")?;

    if let Some(addr) = listen {
        let listener = TcpListener::bind(&addr).map_err(|e| CliError::Io(format!("{addr}: {e}")))?;
        let (mut stream, peer) = listener.accept().map_err(|e| CliError::Io(format!("{addr}: {e}")))?;
        log::info!("accepted {peer}");
        let bob = Bob::new(session, seeds.sample).map_err(usage)?;
        let (_, report) = run_bob_stream(&mut stream, bob).map_err(|e| CliError::Io(e.to_string()))?;
        return print_report(&report);
    }

    let p = cfg
        .pick_opt::<f64>(args.p, "p")?
        .ok_or_else(|| CliError::Usage("--p is required".into()))?;
    let channel = BscParams::new(p, derive_seed(seed, SEED_NOISE)).map_err(usage)?;
    let x = SplitMix64::new(derive_seed(seed, SEED_PAYLOAD)).bits(session.payload_len());

    if let Some(addr) = connect {
        let mut stream = TcpStream::connect(&addr).map_err(|e| CliError::Io(format!("{addr}: {e}")))?;
        let alice = Alice::new(session, x, seeds.fill).map_err(usage)?;
        let (_, mut report) =
            run_alice_stream(&mut stream, alice, Some(&channel)).map_err(|e| CliError::Io(e.to_string()))?;
        report.p_true = Some(p);
        report.efficiency = efficiency(report.effective_rate, p);
        report.no_noise = report.efficiency.is_none();
        return print_report(&report);
    }

    let outcome = run_session(&x, &channel, &session, seeds).map_err(|e| CliError::Failure(e.to_string()))?;
    print_report(&outcome.report)
}

pub fn sweep(args: SweepArgs, cfg: &Config, threads: usize) -> Result<(), CliError> {
    let code = load_code(args.alist, cfg)?;
    let rates = parse_values(
        &cfg.pick_opt::<String>(args.rates, "rates")?
            .ok_or_else(|| CliError::Usage("--rates is required".into()))?,
        "--rates",
    )?;
    let deltas = parse_values(&cfg.pick(args.deltas, "deltas", "0.1,0.25,0.5".to_string())?, "--deltas")?;
    let trials = cfg.pick(args.trials, "trials", 200usize)?;
    let fer = cfg.pick(args.fer, "fer", 0.1)?;
    let (p_lo, p_hi, p_step) = parse_range(&cfg.pick(args.p_grid, "p-grid", "0.0005:0.15:0.0005".to_string())?, "--p-grid")?;
    let seed = cfg.pick(args.seed, "seed", 0u64)?;
    let out: Option<PathBuf> = cfg.pick_opt(args.out, "out")?;
    let dec = decoder(args.max_iterations, cfg)?;
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&fer) {
        return Err(CliError::Usage("--fer must be in [0, 1)".into()));
    }
    if !(p_lo > 0.0 && p_lo <= p_hi && p_hi < 0.5) {
        return Err(CliError::Usage("--p-grid needs 0 < lo <= hi < 0.5".into()));
    }
    let grid = CrossoverGrid { lo: p_lo, hi: p_hi, step: p_step };

    let r0 = code.mother_rate();
    let mut points: Vec<(f64, f64)> = rates.iter().flat_map(|&r| deltas.iter().map(move |&d| (r, d))).collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let mut csv = String::from("rate,delta,max_ber,f\n");
    for (rate, delta) in points {
        let (lo, hi) = achievable_range(r0, delta).map_err(usage)?;
        if rate < lo.max(0.0) - 1e-12 || rate > hi + 1e-12 {
            log::warn!("rate {rate} is outside [{:.4}, {hi:.4}] at delta {delta}; skipped", lo.max(0.0));
            continue;
        }
        let sim = match FrameSimulator::new(&code, rate, delta, dec) {
            Ok(sim) => sim,
            Err(e) => {
                log::warn!("rate {rate}, delta {delta}: {e}; skipped");
                continue;
            }
        };
        // Each (rate, delta) point gets its own trial seeds.
        let point_seed = derive_seed(derive_seed(seed, rate.to_bits()), delta.to_bits());
        let spec = FerSpec::new(trials, point_seed).with_target(fer).with_threads(threads);
        match max_correctable(&sim, &grid, &spec).map_err(usage)? {
            Some((p, _)) => {
                let f = efficiency(rate, p).map_or(String::new(), |f| format!("{f:.4}"));
                let _ = writeln!(csv, "{rate},{delta},{p},{f}");
            }
            None => {
                let _ = writeln!(csv, "{rate},{delta},,");
            }
        }
        log::info!("rate {rate} delta {delta} done");
    }
    emit(out.as_deref(), &csv)
}

pub fn threshold(args: ThresholdArgs, cfg: &Config) -> Result<(), CliError> {
    let dist = load_ensemble(&args.ensemble, cfg)?;
    let r0 = dist.design_rate();
    let delta = cfg.pick(args.delta, "delta", 0.0)?;
    let rates = match cfg.pick_opt::<String>(args.rates, "rates")? {
        Some(text) => parse_values(&text, "--rates")?,
        None => vec![r0],
    };
    let mut de = DeConfig::<f64>::default();
    de.bin_width = cfg.pick(args.bin_width, "bin-width", de.bin_width)?;
    de.support = cfg.pick(args.support, "support", de.support)?;
    de.max_iterations = cfg.pick(args.max_iterations, "max-iterations", de.max_iterations)?;
    de.validate().map_err(usage)?;
    let tol = cfg.pick(args.tol, "tol", 1e-4)?;
    if !(tol > 0.0) {
        return Err(CliError::Usage("--tol must be positive".into()));
    }
    let out: Option<PathBuf> = cfg.pick_opt(args.out, "out")?;

    let (lo, hi) = achievable_range(r0, delta).map_err(usage)?;
    let mut csv = String::from("rate,delta,threshold_p\n");
    for rate in rates {
        if rate < lo.max(0.0) - 1e-12 || rate > hi + 1e-12 {
            log::warn!("rate {rate} is outside [{:.4}, {hi:.4}] at delta {delta}; skipped", lo.max(0.0));
            continue;
        }
        let th = density_evolution::threshold(&dist, delta, rate, tol, &de).map_err(usage)?;
        let _ = writeln!(csv, "{rate},{delta},{th:.6}");
    }
    emit(out.as_deref(), &csv)
}

pub fn stability(args: StabilityArgs, cfg: &Config) -> Result<(), CliError> {
    let dist = load_ensemble(&args.ensemble, cfg)?;
    let delta = cfg.pick(args.delta, "delta", 0.0)?;
    let pi = cfg.pick(args.pi, "pi", 0.0)?;
    let p = cfg
        .pick_opt::<f64>(args.p, "p")?
        .ok_or_else(|| CliError::Usage("--p is required".into()))?;
    if !(0.0..=delta).contains(&pi) {
        return Err(CliError::Usage(format!("--pi must lie in [0, delta], got {pi}")));
    }
    let ch = Channel::new(p, pi, delta - pi).map_err(usage)?;
    let r = stability_bound(&dist, &ch);
    let mut text = String::new();
    let _ = writeln!(text, "lambda2={}", r.lambda2);
    let _ = writeln!(text, "rho_prime_1={}", dist.rho_prime_at_one());
    let _ = writeln!(text, "exp_neg_r={}", r.exp_neg_r);
    let _ = writeln!(text, "bound={}", r.bound);
    let _ = writeln!(text, "stable={}", r.stable);
    emit(None, &text)
}
