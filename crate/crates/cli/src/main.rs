//! Experiment runner over the qswitch-core library. Every subcommand emits
//! JSON-lines records (or CSV with --csv) whose bytes depend only on the
//! arguments and the seed, never on the job count or wall-clock.

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use qswitch_core::boolfn::{Assignment, PartialFn};
use qswitch_core::report::{emit_csv, emit_jsonl, ExperimentRecord};
use qswitch_core::{lp, measures, polybounds, projections, switching, verify};

#[derive(Parser)]
#[command(
    name = "qswitch",
    about = "Boolean complexity measures, switching-lemma and projection experiments",
    long_about = None,
    after_help = "CSV column order: experiment,seed,trials,estimate,stderr,paper_bound,pass,params"
)]
struct Cli {
    /// Root seed for all randomized experiments.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Worker threads for Monte Carlo trials; never changes results.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Write records to this path instead of stdout.
    #[arg(long, global = true)]
    out: Option<std::path::PathBuf>,
    /// Emit CSV (fixed column order) instead of JSON lines.
    #[arg(long, global = true)]
    csv: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Complexity measures of a builtin (OR/AND/XOR/MAJ) or a table file.
    Measure {
        /// Builtin name or path to a truth-table file.
        target: String,
        /// Arity for builtin targets.
        #[arg(long)]
        n: Option<usize>,
        /// Report the global measures (dt, C, s, bs, fbs, deg).
        #[arg(long)]
        all: bool,
        /// Report point measures at this input index instead.
        #[arg(long)]
        at: Option<usize>,
    },
    /// Exhaustively check s <= deg^2, bs <= deg^2, fbs <= (pi^2/4) deg^2
    /// over all total functions at arity n.
    ScanFbsdeg {
        #[arg(long)]
        n: usize,
    },
    /// Chebyshev-over-OR gadget identities at gadget arity N.
    Gadget {
        #[arg(long = "N")]
        n: usize,
    },
    /// Switching failure probability of the depth-d truncated canonical
    /// tree, exact or Monte Carlo.
    Switch {
        /// Builtin name or path to a truth-table file.
        #[arg(long = "fn")]
        function: String,
        /// Arity for builtin targets.
        #[arg(long)]
        n: Option<usize>,
        /// Base point x as an input index.
        #[arg(long, default_value_t = 0)]
        x: usize,
        /// Completion y as an input index.
        #[arg(long)]
        y: usize,
        /// Free probability p (rational like 1/4 or decimal).
        #[arg(long)]
        p: String,
        /// Depth budget d.
        #[arg(long)]
        d: u32,
        /// Also report the certificate tree depth at this k (width k^2).
        #[arg(long)]
        k: Option<u32>,
        #[arg(long, conflicts_with = "mc")]
        exact: bool,
        #[arg(long)]
        mc: bool,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
    },
    /// Projection-family experiments.
    Sip {
        #[command(subcommand)]
        command: SipCommand,
    },
    /// Run the full verification suite (criteria 1-9).
    VerifyAll,
}

#[derive(Subcommand)]
enum SipCommand {
    /// Parameter calculus at (m, d).
    Params {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        d: u32,
        /// Report the modified-family parameters instead.
        #[arg(long, conflicts_with = "qcma")]
        prime: bool,
        /// Report the deep-family parameters instead.
        #[arg(long)]
        qcma: bool,
    },
    /// Exact completion check of the initial restriction (TV distance).
    Complete {
        #[arg(long)]
        w: u32,
        #[arg(long)]
        x: String,
        #[arg(long)]
        qprime: String,
        #[arg(long)]
        t: String,
    },
    /// Monte Carlo typicality-window miss rate at toy block sizes.
    Typical {
        #[arg(long, default_value_t = 64)]
        block_size: u64,
        #[arg(long, default_value_t = 0.25)]
        star_prob: f64,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
    },
    /// OR-vs-CNF correlation gap on seeded random instances.
    Corcnf {
        #[arg(long, default_value_t = 200)]
        instances: u64,
    },
}

fn parse_rational(s: &str) -> Result<BigRational, String> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|e| format!("bad rational {s:?}: {e}"))?;
        let d: BigInt = den.trim().parse().map_err(|e| format!("bad rational {s:?}: {e}"))?;
        if d.is_zero() {
            return Err(format!("bad rational {s:?}: zero denominator"));
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let digits = format!("{int}{frac}");
        let n: BigInt = digits.parse().map_err(|e| format!("bad decimal {s:?}: {e}"))?;
        let d = BigInt::from(10u32).pow(frac.len() as u32);
        return Ok(BigRational::new(n, d));
    }
    let n: BigInt = s.parse().map_err(|e| format!("bad number {s:?}: {e}"))?;
    Ok(BigRational::from_integer(n))
}

fn load_function(target: &str, n: Option<usize>) -> Result<PartialFn, String> {
    let builtin = |n: Option<usize>, what: &str| {
        n.ok_or_else(|| format!("builtin {what} needs --n"))
    };
    match target.to_ascii_uppercase().as_str() {
        "OR" => PartialFn::or(builtin(n, "OR")?),
        "AND" => PartialFn::and(builtin(n, "AND")?),
        "XOR" => PartialFn::xor(builtin(n, "XOR")?),
        "MAJ" => PartialFn::maj(builtin(n, "MAJ")?),
        _ => {
            let text = std::fs::read_to_string(target)
                .map_err(|e| format!("cannot read {target}: {e}"))?;
            return PartialFn::from_table_format(&text).map_err(|e| e.to_string());
        }
    }
    .map_err(|e| e.to_string())
}

fn run(cli: &Cli) -> Result<(Vec<ExperimentRecord>, bool), String> {
    let mut all_pass = true;
    let records = match &cli.command {
        Command::Measure { target, n, all, at } => {
            let f = load_function(target, *n)?;
            let mut rec = ExperimentRecord::new("measure")
                .param("target", target.as_str())
                .param("n", f.n() as u64);
            if let Some(x) = at {
                if *x >= f.table_len() || f.value_at(*x).is_none() {
                    return Err(format!("--at {x} is not a domain point"));
                }
                let a = Assignment::from_index(*x, f.n());
                rec = rec
                    .param("at", *x)
                    .param("C", measures::cert_complexity(&f, &a).map_err(|e| e.to_string())?)
                    .param("s", measures::sensitivity(&f, &a).map_err(|e| e.to_string())?)
                    .param("bs", measures::block_sensitivity(&f, &a).map_err(|e| e.to_string())?)
                    .param(
                        "FC",
                        measures::frac_cert(&f, &a)
                            .map_err(|e| e.to_string())?
                            .value
                            .to_string(),
                    );
            } else {
                let _ = all; // --all is the default report
                let m = measures::measure_report(&f, false).map_err(|e| e.to_string())?;
                rec = rec
                    .param("dt", m.dt)
                    .param("C", m.c)
                    .param("s", m.s)
                    .param("bs", m.bs)
                    .param("fbs", m.fbs.to_string());
                if let Some(deg) = m.deg {
                    rec = rec.param("deg", deg);
                }
            }
            vec![rec]
        }
        Command::ScanFbsdeg { n } => {
            if *n > 3 {
                return Err("scan-fbsdeg supports n <= 3 (2^2^n functions)".into());
            }
            let bound = polybounds::pi_sq_over_4_lower_bound();
            let mut violations: Vec<String> = Vec::new();
            for table in 0..1u64 << (1 << n) {
                let f = PartialFn::from_fn(*n, |x| table >> x.index() & 1 == 1)
                    .map_err(|e| e.to_string())?;
                let deg = measures::degree(&f).map_err(|e| e.to_string())?;
                let deg2 = lp::rat_int((deg * deg) as i64);
                let s = measures::max_sensitivity(&f).map_err(|e| e.to_string())?;
                let bs = measures::max_block_sensitivity(&f).map_err(|e| e.to_string())?;
                let fbs = measures::fbs(&f).map_err(|e| e.to_string())?;
                if lp::rat_int(s as i64) > deg2
                    || lp::rat_int(bs as i64) > deg2
                    || fbs > &bound * &deg2
                {
                    violations.push(format!("table {table}"));
                }
            }
            let pass = violations.is_empty();
            all_pass &= pass;
            vec![ExperimentRecord::new("scan_fbsdeg")
                .param("n", *n as u64)
                .param("functions", 1u64 << (1 << n))
                .param("violations", violations)
                .paper_bound("s <= deg^2, bs <= deg^2, fbs <= (pi^2/4) deg^2")
                .pass(pass)]
        }
        Command::Gadget { n } => {
            let g = polybounds::or_gadget(*n).map_err(|e| e.to_string())?;
            let top = g.composed(&vec![1.0; *n]);
            let mut flips_ok = true;
            for j in 0..*n {
                let mut y = vec![1.0; *n];
                y[j] = -1.0;
                flips_ok &= (g.composed(&y) + 1.0).abs() <= 1e-9;
            }
            let max = g.max_abs_composed().map_err(|e| e.to_string())?;
            let pass = (top - 1.0).abs() <= 1e-9 && flips_ok && max <= 1.0 + 1e-9;
            all_pass &= pass;
            vec![ExperimentRecord::new("gadget")
                .param("N", *n as u64)
                .param("m", g.m)
                .param("alpha", g.alpha)
                .param("top_value", top)
                .param("max_abs", max)
                .paper_bound("T_m(h(1^N)) = 1, T_m(h((1^N)^j)) = -1, |T_m(h)| <= 1")
                .pass(pass)]
        }
        Command::Switch {
            function,
            n,
            x,
            y,
            p,
            d,
            k,
            exact,
            mc,
            trials,
        } => {
            let f = load_function(function, *n)?;
            if *x >= f.table_len() || *y >= f.table_len() {
                return Err("--x/--y index out of range".into());
            }
            let xa = Assignment::from_index(*x, f.n());
            let ya = Assignment::from_index(*y, f.n());
            let p_rat = parse_rational(p)?;
            let mut rec = ExperimentRecord::new("switch_fail")
                .param("fn", function.as_str())
                .param("n", f.n() as u64)
                .param("x", *x)
                .param("y", *y)
                .param("p", p_rat.to_string())
                .param("d", *d)
                .paper_bound(format!("exp(-d^0.2) = {:.6}", switching::switch_fail_bound(*d)));
            if *mc && !*exact {
                let pf = p_rat.to_f64().ok_or("p not representable as f64")?;
                let (est, se) = switching::switch_fail_mc(
                    &f, &xa, &ya, pf, *d, *trials, cli.seed, cli.jobs,
                )
                .map_err(|e| e.to_string())?;
                rec = rec
                    .seed(cli.seed)
                    .trials(*trials)
                    .param("mode", "mc")
                    .estimate(est)
                    .stderr(se);
            } else {
                let v = switching::switch_fail_exact(&f, &xa, &ya, &p_rat, *d)
                    .map_err(|e| e.to_string())?;
                rec = rec.param("mode", "exact").estimate(v.to_string());
            }
            let mut out = vec![rec];
            if let Some(k) = k {
                let rho = qswitch_core::boolfn::Restriction::all_star(f.n());
                let tree = switching::cert_dt(&f, &rho, *k).map_err(|e| e.to_string())?;
                out.push(
                    ExperimentRecord::new("switch_cert_dt")
                        .param("fn", function.as_str())
                        .param("k", *k)
                        .param("depth", tree.depth())
                        .param("depth_cap", k.pow(4))
                        .pass(tree.depth() <= k.pow(4)),
                );
            }
            out
        }
        Command::Sip { command } => run_sip(cli, command, &mut all_pass)?,
        Command::VerifyAll => {
            let records = verify::verify_all(cli.seed, cli.jobs).map_err(|e| e.to_string())?;
            all_pass = records.iter().all(|r| r.pass);
            records
        }
    };
    Ok((records, all_pass))
}

fn run_sip(
    cli: &Cli,
    command: &SipCommand,
    all_pass: &mut bool,
) -> Result<Vec<ExperimentRecord>, String> {
    Ok(match command {
        SipCommand::Params { m, d, prime, qcma } => {
            if *qcma {
                let p = projections::qcma_params(*m, *d).map_err(|e| e.to_string())?;
                let mut rec = ExperimentRecord::new("sip_params_qcma")
                    .param("m", *m)
                    .param("d", *d)
                    .param("w", p.w)
                    .param("w0", p.w0)
                    .param("q", p.q)
                    .param("lambda", p.lambda)
                    .param("t", p.t[1..].to_vec())
                    .param("t_fallback", p.t_fallback[1..].to_vec())
                    .param(
                        "log2_N_i",
                        p.n_i[1..].iter().map(|v| v.log2).collect::<Vec<f64>>(),
                    )
                    .param("f_i", p.f_i[1..].to_vec());
                rec.pass = true;
                vec![rec]
            } else if *prime {
                let p = projections::sipprime_params(*m, *d).map_err(|e| e.to_string())?;
                vec![ExperimentRecord::new("sip_params_prime")
                    .param("m", *m)
                    .param("d", *d)
                    .param("n_vars", p.n_vars)
                    .param("w_dm2", p.w_dm2)
                    .param("qprime", p.qprime)
                    .param("x", p.x)
                    .param("p1", p.p1)
                    .param("w_dm1", p.w_dm1)]
            } else {
                let p = projections::sip_params(*m, *d).map_err(|e| e.to_string())?;
                vec![ExperimentRecord::new("sip_params")
                    .param("m", *m)
                    .param("d", *d)
                    .param("w", p.w)
                    .param("w0", p.w0)
                    .param("q", p.q)
                    .param("p", p.p)
                    .param("lambda", p.lambda)
                    .param("t", p.t[1..].to_vec())
                    .param("n", p.n)]
            }
        }
        SipCommand::Complete { w, x, qprime, t } => {
            let xr = parse_rational(x)?;
            let qr = parse_rational(qprime)?;
            let tr = parse_rational(t)?;
            let tv = projections::completion_check_init(*w, &xr, &qr, &tr)
                .map_err(|e| e.to_string())?;
            let pass = tv == lp::rat_int(0);
            *all_pass &= pass;
            vec![ExperimentRecord::new("sip_complete")
                .param("w", *w)
                .param("x", xr.to_string())
                .param("qprime", qr.to_string())
                .param("t", tr.to_string())
                .estimate(tv.to_string())
                .paper_bound("TV distance exactly 0")
                .pass(pass)]
        }
        SipCommand::Typical {
            block_size,
            star_prob,
            trials,
        } => {
            let (est, se) = projections::typicality_rate_mc(
                *block_size,
                *star_prob,
                *trials,
                cli.seed,
                cli.jobs,
            )
            .map_err(|e| e.to_string())?;
            let (lo, hi) = projections::count_window(*block_size, *star_prob);
            vec![ExperimentRecord::new("sip_typical")
                .seed(cli.seed)
                .trials(*trials)
                .param("block_size", *block_size)
                .param("star_prob", *star_prob)
                .param("window", vec![lo, hi])
                .estimate(est)
                .stderr(se)
                .paper_bound("miss probability exp(-Omega(B^0.1)) regime")]
        }
        SipCommand::Corcnf { instances } => {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cli.seed);
            let mut violations: Vec<String> = Vec::new();
            for inst in 0..*instances {
                let n = rng.gen_range(2..=8);
                let tau = qswitch_core::boolfn::Restriction::new(
                    (0..n)
                        .map(|_| match rng.gen_range(0..4) {
                            0 => qswitch_core::boolfn::Cell::Zero,
                            1 => qswitch_core::boolfn::Cell::One,
                            _ => qswitch_core::boolfn::Cell::Star,
                        })
                        .collect(),
                );
                let r = rng.gen_range(1..=3usize).min(n);
                let clauses = (0..rng.gen_range(1..=4))
                    .map(|_| {
                        let mut idx: Vec<usize> = (0..n).collect();
                        for i in (1..idx.len()).rev() {
                            idx.swap(i, rng.gen_range(0..=i));
                        }
                        idx.truncate(r);
                        idx.into_iter().map(|i| (i, rng.gen())).collect()
                    })
                    .collect();
                let cnf = projections::Cnf { n, clauses };
                let p = lp::rat(rng.gen_range(0..=8), 8);
                let (dis, bias, rp) =
                    projections::or_cnf_gap(&tau, &cnf, &p).map_err(|e| e.to_string())?;
                if dis < &bias - &rp {
                    violations.push(format!("instance {inst}"));
                }
            }
            let pass = violations.is_empty();
            *all_pass &= pass;
            vec![ExperimentRecord::new("sip_corcnf")
                .seed(cli.seed)
                .param("instances", *instances)
                .param("violations", violations)
                .paper_bound("disagreement >= bias - r p")
                .pass(pass)]
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((mut records, all_pass)) => {
            records.sort_by(|a, b| a.experiment.cmp(&b.experiment));
            let text = if cli.csv {
                emit_csv(&records)
            } else {
                emit_jsonl(&records)
            };
            if let Some(path) = &cli.out {
                if let Err(e) = std::fs::write(path, text) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            } else {
                let mut stdout = std::io::stdout().lock();
                if stdout.write_all(text.as_bytes()).is_err() {
                    return ExitCode::from(1);
                }
            }
            if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
