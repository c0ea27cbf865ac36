//! The `ttk` command line: validation, sequence replay, carrying matrices,
//! tightness, Perron-Frobenius certification, roof profiles, systole
//! profiles, and the two family tables.
//!
//! Exit codes: 0 = success/certified, 2 = certification or validation
//! failed, 1 = usage or structural error.

use std::path::{Path, PathBuf};

use crate::geodesics::{roof_profile, systole_profile, FamilyRow};
use crate::io::{
    self, family_csv, load_loop, paint, parse_bundle, parse_measure, parse_seq, parse_track,
    show_certificate, show_rat, show_track, MeasureFile,
};
use crate::measure::{is_recurrent, is_transversely_recurrent_proxy, TransverseMeasure};
use crate::pa::{certify_pa, invariant_check};
use crate::track::EmbeddedCurve;
use crate::{rat_int, Rat};
use num_bigint::BigInt;

pub fn main_with(args: &[String]) -> i32 {
    match run(args) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn default_tol() -> Rat {
    Rat::new(BigInt::from(1), BigInt::from(10u64.pow(12)))
}

struct Flags {
    positional: Vec<String>,
    tol: Rat,
    grid: usize,
    range: (i64, i64),
    out: Option<PathBuf>,
    curves: Option<PathBuf>,
    fixture: Option<PathBuf>,
    #[allow(dead_code)]
    seed: u64,
}

fn parse_flags(args: &[String]) -> Result<Flags, String> {
    let mut f = Flags {
        positional: Vec::new(),
        tol: default_tol(),
        grid: 256,
        range: (1, 4),
        out: None,
        curves: None,
        fixture: None,
        seed: 0,
    };
    let mut i = 0;
    while i < args.len() {
        let a = &args[i];
        let mut take = |name: &str| -> Result<String, String> {
            i += 1;
            args.get(i)
                .cloned()
                .ok_or_else(|| format!("flag {name} needs a value"))
        };
        match a.as_str() {
            "--tol" => {
                let v = take("--tol")?;
                f.tol = io::parse_rat(&v).ok_or_else(|| format!("bad rational `{v}`"))?;
            }
            "--grid" => {
                let v = take("--grid")?;
                f.grid = v.parse().map_err(|_| format!("bad grid `{v}`"))?;
            }
            "--range" => {
                let v = take("--range")?;
                let (a, b) = v
                    .split_once("..")
                    .ok_or_else(|| format!("range must look like a..b, got `{v}`"))?;
                f.range = (
                    a.parse().map_err(|_| "bad range start".to_string())?,
                    b.parse().map_err(|_| "bad range end".to_string())?,
                );
            }
            "--out" => f.out = Some(PathBuf::from(take("--out")?)),
            "--curves" => f.curves = Some(PathBuf::from(take("--curves")?)),
            "--fixture" => f.fixture = Some(PathBuf::from(take("--fixture")?)),
            "--seed" => {
                let v = take("--seed")?;
                f.seed = v.parse().map_err(|_| format!("bad seed `{v}`"))?;
            }
            other if other.starts_with("--") => {
                return Err(format!("unknown flag `{other}`"));
            }
            _ => f.positional.push(a.clone()),
        }
        i += 1;
    }
    Ok(f)
}

const USAGE: &str = "usage: ttk <command> [args]
  validate <track.ttk>
  regions  <track.ttk>
  recurrent <track.ttk>
  run      <seq-file>
  matrix   <seq-file>
  tight    <seq-file>
  pa       <seq-file> [--tol a/b]
  roof     <seq-file> <measure-file>
  systole  <seq-file> --curves <file> [--grid N] [--tol a/b]
  family   twist|zeta --fixture <dir-or-manifest> --range a..b [--out csv] [--grid N] [--tol a/b]";

fn run(args: &[String]) -> Result<i32, String> {
    if args.is_empty() {
        return Err(USAGE.to_string());
    }
    let cmd = args[0].as_str();
    let flags = parse_flags(&args[1..])?;
    match cmd {
        "validate" => cmd_validate(&flags),
        "regions" => cmd_regions(&flags),
        "recurrent" => cmd_recurrent(&flags),
        "run" => cmd_run(&flags),
        "matrix" => cmd_matrix(&flags),
        "tight" => cmd_tight(&flags),
        "pa" => cmd_pa(&flags),
        "roof" => cmd_roof(&flags),
        "systole" => cmd_systole(&flags),
        "family" => cmd_family(&flags),
        _ => Err(USAGE.to_string()),
    }
}

fn need_positional(flags: &Flags, n: usize) -> Result<&str, String> {
    flags
        .positional
        .get(n)
        .map(|s| s.as_str())
        .ok_or_else(|| USAGE.to_string())
}

fn cmd_validate(flags: &Flags) -> Result<i32, String> {
    let path = PathBuf::from(need_positional(flags, 0)?);
    let track = parse_track(&path).map_err(|e| e.to_string())?;
    let rep = track.validate().map_err(|e| e.to_string())?;
    println!("generic:    {}", rep.generic);
    println!("connected:  {}", rep.connected);
    if let Some(ix) = &rep.index_sum {
        println!(
            "index sum:  {} (surface Euler characteristic {})",
            show_rat(ix),
            track.surface.euler()
        );
    }
    println!("census:     (cusps, punctures, count)");
    for (c, p, n) in &rep.region_census {
        println!("            ({c}, {p}, {n})");
    }
    for f in &rep.forbidden {
        println!("violation:  {f}");
    }
    println!("maximal:    {}", rep.maximal);
    let ok = rep.is_valid();
    println!("valid:      {}", paint(if ok { "yes" } else { "no" }, ok));
    Ok(if ok { 0 } else { 2 })
}

fn cmd_regions(flags: &Flags) -> Result<i32, String> {
    let path = PathBuf::from(need_positional(flags, 0)?);
    let track = parse_track(&path).map_err(|e| e.to_string())?;
    let regions = track.complementary_regions().map_err(|e| e.to_string())?;
    for (i, r) in regions.iter().enumerate() {
        let segs: Vec<String> = r
            .segments
            .iter()
            .map(|(b, s)| format!("{b}{s}"))
            .collect();
        println!(
            "region {}: cusps {} punctures {} boundary {}",
            i + 1,
            r.cusps,
            r.punctures,
            segs.join(" ")
        );
    }
    Ok(0)
}

fn cmd_recurrent(flags: &Flags) -> Result<i32, String> {
    let path = PathBuf::from(need_positional(flags, 0)?);
    let track = parse_track(&path).map_err(|e| e.to_string())?;
    let (rec, witness) = is_recurrent(&track).map_err(|e| e.to_string())?;
    println!("recurrent: {}", paint(&rec.to_string(), rec));
    if let Some(w) = witness {
        print!("witness:   {}", io::show_tm(&w));
    }
    match is_transversely_recurrent_proxy(&track) {
        Ok((trec, wit)) => {
            println!("transversely recurrent (proxy): {}", paint(&trec.to_string(), trec));
            if let Some(w) = wit {
                print!("tangential witness: {}", io::show_tg(&w));
            }
        }
        Err(e) => println!("transversely recurrent (proxy): skipped ({e})"),
    }
    Ok(if rec { 0 } else { 2 })
}

fn cmd_run(flags: &Flags) -> Result<i32, String> {
    let path = PathBuf::from(need_positional(flags, 0)?);
    let sf = parse_seq(&path).map_err(|e| e.to_string())?;
    let end = sf.seq.end().map_err(|e| e.to_string())?;
    print!("{}", show_track(&end));
    if let Some(ps) = crate::pa::close_sequence(&sf.seq).map_err(|e| e.to_string())? {
        let toks: Vec<String> = ps.sigma.iter().map(|x| x.to_string()).collect();
        println!("# closes with iso {} (order {})", toks.join(" "), ps.order);
    }
    Ok(0)
}

fn cmd_matrix(flags: &Flags) -> Result<i32, String> {
    let path = PathBuf::from(need_positional(flags, 0)?);
    let sf = parse_seq(&path).map_err(|e| e.to_string())?;
    let m = sf.seq.carrying_matrix().map_err(|e| e.to_string())?;
    for line in io::matrix_lines(&m) {
        println!("{line}");
    }
    Ok(0)
}

fn cmd_tight(flags: &Flags) -> Result<i32, String> {
    let path = PathBuf::from(need_positional(flags, 0)?);
    let sf = parse_seq(&path).map_err(|e| e.to_string())?;
    let tight = sf.seq.is_tight().map_err(|e| e.to_string())?;
    println!("tight: {}", paint(&tight.to_string(), tight));
    if tight {
        let beta = sf.seq.min_weight_bound().map_err(|e| e.to_string())?;
        println!("min-weight bound: {}", show_rat(&beta));
    }
    Ok(if tight { 0 } else { 2 })
}

fn cmd_pa(flags: &Flags) -> Result<i32, String> {
    let path = PathBuf::from(need_positional(flags, 0)?);
    let ps = match load_loop(&path) {
        Ok(ps) => ps,
        Err(e) => {
            eprintln!("{e}");
            return Ok(2);
        }
    };
    match certify_pa(&ps, &flags.tol) {
        Ok(cert) => {
            print!("{}", show_certificate(&cert));
            let check = invariant_check(&cert);
            for v in &check.violations {
                println!("violation: {v}");
            }
            let ok = check.ok();
            println!(
                "certified: {}",
                paint(if ok { "yes" } else { "no" }, ok)
            );
            Ok(if ok { 0 } else { 2 })
        }
        Err(e) => {
            println!("certification failed: {e}");
            Ok(2)
        }
    }
}

fn cmd_roof(flags: &Flags) -> Result<i32, String> {
    let seq_path = PathBuf::from(need_positional(flags, 0)?);
    let m_path = PathBuf::from(need_positional(flags, 1)?);
    let sf = parse_seq(&seq_path).map_err(|e| e.to_string())?;
    let end = sf.seq.end().map_err(|e| e.to_string())?;
    let weights = match parse_measure(&m_path).map_err(|e| e.to_string())? {
        MeasureFile::Transverse(w) => w,
        MeasureFile::Tangential(_) => {
            return Err("roof profiles need a transverse measure (tm)".into())
        }
    };
    let mu = TransverseMeasure::new(&end, weights).map_err(|e| e.to_string())?;
    let profile = roof_profile(&sf.seq, &mu).map_err(|e| e.to_string())?;
    for (i, (a, r)) in profile
        .a_values
        .iter()
        .zip(profile.ratios.iter().chain(std::iter::once(&rat_int(1))))
        .enumerate()
    {
        if i < profile.ratios.len() {
            println!("a({i}) = {}  rho({i}) = {}", show_rat(a), show_rat(r));
        } else {
            println!("a({i}) = {}", show_rat(a));
        }
    }
    Ok(0)
}

fn parse_curves_file(path: &Path) -> Result<Vec<Vec<usize>>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks[0] != "curve" {
            return Err(format!("{}:{}: expected `curve <cycle>`", path.display(), i + 1));
        }
        let cycle: Option<Vec<usize>> = toks[1..].iter().map(|t| t.parse().ok()).collect();
        out.push(cycle.ok_or_else(|| format!("{}:{}: bad cycle", path.display(), i + 1))?);
    }
    Ok(out)
}

fn cmd_systole(flags: &Flags) -> Result<i32, String> {
    let seq_path = PathBuf::from(need_positional(flags, 0)?);
    let curves_path = flags
        .curves
        .as_ref()
        .ok_or_else(|| "systole needs --curves <file>".to_string())?;
    let ps = match load_loop(&seq_path) {
        Ok(ps) => ps,
        Err(e) => {
            eprintln!("{e}");
            return Ok(2);
        }
    };
    let cert = match certify_pa(&ps, &flags.tol) {
        Ok(c) => c,
        Err(e) => {
            println!("certification failed: {e}");
            return Ok(2);
        }
    };
    let cycles = parse_curves_file(curves_path)?;
    let mut curves: Vec<EmbeddedCurve> = Vec::new();
    for cy in &cycles {
        curves.push(
            ps.seq
                .start
                .closed_trainpath(cy)
                .map_err(|e| e.to_string())?,
        );
    }
    let profile = systole_profile(&ps.seq.start, &cert, &curves, flags.grid)
        .map_err(|e| e.to_string())?;
    println!(
        "period log: [{}, {}]",
        show_rat(&profile.period_log.lo),
        show_rat(&profile.period_log.hi)
    );
    for p in &profile.curves {
        let cyc: Vec<String> = p.cycle.iter().map(|b| b.to_string()).collect();
        println!(
            "curve {}: i+ = {}  i- = {}",
            cyc.join(" "),
            show_rat(&p.i_plus),
            show_rat(&p.i_minus)
        );
    }
    println!(
        "sup-min bound: [{}, {}]",
        show_rat(&profile.sup_min.lo),
        show_rat(&profile.sup_min.hi)
    );
    Ok(0)
}

fn resolve_manifest(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join("bundle.ttb")
    } else {
        p.to_path_buf()
    }
}

fn cmd_family(flags: &Flags) -> Result<i32, String> {
    let kind = need_positional(flags, 0)?;
    let fixture = flags
        .fixture
        .as_ref()
        .ok_or_else(|| "family needs --fixture <dir-or-manifest>".to_string())?;
    let manifest = resolve_manifest(fixture);
    let bundle = parse_bundle(&manifest).map_err(|e| e.to_string())?;
    let (lo, hi) = flags.range;
    let rows: Vec<FamilyRow> = match kind {
        "zeta" => {
            let zb = bundle
                .zeta
                .ok_or_else(|| "fixture has no zeta bundle".to_string())?;
            match zb.family(lo..=hi, &flags.tol, flags.grid) {
                Ok(rows) => rows,
                Err(e) => {
                    println!("family failed: {e}");
                    return Ok(2);
                }
            }
        }
        "twist" => {
            let tb = bundle
                .twist
                .ok_or_else(|| "fixture has no twist bundle".to_string())?;
            match tb.family(lo..=hi, &flags.tol, flags.grid) {
                Ok(rows) => rows.into_iter().map(|r| r.row).collect(),
                Err(e) => {
                    println!("family failed: {e}");
                    return Ok(2);
                }
            }
        }
        other => return Err(format!("unknown family `{other}` (twist or zeta)")),
    };
    let csv = family_csv(&rows);
    match &flags.out {
        Some(path) => std::fs::write(path, &csv).map_err(|e| e.to_string())?,
        None => print!("{csv}"),
    }
    Ok(0)
}
