//! Text formats: `ttk 1` tracks, `seq v1` splitting sequences, measures,
//! fixture bundles, certificates, and the family CSV. All formats are
//! line oriented UTF-8 with `#` comments; rationals print as `a/b` or a
//! bare integer. Serializers emit canonical files that re-parse to equal
//! values, byte for byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::geodesics::{FamilyRow, TwistBundle, ZetaBundle};
use crate::matrix::IMat;
use crate::measure::{TangentialMeasure, TransverseMeasure};
use crate::moves::{Move, SplitSeq, SplitSide};
use crate::pa::{perm_order, PaCertificate, PeriodicSeq};
use crate::track::{BranchEnd, EmbeddedCurve, PunctureMark, SideFlag, SurfaceSig, Switch, TrainTrack};
use crate::Rat;
use num_bigint::BigInt;
use thiserror::Error;

#[derive(Error, Debug)]
pub enum IoError {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("{path}: {msg}")]
    File { path: String, msg: String },
    #[error("{0}")]
    Semantic(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn perr(path: &Path, line: usize, msg: impl Into<String>) -> IoError {
    IoError::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// Significant lines with their 1-based numbers; comments and blanks drop.
fn lines_of(text: &str) -> Vec<(usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

pub fn parse_rat(s: &str) -> Option<Rat> {
    if let Some((n, d)) = s.split_once('/') {
        let num: BigInt = n.parse().ok()?;
        let den: BigInt = d.parse().ok()?;
        if den.is_zero() {
            return None;
        }
        Some(Rat::new(num, den))
    } else {
        let n: BigInt = s.parse().ok()?;
        Some(Rat::from(n))
    }
}

use num_traits::Zero;

pub fn show_rat(r: &Rat) -> String {
    if r.denom() == &BigInt::from(1) {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn parse_end(tok: &str) -> Option<BranchEnd> {
    let t = tok.trim_start_matches('(').trim_end_matches(')');
    let (b, e) = t.split_once('.')?;
    let branch: usize = b.parse().ok()?;
    let end: u8 = e.parse().ok()?;
    if end > 1 || branch == 0 {
        return None;
    }
    Some(BranchEnd::new(branch, end))
}

pub fn parse_track_str(text: &str, path: &Path) -> Result<TrainTrack, IoError> {
    let lines = lines_of(text);
    let mut it = lines.iter();
    let (ln, header) = it
        .next()
        .ok_or_else(|| perr(path, 0, "empty file"))?;
    if *header != "ttk 1" {
        return Err(perr(path, *ln, "expected header `ttk 1`"));
    }
    let (ln, sline) = it.next().ok_or_else(|| perr(path, *ln, "missing surface line"))?;
    let surface = {
        let toks: Vec<&str> = sline.split_whitespace().collect();
        if toks.len() != 3 || toks[0] != "surface" {
            return Err(perr(path, *ln, "expected `surface <g> <m>`"));
        }
        SurfaceSig::new(
            toks[1].parse().map_err(|_| perr(path, *ln, "bad genus"))?,
            toks[2].parse().map_err(|_| perr(path, *ln, "bad puncture count"))?,
        )
    };
    let (ln, bline) = it.next().ok_or_else(|| perr(path, *ln, "missing branches line"))?;
    let num_branches: usize = {
        let toks: Vec<&str> = bline.split_whitespace().collect();
        if toks.len() != 2 || toks[0] != "branches" {
            return Err(perr(path, *ln, "expected `branches <p>`"));
        }
        toks[1].parse().map_err(|_| perr(path, *ln, "bad branch count"))?
    };
    let mut switches = Vec::new();
    let mut marks = Vec::new();
    for (ln, line) in it {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks[0] {
            "sw" => {
                if toks.len() != 7 || toks[2] != "A" || toks[4] != "B" {
                    return Err(perr(
                        path,
                        *ln,
                        "expected `sw <id> A (<b>.<e>) B (<b>.<e>) (<b>.<e>)`",
                    ));
                }
                let id: usize = toks[1].parse().map_err(|_| perr(path, *ln, "bad switch id"))?;
                let a = parse_end(toks[3]).ok_or_else(|| perr(path, *ln, "bad A end"))?;
                let b0 = parse_end(toks[5]).ok_or_else(|| perr(path, *ln, "bad B end"))?;
                let b1 = parse_end(toks[6]).ok_or_else(|| perr(path, *ln, "bad B end"))?;
                for e in [a, b0, b1] {
                    if e.branch > num_branches {
                        return Err(perr(
                            path,
                            *ln,
                            format!("branch {} exceeds declared count {}", e.branch, num_branches),
                        ));
                    }
                }
                switches.push(Switch::new(id, a, b0, b1));
            }
            "punct" => {
                if toks.len() != 3 {
                    return Err(perr(path, *ln, "expected `punct <b>.<e> <L|R>`"));
                }
                let at = parse_end(toks[1]).ok_or_else(|| perr(path, *ln, "bad mark end"))?;
                let side = match toks[2] {
                    "L" => SideFlag::L,
                    "R" => SideFlag::R,
                    _ => return Err(perr(path, *ln, "mark side must be L or R")),
                };
                marks.push(PunctureMark { at, side });
            }
            other => {
                return Err(perr(path, *ln, format!("unknown directive `{other}`")));
            }
        }
    }
    TrainTrack::new(surface, num_branches, switches, marks)
        .map_err(|e| perr(path, 0, format!("structural error: {e}")))
}

pub fn parse_track(path: &Path) -> Result<TrainTrack, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::File {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    parse_track_str(&text, path)
}

pub fn show_track(t: &TrainTrack) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "ttk 1");
    let _ = writeln!(out, "surface {} {}", t.surface.genus, t.surface.punctures);
    let _ = writeln!(out, "branches {}", t.num_branches);
    for sw in &t.switches {
        let _ = writeln!(
            out,
            "sw {} A ({}) B ({}) ({})",
            sw.id, sw.side_a[0], sw.side_b[0], sw.side_b[1]
        );
    }
    for m in &t.puncture_marks {
        let _ = writeln!(out, "punct {} {}", m.at, m.side);
    }
    out
}

/// A parsed sequence file: the track path recorded in the header is
/// resolved relative to the sequence file's directory.
pub struct SeqFile {
    pub seq: SplitSeq,
    pub iso: Option<Vec<usize>>,
    pub track_path: PathBuf,
}

pub fn parse_seq(path: &Path) -> Result<SeqFile, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::File {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    let lines = lines_of(&text);
    let mut it = lines.iter().peekable();
    let (ln, header) = it.next().ok_or_else(|| perr(path, 0, "empty file"))?;
    if *header != "seq v1" {
        return Err(perr(path, *ln, "expected header `seq v1`"));
    }
    let (ln, tline) = it.next().ok_or_else(|| perr(path, *ln, "missing track line"))?;
    let track_rel = tline
        .strip_prefix("track ")
        .ok_or_else(|| perr(path, *ln, "expected `track <file>`"))?;
    let track_path = path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(track_rel.trim());
    let start = parse_track(&track_path)?;
    let mut moves = Vec::new();
    let mut iso = None;
    for (ln, line) in it {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks[0] {
            "split" => {
                if toks.len() != 3 {
                    return Err(perr(path, *ln, "expected `split <branch> L|R`"));
                }
                let branch: usize =
                    toks[1].parse().map_err(|_| perr(path, *ln, "bad branch"))?;
                let side = match toks[2] {
                    "L" => SplitSide::L,
                    "R" => SplitSide::R,
                    _ => return Err(perr(path, *ln, "side must be L or R")),
                };
                moves.push(Move::Split { branch, side });
            }
            "shift" => {
                if toks.len() != 2 {
                    return Err(perr(path, *ln, "expected `shift <branch>`"));
                }
                let branch: usize =
                    toks[1].parse().map_err(|_| perr(path, *ln, "bad branch"))?;
                moves.push(Move::Shift { branch });
            }
            "iso" => {
                let perm: Option<Vec<usize>> =
                    toks[1..].iter().map(|t| t.parse().ok()).collect();
                let perm = perm.ok_or_else(|| perr(path, *ln, "bad iso permutation"))?;
                if perm.len() != start.num_branches {
                    return Err(perr(path, *ln, "iso length differs from branch count"));
                }
                iso = Some(perm);
            }
            other => return Err(perr(path, *ln, format!("unknown directive `{other}`"))),
        }
    }
    let seq = SplitSeq::new(start, moves);
    if let Some(perm) = &iso {
        let end = seq
            .end()
            .map_err(|e| IoError::Semantic(format!("sequence does not replay: {e}")))?;
        if !end.rename_branches(perm).same_structure(&seq.start) {
            return Err(IoError::Semantic(
                "declared iso does not identify end with start".into(),
            ));
        }
    }
    Ok(SeqFile {
        seq,
        iso,
        track_path,
    })
}

pub fn show_seq(seq: &SplitSeq, track_file: &str, iso: Option<&[usize]>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "seq v1");
    let _ = writeln!(out, "track {}", track_file);
    for mv in &seq.moves {
        match mv {
            Move::Split { branch, side } => {
                let _ = writeln!(out, "split {} {}", branch, side);
            }
            Move::Shift { branch } => {
                let _ = writeln!(out, "shift {}", branch);
            }
        }
    }
    if let Some(perm) = iso {
        let toks: Vec<String> = perm.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(out, "iso {}", toks.join(" "));
    }
    out
}

pub enum MeasureFile {
    Transverse(Vec<Rat>),
    Tangential(Vec<Rat>),
}

pub fn parse_measure(path: &Path) -> Result<MeasureFile, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::File {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    let lines = lines_of(&text);
    let (ln, line) = lines
        .first()
        .ok_or_else(|| perr(path, 0, "empty measure file"))?;
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() < 2 {
        return Err(perr(path, *ln, "expected `tm <p> <w...>` or `tg <p> <w...>`"));
    }
    let p: usize = toks[1].parse().map_err(|_| perr(path, *ln, "bad count"))?;
    if toks.len() != p + 2 {
        return Err(perr(path, *ln, format!("expected {} weights", p)));
    }
    let weights: Option<Vec<Rat>> = toks[2..].iter().map(|t| parse_rat(t)).collect();
    let weights = weights.ok_or_else(|| perr(path, *ln, "bad rational weight"))?;
    match toks[0] {
        "tm" => Ok(MeasureFile::Transverse(weights)),
        "tg" => Ok(MeasureFile::Tangential(weights)),
        _ => Err(perr(path, *ln, "measure kind must be tm or tg")),
    }
}

pub fn show_measure_tm(w: &[Rat]) -> String {
    let toks: Vec<String> = w.iter().map(show_rat).collect();
    format!("tm {} {}\n", w.len(), toks.join(" "))
}

pub fn show_measure_tg(w: &[Rat]) -> String {
    let toks: Vec<String> = w.iter().map(show_rat).collect();
    format!("tg {} {}\n", w.len(), toks.join(" "))
}

/// Read a sequence file as a closed loop: prefer the declared iso, else
/// search. Errors when the sequence does not close.
pub fn load_loop(path: &Path) -> Result<PeriodicSeq, IoError> {
    let sf = parse_seq(path)?;
    match sf.iso {
        Some(sigma) => {
            let order = perm_order(&sigma);
            let ps = PeriodicSeq {
                seq: sf.seq,
                sigma,
                order,
            };
            Ok(ps)
        }
        None => {
            let closed = crate::pa::close_sequence(&sf.seq)
                .map_err(|e| IoError::Semantic(format!("replay failed: {e}")))?;
            closed.ok_or_else(|| {
                IoError::Semantic("sequence does not close up to isomorphism".into())
            })
        }
    }
}

fn parse_branch_list(toks: &[&str], path: &Path, ln: usize) -> Result<Vec<usize>, IoError> {
    let v: Option<Vec<usize>> = toks.iter().map(|t| t.parse().ok()).collect();
    v.ok_or_else(|| perr(path, ln, "bad branch list"))
}

/// Bundle manifest: `bundle v1` followed by `track`, `sigma <i> <branches>`,
/// `loop <i> <seq-file>`, `curve <i> <cycle>`, `twistcurve <cycle>`,
/// `twistseq <file>`, `baseloop <file>`.
pub struct BundleFile {
    pub zeta: Option<ZetaBundle>,
    pub twist: Option<TwistBundle>,
}

pub fn parse_bundle(path: &Path) -> Result<BundleFile, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::File {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let lines = lines_of(&text);
    let mut it = lines.iter();
    let (ln, header) = it.next().ok_or_else(|| perr(path, 0, "empty file"))?;
    if *header != "bundle v1" {
        return Err(perr(path, *ln, "expected header `bundle v1`"));
    }
    let mut track: Option<TrainTrack> = None;
    let mut sigmas: [Option<Vec<usize>>; 3] = [None, None, None];
    let mut loops: [Option<PeriodicSeq>; 3] = [None, None, None];
    let mut curves: [Option<Vec<usize>>; 2] = [None, None];
    let mut twistcurve: Option<Vec<usize>> = None;
    let mut twistseq: Option<PeriodicSeq> = None;
    let mut baseloop: Option<PeriodicSeq> = None;
    for (ln, line) in it {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks[0] {
            "track" => {
                track = Some(parse_track(&dir.join(toks[1]))?);
            }
            "sigma" => {
                let i: usize = toks[1].parse().map_err(|_| perr(path, *ln, "bad sigma index"))?;
                if i > 2 {
                    return Err(perr(path, *ln, "sigma index must be 0, 1 or 2"));
                }
                sigmas[i] = Some(parse_branch_list(&toks[2..], path, *ln)?);
            }
            "loop" => {
                let i: usize = toks[1].parse().map_err(|_| perr(path, *ln, "bad loop index"))?;
                if i > 2 {
                    return Err(perr(path, *ln, "loop index must be 0, 1 or 2"));
                }
                loops[i] = Some(load_loop(&dir.join(toks[2]))?);
            }
            "curve" => {
                let i: usize = toks[1].parse().map_err(|_| perr(path, *ln, "bad curve index"))?;
                if i == 0 || i > 2 {
                    return Err(perr(path, *ln, "curve index must be 1 or 2"));
                }
                curves[i - 1] = Some(parse_branch_list(&toks[2..], path, *ln)?);
            }
            "twistcurve" => {
                twistcurve = Some(parse_branch_list(&toks[1..], path, *ln)?);
            }
            "twistseq" => {
                twistseq = Some(load_loop(&dir.join(toks[1]))?);
            }
            "baseloop" => {
                baseloop = Some(load_loop(&dir.join(toks[1]))?);
            }
            other => return Err(perr(path, *ln, format!("unknown directive `{other}`"))),
        }
    }
    let track = track.ok_or_else(|| IoError::Semantic("bundle lacks a track".into()))?;
    let curve_of = |cycle: &Vec<usize>, name: &str| -> Result<EmbeddedCurve, IoError> {
        track
            .closed_trainpath(cycle)
            .map_err(|e| IoError::Semantic(format!("{name}: {e}")))
    };
    let zeta = if sigmas.iter().all(|s| s.is_some())
        && loops.iter().all(|l| l.is_some())
        && curves.iter().all(|c| c.is_some())
    {
        let b = ZetaBundle {
            track: track.clone(),
            sigma0: sigmas[0].clone().unwrap(),
            sigma1: sigmas[1].clone().unwrap(),
            sigma2: sigmas[2].clone().unwrap(),
            phi0: loops[0].clone().unwrap(),
            phi1: loops[1].clone().unwrap(),
            phi2: loops[2].clone().unwrap(),
            gamma1: curve_of(curves[0].as_ref().unwrap(), "gamma1")?,
            gamma2: curve_of(curves[1].as_ref().unwrap(), "gamma2")?,
        };
        b.validate()
            .map_err(|e| IoError::Semantic(format!("zeta bundle: {e}")))?;
        Some(b)
    } else {
        None
    };
    let twist = match (&baseloop, &twistcurve, &twistseq) {
        (Some(base), Some(curve), Some(tw)) => {
            let b = TwistBundle {
                track: track.clone(),
                base: base.clone(),
                alpha: curve_of(curve, "twistcurve")?,
                twist: tw.clone(),
            };
            b.validate()
                .map_err(|e| IoError::Semantic(format!("twist bundle: {e}")))?;
            Some(b)
        }
        _ => None,
    };
    if zeta.is_none() && twist.is_none() {
        return Err(IoError::Semantic(
            "bundle declares neither a complete zeta fixture nor a twist fixture".into(),
        ));
    }
    Ok(BundleFile { zeta, twist })
}

pub fn show_certificate(cert: &PaCertificate) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "pacert v1");
    let _ = writeln!(out, "p {}", cert.p);
    let toks: Vec<String> = cert.sigma.iter().map(|x| x.to_string()).collect();
    let _ = writeln!(out, "sigma {}", toks.join(" "));
    let _ = writeln!(out, "order {}", cert.order);
    let _ = writeln!(out, "positivity_power {}", cert.positivity_power);
    for i in 0..cert.p {
        let row: Vec<String> = cert
            .period_matrix
            .row(i)
            .map(|x| x.to_string())
            .collect();
        let _ = writeln!(out, "C {}", row.join(" "));
    }
    let _ = writeln!(
        out,
        "alpha {} {}",
        show_rat(&cert.alpha.lo),
        show_rat(&cert.alpha.hi)
    );
    let lp: Vec<String> = cert.lambda_plus.weights().iter().map(show_rat).collect();
    let _ = writeln!(out, "lambda_plus {}", lp.join(" "));
    let lm: Vec<String> = cert.lambda_minus.weights().iter().map(show_rat).collect();
    let _ = writeln!(out, "lambda_minus {}", lm.join(" "));
    out
}

pub const CSV_HEADER: &str =
    "param,alpha_lo,alpha_hi,period_log_lo,period_log_hi,supmin_lo,supmin_hi";

pub fn family_csv(rows: &[FamilyRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", CSV_HEADER);
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.param,
            show_rat(&r.alpha.lo),
            show_rat(&r.alpha.hi),
            show_rat(&r.period_log.lo),
            show_rat(&r.period_log.hi),
            show_rat(&r.supmin.lo),
            show_rat(&r.supmin.hi),
        );
    }
    out
}

/// Pretty aligned record output for terminals; honors TTK_COLOR=0|1.
pub fn color_enabled() -> bool {
    match std::env::var("TTK_COLOR") {
        Ok(v) => v != "0",
        Err(_) => false,
    }
}

pub fn paint(s: &str, good: bool) -> String {
    if color_enabled() {
        if good {
            format!("\x1b[32m{s}\x1b[0m")
        } else {
            format!("\x1b[31m{s}\x1b[0m")
        }
    } else {
        s.to_string()
    }
}

pub fn matrix_lines(m: &IMat) -> Vec<String> {
    (0..m.n)
        .map(|i| {
            let row: Vec<String> = m.row(i).map(|x| x.to_string()).collect();
            row.join(" ")
        })
        .collect()
}

pub fn show_tm(m: &TransverseMeasure) -> String {
    show_measure_tm(m.weights())
}

pub fn show_tg(m: &TangentialMeasure) -> String {
    show_measure_tg(m.weights())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples::pinwheel;

    #[test]
    fn track_roundtrip_byte_identical() {
        let t = pinwheel();
        let text = show_track(&t);
        let parsed = parse_track_str(&text, Path::new("mem")).unwrap();
        assert_eq!(parsed, t);
        assert_eq!(show_track(&parsed), text);
    }

    #[test]
    fn track_parse_errors_carry_lines() {
        let bad = "ttk 1\nsurface 0 5\nbranches 2\nsw 1 A (3.0) B (1.0) (1.1)\n";
        match parse_track_str(bad, Path::new("mem")) {
            Err(IoError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn rationals() {
        assert_eq!(parse_rat("3/4"), Some(crate::rat(3, 4)));
        assert_eq!(parse_rat("-7"), Some(crate::rat_int(-7)));
        assert_eq!(parse_rat("1/0"), None);
        assert_eq!(show_rat(&crate::rat(3, 4)), "3/4");
        assert_eq!(show_rat(&crate::rat_int(5)), "5");
    }
}
