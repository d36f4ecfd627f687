//! Text formats.
//!
//! Profile CSV: a `voter,<name_1>,...,<name_m>` header, then one row per
//! voter with its 1-based id and `m` values. Continuous values use `%.17g`,
//! discrete grades are bare integers, lines end with LF. The transposed
//! layout has a `candidate,1,...,n` header and one row per candidate.

use crate::numfmt::g17;
use crate::{input, Error};
use evalsim_core::fitting::{CandidateFit, Histogram};
use evalsim_core::linalg::Matrix;
use evalsim_core::profile::{Profile, ProfileError, Scale};

/// How to decide the scale of a profile being read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScaleHint {
    /// Continuous unless some value exceeds 1, in which case discrete with
    /// `K` equal to the largest value.
    Auto,
    Fixed(Scale),
}

impl std::str::FromStr for ScaleHint {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto" => Ok(ScaleHint::Auto),
            "continuous" => Ok(ScaleHint::Fixed(Scale::Continuous)),
            _ => {
                let k = s
                    .strip_prefix("discrete:")
                    .and_then(|k| k.parse::<u32>().ok())
                    .filter(|&k| k > 0)
                    .ok_or_else(|| format!("expected auto, continuous or discrete:K with K >= 1, got {s:?}"))?;
                Ok(ScaleHint::Fixed(Scale::Discrete { levels: k }))
            }
        }
    }
}

fn format_value(x: f64, scale: Scale) -> String {
    match scale {
        Scale::Continuous => g17(x),
        Scale::Discrete { .. } => format!("{}", x as i64),
    }
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("in-memory writer")
}

pub fn write_profile(profile: &Profile, transposed: bool) -> Vec<u8> {
    let mut w = writer();
    let scale = profile.scale();
    let put = |w: &mut csv::Writer<Vec<u8>>, rec: Vec<String>| w.write_record(&rec).expect("in-memory writer");
    if transposed {
        let mut header = vec!["candidate".to_string()];
        header.extend((1..=profile.n_voters()).map(|v| v.to_string()));
        put(&mut w, header);
        for (c, name) in profile.names().iter().enumerate() {
            let mut rec = vec![name.clone()];
            rec.extend((0..profile.n_voters()).map(|v| format_value(profile.get(v, c), scale)));
            put(&mut w, rec);
        }
    } else {
        let mut header = vec!["voter".to_string()];
        header.extend(profile.names().iter().cloned());
        put(&mut w, header);
        for (v, row) in profile.rows().enumerate() {
            let mut rec = vec![(v + 1).to_string()];
            rec.extend(row.iter().map(|&x| format_value(x, scale)));
            put(&mut w, rec);
        }
    }
    finish(w)
}

/// Parses a profile CSV. Errors name the offending line and column.
pub fn read_profile(text: &str, hint: ScaleHint, transposed: bool) -> Result<Profile, Error> {
    if text.trim().is_empty() {
        return Err(input("empty CSV: expected a header row and at least one data row"));
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| input(format!("malformed CSV: {e}")))?;
        records.push(rec);
    }
    let header = &records[0];
    if header.len() < 2 {
        return Err(input("line 1: header needs an id column and at least one more column"));
    }
    if records.len() < 2 {
        return Err(input("CSV has a header but no data rows"));
    }
    let width = header.len();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(records.len() - 1);
    let mut labels = Vec::with_capacity(records.len() - 1);
    for (i, rec) in records.iter().enumerate().skip(1) {
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        if rec.len() != width {
            return Err(input(format!("line {line}: {} fields, header has {width}", rec.len())));
        }
        labels.push(rec[0].to_string());
        let mut row = Vec::with_capacity(width - 1);
        for (j, field) in rec.iter().enumerate().skip(1) {
            let x: f64 = field.trim().parse().map_err(|_| {
                input(format!("line {line}, column {} ({}): cannot parse {field:?} as a number", j + 1, &header[j]))
            })?;
            if !x.is_finite() {
                return Err(input(format!("line {line}, column {} ({}): value is not finite", j + 1, &header[j])));
            }
            row.push(x);
        }
        rows.push(row);
    }
    let (rows, names) = if transposed {
        let n = width - 1;
        let t: Vec<Vec<f64>> = (0..n).map(|v| rows.iter().map(|r| r[v]).collect()).collect();
        (t, labels)
    } else {
        (rows, header.iter().skip(1).map(String::from).collect())
    };
    let scale = match hint {
        ScaleHint::Fixed(s) => s,
        ScaleHint::Auto => {
            let top = rows.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max);
            if top > 1.0 && top.fract() == 0.0 && top <= u32::MAX as f64 {
                Scale::Discrete { levels: top as u32 }
            } else {
                Scale::Continuous
            }
        }
    };
    evalsim_core::validate_profile(&rows, scale, Some(names)).map_err(|e| match e {
        ProfileError::Invalid(v) => {
            let shown: Vec<String> = v.iter().take(10).map(|x| x.to_string()).collect();
            let more = if v.len() > 10 { format!(" (and {} more)", v.len() - 10) } else { String::new() };
            input(format!("invalid profile on scale {scale}: {}{more}", shown.join("; ")))
        }
        other => input(other.to_string()),
    })
}

/// `point,kind,x_1..x_d`: voters first (ids `1..n`), then candidates by
/// name.
pub fn write_positions(voters: &Matrix, candidates: &Matrix, names: &[String]) -> Vec<u8> {
    let d = candidates.cols().max(voters.cols());
    let mut w = writer();
    let mut header = vec!["point".to_string(), "kind".to_string()];
    header.extend((1..=d).map(|k| format!("x_{k}")));
    w.write_record(&header).expect("in-memory writer");
    for v in 0..voters.rows() {
        let mut rec = vec![(v + 1).to_string(), "voter".to_string()];
        rec.extend(voters.row(v).iter().map(|&x| g17(x)));
        w.write_record(&rec).expect("in-memory writer");
    }
    for c in 0..candidates.rows() {
        let mut rec = vec![names[c].clone(), "candidate".to_string()];
        rec.extend(candidates.row(c).iter().map(|&x| g17(x)));
        w.write_record(&rec).expect("in-memory writer");
    }
    finish(w)
}

/// Bin tables, one row per candidate and bin:
/// `candidate  bin  lower  upper  mass`. Discrete bins are single grades.
pub fn write_histograms(candidates: &[CandidateFit], scale: Scale) -> Vec<u8> {
    let mut out = String::from("candidate\tbin\tlower\tupper\tmass\n");
    for cf in candidates {
        let Some(Histogram { classes, masses, .. }) = &cf.histogram else { continue };
        for (k, &mass) in masses.iter().enumerate() {
            let (lo, hi) = match scale {
                Scale::Continuous => (k as f64 / *classes as f64, (k + 1) as f64 / *classes as f64),
                Scale::Discrete { .. } => (k as f64, k as f64),
            };
            out.push_str(&format!("{}\t{}\t{}\t{}\t{}\n", cf.candidate, k + 1, g17(lo), g17(hi), g17(mass)));
        }
    }
    out.into_bytes()
}
