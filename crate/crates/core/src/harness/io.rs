//! CSV and SVG output.

use std::io::{Read, Write};

use super::RateRow;
use crate::error::{Error, Result};
use crate::lattice::LatticePmf;

pub const RATE_HEADER: [&str; 10] = [
    "N",
    "m",
    "gamma_n",
    "dist_affine",
    "dist_natural",
    "scaled_affine",
    "scaled_natural",
    "dev1",
    "dev2",
    "mc_accept_rate",
];

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

/// Header plus one line per row; floats carry 17 significant digits, a missing
/// acceptance rate is an empty field.
pub fn write_rate_csv<W: Write>(rows: &[RateRow], out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(RATE_HEADER)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.m.to_string(),
            float(r.gamma_n),
            float(r.dist_affine),
            float(r.dist_natural),
            float(r.scaled_affine),
            float(r.scaled_natural),
            float(r.dev1),
            float(r.dev2),
            r.mc_accept_rate.map(float).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rate_csv<R: Read>(input: R) -> Result<Vec<RateRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != RATE_HEADER {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let f = |i: usize| -> Result<f64> {
            rec[i].parse().map_err(|_| Error::Parse(format!("column {} = `{}`", RATE_HEADER[i], &rec[i])))
        };
        let int = |i: usize| -> Result<i64> {
            rec[i].parse().map_err(|_| Error::Parse(format!("column {} = `{}`", RATE_HEADER[i], &rec[i])))
        };
        rows.push(RateRow {
            n: int(0)? as usize,
            m: int(1)?,
            gamma_n: f(2)?,
            dist_affine: f(3)?,
            dist_natural: f(4)?,
            scaled_affine: f(5)?,
            scaled_natural: f(6)?,
            dev1: f(7)?,
            dev2: f(8)?,
            mc_accept_rate: if rec[9].is_empty() { None } else { Some(f(9)?) },
        });
    }
    Ok(rows)
}

/// Columns `t, prob, cdf` over the support of `law`.
pub fn write_law_csv<W: Write>(law: &LatticePmf<f64>, out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["t", "prob", "cdf"])?;
    for ((t, p), c) in law.iter().zip(law.cumulative()) {
        w.write_record([t.to_string(), float(p), float(c)])?;
    }
    w.flush()?;
    Ok(())
}

/// Log-log chart of both distances against `N`.
pub fn render_svg(rows: &[RateRow]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const PAD: f64 = 56.0;
    let pts: Vec<(f64, f64, f64)> = rows
        .iter()
        .filter(|r| r.dist_affine > 0.0 && r.dist_natural > 0.0)
        .map(|r| ((r.n as f64).log10(), r.dist_affine.log10(), r.dist_natural.log10()))
        .collect();
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    if pts.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let (x0, x1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (y0, y1) =
        pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1).min(p.2), b.max(p.1).max(p.2)));
    let span = |a: f64, b: f64| if b > a { b - a } else { 1.0 };
    let px = |x: f64| PAD + (x - x0) / span(x0, x1) * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - (y - y0) / span(y0, y1) * (H - 2.0 * PAD);
    svg.push_str(&format!(
        "<line x1=\"{PAD}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <text x=\"{cx}\" y=\"{ty}\" text-anchor=\"middle\">log10 N</text>\n\
         <text x=\"14\" y=\"{cy}\" transform=\"rotate(-90 14 {cy})\" text-anchor=\"middle\">log10 distance</text>\n",
        b = H - PAD,
        r = W - PAD,
        cx = W / 2.0,
        ty = H - 16.0,
        cy = H / 2.0,
    ));
    for (idx, (color, label)) in [("#1f77b4", "affine"), ("#d62728", "natural")].iter().enumerate() {
        let line: Vec<String> =
            pts.iter().map(|p| format!("{:.2},{:.2}", px(p.0), py(if idx == 0 { p.1 } else { p.2 }))).collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n\
             <text x=\"{}\" y=\"{}\" fill=\"{color}\">{label}</text>\n",
            line.join(" "),
            W - PAD - 60.0,
            PAD + 16.0 * idx as f64,
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
