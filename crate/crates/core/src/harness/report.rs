use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::experiment::{BerReport, BerRow};
use crate::error::{Error, Result};
use crate::fed::OverheadReport;

pub const CSV_HEADER: &str = "scheme,snr_db,bit_errors,total_bits,ber,wall_time_s";

pub fn write_csv<W: Write>(report: &BerReport, out: W) -> Result<()> {
    if report.rows.is_empty() {
        return Err(Error::input("report has no rows"));
    }
    let mut w = csv::Writer::from_writer(out);
    for row in &report.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(report: &BerReport, path: &Path) -> Result<()> {
    if report.rows.is_empty() {
        return Err(Error::input("report has no rows"));
    }
    write_csv(report, BufWriter::new(File::create(path)?))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<BerRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::input(format!("unexpected header `{}`", header.join(","))));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// BER versus SNR as a standalone SVG: linear SNR axis, log BER axis, one
/// polyline per scheme. Zero BER points are drawn on the lower edge.
pub fn render_svg(report: &BerReport) -> Result<String> {
    if report.rows.is_empty() {
        return Err(Error::input("report has no rows"));
    }
    let mut schemes: Vec<&str> = Vec::new();
    for r in &report.rows {
        if !schemes.contains(&r.scheme.as_str()) {
            schemes.push(&r.scheme);
        }
    }
    let (w, h) = (720.0, 480.0);
    let (left, right, top, bottom) = (70.0, 150.0, 20.0, 50.0);
    let (pw, ph) = (w - left - right, h - top - bottom);

    let mut x_lo = report.rows.iter().map(|r| r.snr_db).fold(f64::INFINITY, f64::min);
    let mut x_hi = report.rows.iter().map(|r| r.snr_db).fold(f64::NEG_INFINITY, f64::max);
    if x_hi - x_lo < 1e-9 {
        x_lo -= 1.0;
        x_hi += 1.0;
    }
    let positive = report.rows.iter().map(|r| r.ber).filter(|&b| b > 0.0);
    let min_pos = positive.clone().fold(f64::INFINITY, f64::min);
    let max_pos = positive.fold(0.0, f64::max);
    let (d_lo, d_hi) = if max_pos > 0.0 {
        (min_pos.log10().floor(), max_pos.log10().ceil().max(min_pos.log10().floor() + 1.0))
    } else {
        (-6.0, 0.0)
    };
    let px = |x: f64| left + (x - x_lo) / (x_hi - x_lo) * pw;
    let py = |b: f64| {
        let l = if b > 0.0 { b.log10().max(d_lo) } else { d_lo };
        top + (d_hi - l) / (d_hi - d_lo) * ph
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for d in (d_lo as i32)..=(d_hi as i32) {
        let y = py(10f64.powi(d));
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"##,
            left + pw,
            left - 6.0,
            y + 4.0
        );
    }
    let mut ticks: Vec<f64> = report.rows.iter().map(|r| r.snr_db).collect();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    for t in ticks {
        let x = px(t);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{top}" x2="{x:.2}" y2="{:.2}" stroke="#eee"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{t}</text>"##,
            top + ph,
            top + ph + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">SNR per bit (dB)</text>"#,
        left + pw / 2.0,
        h - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(18 {:.2}) rotate(-90)" text-anchor="middle">BER</text>"#,
        top + ph / 2.0
    );
    for (i, name) in schemes.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut pts: Vec<&BerRow> = report.rows.iter().filter(|r| r.scheme == *name).collect();
        pts.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
        let coords: Vec<String> = pts.iter().map(|r| format!("{:.2},{:.2}", px(r.snr_db), py(r.ber))).collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            coords.join(" ")
        );
        let ly = top + 16.0 + 18.0 * i as f64;
        let lx = left + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{:.2}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{name}</text>"#,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_plot(report: &BerReport, path: &Path) -> Result<()> {
    let svg = render_svg(report)?;
    std::fs::write(path, svg)?;
    Ok(())
}

/// Plain-text table of training overheads.
pub fn format_overhead(rows: &[(usize, OverheadReport)]) -> String {
    let mut s = format!("{:<8} {:>3} {:>10} {:>10}\n", "scheme", "U", "UL words", "DL words");
    for (u, r) in rows {
        let _ = writeln!(s, "{:<8} {:>3} {:>10} {:>10}", r.scheme.as_str(), u, r.ul_words, r.dl_words);
    }
    s
}

/// Plain-text BER table, schemes as rows and SNR points as columns.
pub fn format_table(report: &BerReport) -> String {
    let mut snrs: Vec<f64> = report.rows.iter().map(|r| r.snr_db).collect();
    snrs.sort_by(f64::total_cmp);
    snrs.dedup();
    let mut schemes: Vec<&str> = Vec::new();
    for r in &report.rows {
        if !schemes.contains(&r.scheme.as_str()) {
            schemes.push(&r.scheme);
        }
    }
    let mut s = format!("{:<8}", "scheme");
    for x in &snrs {
        let _ = write!(s, " {:>10}", format!("{x} dB"));
    }
    s.push('\n');
    for name in schemes {
        let _ = write!(s, "{name:<8}");
        for &x in &snrs {
            match report.row(name, x) {
                Some(r) => {
                    let _ = write!(s, " {:>10.6}", r.ber);
                }
                None => {
                    let _ = write!(s, " {:>10}", "-");
                }
            }
        }
        s.push('\n');
    }
    s
}
