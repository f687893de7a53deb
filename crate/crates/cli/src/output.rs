//! Deterministic rendering: JSON with floats fixed at 12 significant digits,
//! CSV for plottable series, and console tables.

use num_complex::Complex64 as C64;
use serde_json::{json, Value};

use sobspec_core::spectra::{SetDescriptor, SpectrumTable};

/// Round to 12 significant digits so identical configurations yield
/// byte-identical JSON output.
pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

pub fn complex_value(z: C64) -> Value {
    json!([sig12(z.re), sig12(z.im)])
}

/// Compact scalar rendering for tables: real values drop the imaginary part.
pub fn fmt_c64_short(z: C64) -> String {
    if z.im == 0.0 {
        trim_float(z.re)
    } else if z.re == 0.0 {
        format!("{}i", trim_float(z.im))
    } else if z.im < 0.0 {
        format!("{}{}i", trim_float(z.re), trim_float(z.im))
    } else {
        format!("{}+{}i", trim_float(z.re), trim_float(z.im))
    }
}

fn trim_float(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

pub fn set_descriptor_value(d: &SetDescriptor) -> Value {
    match d {
        SetDescriptor::Empty => json!({"kind": "empty"}),
        SetDescriptor::AllOfC => json!({"kind": "all_of_c"}),
        SetDescriptor::Explicit { values } => json!({
            "kind": "explicit",
            "values": values.iter().map(|v| complex_value(*v)).collect::<Vec<_>>(),
        }),
        SetDescriptor::ComplementOf { values } => json!({
            "kind": "complement_of",
            "values": values.iter().map(|v| complex_value(*v)).collect::<Vec<_>>(),
        }),
        SetDescriptor::Unknown => json!({"kind": "unknown"}),
    }
}

pub fn set_descriptor_pretty(d: &SetDescriptor) -> String {
    let list = |values: &[C64]| -> String {
        let mut parts: Vec<String> = values.iter().take(6).map(|v| fmt_c64_short(*v)).collect();
        if values.len() > 6 {
            parts.push("...".into());
        }
        format!("{{{}}}", parts.join(", "))
    };
    match d {
        SetDescriptor::Empty => "∅".into(),
        SetDescriptor::AllOfC => "ℂ".into(),
        SetDescriptor::Explicit { values } => list(values),
        SetDescriptor::ComplementOf { values } => format!("ℂ \\ {}", list(values)),
        SetDescriptor::Unknown => "?".into(),
    }
}

/// Console table mirroring the three-row spectrum layout.
pub fn render_table(table: &SpectrumTable) -> String {
    let headers: Vec<String> = table
        .columns
        .iter()
        .map(|c| c.variant.label().to_string())
        .collect();
    let rows = [
        (
            "sigma_p",
            table
                .columns
                .iter()
                .map(|c| set_descriptor_pretty(&c.sigma_p))
                .collect::<Vec<_>>(),
        ),
        (
            "sigma_r",
            table
                .columns
                .iter()
                .map(|c| set_descriptor_pretty(&c.sigma_r))
                .collect::<Vec<_>>(),
        ),
        (
            "sigma_c",
            table
                .columns
                .iter()
                .map(|c| set_descriptor_pretty(&c.sigma_c))
                .collect::<Vec<_>>(),
        ),
    ];
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for (_, cells) in &rows {
        for (w, cell) in widths.iter_mut().zip(cells) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let pad = |s: &str, w: usize| {
        let len = s.chars().count();
        format!("{s}{}", " ".repeat(w.saturating_sub(len)))
    };
    let mut out = String::new();
    out.push_str(&format!(
        "spectrum over I = ({}, {}), s = {} ({} lambda samples)\n\n",
        trim_float(table.interval.0),
        trim_float(table.interval.1),
        trim_float(table.scale),
        table.lambda_samples.len()
    ));
    out.push_str(&pad("", 10));
    for (h, w) in headers.iter().zip(&widths) {
        out.push_str("  ");
        out.push_str(&pad(h, *w));
    }
    out.push('\n');
    for (label, cells) in &rows {
        out.push_str(&pad(label, 10));
        for (cell, w) in cells.iter().zip(&widths) {
            out.push_str("  ");
            out.push_str(&pad(cell, *w));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig12_rounds_and_round_trips() {
        assert_eq!(sig12(0.0), 0.0);
        assert_eq!(sig12(1.0), 1.0);
        let x = std::f64::consts::PI;
        let r = sig12(x);
        assert!((r - x).abs() < 1e-11);
        assert_eq!(sig12(r), r);
    }

    #[test]
    fn short_complex_formatting() {
        assert_eq!(fmt_c64_short(C64::new(-4.0, 0.0)), "-4");
        assert_eq!(fmt_c64_short(C64::new(0.0, 1.0)), "1i");
        assert_eq!(fmt_c64_short(C64::new(2.0, 1.0)), "2+1i");
        assert_eq!(fmt_c64_short(C64::new(2.0, -1.5)), "2-1.5i");
        assert_eq!(fmt_c64_short(C64::new(0.0, 0.0)), "0");
    }

    #[test]
    fn descriptor_rendering() {
        let explicit = SetDescriptor::Explicit {
            values: vec![C64::new(-1.0, 0.0), C64::new(-4.0, 0.0)],
        };
        assert_eq!(set_descriptor_pretty(&explicit), "{-1, -4}");
        assert_eq!(set_descriptor_pretty(&SetDescriptor::Empty), "∅");
        assert_eq!(set_descriptor_pretty(&SetDescriptor::AllOfC), "ℂ");
        let comp = SetDescriptor::ComplementOf {
            values: vec![C64::new(-1.0, 0.0)],
        };
        assert_eq!(set_descriptor_pretty(&comp), "ℂ \\ {-1}");
    }
}
