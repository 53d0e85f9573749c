//! Line-oriented text format for series.
//!
//! ```text
//! apseries 1 series2
//! window 0 1
//! frequencies 1.0000000000000000e0 6.1803398874989490e-1
//! varrho 3.0000000000000000e0
//! set 0
//! set 1
//! set 0,1
//! kmax 12
//! ydomain 0.0000000000000000e0 1.0000000000000000e-2 16
//! defect 0.0000000000000000e0
//! coeff 0:1 0 5.0000000000000000e-1 0.0000000000000000e0
//! ```
//!
//! Coefficient lines carry the multi-index, the Chebyshev degree (always 0 for series
//! in `x` alone) and the real and imaginary parts. Only nonzero coefficients are written.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;

use super::basis::{FrequencyBasis, MultiIndex, SpatialStructure};
use super::series::{APSeries, ModeSeries};
use super::series2::{APSeries2, YDomain};
use super::spectrum::Spectrum;
use super::SeriesError;

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn header(out: &mut String, spec: &Spectrum, kind: &str) {
    let b = spec.basis();
    let _ = writeln!(out, "apseries 1 {kind}");
    let _ = writeln!(out, "window {} {}", b.lo(), b.hi());
    let freqs: Vec<String> = b.frequencies().iter().map(|&w| num(w)).collect();
    let _ = writeln!(out, "frequencies {}", freqs.join(" "));
    let _ = writeln!(out, "varrho {}", num(spec.structure().varrho()));
    for g in spec.structure().generators() {
        let items: Vec<String> = g.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(out, "set {}", items.join(","));
    }
    let _ = writeln!(out, "kmax {}", spec.kmax());
}

fn body<S: ModeSeries>(out: &mut String, s: &S) {
    let _ = writeln!(out, "defect {}", num(s.defect()));
    let spec = s.spectrum();
    for i in 0..spec.len() {
        for (j, c) in s.block(i).iter().enumerate() {
            if c.re != 0.0 || c.im != 0.0 {
                let _ = writeln!(out, "coeff {} {j} {} {}", spec.mode(i), num(c.re), num(c.im));
            }
        }
    }
}

pub fn write_series(s: &APSeries) -> String {
    let mut out = String::new();
    header(&mut out, s.spectrum(), "series");
    body(&mut out, s);
    out
}

pub fn write_series2(s: &APSeries2) -> String {
    let mut out = String::new();
    header(&mut out, s.spectrum(), "series2");
    let d = s.domain();
    let _ = writeln!(out, "ydomain {} {} {}", num(d.center), num(d.half), s.degree());
    body(&mut out, s);
    out
}

struct Parsed {
    kind: String,
    spectrum: Arc<Spectrum>,
    ydomain: Option<(YDomain, usize)>,
    defect: f64,
    coeffs: Vec<(MultiIndex, usize, Complex64)>,
}

fn perr(msg: impl Into<String>) -> SeriesError {
    SeriesError::Parse(msg.into())
}

fn pf(s: &str) -> Result<f64, SeriesError> {
    s.parse::<f64>().map_err(|e| perr(format!("`{s}`: {e}")))
}

fn pi(s: &str) -> Result<i64, SeriesError> {
    s.parse::<i64>().map_err(|e| perr(format!("`{s}`: {e}")))
}

fn parse(text: &str) -> Result<Parsed, SeriesError> {
    let mut kind = None;
    let mut window = None;
    let mut freqs = None;
    let mut varrho = None;
    let mut sets: Vec<BTreeSet<i64>> = Vec::new();
    let mut kmax = None;
    let mut ydomain = None;
    let mut defect = 0.0;
    let mut coeffs = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let key = it.next().unwrap_or_default();
        let rest: Vec<&str> = it.collect();
        let need = |n: usize| -> Result<(), SeriesError> {
            if rest.len() == n {
                Ok(())
            } else {
                Err(perr(format!("line {}: `{key}` expects {n} fields", ln + 1)))
            }
        };
        match key {
            "apseries" => {
                need(2)?;
                if rest[0] != "1" {
                    return Err(perr(format!("unsupported version {}", rest[0])));
                }
                kind = Some(rest[1].to_string());
            }
            "window" => {
                need(2)?;
                window = Some((pi(rest[0])?, pi(rest[1])?));
            }
            "frequencies" => {
                freqs = Some(rest.iter().map(|s| pf(s)).collect::<Result<Vec<_>, _>>()?);
            }
            "varrho" => {
                need(1)?;
                varrho = Some(pf(rest[0])?);
            }
            "set" => {
                need(1)?;
                sets.push(
                    rest[0]
                        .split(',')
                        .map(pi)
                        .collect::<Result<BTreeSet<_>, _>>()?,
                );
            }
            "kmax" => {
                need(1)?;
                kmax = Some(pi(rest[0])?);
            }
            "ydomain" => {
                need(3)?;
                let deg = rest[2]
                    .parse::<usize>()
                    .map_err(|e| perr(e.to_string()))?;
                ydomain = Some((YDomain::new(pf(rest[0])?, pf(rest[1])?)?, deg));
            }
            "defect" => {
                need(1)?;
                defect = pf(rest[0])?;
            }
            "coeff" => {
                need(4)?;
                let k: MultiIndex = rest[0].parse()?;
                let j = rest[1].parse::<usize>().map_err(|e| perr(e.to_string()))?;
                coeffs.push((k, j, Complex64::new(pf(rest[2])?, pf(rest[3])?)));
            }
            other => return Err(perr(format!("line {}: unknown key `{other}`", ln + 1))),
        }
    }
    let kind = kind.ok_or_else(|| perr("missing header"))?;
    let (lo, hi) = window.ok_or_else(|| perr("missing window"))?;
    let freqs = freqs.ok_or_else(|| perr("missing frequencies"))?;
    if hi - lo + 1 != freqs.len() as i64 {
        return Err(perr("window length differs from frequency count"));
    }
    let basis = FrequencyBasis::new(lo, freqs)?;
    let structure = SpatialStructure::new(sets, varrho.ok_or_else(|| perr("missing varrho"))?)?;
    let spectrum = Spectrum::new(basis, structure, kmax.ok_or_else(|| perr("missing kmax"))?)?;
    Ok(Parsed {
        kind,
        spectrum,
        ydomain,
        defect,
        coeffs,
    })
}

pub fn read_series(text: &str) -> Result<APSeries, SeriesError> {
    let p = parse(text)?;
    if p.kind != "series" {
        return Err(perr(format!("expected series, found {}", p.kind)));
    }
    let mut c = vec![Complex64::new(0.0, 0.0); p.spectrum.len()];
    for (k, j, v) in p.coeffs {
        if j != 0 {
            return Err(perr("nonzero Chebyshev degree in a series"));
        }
        let i = p
            .spectrum
            .position(&k)
            .ok_or_else(|| SeriesError::ModeNotRetained(k.to_string()))?;
        c[i] = v;
    }
    let mut s = APSeries::from_coeffs(p.spectrum, c)?;
    *s.defect_mut() = p.defect;
    Ok(s)
}

pub fn read_series2(text: &str) -> Result<APSeries2, SeriesError> {
    let p = parse(text)?;
    if p.kind != "series2" {
        return Err(perr(format!("expected series2, found {}", p.kind)));
    }
    let (dom, deg) = p.ydomain.ok_or_else(|| perr("missing ydomain"))?;
    let b = deg + 1;
    let mut c = vec![Complex64::new(0.0, 0.0); p.spectrum.len() * b];
    for (k, j, v) in p.coeffs {
        if j > deg {
            return Err(perr("Chebyshev index above degree"));
        }
        let i = p
            .spectrum
            .position(&k)
            .ok_or_else(|| SeriesError::ModeNotRetained(k.to_string()))?;
        c[i * b + j] = v;
    }
    let mut s = APSeries2::from_coeffs(p.spectrum, dom, deg, c)?;
    *s.defect_mut() = p.defect;
    Ok(s)
}
