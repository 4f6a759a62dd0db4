//! Sampled points of the bound surface and their serialisation.

use serde::Serialize;
use std::fmt;
use std::io::Write;

use crate::error::Result;
use crate::metrics::non_gaussianity;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Region {
    I,
    II,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::I => "I",
            Region::II => "II",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Family {
    #[serde(rename = "appendixA")]
    PurityCurve,
    #[serde(rename = "region1_exact")]
    Region1Exact,
    #[serde(rename = "region1_approx")]
    Region1Approx,
    #[serde(rename = "rank2")]
    Rank2,
    #[serde(rename = "psi_a")]
    PsiA,
    #[serde(rename = "psi_b")]
    PsiB,
    #[serde(rename = "beta")]
    Beta,
    #[serde(rename = "rho_1")]
    Rho1,
    #[serde(rename = "rho_2")]
    Rho2,
    #[serde(rename = "rho_3")]
    Rho3,
}

impl Family {
    pub fn label(&self) -> &'static str {
        match self {
            Family::PurityCurve => "appendixA",
            Family::Region1Exact => "region1_exact",
            Family::Region1Approx => "region1_approx",
            Family::Rank2 => "rank2",
            Family::PsiA => "psi_a",
            Family::PsiB => "psi_b",
            Family::Beta => "beta",
            Family::Rho1 => "rho_1",
            Family::Rho2 => "rho_2",
            Family::Rho3 => "rho_3",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One sampled point `(μ_G, μ, T, δ)` with the family that realises it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundPoint {
    pub mu_g: f64,
    pub mu: f64,
    pub overlap: f64,
    pub delta: f64,
    pub region: Region,
    pub family: Family,
    pub rank: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_min: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x2: Option<f64>,
    /// Family parameters as `(name, value)` pairs.
    pub params: Vec<(String, f64)>,
}

impl BoundPoint {
    pub fn new(mu_g: f64, mu: f64, overlap: f64, region: Region, family: Family, rank: usize) -> Self {
        Self {
            mu_g,
            mu,
            overlap,
            delta: non_gaussianity(mu, mu_g, overlap),
            region,
            family,
            rank,
            n_min: None,
            x2: None,
            params: Vec::new(),
        }
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.push((name.to_string(), value));
        self
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    fn params_field(&self) -> String {
        self.params.iter().map(|(k, v)| format!("{k}={v:.17e}")).collect::<Vec<_>>().join(";")
    }
}

/// `count` evenly spaced values from `start` to `end` inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Linspace {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl Linspace {
    pub fn new(start: f64, end: f64, count: usize) -> Self {
        Self { start, end, count }
    }

    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n).map(|i| self.start + (self.end - self.start) * i as f64 / (n - 1) as f64).collect(),
        }
    }
}

fn f(v: f64) -> String {
    format!("{v:.17e}")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Region-I sweep layout: `mu_g, mu, overlap, delta, region, family, rank, n_min, x2`.
pub fn write_sweep_csv<W: Write>(points: &[BoundPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["mu_g", "mu", "overlap", "delta", "region", "family", "rank", "n_min", "x2"])?;
    for p in points {
        w.write_record([
            f(p.mu_g),
            f(p.mu),
            f(p.overlap),
            f(p.delta),
            p.region.to_string(),
            p.family.to_string(),
            p.rank.to_string(),
            opt(p.n_min),
            p.x2.map(f).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Surface layout: `mu_g, mu, overlap, delta, region, family, rank, params`.
pub fn write_surface_csv<W: Write>(points: &[BoundPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["mu_g", "mu", "overlap", "delta", "region", "family", "rank", "params"])?;
    for p in points {
        w.write_record([
            f(p.mu_g),
            f(p.mu),
            f(p.overlap),
            f(p.delta),
            p.region.to_string(),
            p.family.to_string(),
            p.rank.to_string(),
            p.params_field(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(value: &T, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_consistent() {
        let p = BoundPoint::new(0.5, 0.7, 0.45, Region::II, Family::Rho1, 2);
        assert!((p.delta - (0.5 + 0.7 - 0.9) / 1.4).abs() < 1e-15);
    }

    #[test]
    fn csv_layouts() {
        let p = BoundPoint::new(0.5, 0.5, 0.5, Region::I, Family::Rank2, 2).with_param("a", 0.5);
        let mut buf = Vec::new();
        write_sweep_csv(std::slice::from_ref(&p), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("mu_g,mu,overlap,delta,region,family,rank,n_min,x2\n"));
        assert!(text.contains(",I,rank2,2,,"));
        let mut buf = Vec::new();
        write_surface_csv(&[p], &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("a=5.00000000000000000e-1"));
    }

    #[test]
    fn linspace_endpoints() {
        assert_eq!(Linspace::new(0.0, 1.0, 3).values(), vec![0.0, 0.5, 1.0]);
        assert_eq!(Linspace::new(2.0, 5.0, 1).values(), vec![2.0]);
        assert!(Linspace::new(0.0, 1.0, 0).values().is_empty());
    }

    #[test]
    fn json_labels() {
        let p = BoundPoint::new(0.5, 0.5, 0.5, Region::II, Family::PurityCurve, 1);
        let j = serde_json::to_value(&p).unwrap();
        assert_eq!(j["family"], "appendixA");
        assert_eq!(j["region"], "II");
    }
}
