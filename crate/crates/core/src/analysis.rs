//! Closed-form constants of the analysis and numerical checks of the supporting inequalities.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest coefficient b for which all three φ conditions hold.
pub fn best_b() -> f64 {
    (1609.0 * 1609f64.sqrt() - 42427.0) / 34992.0
}

/// Location of the maximum of φ₃ for `b = best_b()`, as a fraction of μ: (y, x₂).
pub fn phi3_maximizer() -> (f64, f64) {
    let y = (58.0 - 1609f64.sqrt()) / 27.0;
    (y, 3.0 * y / 8.0 + 1.0 / 8.0)
}

/// Arguments of the φ functions; `x2` is only used by φ₃.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiArgs {
    pub x: f64,
    pub y: f64,
    pub x2: Option<f64>,
}

fn phi0_unchecked(x: f64, y: f64, mu: f64, b: f64) -> f64 {
    (mu - y) / y * (2.0 * x * y - b * mu * (x + y)) / (x + y - mu)
}

/// Evaluates φ_k for k ∈ {0, 1, 2, 3} after checking domain membership.
pub fn phi(k: usize, args: PhiArgs, mu: f64, b: f64) -> Result<f64> {
    let PhiArgs { x, y, x2 } = args;
    let inside = |v: f64| v > 0.0 && v <= mu;
    if !(mu > 0.0) || !inside(x) || !inside(y) || !(x + y - mu > 0.0) {
        return Err(Error::InvalidArgument(format!("({x}, {y}) is outside the domain for mu = {mu}")));
    }
    let p0 = phi0_unchecked(x, y, mu, b);
    match k {
        0 => Ok(p0),
        1 => Ok(y / 2.0 + p0),
        2 => Ok(3.0 / 8.0 * x + p0),
        3 => match x2 {
            Some(x2) if inside(x2) => Ok(1.5 * x2 - x2 * (4.0 * x2 - x) / (2.0 * y) + p0),
            _ => Err(Error::InvalidArgument(format!("x2 = {x2:?} is outside (0, {mu}]"))),
        },
        _ => Err(Error::InvalidArgument(format!("there is no phi_{k}"))),
    }
}

/// Grid maximum of one φ function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiSup {
    pub sup: f64,
    pub x: f64,
    pub y: f64,
    pub x2: Option<f64>,
    /// bμ − sup; negative when the condition fails.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiReport {
    pub b: f64,
    pub mu: f64,
    pub grid_step: f64,
    pub phi1: PhiSup,
    pub phi2: PhiSup,
    pub phi3: PhiSup,
}

impl PhiReport {
    /// True if every supremum is at most bμ + `tol`.
    pub fn holds(&self, tol: f64) -> bool {
        [self.phi1, self.phi2, self.phi3].iter().all(|s| s.margin >= -tol)
    }
}

/// Grid search for the suprema of φ₁, φ₂, φ₃ on the domain, keeping at least one grid step
/// away from the pole at x + y = μ.
pub fn verify_phi_suprema(b: f64, mu: f64, grid_step: f64) -> Result<PhiReport> {
    if !(mu > 0.0) || !(grid_step > 0.0) || grid_step > 1e-3 * mu * (1.0 + 1e-9) {
        return Err(Error::InvalidArgument(format!(
            "grid step {grid_step} must be positive and at most 1e-3 * mu (mu = {mu})"
        )));
    }
    let n = (mu / grid_step).round() as usize;
    let h = mu / n as f64;
    let at = |i: usize| i as f64 * h;
    let empty = PhiSup {
        sup: f64::NEG_INFINITY,
        x: 0.0,
        y: 0.0,
        x2: None,
        margin: 0.0,
    };
    let (mut s1, mut s2, mut s3) = (empty, empty, empty);
    for i in 1..=n {
        let x = at(i);
        for j in (n + 1 - i)..=n {
            let y = at(j);
            let p0 = phi0_unchecked(x, y, mu, b);
            let v1 = y / 2.0 + p0;
            if v1 > s1.sup {
                s1 = PhiSup { sup: v1, x, y, ..empty };
            }
            let v2 = 3.0 / 8.0 * x + p0;
            if v2 > s2.sup {
                s2 = PhiSup { sup: v2, x, y, ..empty };
            }
            let inv = 1.0 / (2.0 * y);
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for l in 1..=n {
                let x2 = at(l);
                let v = 1.5 * x2 - x2 * (4.0 * x2 - x) * inv;
                if v > best {
                    best = v;
                    arg = l;
                }
            }
            if best + p0 > s3.sup {
                s3 = PhiSup {
                    sup: best + p0,
                    x,
                    y,
                    x2: Some(at(arg)),
                    margin: 0.0,
                };
            }
        }
    }
    for s in [&mut s1, &mut s2, &mut s3] {
        s.margin = b * mu - s.sup;
    }
    Ok(PhiReport {
        b,
        mu,
        grid_step: h,
        phi1: s1,
        phi2: s2,
        phi3: s3,
    })
}

/// Largest decrease of φ₀ along x between neighbouring grid points (0 if it never decreases).
pub fn phi0_monotonicity_defect(b: f64, mu: f64, grid_step: f64) -> f64 {
    let n = (mu / grid_step).round() as usize;
    let h = mu / n as f64;
    let mut worst: f64 = 0.0;
    for j in 1..=n {
        let y = j as f64 * h;
        let mut prev: Option<f64> = None;
        for i in (n + 1 - j)..=n {
            let v = phi0_unchecked(i as f64 * h, y, mu, b);
            if let Some(p) = prev {
                worst = worst.max(p - v);
            }
            prev = Some(v);
        }
    }
    worst
}

/// Approximation factor obtained for a β-approximate base tree and coefficient b.
pub fn approx_factor(beta: f64, b: f64) -> Result<f64> {
    if !(beta >= 1.0) {
        return Err(Error::InvalidArgument(format!("beta = {beta} must be at least 1")));
    }
    if !(b > 0.0) {
        return Err(Error::InvalidArgument(format!("b = {b} must be positive")));
    }
    Ok(beta + factor_excess(beta, b))
}

fn factor_excess(beta: f64, b: f64) -> f64 {
    2.0 * b * beta / ((4.0 * b * beta + (beta - 1.0).powi(2)).sqrt() + beta - 1.0)
}

/// Residual of bβ/a + 1 − β − a = 0 where a is the excess of the factor over β.
pub fn factor_identity_residual(beta: f64, b: f64) -> f64 {
    let a = factor_excess(beta, b);
    b * beta / a + 1.0 - beta - a
}

/// Rounds up to five decimals, which is how the published factors are printed.
pub fn round_up_5(x: f64) -> f64 {
    (x * 1e5 - 1e-6).ceil() / 1e5
}

/// Published factors: rows are 1+β, b = 2/3, b = best_b(); columns β ∈ {1, ln 4, 1.5, 2}.
pub const TABLE1_EXPECTED: [[f64; 4]; 3] = [
    [2.00000, 2.38630, 2.50000, 3.00000],
    [1.81650, 2.17371, 2.28078, 2.75831],
    [1.79497, 2.14887, 2.25522, 2.73042],
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaColumn {
    pub label: String,
    pub beta: f64,
}

pub fn table1_betas() -> [BetaColumn; 4] {
    [
        BetaColumn { label: "1".into(), beta: 1.0 },
        BetaColumn { label: "ln(4)".into(), beta: 4f64.ln() },
        BetaColumn { label: "1.5".into(), beta: 1.5 },
        BetaColumn { label: "2".into(), beta: 2.0 },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    /// None for the 1+β row.
    pub b: Option<f64>,
    pub exact: Vec<f64>,
    pub rounded: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub columns: Vec<BetaColumn>,
    pub rows: Vec<TableRow>,
}

impl AnalysisReport {
    /// Builds rows for the given columns: 1+β, then one row per coefficient.
    pub fn build(columns: Vec<BetaColumn>, coefficients: &[(String, f64)]) -> Result<Self> {
        let mut rows = vec![row("1 + beta".into(), None, columns.iter().map(|c| 1.0 + c.beta).collect())];
        for (label, b) in coefficients {
            let exact = columns
                .iter()
                .map(|c| approx_factor(c.beta, *b))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row(label.clone(), Some(*b), exact));
        }
        Ok(Self { columns, rows })
    }

    /// Cells whose rounded value differs from `expected`, as (row, column).
    pub fn mismatches(&self, expected: &[[f64; 4]]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, (row, exp)) in self.rows.iter().zip(expected).enumerate() {
            for (j, (v, e)) in row.rounded.iter().zip(exp).enumerate() {
                if (v - e).abs() > 1e-9 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let width = self.rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(4);
        let mut out = format!("{:width$}", "beta");
        for c in &self.columns {
            let _ = write!(out, "  {:>8}", c.label);
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{:width$}", r.label);
            for v in &r.rounded {
                let _ = write!(out, "  {v:>8.5}");
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,b");
        for c in &self.columns {
            let _ = write!(out, ",{}", c.label);
        }
        out.push('\n');
        for r in &self.rows {
            let b = r.b.map(|b| b.to_string()).unwrap_or_default();
            let _ = write!(out, "{},{b}", r.label);
            for v in &r.rounded {
                let _ = write!(out, ",{v:.5}");
            }
            out.push('\n');
        }
        out
    }
}

fn row(label: String, b: Option<f64>, exact: Vec<f64>) -> TableRow {
    let rounded = exact.iter().map(|&v| round_up_5(v)).collect();
    TableRow { label, b, exact, rounded }
}

/// The three-by-four table of factors.
pub fn reproduce_table1() -> AnalysisReport {
    AnalysisReport::build(
        table1_betas().to_vec(),
        &[("b = 2/3".into(), 2.0 / 3.0), ("b = best".into(), best_b())],
    )
    .expect("table parameters are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn best_b_value_and_order() {
        let b = best_b();
        assert_relative_eq!(b, 0.631_966_125_531_076_3, max_relative = 1e-14);
        assert!(b < 2.0 / 3.0);
        assert!(b >= 8.0 / 13.0);
    }

    #[test]
    fn phi_spot_values() {
        let mu = 1.7;
        let p = |x, y, x2| PhiArgs { x, y, x2 };
        let v1 = phi(1, p(mu, 2.0 * mu / 3.0, None), mu, 16.0 / 27.0).unwrap();
        assert_relative_eq!(v1, 16.0 / 27.0 * mu, max_relative = 1e-12);
        let v2 = phi(2, p(mu, 8.0 * mu / 13.0, None), mu, 8.0 / 13.0).unwrap();
        assert_relative_eq!(v2, 8.0 / 13.0 * mu, max_relative = 1e-12);
        for b in [0.25, 0.5, best_b()] {
            let v3 = phi(3, p(mu, mu / 2.0, Some(mu / 4.0)), mu, b).unwrap();
            assert_relative_eq!(v3, (19.0 / 8.0 - 3.0 * b) * mu, max_relative = 1e-12);
        }
    }

    #[test]
    fn phi_domain_errors() {
        let p = PhiArgs { x: 0.3, y: 0.3, x2: None };
        assert!(phi(1, p, 1.0, 0.6).is_err());
        let p = PhiArgs { x: 0.8, y: 0.8, x2: None };
        assert!(phi(3, p, 1.0, 0.6).is_err());
        assert!(phi(4, p, 1.0, 0.6).is_err());
        assert!(phi(1, PhiArgs { x: 1.2, ..p }, 1.0, 0.6).is_err());
    }

    #[test]
    fn factor_formula() {
        for b in [0.5, 2.0 / 3.0, best_b(), 1.0] {
            assert_relative_eq!(approx_factor(1.0, b).unwrap(), 1.0 + b.sqrt(), max_relative = 1e-14);
        }
        assert!(approx_factor(0.9, 0.6).is_err());
        assert!(approx_factor(1.0, 0.0).is_err());
        assert_eq!(approx_factor(2.0, 1.0).unwrap(), 3.0);
    }

    #[test]
    fn factor_identity() {
        for beta in [1.0, 1.2, 4f64.ln(), 1.5, 2.0, 3.0] {
            for b in [0.3, 0.5, best_b(), 2.0 / 3.0, 1.0] {
                assert!(factor_identity_residual(beta, b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn factor_monotone() {
        let mut prev_beta = 0.0;
        for i in 0..=20 {
            let beta = 1.0 + i as f64 * 0.05;
            let mut prev_b = 0.0;
            for j in 1..=20 {
                let v = approx_factor(beta, j as f64 * 0.05).unwrap();
                assert!(v > prev_b);
                prev_b = v;
            }
            let v = approx_factor(beta, 0.6).unwrap();
            assert!(v > prev_beta);
            prev_beta = v;
        }
    }

    #[test]
    fn table_matches_published_values() {
        let t = reproduce_table1();
        assert!(t.mismatches(&TABLE1_EXPECTED).is_empty(), "{}", t.to_text());
        assert!(t.to_text().contains("2.14887"));
        assert_eq!(t.to_csv().lines().count(), 4);
    }

    #[test]
    fn coarse_grids_are_rejected() {
        assert!(verify_phi_suprema(best_b(), 1.0, 0.01).is_err());
        assert!(verify_phi_suprema(best_b(), 1.0, 0.0).is_err());
    }

    #[test]
    fn phi0_is_monotone_in_x() {
        for b in [0.5, best_b(), 2.0 / 3.0] {
            assert!(phi0_monotonicity_defect(b, 1.0, 2e-3) <= 1e-9);
        }
    }
}
