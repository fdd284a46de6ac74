use std::f64::consts::PI;

use super::boys::boys_f0;
use super::Vec3;

// Hydrogen STO-3G, Basis Set Exchange record "STO-3G" (Hehre, Stewart, Pople 1969).
const H_STO3G_EXPONENTS: [f64; 3] = [3.42525091, 0.62391373, 0.16885540];
const H_STO3G_COEFFICIENTS: [f64; 3] = [0.15432897, 0.53532814, 0.44463454];

/// A contracted s-type Gaussian. Coefficients multiply normalized primitives
/// and are rescaled so that the contracted function has unit self-overlap.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractedSOrbital {
    pub center: Vec3,
    pub exponents: Vec<f64>,
    pub coefficients: Vec<f64>,
}

impl ContractedSOrbital {
    /// Builds a normalized contraction from exponents and coefficients of
    /// normalized primitives.
    pub fn new(center: Vec3, exponents: Vec<f64>, coefficients: Vec<f64>) -> crate::Result<Self> {
        if exponents.is_empty() || exponents.len() != coefficients.len() {
            return Err(crate::Error::Dimension(format!(
                "{} exponents vs {} coefficients",
                exponents.len(),
                coefficients.len()
            )));
        }
        if exponents.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
            return Err(crate::Error::Domain("exponents must be positive and finite".into()));
        }
        let mut orb = ContractedSOrbital { center, exponents, coefficients };
        let norm = overlap(&orb, &orb).sqrt();
        for c in &mut orb.coefficients {
            *c /= norm;
        }
        Ok(orb)
    }

    /// `(exponent, weight)` pairs with the primitive normalization folded in.
    pub(crate) fn primitives(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.exponents.iter().zip(&self.coefficients).map(|(&a, &c)| (a, c * (2.0 * a / PI).powf(0.75)))
    }

    /// Value of the orbital at a point.
    pub fn value_at(&self, r: Vec3) -> f64 {
        let d2 = dist2(r, self.center);
        self.primitives().map(|(a, w)| w * (-a * d2).exp()).sum()
    }
}

/// Hydrogen 1s orbital in the STO-3G basis.
pub fn hydrogen_sto3g_orbital(center: Vec3) -> ContractedSOrbital {
    ContractedSOrbital::new(center, H_STO3G_EXPONENTS.to_vec(), H_STO3G_COEFFICIENTS.to_vec())
        .expect("tabulated STO-3G parameters are valid")
}

pub(crate) fn dist2(a: Vec3, b: Vec3) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

fn product_center(a: f64, ra: Vec3, b: f64, rb: Vec3) -> Vec3 {
    let p = a + b;
    [(a * ra[0] + b * rb[0]) / p, (a * ra[1] + b * rb[1]) / p, (a * ra[2] + b * rb[2]) / p]
}

fn boys(t: f64) -> f64 {
    boys_f0(t).expect("squared distances are nonnegative")
}

pub fn overlap(x: &ContractedSOrbital, y: &ContractedSOrbital) -> f64 {
    let r2 = dist2(x.center, y.center);
    let mut s = 0.0;
    for (a, wa) in x.primitives() {
        for (b, wb) in y.primitives() {
            let p = a + b;
            s += wa * wb * (PI / p).powf(1.5) * (-a * b / p * r2).exp();
        }
    }
    s
}

pub fn kinetic(x: &ContractedSOrbital, y: &ContractedSOrbital) -> f64 {
    let r2 = dist2(x.center, y.center);
    let mut t = 0.0;
    for (a, wa) in x.primitives() {
        for (b, wb) in y.primitives() {
            let p = a + b;
            let mu = a * b / p;
            t += wa * wb * mu * (3.0 - 2.0 * mu * r2) * (PI / p).powf(1.5) * (-mu * r2).exp();
        }
    }
    t
}

/// Attraction to a point charge `z` at `c` (negative for positive `z`).
pub fn nuclear_attraction(x: &ContractedSOrbital, y: &ContractedSOrbital, c: Vec3, z: f64) -> f64 {
    let r2 = dist2(x.center, y.center);
    let mut v = 0.0;
    for (a, wa) in x.primitives() {
        for (b, wb) in y.primitives() {
            let p = a + b;
            let pc = product_center(a, x.center, b, y.center);
            v += wa * wb * (-2.0 * PI / p) * z * (-a * b / p * r2).exp() * boys(p * dist2(pc, c));
        }
    }
    v
}

/// Chemist-notation repulsion integral `(xy|zw)`.
pub fn electron_repulsion(
    x: &ContractedSOrbital,
    y: &ContractedSOrbital,
    z: &ContractedSOrbital,
    w: &ContractedSOrbital,
) -> f64 {
    let rxy = dist2(x.center, y.center);
    let rzw = dist2(z.center, w.center);
    let mut g = 0.0;
    for (a, wa) in x.primitives() {
        for (b, wb) in y.primitives() {
            let p = a + b;
            let pc = product_center(a, x.center, b, y.center);
            let kab = (-a * b / p * rxy).exp();
            for (c, wc) in z.primitives() {
                for (d, wd) in w.primitives() {
                    let q = c + d;
                    let qc = product_center(c, z.center, d, w.center);
                    let kcd = (-c * d / q * rzw).exp();
                    let pref = 2.0 * PI.powf(2.5) / (p * q * (p + q).sqrt());
                    g += wa * wb * wc * wd * pref * kab * kcd * boys(p * q / (p + q) * dist2(pc, qc));
                }
            }
        }
    }
    g
}
