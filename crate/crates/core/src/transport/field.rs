use std::f64::consts::{PI, TAU};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::flow::{flow_inverse, Schedule, TorusPoint};

/// Magic bytes of the binary field format.
pub const FIELD_MAGIC: &[u8; 8] = b"SHMXFLD0";

/// Closed-form mean-zero initial data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialData {
    /// `2` on `x1 <= pi`, `-2` elsewhere.
    BressanStripe,
    /// `sin(k1 x1 + k2 x2)`; `k` must be nonzero.
    SineK { k: [i32; 2] },
}

impl InitialData {
    pub fn eval(&self, p: TorusPoint) -> f64 {
        match *self {
            InitialData::BressanStripe => {
                if p.x1() <= PI {
                    2.0
                } else {
                    -2.0
                }
            }
            InitialData::SineK { k } => (k[0] as f64 * p.x1() + k[1] as f64 * p.x2()).sin(),
        }
    }

    /// `sup |u0|`.
    pub fn sup_norm(&self) -> f64 {
        match self {
            InitialData::BressanStripe => 2.0,
            InitialData::SineK { .. } => 1.0,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            InitialData::BressanStripe => "bressan-stripe",
            InitialData::SineK { .. } => "sine-k",
        }
    }
}

impl fmt::Display for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialData::BressanStripe => f.write_str("bressan-stripe"),
            InitialData::SineK { k } => write!(f, "sine-k:{},{}", k[0], k[1]),
        }
    }
}

/// Parses `bressan-stripe`, `sine-k` (meaning `k = (1, 0)`) or `sine-k:K1,K2`.
impl FromStr for InitialData {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "bressan-stripe" {
            return Ok(InitialData::BressanStripe);
        }
        if s == "sine-k" {
            return Ok(InitialData::SineK { k: [1, 0] });
        }
        let rest = s
            .strip_prefix("sine-k:")
            .ok_or_else(|| invalid(format!("unknown initial data {s:?}")))?;
        let parts: Vec<&str> = rest.split(',').collect();
        let parse = |t: &str| t.trim().parse::<i32>().map_err(|_| invalid(format!("bad wavenumber in {s:?}")));
        match parts.as_slice() {
            [a, b] => {
                let k = [parse(a)?, parse(b)?];
                if k == [0, 0] {
                    return Err(invalid("sine-k needs a nonzero wavenumber"));
                }
                Ok(InitialData::SineK { k })
            }
            _ => Err(invalid(format!("expected sine-k:K1,K2, got {s:?}"))),
        }
    }
}

/// Cell-centred samples on an `n x n` grid.
///
/// Storage is row-major with rows indexed by `x2`: entry `j * n + i` holds
/// the value at `((i + 1/2) h, (j + 1/2) h)` with `h = 2 pi / n`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    n: usize,
    values: Vec<f64>,
    mean: f64,
    mean_zero: bool,
}

fn check_resolution(n: usize) -> Result<()> {
    if n < 2 || !n.is_power_of_two() {
        return Err(invalid(format!("resolution must be a power of two >= 2, got {n}")));
    }
    Ok(())
}

/// Coordinate of cell centre `i` at resolution `n`.
#[inline]
pub fn cell_center(i: usize, n: usize) -> f64 {
    (i as f64 + 0.5) * TAU / n as f64
}

impl ScalarField {
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        check_resolution(n)?;
        if values.len() != n * n {
            return Err(invalid(format!("expected {} values, got {}", n * n, values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("field values must be finite"));
        }
        let mean = grid_mean(&values);
        Ok(ScalarField {
            n,
            values,
            mean,
            mean_zero: false,
        })
    }

    /// Sample `f` at every cell centre, in parallel over rows.
    pub fn sample<F>(n: usize, f: F) -> Result<Self>
    where
        F: Fn(TorusPoint) -> f64 + Sync,
    {
        check_resolution(n)?;
        let mut values = vec![0.0; n * n];
        values.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            let x2 = cell_center(j, n);
            for (i, v) in row.iter_mut().enumerate() {
                *v = f(TorusPoint::new(cell_center(i, n), x2));
            }
        });
        Self::from_values(n, values)
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::from_values(n, vec![0.0; n * n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.n + i]
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn is_mean_zero(&self) -> bool {
        self.mean_zero
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Root mean square over the grid.
    pub fn rms(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }

    /// Subtract the grid mean and flag the field as mean-zero.
    pub fn into_mean_zero(mut self) -> Self {
        let m = self.mean;
        self.values.iter_mut().for_each(|v| *v -= m);
        self.mean = grid_mean(&self.values);
        self.mean_zero = true;
        self
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let n = u32::try_from(self.n).map_err(|_| invalid("resolution does not fit in u32"))?;
        w.write_all(FIELD_MAGIC)?;
        w.write_all(&n.to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != FIELD_MAGIC {
            return Err(invalid("not a field file (bad magic)"));
        }
        let mut nb = [0u8; 4];
        r.read_exact(&mut nb)?;
        let n = u32::from_le_bytes(nb) as usize;
        check_resolution(n)?;
        let mut buf = vec![0u8; n * n * 8];
        r.read_exact(&mut buf)?;
        let values = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Self::from_values(n, values)
    }

    /// Heatmap with at most `max_px` cells per side (block averages) and a
    /// fixed symmetric colour range `[-range, range]`.
    pub fn write_svg<W: Write>(&self, mut w: W, max_px: usize, range: f64) -> Result<()> {
        let b = (self.n / max_px.max(1)).max(1);
        let m = self.n / b;
        let px = 4;
        writeln!(
            w,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{s}" height="{s}" viewBox="0 0 {s} {s}" shape-rendering="crispEdges">"#,
            s = m * px
        )?;
        for bj in 0..m {
            for bi in 0..m {
                let mut acc = 0.0;
                for j in bj * b..(bj + 1) * b {
                    for i in bi * b..(bi + 1) * b {
                        acc += self.get(i, j);
                    }
                }
                let t = 0.5 + 0.5 * (acc / (b * b) as f64) / range;
                // row j = 0 is the bottom of the torus
                writeln!(
                    w,
                    r#"<rect x="{}" y="{}" width="{px}" height="{px}" fill="{}"/>"#,
                    bi * px,
                    (m - 1 - bj) * px,
                    palette(t)
                )?;
            }
        }
        writeln!(w, "</svg>")?;
        Ok(())
    }
}

fn grid_mean(values: &[f64]) -> f64 {
    // fixed summation order: row sums, then the sum of rows
    let n = (values.len() as f64).sqrt() as usize;
    let rows: Vec<f64> = values.chunks(n.max(1)).map(|r| r.iter().fold(0.0, |a, v| a + v)).collect();
    rows.iter().fold(0.0, |a, v| a + v) / values.len().max(1) as f64
}

const PALETTE: [[u8; 3]; 9] = [
    [68, 1, 84],
    [71, 44, 122],
    [59, 81, 139],
    [44, 113, 142],
    [33, 144, 141],
    [39, 173, 129],
    [92, 200, 99],
    [170, 220, 50],
    [253, 231, 37],
];

/// Piecewise-linear colour for `t` in `[0, 1]` (clamped).
pub fn palette(t: f64) -> String {
    let t = if t.is_nan() { 0.5 } else { t.clamp(0.0, 1.0) };
    let s = t * (PALETTE.len() - 1) as f64;
    let k = (s.floor() as usize).min(PALETTE.len() - 2);
    let f = s - k as f64;
    let c: Vec<u8> = (0..3)
        .map(|c| {
            let a = PALETTE[k][c] as f64;
            let b = PALETTE[k + 1][c] as f64;
            (a + f * (b - a)).round() as u8
        })
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Pullback: `u(x) = u0(Phi^{-1}(x))` at every cell centre.
pub fn advect(u0: InitialData, sched: &Schedule, n: usize) -> Result<ScalarField> {
    ScalarField::sample(n, |x| u0.eval(flow_inverse(x, sched)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        for s in ["bressan-stripe", "sine-k:1,0", "sine-k:-2,3"] {
            let d: InitialData = s.parse().unwrap();
            assert_eq!(d.to_string(), s);
        }
        assert_eq!("sine-k".parse::<InitialData>().unwrap(), InitialData::SineK { k: [1, 0] });
        assert!("sine-k:0,0".parse::<InitialData>().is_err());
        assert!("stripe".parse::<InitialData>().is_err());
    }

    #[test]
    fn resolution_checks() {
        assert!(ScalarField::zeros(12).is_err());
        assert!(ScalarField::zeros(1).is_err());
        assert!(ScalarField::from_values(4, vec![0.0; 15]).is_err());
        assert!(ScalarField::from_values(2, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn empty_schedule_samples_data() {
        let u = advect(InitialData::BressanStripe, &Schedule::empty(), 8).unwrap();
        for j in 0..8 {
            for i in 0..8 {
                assert_eq!(u.get(i, j), if i < 4 { 2.0 } else { -2.0 });
            }
        }
        assert_eq!(u.mean(), 0.0);
    }

    #[test]
    fn horizontal_pullback_is_closed_form() {
        let tau = 1.7;
        let sched = Schedule::from_magnitudes(&[tau, 0.0]).unwrap();
        let u = advect(InitialData::SineK { k: [1, 0] }, &sched, 32).unwrap();
        for j in 0..32 {
            for i in 0..32 {
                let (x1, x2) = (cell_center(i, 32), cell_center(j, 32));
                assert!((u.get(i, j) - (x1 - tau * x2.sin()).sin()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mean_zero_enforced() {
        let u = ScalarField::sample(16, |p| 1.0 + p.x1().cos()).unwrap();
        assert!((u.mean() - 1.0).abs() < 1e-12);
        let z = u.into_mean_zero();
        assert!(z.is_mean_zero());
        assert!(z.mean().abs() < 1e-12);
    }

    #[test]
    fn binary_round_trip() {
        let u = ScalarField::sample(8, |p| p.x1() * p.x2()).unwrap();
        let mut buf = Vec::new();
        u.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..8], FIELD_MAGIC);
        assert_eq!(&buf[8..12], &8u32.to_le_bytes());
        assert_eq!(buf.len(), 12 + 64 * 8);
        let v = ScalarField::read_binary(buf.as_slice()).unwrap();
        assert_eq!(u, v);
        buf[0] = b'X';
        assert!(ScalarField::read_binary(buf.as_slice()).is_err());
    }

    #[test]
    fn svg_has_blocks() {
        let u = ScalarField::sample(16, |p| p.x1().sin()).unwrap();
        let mut buf = Vec::new();
        u.write_svg(&mut buf, 4, 1.0).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.matches("<rect").count(), 16);
        assert_eq!(palette(0.0), "#440154");
        assert_eq!(palette(1.0), "#fde725");
    }
}
