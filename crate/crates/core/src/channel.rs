//! Large-scale path loss, Rician small-scale fading and stacked channel views.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{cvec_zeros, CMat, CVec, C64};
use crate::rng::{substream, Stream};
use crate::scenario::{Point3, Scenario};

/// Linear power gain `C0 (d / d0)^-kappa`.
pub fn path_loss(d: f64, kappa: f64, c0: f64, d0: f64) -> Result<f64> {
    if !(d > 0.0) || !(d0 > 0.0) {
        return Err(Error::Domain(format!(
            "path loss needs positive distances, got d={d} d0={d0}"
        )));
    }
    Ok(c0 * (d / d0).powf(-kappa))
}

/// Per-link channel coefficients plus the stacked forms the optimizers use.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// `h_d[b][k]`: HAP b -> WD k, length M.
    pub h_d: Vec<Vec<CVec>>,
    /// `g[b][i]`: HAP b <- IRS i, M x N.
    pub g: Vec<Vec<CMat>>,
    /// `h_r[i][k]`: IRS i -> WD k, length N.
    pub h_r: Vec<Vec<CVec>>,
    /// Stacked direct channel per WD, length BM.
    pub h_d_stack: Vec<CVec>,
    /// BM x IN cascade matrix.
    pub g_stack: CMat,
    /// Stacked reflected channel per WD, length IN.
    pub h_r_stack: Vec<CVec>,
    /// `G_i G_i^H` per IRS, BM x BM.
    pub gram: Vec<CMat>,
}

impl ChannelSet {
    pub fn from_links(h_d: Vec<Vec<CVec>>, g: Vec<Vec<CMat>>, h_r: Vec<Vec<CVec>>) -> Result<Self> {
        let b = h_d.len();
        let i = h_r.len();
        if b == 0 || i == 0 || g.len() != b {
            return Err(Error::DimensionMismatch {
                expected: b,
                got: g.len(),
            });
        }
        let k = h_d[0].len();
        let m = h_d[0].first().map_or(0, |v| v.len());
        let n = h_r[0].first().map_or(0, |v| v.len());
        for row in &h_d {
            if row.len() != k || row.iter().any(|v| v.len() != m) {
                return Err(Error::DimensionMismatch { expected: m, got: row.len() });
            }
        }
        for row in &h_r {
            if row.len() != k || row.iter().any(|v| v.len() != n) {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
        }
        for row in &g {
            if row.len() != i || row.iter().any(|mat| mat.shape() != (m, n)) {
                return Err(Error::DimensionMismatch { expected: i, got: row.len() });
            }
        }

        let h_d_stack = (0..k)
            .map(|kk| {
                let mut v = cvec_zeros(b * m);
                for (bb, row) in h_d.iter().enumerate() {
                    v.rows_mut(bb * m, m).copy_from(&row[kk]);
                }
                v
            })
            .collect();
        let mut g_stack = CMat::zeros(b * m, i * n);
        for (bb, row) in g.iter().enumerate() {
            for (ii, mat) in row.iter().enumerate() {
                g_stack.view_mut((bb * m, ii * n), (m, n)).copy_from(mat);
            }
        }
        let h_r_stack = (0..k)
            .map(|kk| {
                let mut v = cvec_zeros(i * n);
                for (ii, row) in h_r.iter().enumerate() {
                    v.rows_mut(ii * n, n).copy_from(&row[kk]);
                }
                v
            })
            .collect();
        let gram = (0..i)
            .map(|ii| {
                let gi = g_stack.columns(ii * n, n);
                &gi * gi.adjoint()
            })
            .collect();
        Ok(ChannelSet {
            h_d,
            g,
            h_r,
            h_d_stack,
            g_stack,
            h_r_stack,
            gram,
        })
    }

    pub fn num_wd(&self) -> usize {
        self.h_d_stack.len()
    }

    pub fn num_hap(&self) -> usize {
        self.h_d.len()
    }

    pub fn antennas(&self) -> usize {
        self.h_d[0][0].len()
    }

    pub fn num_irs(&self) -> usize {
        self.h_r.len()
    }

    pub fn elements(&self) -> usize {
        self.h_r[0][0].len()
    }

    pub fn bm(&self) -> usize {
        self.g_stack.nrows()
    }

    pub fn irs_elements(&self) -> usize {
        self.g_stack.ncols()
    }

    /// `G_stack diag(h_r_k)`, the BM x IN map from reflection vector to channel.
    pub fn cascade(&self, k: usize) -> CMat {
        let mut c = self.g_stack.clone();
        for (col, h) in self.h_r_stack[k].iter().enumerate() {
            c.column_mut(col).scale_mut_complex(*h);
        }
        c
    }

    /// Copy with every reflected link removed (no IRS in the network).
    pub fn without_irs(&self) -> ChannelSet {
        let mut out = self.clone();
        out.g_stack.fill(C64::new(0.0, 0.0));
        for row in &mut out.g {
            for mat in row.iter_mut() {
                mat.fill(C64::new(0.0, 0.0));
            }
        }
        for g in &mut out.gram {
            g.fill(C64::new(0.0, 0.0));
        }
        out
    }
}

trait ScaleComplex {
    fn scale_mut_complex(&mut self, s: C64);
}

impl<S> ScaleComplex for nalgebra::Matrix<C64, nalgebra::Dyn, nalgebra::U1, S>
where
    S: nalgebra::StorageMut<C64, nalgebra::Dyn, nalgebra::U1>,
{
    fn scale_mut_complex(&mut self, s: C64) {
        for x in self.iter_mut() {
            *x *= s;
        }
    }
}

/// `h_k = h_d_k + G_stack (v ⊙ h_r_k)` for every WD.
pub fn effective_channels(channels: &ChannelSet, v: &CVec) -> Result<Vec<CVec>> {
    if v.len() != channels.irs_elements() {
        return Err(Error::DimensionMismatch {
            expected: channels.irs_elements(),
            got: v.len(),
        });
    }
    Ok((0..channels.num_wd())
        .map(|k| {
            let weighted = v.component_mul(&channels.h_r_stack[k]);
            &channels.h_d_stack[k] + &channels.g_stack * weighted
        })
        .collect())
}

fn complex_normal<R: Rng>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Half-wavelength ULA response along the x axis.
fn steering(len: usize, cos_angle: f64) -> CVec {
    CVec::from_iterator(
        len,
        (0..len).map(|m| C64::from_polar(1.0, -PI * m as f64 * cos_angle)),
    )
}

struct LinkModel {
    kappa: f64,
    rician: f64,
}

impl LinkModel {
    fn los_weights(&self) -> (f64, f64) {
        if self.rician.is_infinite() {
            (1.0, 0.0)
        } else {
            let r = self.rician;
            ((r / (1.0 + r)).sqrt(), (1.0 / (1.0 + r)).sqrt())
        }
    }
}

fn rician_matrix<R: Rng>(
    los: &CMat,
    link: &LinkModel,
    gain: f64,
    rng: &mut R,
) -> CMat {
    let (w_los, w_nlos) = link.los_weights();
    let amp = gain.sqrt();
    CMat::from_fn(los.nrows(), los.ncols(), |r, c| {
        let nlos = complex_normal(rng);
        (los[(r, c)] * w_los + nlos * w_nlos) * amp
    })
}

fn rician_vector<R: Rng>(los: &CVec, link: &LinkModel, gain: f64, rng: &mut R) -> CVec {
    let (w_los, w_nlos) = link.los_weights();
    let amp = gain.sqrt();
    CVec::from_iterator(
        los.len(),
        los.iter().map(|l| (*l * w_los + complex_normal(rng) * w_nlos) * amp),
    )
}

/// Draw every link of the network. Each link class has its own random stream.
pub fn synth_channels(scenario: &Scenario, config: &SystemConfig, seed: u64) -> Result<ChannelSet> {
    let (m, n) = (config.m, config.n);
    let hu = LinkModel { kappa: config.kappa_hu, rician: config.rician_hu };
    let hi = LinkModel { kappa: config.kappa_hi, rician: config.rician_hi };
    let iu = LinkModel { kappa: config.kappa_iu, rician: config.rician_iu };
    let loss = |a: &Point3, b: &Point3, link: &LinkModel| {
        path_loss(a.distance(b), link.kappa, config.c0, config.d0)
    };

    let mut rng = substream(seed, Stream::FadingHu);
    let mut h_d = Vec::with_capacity(scenario.hap_positions.len());
    for hap in &scenario.hap_positions {
        let mut row = Vec::with_capacity(scenario.wd_positions.len());
        for wd in &scenario.wd_positions {
            let los = steering(m, hap.cos_to(wd));
            row.push(rician_vector(&los, &hu, loss(hap, wd, &hu)?, &mut rng));
        }
        h_d.push(row);
    }

    let mut rng = substream(seed, Stream::FadingHi);
    let mut g = Vec::with_capacity(scenario.hap_positions.len());
    for hap in &scenario.hap_positions {
        let mut row = Vec::with_capacity(scenario.irs_positions.len());
        for irs in &scenario.irs_positions {
            let los = steering(m, hap.cos_to(irs)) * steering(n, irs.cos_to(hap)).transpose();
            row.push(rician_matrix(&los, &hi, loss(hap, irs, &hi)?, &mut rng));
        }
        g.push(row);
    }

    let mut rng = substream(seed, Stream::FadingIu);
    let mut h_r = Vec::with_capacity(scenario.irs_positions.len());
    for irs in &scenario.irs_positions {
        let mut row = Vec::with_capacity(scenario.wd_positions.len());
        for wd in &scenario.wd_positions {
            let los = steering(n, irs.cos_to(wd));
            row.push(rician_vector(&los, &iu, loss(irs, wd, &iu)?, &mut rng));
        }
        h_r.push(row);
    }

    ChannelSet::from_links(h_d, g, h_r)
}

/// Estimated channels `h + e` with `e ~ CN(0, delta |h|^2)` per coefficient.
pub fn perturb_csi(channels: &ChannelSet, delta: f64, seed: u64) -> Result<ChannelSet> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!("CSI error ratio must be >= 0, got {delta}")));
    }
    if delta == 0.0 {
        return Ok(channels.clone());
    }
    let mut rng = substream(seed, Stream::CsiError);
    let scale = delta.sqrt();
    let mut noisy = |h: &C64| *h + complex_normal(&mut rng) * (scale * h.norm());
    let h_d = channels
        .h_d
        .iter()
        .map(|row| row.iter().map(|v| v.map(|h| noisy(&h))).collect())
        .collect();
    let g = channels
        .g
        .iter()
        .map(|row| row.iter().map(|mat| mat.map(|h| noisy(&h))).collect())
        .collect();
    let h_r = channels
        .h_r
        .iter()
        .map(|row| row.iter().map(|v| v.map(|h| noisy(&h))).collect())
        .collect();
    ChannelSet::from_links(h_d, g, h_r)
}
