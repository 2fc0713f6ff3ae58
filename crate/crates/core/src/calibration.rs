//! Radiometric calibration of visible-reflectance and UV-fluorescence
//! textures against a reflectance standard imaged in the same atlas.
//!
//! Visible: the standard's per-channel median `R_target` divided by its
//! nominal reflectance gives `R_norm`; every texel is divided by `R_norm`,
//! yielding reflectance relative to the standard.
//!
//! Fluorescence: the standard does not fluoresce, so its median on the UVF
//! texture is the stray visible light `S_target`. The stray contribution at a
//! texel scales with that texel's calibrated reflectance and is subtracted:
//! `U_calib = U_fluorescence − S_target · V_calib`.

use alloc::vec::Vec;

use thiserror::Error;

use crate::imaging::{ChannelStats, Modality, Texture};
use crate::par;

/// Nominal reflectance of the Spectralon standard in the visible range.
pub const SPECTRALON_NOMINAL: f64 = 0.99;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrationError {
    #[error("reference patch median is {value} in channel {channel}; the patch is probably misplaced")]
    NonPositiveTarget { channel: usize, value: f64 },
    #[error("nominal reflectance {value} in channel {channel} is outside (0, 1]")]
    InvalidNominal { channel: usize, value: f64 },
    #[error("stray light {value} in channel {channel} is negative or non-finite")]
    InvalidStray { channel: usize, value: f64 },
    #[error("channel count mismatch: {0} vs {1}")]
    ChannelMismatch(usize, usize),
    #[error("texture shape mismatch: {0}x{1}x{2} vs {3}x{4}x{5}")]
    ShapeMismatch(usize, usize, usize, usize, usize, usize),
    #[error("expected a {expected} texture, got {got}")]
    WrongInput { expected: &'static str, got: &'static str },
}

/// Per-channel normalization `R_norm = R_target / R_nominal`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormVector {
    r_norm: Vec<f64>,
    target: Vec<f64>,
    nominal: Vec<f64>,
}

impl NormVector {
    pub fn r_norm(&self) -> &[f64] {
        &self.r_norm
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn nominal(&self) -> &[f64] {
        &self.nominal
    }
}

pub fn compute_norm(
    target_stats: &ChannelStats,
    nominal: &[f64],
) -> Result<NormVector, CalibrationError> {
    let target = &target_stats.medians;
    if target.len() != nominal.len() {
        return Err(CalibrationError::ChannelMismatch(target.len(), nominal.len()));
    }
    for (channel, &value) in nominal.iter().enumerate() {
        if !(value > 0.0 && value <= 1.0) {
            return Err(CalibrationError::InvalidNominal { channel, value });
        }
    }
    for (channel, &value) in target.iter().enumerate() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(CalibrationError::NonPositiveTarget { channel, value });
        }
    }
    Ok(NormVector {
        r_norm: target.iter().zip(nominal).map(|(t, n)| t / n).collect(),
        target: target.clone(),
        nominal: nominal.to_vec(),
    })
}

/// `V_calib = V_acq / R_norm`, channel by channel. Values above 1 are kept.
pub fn calibrate_vis(
    acq: &Texture,
    norm: &NormVector,
    workers: usize,
) -> Result<Texture, CalibrationError> {
    expect_input(acq, Modality::Vis, false, "uncalibrated VIS")?;
    let channels = acq.channels();
    if channels != norm.r_norm.len() {
        return Err(CalibrationError::ChannelMismatch(channels, norm.r_norm.len()));
    }
    let row_len = acq.width() * channels;
    let mut out = acq.data().to_vec();
    par::for_each_row(&mut out, row_len, workers, |_, row| {
        for px in row.chunks_mut(channels) {
            for (v, r) in px.iter_mut().zip(&norm.r_norm) {
                *v /= r;
            }
        }
    });
    Ok(Texture::from_parts_unchecked(
        acq.width(),
        acq.height(),
        channels,
        out,
        acq.meta().clone().calibrated(),
    ))
}

/// Per-channel stray visible light measured on the standard under UV.
#[derive(Debug, Clone, PartialEq)]
pub struct StrayLight {
    s_target: Vec<f64>,
}

impl StrayLight {
    pub fn new(s_target: Vec<f64>) -> Result<Self, CalibrationError> {
        for (channel, &value) in s_target.iter().enumerate() {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(CalibrationError::InvalidStray { channel, value });
            }
        }
        Ok(Self { s_target })
    }

    pub fn from_stats(stats: &ChannelStats) -> Result<Self, CalibrationError> {
        Self::new(stats.medians.clone())
    }

    pub fn s_target(&self) -> &[f64] {
        &self.s_target
    }
}

/// Diagnostics of the fluorescence subtraction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UvfReport {
    /// Samples whose raw result was negative and was clamped to 0.
    pub clamped: usize,
    /// Largest magnitude of a clamped raw result (0 when nothing was clamped).
    pub max_undershoot: f64,
}

/// `U_calib = max(0, U_fluor − S_target · V_calib)`, channel by channel.
pub fn calibrate_uvf(
    fluor: &Texture,
    stray: &StrayLight,
    vis_calib: &Texture,
    workers: usize,
) -> Result<(Texture, UvfReport), CalibrationError> {
    expect_input(fluor, Modality::Uvf, false, "uncalibrated UVF")?;
    expect_input(vis_calib, Modality::Vis, true, "calibrated VIS")?;
    if !fluor.same_shape(vis_calib) {
        return Err(CalibrationError::ShapeMismatch(
            fluor.width(),
            fluor.height(),
            fluor.channels(),
            vis_calib.width(),
            vis_calib.height(),
            vis_calib.channels(),
        ));
    }
    let channels = fluor.channels();
    if channels != stray.s_target.len() {
        return Err(CalibrationError::ChannelMismatch(channels, stray.s_target.len()));
    }

    let width = fluor.width();
    let row_len = width * channels;
    let mut out = fluor.data().to_vec();
    // per-row (clamped, worst undershoot), merged after the parallel pass
    let mut row_reports = alloc::vec![UvfReport::default(); fluor.height()];
    {
        let vis = vis_calib.data();
        let s = &stray.s_target;
        let mut rows: Vec<(&mut [f64], &mut UvfReport)> =
            out.chunks_mut(row_len).zip(row_reports.iter_mut()).collect();
        par::for_each_row(&mut rows, 1, workers, |r, slot| {
            let (row, report) = &mut slot[0];
            let vis_row = &vis[r * row_len..][..row_len];
            for (i, v) in row.iter_mut().enumerate() {
                let raw = *v - s[i % channels] * vis_row[i];
                if raw < 0.0 {
                    report.clamped += 1;
                    report.max_undershoot = report.max_undershoot.max(-raw);
                    *v = 0.0;
                } else {
                    *v = raw;
                }
            }
        });
    }
    let report = row_reports.iter().fold(UvfReport::default(), |acc, r| UvfReport {
        clamped: acc.clamped + r.clamped,
        max_undershoot: acc.max_undershoot.max(r.max_undershoot),
    });
    Ok((
        Texture::from_parts_unchecked(
            width,
            fluor.height(),
            channels,
            out,
            fluor.meta().clone().calibrated(),
        ),
        report,
    ))
}

fn expect_input(
    tex: &Texture,
    modality: Modality,
    calibrated: bool,
    expected: &'static str,
) -> Result<(), CalibrationError> {
    let meta = tex.meta();
    if meta.modality == modality && meta.calibrated == calibrated {
        return Ok(());
    }
    let got = match (meta.modality, meta.calibrated) {
        (Modality::Vis, false) => "uncalibrated VIS",
        (Modality::Vis, true) => "calibrated VIS",
        (Modality::Uvf, false) => "uncalibrated UVF",
        (Modality::Uvf, true) => "calibrated UVF",
        (Modality::Irr, _) => "IRR",
        (Modality::Other, _) => "OTHER",
    };
    Err(CalibrationError::WrongInput { expected, got })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{patch_stats, BandMeta, PatchRect};
    use alloc::vec;
    use proptest::prelude::*;

    fn vis(w: usize, h: usize, data: Vec<f64>) -> Texture {
        Texture::new(w, h, 3, data, BandMeta::new(Modality::Vis, 3)).unwrap()
    }

    fn uvf(w: usize, h: usize, data: Vec<f64>) -> Texture {
        Texture::new(w, h, 3, data, BandMeta::new(Modality::Uvf, 3)).unwrap()
    }

    fn stats(m: &[f64]) -> ChannelStats {
        ChannelStats { medians: m.to_vec() }
    }

    #[test]
    fn norm_arithmetic() {
        let n = compute_norm(&stats(&[0.5, 0.5, 0.5]), &[0.99; 3]).unwrap();
        for r in n.r_norm() {
            assert!((r - 0.505_050_505_050_505).abs() < 1e-15);
        }
        let n = compute_norm(&stats(&[0.99; 3]), &[0.99; 3]).unwrap();
        assert_eq!(n.r_norm(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn norm_rejects_bad_target_and_nominal() {
        assert_eq!(
            compute_norm(&stats(&[0.0, 0.5, 0.5]), &[0.99; 3]),
            Err(CalibrationError::NonPositiveTarget { channel: 0, value: 0.0 })
        );
        assert!(matches!(
            compute_norm(&stats(&[0.5; 3]), &[0.99, 1.2, 0.99]),
            Err(CalibrationError::InvalidNominal { channel: 1, .. })
        ));
        assert!(matches!(
            compute_norm(&stats(&[0.5; 3]), &[0.99; 2]),
            Err(CalibrationError::ChannelMismatch(3, 2))
        ));
    }

    #[test]
    fn vis_direct_arithmetic_and_zero() {
        let n = compute_norm(&stats(&[0.5, 0.5, 0.5]), &[1.0; 3]).unwrap();
        let t = vis(2, 1, vec![0.25, 0.5, 0.75, 0.0, 0.0, 0.0]);
        let c = calibrate_vis(&t, &n, 1).unwrap();
        assert_eq!(c.data(), &[0.5, 1.0, 1.5, 0.0, 0.0, 0.0]);
        assert!(c.meta().calibrated);
    }

    #[test]
    fn vis_texel_at_target_becomes_nominal() {
        let target = [0.61, 0.47, 0.33];
        let n = compute_norm(&stats(&target), &[0.99; 3]).unwrap();
        let c = calibrate_vis(&vis(1, 1, target.to_vec()), &n, 1).unwrap();
        for v in c.data() {
            assert!((v - 0.99).abs() <= 1e-15);
        }
    }

    #[test]
    fn vis_rejects_wrong_inputs() {
        let n = compute_norm(&stats(&[0.5; 3]), &[0.99; 3]).unwrap();
        let u = uvf(1, 1, vec![0.1; 3]);
        assert!(matches!(
            calibrate_vis(&u, &n, 1),
            Err(CalibrationError::WrongInput { .. })
        ));
        let gray = Texture::new(1, 1, 1, vec![0.1], BandMeta::new(Modality::Vis, 1)).unwrap();
        assert!(matches!(
            calibrate_vis(&gray, &n, 1),
            Err(CalibrationError::ChannelMismatch(1, 3))
        ));
    }

    fn calibrated_vis(data: Vec<f64>, w: usize) -> Texture {
        let h = data.len() / (3 * w);
        let n = compute_norm(&stats(&[0.99; 3]), &[0.99; 3]).unwrap();
        calibrate_vis(&vis(w, h, data), &n, 1).unwrap()
    }

    #[test]
    fn uvf_direct_arithmetic_with_clamp() {
        let v = calibrated_vis(vec![1.0, 2.0, 6.0], 1);
        let f = uvf(1, 1, vec![0.10, 0.10, 0.10]);
        let s = StrayLight::new(vec![0.02; 3]).unwrap();
        let (out, report) = calibrate_uvf(&f, &s, &v, 1).unwrap();
        assert!((out.data()[0] - 0.08).abs() < 1e-15);
        assert!((out.data()[1] - 0.06).abs() < 1e-15);
        assert_eq!(out.data()[2], 0.0);
        assert_eq!(report.clamped, 1);
        assert!((report.max_undershoot - 0.02).abs() < 1e-15);
    }

    #[test]
    fn uvf_pure_stray_and_black_surface() {
        let v = calibrated_vis(vec![0.3, 0.6, 0.9, 0.0, 0.0, 0.0], 2);
        let s = StrayLight::new(vec![0.021, 0.017, 0.033]).unwrap();
        let mut fdata: Vec<f64> = (0..3).map(|c| s.s_target()[c] * v.data()[c]).collect();
        fdata.extend([0.4, 0.5, 0.6]);
        let (out, report) = calibrate_uvf(&uvf(2, 1, fdata), &s, &v, 1).unwrap();
        assert_eq!(out.data(), &[0.0, 0.0, 0.0, 0.4, 0.5, 0.6]);
        assert_eq!(report.clamped, 0);
        assert_eq!(report.max_undershoot, 0.0);
    }

    #[test]
    fn uvf_shape_mismatch() {
        let v = calibrated_vis(vec![0.3; 6], 2);
        let f = uvf(1, 2, vec![0.1; 6]);
        let s = StrayLight::new(vec![0.01; 3]).unwrap();
        assert!(matches!(
            calibrate_uvf(&f, &s, &v, 1),
            Err(CalibrationError::ShapeMismatch(..))
        ));
        assert!(matches!(
            calibrate_uvf(&f, &s, &uvf(1, 2, vec![0.1; 6]), 1),
            Err(CalibrationError::WrongInput { .. })
        ));
    }

    #[test]
    fn stray_must_be_non_negative() {
        assert!(StrayLight::new(vec![0.1, -0.01, 0.0]).is_err());
        assert!(StrayLight::new(vec![0.0; 3]).is_ok());
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let data: Vec<f64> = (0..5 * 7 * 3).map(|i| (i % 13) as f64 * 0.07).collect();
        let v = calibrated_vis(data.clone(), 5);
        let f = uvf(5, 7, data.iter().map(|x| x * 0.3).collect());
        let s = StrayLight::new(vec![0.1, 0.2, 0.05]).unwrap();
        let a = calibrate_uvf(&f, &s, &v, 1).unwrap();
        let b = calibrate_uvf(&f, &s, &v, 3).unwrap();
        assert_eq!(a, b);
    }

    fn arb_rgb_texture(w: usize, h: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..4.0, w * h * 3)
    }

    proptest! {
        #[test]
        fn vis_round_trip_within_one_ulp(
            data in arb_rgb_texture(4, 3),
            target in prop::array::uniform3(1e-3f64..2.0),
            nominal in prop::array::uniform3(0.05f64..=1.0),
        ) {
            let n = compute_norm(&stats(&target), &nominal).unwrap();
            let c = calibrate_vis(&vis(4, 3, data.clone()), &n, 1).unwrap();
            for (i, (&orig, &cal)) in data.iter().zip(c.data()).enumerate() {
                let back = cal * n.r_norm()[i % 3];
                let ulp = f64::from_bits(orig.to_bits() + 1) - orig;
                prop_assert!((back - orig).abs() <= ulp, "{} -> {} (ulp {})", orig, back, ulp);
            }
        }

        #[test]
        fn calibrated_standard_reads_nominal(
            target in prop::array::uniform3(1e-3f64..2.0),
            jitter in prop::collection::vec(0.98f64..1.02, 100 * 3),
        ) {
            // a 10x10 patch of the standard with some noise around its level
            let data: Vec<f64> = jitter.iter().enumerate().map(|(i, j)| target[i % 3] * j).collect();
            let tex = vis(10, 10, data);
            let rect = PatchRect::new(0, 0, 9, 9);
            let measured = patch_stats(&tex, &rect).unwrap();
            let n = compute_norm(&measured, &[SPECTRALON_NOMINAL; 3]).unwrap();
            let cal = calibrate_vis(&tex, &n, 1).unwrap();
            let again = patch_stats(&cal, &rect).unwrap();
            for m in again.medians {
                prop_assert!(((m - SPECTRALON_NOMINAL) / SPECTRALON_NOMINAL).abs() <= 1e-9);
            }
        }

        #[test]
        fn zero_stray_is_identity(data in arb_rgb_texture(3, 3), vdata in arb_rgb_texture(3, 3)) {
            let v = calibrated_vis(vdata, 3);
            let f = uvf(3, 3, data.clone());
            let (out, report) = calibrate_uvf(&f, &StrayLight::new(vec![0.0; 3]).unwrap(), &v, 1).unwrap();
            prop_assert_eq!(out.data(), &data[..]);
            prop_assert_eq!(report.clamped, 0);
        }

        #[test]
        fn outputs_non_negative_and_finite(
            fdata in arb_rgb_texture(3, 2),
            vdata in arb_rgb_texture(3, 2),
            s in prop::array::uniform3(0.0f64..1.0),
        ) {
            let v = calibrated_vis(vdata, 3);
            let (out, _) = calibrate_uvf(&uvf(3, 2, fdata), &StrayLight::new(s.to_vec()).unwrap(), &v, 1).unwrap();
            prop_assert!(out.data().iter().all(|x| x.is_finite() && *x >= 0.0));
        }

        #[test]
        fn vis_homogeneous_in_illumination(
            data in arb_rgb_texture(2, 2),
            target in prop::array::uniform3(1e-2f64..2.0),
            scale in 1e-3f64..1e3,
        ) {
            let n1 = compute_norm(&stats(&target), &[0.99; 3]).unwrap();
            let scaled_target: Vec<f64> = target.iter().map(|t| t * scale).collect();
            let n2 = compute_norm(&stats(&scaled_target), &[0.99; 3]).unwrap();
            let a = calibrate_vis(&vis(2, 2, data.clone()), &n1, 1).unwrap();
            let b = calibrate_vis(&vis(2, 2, data.iter().map(|x| x * scale).collect()), &n2, 1).unwrap();
            for (x, y) in a.data().iter().zip(b.data()) {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
            }
        }
    }
}
