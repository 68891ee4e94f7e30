//! Blind inference: estimate τ̂ with DoTNet, run one forward pass — no
//! iterative refinement.

use rand::Rng;

use super::TlsrModel;
use crate::degradation::DoT;
use crate::dotnet::{dot_estimate, DoTNet};
use crate::error::{Error, Result};
use crate::imaging::Image;
use crate::nn::Scalar;

/// τ̂ = DoTNet(x); y = TLSR(x, τ̂). Returns the SR image and the estimate.
/// The SR and DoT checkpoints must belong to the same degradation family.
pub fn tlsr_infer<S: Scalar, R: Rng>(
    img: &Image,
    model: &mut TlsrModel<S>,
    dot: &mut DoTNet<S>,
    dot_family: crate::degradation::DegradationFamily,
    rng: &mut R,
) -> Result<(Image, DoT)> {
    if model.family != dot_family {
        return Err(Error::Data(format!(
            "family mismatch: SR model is {}, DoT model is {}",
            model.family.as_str(),
            dot_family.as_str()
        )));
    }
    let tau = dot_estimate(img, dot, rng)?;
    let y = model.forward_image(img, tau)?;
    Ok((y, tau))
}

/// Two-stage pipeline for mixed degradations: denoise at ×1 with the
/// additive-family pair, then deblur + upscale with the convolutive pair.
pub fn tlsr_real<S: Scalar, R: Rng>(
    img: &Image,
    denoise: (&mut TlsrModel<S>, &mut DoTNet<S>),
    deblur: (&mut TlsrModel<S>, &mut DoTNet<S>),
    rng: &mut R,
) -> Result<Image> {
    let (n_model, n_dot) = denoise;
    let (b_model, b_dot) = deblur;
    if n_model.scale != 1 {
        return Err(Error::Data(format!(
            "scale misconfiguration: denoising stage must run at x1, got x{}",
            n_model.scale
        )));
    }
    if n_model.family != crate::degradation::DegradationFamily::Additive {
        return Err(Error::Data("stage 1 must be an additive-family model".to_string()));
    }
    if b_model.family == crate::degradation::DegradationFamily::Additive {
        return Err(Error::Data("stage 2 must be a blur-family model".to_string()));
    }
    let (denoised, _) = tlsr_infer(img, n_model, n_dot, n_model.family, rng)?;
    let (out, _) = tlsr_infer(&denoised, b_model, b_dot, b_model.family, rng)?;
    Ok(out)
}
