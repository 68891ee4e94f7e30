//! Python bindings for the kernel algebra, degradation pipeline, image
//! metrics, and single-image blind inference.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use tlsr_core::degradation::{self, DegradationFamily, DegradationSpec, DoT};
use tlsr_core::dotnet::DoTNet;
use tlsr_core::error::Error;
use tlsr_core::harness;
use tlsr_core::imaging;
use tlsr_core::nn::Checkpoint;
use tlsr_core::rng::SeedTree;
use tlsr_core::tlsr::TlsrModel;

fn to_py_err(e: Error) -> PyErr {
    match &e {
        Error::Io(_) | Error::PngDecode(_) | Error::PngEncode(_) | Error::Data(_) => {
            PyIOError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn kernel_rows(k: &degradation::Kernel) -> Vec<Vec<f64>> {
    k.values.chunks(k.size).map(|row| row.to_vec()).collect()
}

/// Normalized isotropic Gaussian blur kernel as a size×size list of rows.
#[pyfunction]
fn gaussian_kernel(sigma: f64, size: usize) -> PyResult<Vec<Vec<f64>>> {
    Ok(kernel_rows(&degradation::gaussian_kernel(sigma, size).map_err(to_py_err)?))
}

/// Anisotropic Gaussian kernel from axis sigmas and a rotation angle.
#[pyfunction]
fn anisotropic_kernel(
    sigma_u: f64,
    sigma_v: f64,
    theta: f64,
    size: usize,
) -> PyResult<Vec<Vec<f64>>> {
    Ok(kernel_rows(
        &degradation::anisotropic_kernel(sigma_u, sigma_v, theta, size).map_err(to_py_err)?,
    ))
}

/// Analytic transition state between two Gaussian primaries at the given
/// degree of transitionality.
#[pyfunction]
fn transition_kernel(sigma0: f64, sigma1: f64, tau: f64, size: usize) -> PyResult<Vec<Vec<f64>>> {
    let t = DoT::new(tau).map_err(to_py_err)?;
    Ok(kernel_rows(&degradation::transition_kernel(sigma0, sigma1, t, size).map_err(to_py_err)?))
}

/// Canonical DoT of a degradation parameter within its family bounds
/// (τ=0 weakest, τ=1 strongest).
#[pyfunction]
fn dot_ground_truth(family: &str, param: f64, param_min: f64, param_max: f64) -> PyResult<f64> {
    let family = DegradationFamily::parse(family).map_err(to_py_err)?;
    let sampler = degradation::DegradationSampler::new(family, (param_min, param_max), 1, 21);
    let spec = sampler.spec_for(param).map_err(to_py_err)?;
    Ok(degradation::dot_ground_truth(&spec).map_err(to_py_err)?.value())
}

/// Apply blur ⊗ → bicubic ↓scale → AWGN to a PNG.
#[pyfunction]
#[pyo3(signature = (input, output, scale=2, sigma=0.2, noise=0.0, kernel_size=21, seed=7))]
fn degrade_png(
    input: PathBuf,
    output: PathBuf,
    scale: usize,
    sigma: f64,
    noise: f64,
    kernel_size: usize,
    seed: u64,
) -> PyResult<()> {
    let img = imaging::read_png(&input).map_err(to_py_err)?;
    let spec = DegradationSpec {
        scale,
        kernel: degradation::gaussian_kernel(sigma.max(1e-6), kernel_size).map_err(to_py_err)?,
        noise_level: noise,
        family: if noise > 0.0 {
            DegradationFamily::Additive
        } else {
            DegradationFamily::Convolutive
        },
        family_bounds: (0.0, noise.max(sigma).max(1.0)),
    };
    let hr = img.crop_to_multiple(scale).map_err(to_py_err)?;
    let lr = degradation::degrade(&hr, &spec, &mut SeedTree::new(seed).rng("degrade"))
        .map_err(to_py_err)?;
    imaging::write_png(&lr.clamp01(), &output).map_err(to_py_err)
}

/// Cubic-convolution resampling of a PNG by an arbitrary positive factor.
#[pyfunction]
#[pyo3(signature = (input, output, scale, antialias=true))]
fn bicubic_resize_png(input: PathBuf, output: PathBuf, scale: f64, antialias: bool) -> PyResult<()> {
    let img = imaging::read_png(&input).map_err(to_py_err)?;
    let out = imaging::bicubic_resize(&img, scale, antialias).map_err(to_py_err)?;
    imaging::write_png(&out.clamp01(), &output).map_err(to_py_err)
}

/// Luminance PSNR between two PNGs with a border crop (SR protocol).
#[pyfunction]
#[pyo3(signature = (path_a, path_b, border=0))]
fn psnr_png(path_a: PathBuf, path_b: PathBuf, border: usize) -> PyResult<f64> {
    let (a, b) = load_pair(&path_a, &path_b)?;
    imaging::psnr(&a, &b, border).map_err(to_py_err)
}

/// Luminance SSIM between two PNGs.
#[pyfunction]
fn ssim_png(path_a: PathBuf, path_b: PathBuf) -> PyResult<f64> {
    let (a, b) = load_pair(&path_a, &path_b)?;
    imaging::ssim(&a, &b).map_err(to_py_err)
}

fn load_pair(path_a: &PathBuf, path_b: &PathBuf) -> PyResult<(imaging::Image, imaging::Image)> {
    let to_lum = |img: imaging::Image| -> PyResult<imaging::Image> {
        if img.channels == 3 {
            imaging::rgb_to_luminance(&img).map_err(to_py_err)
        } else {
            Ok(img)
        }
    };
    let a = to_lum(imaging::read_png(path_a).map_err(to_py_err)?)?;
    let b = to_lum(imaging::read_png(path_b).map_err(to_py_err)?)?;
    Ok((a, b))
}

/// Blind single-image super-resolution from trained checkpoints; returns the
/// estimated DoT.
#[pyfunction]
#[pyo3(signature = (input, output, sr_checkpoint, dot_checkpoint, seed=7))]
fn sr_png(
    input: PathBuf,
    output: PathBuf,
    sr_checkpoint: PathBuf,
    dot_checkpoint: PathBuf,
    seed: u64,
) -> PyResult<f64> {
    let img = imaging::read_png(&input).map_err(to_py_err)?;
    let mut model =
        TlsrModel::<f32>::from_checkpoint(&Checkpoint::load(&sr_checkpoint).map_err(to_py_err)?)
            .map_err(to_py_err)?;
    let (mut dot, family, _) =
        DoTNet::<f32>::from_checkpoint(&Checkpoint::load(&dot_checkpoint).map_err(to_py_err)?)
            .map_err(to_py_err)?;
    let (y, tau) = tlsr_core::tlsr::tlsr_infer(
        &img,
        &mut model,
        &mut dot,
        family,
        &mut SeedTree::new(seed).rng("crops"),
    )
    .map_err(to_py_err)?;
    imaging::write_png(&y.clamp01(), &output).map_err(to_py_err)?;
    Ok(tau.value())
}

/// Write a procedural PNG dataset (count images of side `size`).
#[pyfunction]
#[pyo3(signature = (out_dir, count=8, size=96, seed=7))]
fn synth_dataset_png(out_dir: PathBuf, count: usize, size: usize, seed: u64) -> PyResult<()> {
    std::fs::create_dir_all(&out_dir).map_err(|e| PyIOError::new_err(e.to_string()))?;
    for (i, img) in harness::synth_dataset(count, size, size, seed).iter().enumerate() {
        imaging::write_png(img, &out_dir.join(format!("synth_{i:03}.png"))).map_err(to_py_err)?;
    }
    Ok(())
}

#[pymodule]
fn tlsr_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(gaussian_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(anisotropic_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(transition_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(dot_ground_truth, m)?)?;
    m.add_function(wrap_pyfunction!(degrade_png, m)?)?;
    m.add_function(wrap_pyfunction!(bicubic_resize_png, m)?)?;
    m.add_function(wrap_pyfunction!(psnr_png, m)?)?;
    m.add_function(wrap_pyfunction!(ssim_png, m)?)?;
    m.add_function(wrap_pyfunction!(sr_png, m)?)?;
    m.add_function(wrap_pyfunction!(synth_dataset_png, m)?)?;
    Ok(())
}
