//! Python bindings. Tensors cross the boundary as flat column-major `f64` lists with their
//! dims; the `cfinr` Python package wraps them as numpy arrays.

use std::path::PathBuf;

use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use cfinr::metrics;
use cfinr::model::GridKind;
use cfinr::tasks::{AdmmConfig, FitResult, ObservationMask, TaskConfig};
use cfinr::{CfError, DenseTensor3};

fn to_py(e: CfError) -> PyErr {
    if e.is_io() {
        PyOSError::new_err(e.to_string())
    } else if e.is_numerical() {
        PyArithmeticError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

/// Dense third-order tensor, column-major (the first index varies fastest).
#[pyclass(name = "Tensor", module = "cfinr._native", from_py_object)]
#[derive(Clone)]
pub struct PyTensor {
    inner: DenseTensor3,
}

#[pymethods]
impl PyTensor {
    #[new]
    fn new(dims: [usize; 3], data: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: DenseTensor3::from_vec(dims, data).map_err(to_py)?,
        })
    }

    #[getter]
    fn dims(&self) -> [usize; 3] {
        self.inner.dims()
    }

    #[getter]
    fn data(&self) -> Vec<f64> {
        self.inner.data().to_vec()
    }

    fn get(&self, i: usize, j: usize, k: usize) -> PyResult<f64> {
        let [a, b, c] = self.inner.dims();
        if i >= a || j >= b || k >= c {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(self.inner.get(i, j, k))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        let [a, b, c] = self.inner.dims();
        format!("Tensor({a}x{b}x{c})")
    }
}

impl From<DenseTensor3> for PyTensor {
    fn from(inner: DenseTensor3) -> Self {
        Self { inner }
    }
}

#[pyfunction]
fn hwt(t: &PyTensor) -> PyResult<Vec<PyTensor>> {
    let b = cfinr::wavelet::hwt(&t.inner).map_err(to_py)?;
    Ok(b.blocks.into_iter().map(PyTensor::from).collect())
}

#[pyfunction]
fn ihwt(blocks: Vec<PyTensor>) -> PyResult<PyTensor> {
    let arr: [DenseTensor3; 4] = blocks
        .into_iter()
        .map(|b| b.inner)
        .collect::<Vec<_>>()
        .try_into()
        .map_err(|_| PyValueError::new_err("expected four blocks"))?;
    let b = cfinr::wavelet::WaveletBlocks::new(arr).map_err(to_py)?;
    Ok(cfinr::wavelet::ihwt(&b).map_err(to_py)?.into())
}

#[pyfunction]
fn psnr(reference: &PyTensor, estimate: &PyTensor) -> PyResult<f64> {
    metrics::psnr(&reference.inner, &estimate.inner).map_err(to_py)
}

#[pyfunction]
fn ssim(reference: &PyTensor, estimate: &PyTensor) -> PyResult<f64> {
    metrics::ssim(&reference.inner, &estimate.inner).map_err(to_py)
}

#[pyfunction]
fn nrmse(reference: &PyTensor, estimate: &PyTensor) -> PyResult<f64> {
    metrics::nrmse(&reference.inner, &estimate.inner).map_err(to_py)
}

#[pyfunction]
fn load_tensor(path: PathBuf) -> PyResult<PyTensor> {
    Ok(cfinr::io::load_any(&path).map_err(to_py)?.into())
}

#[pyfunction]
fn save_tensor(path: PathBuf, t: &PyTensor) -> PyResult<()> {
    cfinr::io::save_tensor(&path, &t.inner).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (dims, ranks, seed=0))]
fn smooth_tucker(dims: [usize; 3], ranks: [usize; 3], seed: u64) -> PyResult<PyTensor> {
    Ok(cfinr::synthetic::smooth_tucker(dims, ranks, seed).map_err(to_py)?.into())
}

#[pyfunction]
#[pyo3(signature = (n1, n2, n3, seed=0))]
fn textured_image(n1: usize, n2: usize, n3: usize, seed: u64) -> PyTensor {
    cfinr::synthetic::textured_image(n1, n2, n3, seed).into()
}

/// Boolean observation mask with exactly `round(sr * N)` observed entries.
#[pyfunction]
#[pyo3(signature = (dims, sr, seed=0))]
fn random_mask(dims: [usize; 3], sr: f64, seed: u64) -> PyResult<Vec<bool>> {
    Ok(cfinr::io::random_mask(dims, sr, seed).map_err(to_py)?.observed().to_vec())
}

/// Adds one of the five mixed-noise cases; returns `(noisy, mask or None)`.
#[pyfunction]
#[pyo3(signature = (clean, case, seed=0))]
fn add_noise(clean: &PyTensor, case: u8, seed: u64) -> PyResult<(PyTensor, Option<Vec<bool>>)> {
    let spec = cfinr::noise::NoiseSpec::case(case, seed).map_err(to_py)?;
    let nd = cfinr::noise::synthesize_noise(&clean.inner, &spec).map_err(to_py)?;
    Ok((nd.noisy.into(), nd.mask))
}

fn task_config(kw: Option<&Bound<'_, PyDict>>) -> PyResult<(TaskConfig, AdmmConfig)> {
    let mut c = TaskConfig::default();
    let mut a = AdmmConfig::default();
    let Some(kw) = kw else { return Ok((c, a)) };
    for (k, v) in kw.iter() {
        let key: String = k.extract()?;
        match key.as_str() {
            "lambda_x" => c.lambda_x = v.extract()?,
            "lambda_y" => c.lambda_y = v.extract()?,
            "mu" => c.mu = v.extract()?,
            "omega_z" => c.omega_z = v.extract()?,
            "rank_z" => c.rank_z = v.extract()?,
            "k" => c.k = v.extract()?,
            "cadence" => c.cadence = v.extract()?,
            "iters" => c.iters = v.extract()?,
            "width" => c.width = v.extract()?,
            "depth" => c.depth = v.extract()?,
            "seed" => c.seed = v.extract()?,
            "core_scale" => c.core_scale = v.extract()?,
            "lr" => c.adam.lr = v.extract()?,
            "lr_min" => c.adam.lr_min = v.extract()?,
            "weight_decay" => c.adam.weight_decay = v.extract()?,
            "history_every" => c.history_every = v.extract()?,
            "evolve" => {
                let on: bool = v.extract()?;
                c.evolve_ranks = on;
                c.evolve_omegas = on;
            }
            "grid" => {
                c.grid = match v.extract::<String>()?.as_str() {
                    "unit" => GridKind::UnitIndex,
                    "normalized" => GridKind::Normalized,
                    g => return Err(PyValueError::new_err(format!("grid must be unit or normalized, got {g}"))),
                }
            }
            "gamma1" => a.gamma1 = v.extract()?,
            "gamma2" => a.gamma2 = v.extract()?,
            "rho0" => a.rho0 = v.extract()?,
            "kappa" => a.kappa = v.extract()?,
            "outer" => a.outer = v.extract()?,
            "inner" => a.inner = v.extract()?,
            _ => return Err(PyValueError::new_err(format!("unknown option `{key}`"))),
        }
    }
    Ok((c, a))
}

fn mask_from(dims: [usize; 3], m: Option<Vec<bool>>) -> PyResult<Option<ObservationMask>> {
    m.map(|m| ObservationMask::new(dims, m)).transpose().map_err(to_py)
}

fn fit_dict<'py>(py: Python<'py>, r: FitResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("recovered", PyTensor::from(r.recovered))?;
    d.set_item("final_loss", r.final_loss)?;
    d.set_item("params", r.model.num_params())?;
    d.set_item("omegas", r.model.omegas().to_vec())?;
    d.set_item("ranks", r.model.ranks().to_vec())?;
    let h: Vec<(usize, f64, Option<f64>)> = r.history.iter().map(|h| (h.iter, h.loss, h.psnr)).collect();
    d.set_item("history", h)?;
    let ev: Vec<(usize, [f64; 4], [[usize; 2]; 4])> =
        r.events.iter().map(|e| (e.iter, e.omegas, e.ranks)).collect();
    d.set_item("events", ev)?;
    Ok(d)
}

/// Fits the representation to `data`; keyword options mirror the CLI keys.
#[pyfunction]
#[pyo3(signature = (data, reference=None, **kwargs))]
fn fit_regression<'py>(
    py: Python<'py>,
    data: &PyTensor,
    reference: Option<&PyTensor>,
    kwargs: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyDict>> {
    let (c, _) = task_config(kwargs)?;
    let reference = reference.map(|r| r.inner.clone());
    let r = py
        .detach(|| cfinr::tasks::fit_regression(&data.inner, &c, reference.as_ref()))
        .map_err(to_py)?;
    fit_dict(py, r)
}

/// Fits on the entries where `mask` is true and fills the rest.
#[pyfunction]
#[pyo3(signature = (data, mask, reference=None, **kwargs))]
fn fit_inpainting<'py>(
    py: Python<'py>,
    data: &PyTensor,
    mask: Vec<bool>,
    reference: Option<&PyTensor>,
    kwargs: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyDict>> {
    let (c, _) = task_config(kwargs)?;
    let m = mask_from(data.inner.dims(), Some(mask))?.expect("mask given");
    let reference = reference.map(|r| r.inner.clone());
    let r = py
        .detach(|| cfinr::tasks::fit_inpainting(&data.inner, &m, &c, reference.as_ref()))
        .map_err(to_py)?;
    fit_dict(py, r)
}

/// Mixed-noise removal; returns the recovered tensor, sparse part and per-outer records.
#[pyfunction]
#[pyo3(signature = (data, mask=None, reference=None, **kwargs))]
fn denoise<'py>(
    py: Python<'py>,
    data: &PyTensor,
    mask: Option<Vec<bool>>,
    reference: Option<&PyTensor>,
    kwargs: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyDict>> {
    let (c, a) = task_config(kwargs)?;
    let m = mask_from(data.inner.dims(), mask)?;
    let reference = reference.map(|r| r.inner.clone());
    let r = py
        .detach(|| cfinr::tasks::denoise_mixed(&data.inner, m.as_ref(), &c, &a, reference.as_ref()))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("recovered", PyTensor::from(r.recovered))?;
    d.set_item("sparse", PyTensor::from(r.state.s))?;
    d.set_item("omegas", r.model.omegas().to_vec())?;
    d.set_item("ranks", r.model.ranks().to_vec())?;
    let outer = PyList::empty(py);
    for o in &r.outer_history {
        let e = PyDict::new(py);
        e.set_item("outer", o.outer)?;
        e.set_item("rho", o.rho)?;
        e.set_item("residual", o.residual)?;
        e.set_item("inner_first", o.inner_first)?;
        e.set_item("inner_last", o.inner_last)?;
        e.set_item("sparse_nonzeros", o.sparse_nonzeros)?;
        outer.append(e)?;
    }
    d.set_item("outer_history", outer)?;
    Ok(d)
}

/// Runs the four bound-check campaigns; one dict per campaign.
#[pyfunction]
#[pyo3(signature = (trials=100, seed=0, tol=1e-8))]
fn verify<'py>(py: Python<'py>, trials: usize, seed: u64, tol: f64) -> PyResult<Bound<'py, PyList>> {
    use cfinr::theory;
    let campaigns = py
        .detach(|| -> cfinr::Result<_> {
            Ok([
                theory::smoothness_campaign(trials, seed)?,
                theory::laplacian_campaign(trials, seed.wrapping_add(1))?,
                theory::rank_campaign(trials, tol, seed.wrapping_add(2))?,
                theory::cfinr_campaign(trials, seed.wrapping_add(3))?,
            ])
        })
        .map_err(to_py)?;
    let out = PyList::empty(py);
    for c in campaigns {
        let d = PyDict::new(py);
        d.set_item("name", c.name)?;
        d.set_item("trials", c.trials)?;
        d.set_item("checks", c.checks)?;
        d.set_item("violations", c.violations)?;
        d.set_item("tightest_ratio", c.tightest_ratio)?;
        d.set_item("passed", c.passed())?;
        out.append(d)?;
    }
    Ok(out)
}

#[pymodule]
fn _native(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTensor>()?;
    m.add_function(wrap_pyfunction!(hwt, m)?)?;
    m.add_function(wrap_pyfunction!(ihwt, m)?)?;
    m.add_function(wrap_pyfunction!(psnr, m)?)?;
    m.add_function(wrap_pyfunction!(ssim, m)?)?;
    m.add_function(wrap_pyfunction!(nrmse, m)?)?;
    m.add_function(wrap_pyfunction!(load_tensor, m)?)?;
    m.add_function(wrap_pyfunction!(save_tensor, m)?)?;
    m.add_function(wrap_pyfunction!(smooth_tucker, m)?)?;
    m.add_function(wrap_pyfunction!(textured_image, m)?)?;
    m.add_function(wrap_pyfunction!(random_mask, m)?)?;
    m.add_function(wrap_pyfunction!(add_noise, m)?)?;
    m.add_function(wrap_pyfunction!(fit_regression, m)?)?;
    m.add_function(wrap_pyfunction!(fit_inpainting, m)?)?;
    m.add_function(wrap_pyfunction!(denoise, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
