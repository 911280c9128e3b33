//! Python module `kpratio`: domains, concave functions, norms, bounds,
//! the ratio search and the property suites.
//!
//! Reports come back as plain dicts and lists; infinite values are floats.

use kpratio::bounds::{bound_report as core_bound_report, k1_upper_bound as core_k1_upper_bound};
use kpratio::concave::{concave_envelope, tent_function, ConcaveFunction, FunctionSpec};
use kpratio::geometry::presets;
use kpratio::norms::{lp_directional_norm, ratio as core_ratio, scanline_l1_norm};
use kpratio::search::{estimate_kp_lower, family_table as core_family_table, Family};
use kpratio::verify::{run_suite, Suite};
use kpratio::{ext, ConvexDomain, Direction, Point};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyFloat, PyList, PyString};
use serde_json::Value;

fn err(e: kpratio::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.into_any()
            } else if let Some(u) = n.as_u64() {
                u.into_pyobject(py)?.into_any()
            } else {
                PyFloat::new(py, n.as_f64().unwrap_or(f64::NAN)).into_any()
            }
        }
        Value::String(s) => match ext::parse(s) {
            Some(x) if x.is_infinite() => PyFloat::new(py, x).into_any(),
            _ => PyString::new(py, s).into_any(),
        },
        Value::Array(a) => {
            let l = PyList::empty(py);
            for x in a {
                l.append(to_py(py, x)?)?;
            }
            l.into_any()
        }
        Value::Object(o) => {
            let d = PyDict::new(py);
            for (k, x) in o {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn report<'py, T: serde::Serialize>(py: Python<'py>, t: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(t).map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py(py, &v)
}

/// Strictly convex polygon.
#[pyclass(name = "Domain", module = "kpratio", frozen)]
struct PyDomain {
    inner: ConvexDomain,
}

#[pymethods]
impl PyDomain {
    #[new]
    fn new(vertices: Vec<(f64, f64)>) -> PyResult<Self> {
        let pts = vertices.into_iter().map(|(x, y)| Point::new(x, y)).collect();
        Ok(PyDomain { inner: ConvexDomain::new(pts).map_err(err)? })
    }

    /// `disc` (regular `n`-gon), `square`, `diamond`, `triangle` or `parallelogram`.
    #[staticmethod]
    #[pyo3(signature = (name, n = 512))]
    fn preset(name: &str, n: usize) -> PyResult<Self> {
        Ok(PyDomain { inner: presets::by_name(name, n).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(PyDomain { inner: ConvexDomain::from_json(s).map_err(err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn vertices(&self) -> Vec<(f64, f64)> {
        self.inner.vertices().iter().map(|p| (p.x, p.y)).collect()
    }

    fn area(&self) -> f64 {
        self.inner.area()
    }

    /// Distance between the two support lines parallel to the direction at
    /// `angle_deg`.
    fn width(&self, angle_deg: f64) -> f64 {
        self.inner.width(Direction::from_degrees(angle_deg))
    }

    /// `(w_x, w_y)`.
    fn circumscribed_rectangle(&self) -> (f64, f64) {
        self.inner.circumscribed_rectangle()
    }

    /// `(w_max, w_min)`.
    fn width_extremes(&self) -> (f64, f64) {
        let w = self.inner.width_extremes();
        (w.w_max, w.w_min)
    }

    /// Whether the left and right vertical support lines are angular.
    fn vertical_support(&self) -> (bool, bool) {
        let v = self.inner.vertical_support_classification();
        (v.left_angular, v.right_angular)
    }

    fn max_boundary_slope(&self) -> f64 {
        self.inner.max_boundary_slope()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Domain({} vertices)", self.inner.len())
    }
}

/// Piecewise linear concave function vanishing on the boundary (or a tent
/// with a boundary jump).
#[pyclass(name = "ConcaveFunction", module = "kpratio", frozen)]
struct PyConcave {
    inner: ConcaveFunction,
}

#[pymethods]
impl PyConcave {
    /// Least concave function vanishing on the boundary and at least `h` at
    /// each `(x, y, h)`.
    #[staticmethod]
    fn envelope(domain: PyRef<'_, PyDomain>, constraints: Vec<(f64, f64, f64)>) -> PyResult<Self> {
        let cs: Vec<(Point, f64)> = constraints.into_iter().map(|(x, y, h)| (Point::new(x, y), h)).collect();
        Ok(PyConcave { inner: concave_envelope(&domain.inner, &cs).map_err(err)? })
    }

    /// Constant `height` along the chord `cd`, linear across the domain.
    #[staticmethod]
    fn tent(domain: PyRef<'_, PyDomain>, c: (f64, f64), d: (f64, f64), height: f64) -> PyResult<Self> {
        let f = tent_function(&domain.inner, Point::new(c.0, c.1), Point::new(d.0, d.1), height).map_err(err)?;
        Ok(PyConcave { inner: f })
    }

    /// Builds a function from its JSON description (as found in estimate
    /// witnesses and counterexamples).
    #[staticmethod]
    fn from_spec(domain: PyRef<'_, PyDomain>, spec_json: &str) -> PyResult<Self> {
        let spec = FunctionSpec::from_json(spec_json).map_err(err)?;
        Ok(PyConcave { inner: spec.build(&domain.inner).map_err(err)? })
    }

    fn evaluate(&self, x: f64, y: f64) -> PyResult<f64> {
        self.inner.evaluate(Point::new(x, y)).map_err(err)
    }

    /// `(M, (x, y))`.
    fn max_value(&self) -> (f64, (f64, f64)) {
        let (m, p) = self.inner.max_value();
        (m, (p.x, p.y))
    }

    /// `‖u_h‖_p` for the direction at `angle_deg`; `p` may be `float("inf")`.
    #[pyo3(signature = (p, angle_deg = 0.0))]
    fn norm(&self, p: f64, angle_deg: f64) -> PyResult<f64> {
        Ok(lp_directional_norm(&self.inner, p, Direction::from_degrees(angle_deg)).map_err(err)?.value)
    }

    #[pyo3(signature = (angle_deg = 0.0, n_lines = 4096))]
    fn scanline_l1(&self, angle_deg: f64, n_lines: usize) -> PyResult<f64> {
        Ok(scanline_l1_norm(&self.inner, Direction::from_degrees(angle_deg), n_lines).map_err(err)?.value)
    }

    #[pyo3(signature = (p, h1 = 0.0, h2 = 90.0))]
    fn ratio(&self, p: f64, h1: f64, h2: f64) -> PyResult<f64> {
        core_ratio(&self.inner, p, Direction::from_degrees(h1), Direction::from_degrees(h2)).map_err(err)
    }

    fn is_concave(&self) -> bool {
        self.inner.is_concave(1e-9)
    }

    #[getter]
    fn n_facets(&self) -> usize {
        self.inner.facets().len()
    }

    #[getter]
    fn domain(&self) -> PyDomain {
        PyDomain { inner: self.inner.domain().clone() }
    }

    fn __repr__(&self) -> String {
        format!("ConcaveFunction({} facets)", self.inner.facets().len())
    }
}

/// One-dimensional Poincaré constant `C_p`, `p` in `(1, inf)`.
#[pyfunction]
#[pyo3(signature = (p, cells = kpratio::poincare::DEFAULT_CELLS))]
fn poincare_constant(p: f64, cells: usize) -> PyResult<f64> {
    kpratio::poincare::poincare_constant_with(p, cells).map_err(err)
}

/// `(bound, certificate)` for `sup ‖u_x‖₁ / ‖u_y‖₁`.
#[pyfunction]
fn k1_upper_bound(domain: PyRef<'_, PyDomain>) -> (f64, bool) {
    let c = core_k1_upper_bound(&domain.inner);
    (c.bound, c.certificate)
}

#[pyfunction]
fn bound_report<'py>(py: Python<'py>, domain: PyRef<'_, PyDomain>, p: f64) -> PyResult<Bound<'py, PyAny>> {
    report(py, &core_bound_report(&domain.inner, p).map_err(err)?)
}

/// Seeded search for a lower estimate of `sup ‖u_h1‖_p / ‖u_h2‖_p`.
#[pyfunction]
#[pyo3(signature = (domain, p, h1 = 0.0, h2 = 90.0, budget = 200, seed = 42))]
fn estimate<'py>(
    py: Python<'py>,
    domain: PyRef<'_, PyDomain>,
    p: f64,
    h1: f64,
    h2: f64,
    budget: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let (d1, d2) = (Direction::from_degrees(h1), Direction::from_degrees(h2));
    let e = estimate_kp_lower(&domain.inner, p, d1, d2, budget, seed).map_err(err)?;
    report(py, &e)
}

/// Rows `{parameter, norm_h1, norm_h2, ratio}` for `u-phi-eps`, `u-omega` or
/// `u-omega-vertical`.
#[pyfunction]
#[pyo3(signature = (domain, family, p, params = None, phi_deg = 45.0))]
fn family_table<'py>(
    py: Python<'py>,
    domain: PyRef<'_, PyDomain>,
    family: &str,
    p: f64,
    params: Option<Vec<f64>>,
    phi_deg: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let fam: Family = family.parse().map_err(err)?;
    let params = params.unwrap_or_else(|| fam.default_parameters().to_vec());
    let rows = core_family_table(&domain.inner, fam, p, &params, phi_deg.to_radians()).map_err(err)?;
    report(py, &rows)
}

/// Runs one property suite on the seeded corpus.
#[pyfunction]
#[pyo3(signature = (suite, cases = kpratio::verify::DEFAULT_CASES, seed = 42, tol = kpratio::verify::DEFAULT_ORACLE_TOL))]
fn verify<'py>(py: Python<'py>, suite: &str, cases: usize, seed: u64, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let s: Suite = suite.parse().map_err(err)?;
    report(py, &run_suite(s, cases, seed, tol))
}

#[pymodule]
#[pyo3(name = "kpratio")]
fn kpratio_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDomain>()?;
    m.add_class::<PyConcave>()?;
    m.add_function(wrap_pyfunction!(poincare_constant, m)?)?;
    m.add_function(wrap_pyfunction!(k1_upper_bound, m)?)?;
    m.add_function(wrap_pyfunction!(bound_report, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(family_table, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
