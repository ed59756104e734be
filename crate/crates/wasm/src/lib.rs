//! WebAssembly entry points for the demo page in `www/`.
//!
//! Each export is a thin wrapper around a plain function so the logic can
//! be tested natively.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution, Normal};
use serde::Serialize;
use softval::curves::{self, CurveOptions, CurvePoint};
use softval::measures::{self, Measure};
use softval::membership::{HardeningRule, MembershipMatrix, Tolerances, World};
use softval::operators::{self, AndOperator};
use softval::regression::{self, DeviationCaps};
use softval::Result;
use wasm_bindgen::prelude::*;

const CLASSES: usize = 3;

fn js(e: softval::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Rows of `[p, strong, product, weak]` for `steps + 1` predictions in `[0, 1]`.
pub fn operator_table(r: f64, steps: usize) -> Result<Vec<f64>> {
    let steps = steps.max(1);
    let mut out = Vec::with_capacity(4 * (steps + 1));
    for i in 0..=steps {
        let p = i as f64 / steps as f64;
        out.push(p);
        for op in AndOperator::ALL {
            out.push(operators::zf(op, r, p)?);
        }
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn operator_curves(r: f64, steps: usize) -> std::result::Result<Vec<f64>, JsError> {
    operator_table(r, steps).map_err(js)
}

/// Rows of `[wMAE, min wRMSE, max wRMSE]` from zero to the largest
/// attainable sensitivity-weighted MAE for these reference memberships.
pub fn envelope_table(reference: &[f64], steps: usize) -> Result<Vec<f64>> {
    let steps = steps.max(1);
    let caps = regression::deviation_caps(reference);
    let weight: f64 = reference.iter().sum();
    let max_mae = reference.iter().zip(&caps).map(|(w, c)| w * c).sum::<f64>() / weight;
    let soft = DeviationCaps::for_sensitivity(reference);
    let mut out = Vec::with_capacity(3 * (steps + 1));
    for i in 0..=steps {
        let mae = max_mae * i as f64 / steps as f64;
        let bounds = regression::mae_rmse_bounds(mae, &soft)?;
        out.extend([mae, bounds.min, bounds.max]);
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn rmse_envelope(reference: Vec<f64>, steps: usize) -> std::result::Result<Vec<f64>, JsError> {
    envelope_table(&reference, steps).map_err(js)
}

#[derive(Debug, Serialize)]
pub struct WorkingPoint {
    pub spec: Option<f64>,
    pub sens: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct CurveDemo {
    pub curve: Vec<CurvePoint>,
    /// Product-operator measures of the soft predictions.
    pub soft: WorkingPoint,
    /// After winner-takes-all hardening.
    pub wta: WorkingPoint,
    /// After hardening with threshold 1/3.
    pub third: WorkingPoint,
}

fn simulate(seed: u32, n: usize, noise: f64) -> Result<(MembershipMatrix, MembershipMatrix)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
    let dirichlet = Dirichlet::new([1.0; CLASSES]).expect("positive parameters");
    let noise = Normal::new(0.0, noise.clamp(0.0, 1.0)).expect("finite deviation");
    let mut reference = Vec::with_capacity(n);
    let mut prediction = Vec::with_capacity(n);
    for _ in 0..n {
        let posterior: [f64; CLASSES] = dirichlet.sample(&mut rng);
        let u: f64 = rng.random();
        let mut label = CLASSES - 1;
        let mut cumulative = 0.0;
        for (c, q) in posterior.iter().enumerate() {
            cumulative += q;
            if u < cumulative {
                label = c;
                break;
            }
        }
        let mut row = vec![0.0; CLASSES];
        row[label] = 1.0;
        reference.push(row);
        let noisy: Vec<f64> = posterior
            .iter()
            .map(|q| (q + noise.sample(&mut rng)).clamp(0.0, 1.0))
            .collect();
        let total: f64 = noisy.iter().sum();
        prediction.push(if total > 0.0 {
            noisy.iter().map(|v| v / total).collect()
        } else {
            vec![1.0 / CLASSES as f64; CLASSES]
        });
    }
    let names: Vec<String> = ["A", "B", "C"].iter().map(|s| s.to_string()).collect();
    Ok((
        MembershipMatrix::validate(&reference, names.clone(), World::Closed, Tolerances::default())?,
        MembershipMatrix::validate(&prediction, names, World::Closed, Tolerances::default())?,
    ))
}

fn working_point(r: &MembershipMatrix, p: &MembershipMatrix) -> Result<WorkingPoint> {
    Ok(WorkingPoint {
        spec: measures::measure(r, p, Measure::Spec, 0, AndOperator::Product)?.value,
        sens: measures::measure(r, p, Measure::Sens, 0, AndOperator::Product)?.value,
    })
}

/// Simulated three-class data with gradual transitions: the threshold curve
/// of class A plus soft and hardened working points.
pub fn curve_demo(seed: u32, n: usize, noise: f64) -> Result<CurveDemo> {
    let (r, p) = simulate(seed, n.max(1), noise)?;
    Ok(CurveDemo {
        curve: curves::spec_sens_curve(&r, &p, 0, None, CurveOptions::default())?,
        soft: working_point(&r, &p)?,
        wta: working_point(&r, &p.harden(&HardeningRule::winner_takes_all())?)?,
        third: working_point(&r, &p.harden(&HardeningRule::reciprocal_threshold(CLASSES)?)?)?,
    })
}

/// [`curve_demo`] as JSON.
#[wasm_bindgen]
pub fn threshold_demo(seed: u32, n: usize, noise: f64) -> std::result::Result<String, JsError> {
    let demo = curve_demo(seed, n, noise).map_err(js)?;
    serde_json::to_string(&demo).map_err(|e| JsError::new(&e.to_string()))
}
