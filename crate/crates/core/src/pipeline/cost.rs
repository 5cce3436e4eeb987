// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use super::{Inputs, OutputSpec, OutputValue, Predictor, PredictorError};
use crate::protocol::{InterfaceDescription, RequestValue};

/// Wraps a predictor and blocks after each prediction for
/// `fixed + per_megavoxel * (input voxels / 1e6)`, emulating the compute
/// time of a real model.
pub struct SimulatedCompute {
    inner: Arc<dyn Predictor>,
    fixed: Duration,
    per_megavoxel: Duration,
}

impl SimulatedCompute {
    pub fn new(inner: Arc<dyn Predictor>, fixed: Duration, per_megavoxel: Duration) -> Self {
        Self { inner, fixed, per_megavoxel }
    }

    pub fn cost(&self, inputs: &Inputs) -> Duration {
        let voxels: usize = inputs
            .values()
            .map(|v| match v {
                RequestValue::Volume(v) => v.voxel_count(),
                _ => 0,
            })
            .sum();
        self.fixed + self.per_megavoxel.mul_f64(voxels as f64 / 1e6)
    }
}

impl Predictor for SimulatedCompute {
    fn interface(&self) -> &InterfaceDescription {
        self.inner.interface()
    }

    fn outputs(&self) -> &[OutputSpec] {
        self.inner.outputs()
    }

    fn predict(&self, inputs: &Inputs) -> Result<BTreeMap<String, OutputValue>, PredictorError> {
        let out = self.inner.predict(inputs)?;
        std::thread::sleep(self.cost(inputs));
        Ok(out)
    }
}
