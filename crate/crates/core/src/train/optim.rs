use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam { beta1: f32, beta2: f32, eps: f32 },
    Sgd,
}

impl OptimizerKind {
    pub const fn adam() -> Self {
        OptimizerKind::Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl Default for OptimizerKind {
    fn default() -> Self {
        Self::adam()
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "adam" => Ok(Self::adam()),
            "sgd" => Ok(OptimizerKind::Sgd),
            other => Err(Error::Parse(format!("unknown optimizer '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    pub step: u64,
    first: Vec<Vec<f32>>,
    second: Vec<Vec<f32>>,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, block_sizes: &[usize]) -> Self {
        let zeros = || block_sizes.iter().map(|&n| vec![0.0; n]).collect();
        match kind {
            OptimizerKind::Adam { .. } => OptimizerState { kind, step: 0, first: zeros(), second: zeros() },
            OptimizerKind::Sgd => OptimizerState { kind, step: 0, first: vec![], second: vec![] },
        }
    }
}

pub fn optimizer_step(
    state: &mut OptimizerState,
    params: &mut [&mut [f32]],
    grads: &[Vec<f32>],
    learning_rate: f32,
) -> Result<()> {
    if params.len() != grads.len() || params.iter().zip(grads).any(|(p, g)| p.len() != g.len()) {
        return Err(Error::ShapeMismatch("parameter and gradient blocks differ".into()));
    }
    state.step += 1;
    match state.kind {
        OptimizerKind::Sgd => {
            for (p, g) in params.iter_mut().zip(grads) {
                for (w, &d) in p.iter_mut().zip(g) {
                    *w -= learning_rate * d;
                }
            }
        }
        OptimizerKind::Adam { beta1, beta2, eps } => {
            if state.first.len() != params.len() || state.first.iter().zip(params.iter()).any(|(m, p)| m.len() != p.len()) {
                return Err(Error::ShapeMismatch("optimizer state does not match parameters".into()));
            }
            let t = state.step as i32;
            let c1 = 1.0 - (beta1 as f64).powi(t);
            let c2 = 1.0 - (beta2 as f64).powi(t);
            let step = (learning_rate as f64 * c2.sqrt() / c1) as f32;
            let eps_hat = (eps as f64 * c2.sqrt()) as f32;
            for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(state.first.iter_mut().zip(state.second.iter_mut())) {
                for i in 0..p.len() {
                    let d = g[i];
                    m[i] = beta1 * m[i] + (1.0 - beta1) * d;
                    v[i] = beta2 * v[i] + (1.0 - beta2) * d * d;
                    p[i] -= step * m[i] / (v[i].sqrt() + eps_hat);
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgd_arithmetic() {
        let mut st = OptimizerState::new(OptimizerKind::Sgd, &[1]);
        let mut p = vec![1.0f32];
        optimizer_step(&mut st, &mut [&mut p[..]], &[vec![0.0]], 0.1).unwrap();
        assert_eq!(p, vec![1.0]);
        optimizer_step(&mut st, &mut [&mut p[..]], &[vec![1.0]], 0.1).unwrap();
        assert_eq!(p, vec![0.9]);
    }

    #[test]
    fn adam_minimises_quadratic_bowl() {
        let mut w = [1.5f32, -0.7, 0.3, 2.0];
        let mut st = OptimizerState::new(OptimizerKind::adam(), &[4]);
        for step in 0..500 {
            let g: Vec<f32> = w.iter().map(|&x| 2.0 * x).collect();
            // decays the step size so the iterate settles instead of orbiting
            let lr = 0.05 * (1.0 - step as f32 / 500.0);
            optimizer_step(&mut st, &mut [&mut w[..]], &[g], lr).unwrap();
        }
        let norm = w.iter().map(|x| x * x).sum::<f32>().sqrt();
        assert!(norm < 1e-3, "norm {norm}");
    }

    #[test]
    fn mismatched_blocks() {
        let mut st = OptimizerState::new(OptimizerKind::adam(), &[2]);
        let mut p = [0.0f32; 3];
        assert!(optimizer_step(&mut st, &mut [&mut p[..]], &[vec![0.0; 3]], 0.1).is_err());
        assert!(optimizer_step(&mut st, &mut [&mut p[..]], &[vec![0.0; 2]], 0.1).is_err());
    }
}
