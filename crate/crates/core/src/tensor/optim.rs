use super::{Gradients, ParamStore, Scalar, Tensor};
use crate::error::{Error, Result};

/// Adadelta accumulators, one pair per parameter.
#[derive(Clone, Debug)]
pub struct AdadeltaState<S> {
    pub rho: f64,
    pub eps: f64,
    sq_grad: Vec<Tensor<S>>,
    sq_delta: Vec<Tensor<S>>,
}

impl<S: Scalar> AdadeltaState<S> {
    pub fn new(params: &ParamStore<S>, rho: f64, eps: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) || eps <= 0.0 {
            return Err(Error::Config(format!("adadelta rho={rho} eps={eps}")));
        }
        let zeros: Vec<Tensor<S>> = params.iter().map(|(_, _, t)| Tensor::zeros(t.shape())).collect();
        Ok(AdadeltaState {
            rho,
            eps,
            sq_grad: zeros.clone(),
            sq_delta: zeros,
        })
    }

    pub fn sq_grad(&self) -> &[Tensor<S>] {
        &self.sq_grad
    }

    pub fn sq_delta(&self) -> &[Tensor<S>] {
        &self.sq_delta
    }

    /// One Adadelta update of every parameter in place.
    pub fn step(&mut self, params: &mut ParamStore<S>, grads: &Gradients<S>) -> Result<()> {
        if params.len() != self.sq_grad.len() || grads.len() != params.len() {
            return Err(Error::Dimension(format!(
                "adadelta: {} params, {} grads, {} accumulators",
                params.len(),
                grads.len(),
                self.sq_grad.len()
            )));
        }
        let rho = S::lit(self.rho);
        let one_minus = S::lit(1.0 - self.rho);
        let eps = S::lit(self.eps);
        for (i, (_, _, p)) in params.iter_mut().enumerate() {
            let g = grads.by_index(i);
            if g.shape() != p.shape() {
                return Err(Error::Dimension(format!(
                    "adadelta: grad {:?} vs param {:?}",
                    g.shape(),
                    p.shape()
                )));
            }
            let eg = self.sq_grad[i].data_mut();
            let ed = self.sq_delta[i].data_mut();
            for (j, x) in p.data_mut().iter_mut().enumerate() {
                let gj = g.data()[j];
                eg[j] = rho * eg[j] + one_minus * gj * gj;
                let delta = -((ed[j] + eps).sqrt() / (eg[j] + eps).sqrt()) * gj;
                ed[j] = rho * ed[j] + one_minus * delta * delta;
                *x = *x + delta;
            }
        }
        Ok(())
    }
}

/// Rescales `grads` so their global L2 norm is at most `max_norm`. Returns the
/// norm before clipping.
pub fn clip_global_norm<S: Scalar>(grads: &mut Gradients<S>, max_norm: f64) -> f64 {
    let norm = grads.global_norm();
    if max_norm > 0.0 && norm > max_norm {
        grads.scale(S::lit(max_norm / norm));
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_param(v: f64) -> ParamStore<f64> {
        let mut s = ParamStore::new();
        s.add("x", Tensor::vector(vec![v; 3]));
        s
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = one_param(0.7);
        let mut st = AdadeltaState::new(&p, 0.95, 1e-6).unwrap();
        let g = Gradients::zeros_like(&p);
        st.step(&mut p, &g).unwrap();
        assert_eq!(p.by_index(0).to_f64(), vec![0.7; 3]);
    }

    #[test]
    fn first_step_hand_trace() {
        let mut p = one_param(0.0);
        let mut st = AdadeltaState::new(&p, 0.95, 1e-6).unwrap();
        let mut g = Gradients::zeros_like(&p);
        g.by_index_mut(0).data_mut().fill(1.0);
        st.step(&mut p, &g).unwrap();
        let expected = -(1e-6f64).sqrt() / (0.05f64 + 1e-6).sqrt();
        assert!((expected + 0.004472).abs() < 1e-6);
        for v in p.by_index(0).to_f64() {
            assert!((v - expected).abs() < 1e-15);
        }
        assert!(st.sq_grad()[0].data().iter().all(|&v| v >= 0.0));
        assert!(st.sq_delta()[0].data().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn deterministic_steps() {
        let run = || {
            let mut p = one_param(0.3);
            let mut st = AdadeltaState::new(&p, 0.95, 1e-6).unwrap();
            let mut g = Gradients::zeros_like(&p);
            g.by_index_mut(0).data_mut().copy_from_slice(&[0.1, -0.2, 0.3]);
            st.step(&mut p, &g).unwrap();
            st.step(&mut p, &g).unwrap();
            p.by_index(0).to_f64()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn clipping_caps_norm() {
        let p = one_param(0.0);
        let mut g = Gradients::zeros_like(&p);
        g.by_index_mut(0).data_mut().copy_from_slice(&[3.0, 4.0, 0.0]);
        let before = clip_global_norm(&mut g, 1.0);
        assert!((before - 5.0).abs() < 1e-12);
        assert!((g.global_norm() - 1.0).abs() < 1e-12);
    }
}
