//! Central finite-difference verification of analytic gradients.

use crate::autograd::{Trace, Var};
use crate::tensor::ParamSet;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
    /// Analytic and numeric gradient at the worst entry.
    pub worst_values: (f64, f64),
    pub entries: usize,
}

/// Compare the trace gradient of `loss_fn` to (L(θ+ε) − L(θ−ε)) / 2ε for every
/// parameter entry. Relative error is |a − n| / max(1e-8, |a| + |n|).
///
/// `loss_fn` builds a fresh trace from the given parameters and returns the
/// scalar loss node. Existing gradients in `params` are cleared.
pub fn grad_check<F>(mut loss_fn: F, params: &mut ParamSet, epsilon: f64) -> Result<GradCheckReport>
where
    F: FnMut(&ParamSet, &mut Trace) -> Result<Var>,
{
    if !(1e-6..=1e-4).contains(&epsilon) {
        return Err(Error::Config(format!(
            "grad_check epsilon {epsilon} outside [1e-6, 1e-4]"
        )));
    }
    params.zero_grad();
    let mut tr = Trace::new();
    let loss = loss_fn(params, &mut tr)?;
    tr.backward(loss, params)?;

    let mut eval = |ps: &ParamSet| -> Result<f64> {
        let mut tr = Trace::new();
        let l = loss_fn(ps, &mut tr)?;
        Ok(tr.value(l).item())
    };

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        worst_values: (0.0, 0.0),
        entries: 0,
    };
    let mut probe = params.clone();
    for pi in 0..params.len() {
        let (name, t) = params.by_index(pi);
        let analytic = t.grad().map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; t.numel()]);
        for (j, &a) in analytic.iter().enumerate() {
            let orig = t.data()[j];
            probe.by_index_mut(pi).data_mut()[j] = orig + epsilon;
            let up = eval(&probe)?;
            probe.by_index_mut(pi).data_mut()[j] = orig - epsilon;
            let down = eval(&probe)?;
            probe.by_index_mut(pi).data_mut()[j] = orig;

            let numeric = (up - down) / (2.0 * epsilon);
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
            report.entries += 1;
            if rel > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = rel;
                report.worst = Some((name.to_string(), j));
                report.worst_values = (a, numeric);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;
    use rand::SeedableRng;

    #[test]
    fn quadratic() {
        let mut ps = ParamSet::new();
        ps.insert("theta", Tensor::scalar(3.0)).unwrap();
        let report = grad_check(
            |ps, tr| {
                let th = tr.param(ps, "theta")?;
                let sq = tr.mul(th, th)?;
                Ok(tr.scale(sq, 0.5))
            },
            &mut ps,
            1e-5,
        )
        .unwrap();
        assert_eq!(ps.get("theta").unwrap().grad().unwrap(), &[3.0]);
        assert!(report.max_rel_error < 1e-9, "{report:?}");
    }

    #[test]
    fn constant_loss_has_zero_gradients() {
        let mut ps = ParamSet::new();
        ps.insert("w", Tensor::row(vec![1.0, 2.0])).unwrap();
        let report = grad_check(|_, tr| Ok(tr.constant_row(&[4.2])), &mut ps, 1e-5).unwrap();
        assert!(ps.get("w").unwrap().grad().is_none());
        assert_eq!(report.max_rel_error, 0.0);
    }

    #[test]
    fn epsilon_range_enforced() {
        let mut ps = ParamSet::new();
        assert!(grad_check(|_, tr| Ok(tr.constant_row(&[0.0])), &mut ps, 1e-2).is_err());
    }

    /// Each op's backward rule against central differences.
    #[test]
    fn every_op_matches_finite_differences() {
        let mut rng = rand_pcg::Pcg64::seed_from_u64(3);
        let mut ps = ParamSet::new();
        ps.insert("a", Tensor::xavier(2, 3, &mut rng)).unwrap();
        ps.insert("b", Tensor::xavier(3, 4, &mut rng)).unwrap();
        ps.insert("bias", Tensor::xavier(1, 4, &mut rng)).unwrap();
        ps.insert("r", Tensor::xavier(1, 4, &mut rng)).unwrap();
        ps.insert("s", Tensor::xavier(1, 4, &mut rng)).unwrap();

        let report = grad_check(
            |ps, tr| {
                let a = tr.param(ps, "a")?;
                let b = tr.param(ps, "b")?;
                let bias = tr.param(ps, "bias")?;
                let r = tr.param(ps, "r")?;
                let s = tr.param(ps, "s")?;
                let ab = tr.matmul(a, b)?; // 2×4
                let ab = tr.add(ab, bias)?;
                let sm = tr.softmax_rows(ab);
                let t = tr.transpose(sm); // 4×2
                let rt = tr.matmul(r, t)?; // 1×2
                let sig = tr.sigmoid(rt);
                let th = tr.tanh(s);
                let c = tr.cos(s);
                let prod = tr.mul(th, c)?;
                let diff = tr.sub(prod, r)?;
                let shifted = tr.add_const(diff, 0.3);
                let re = tr.relu(shifted);
                let sum = tr.sum_of(&[re, r])?;
                let mean = tr.mean_of(&[sum, s])?;
                let cat = tr.concat_rows(&[sig, mean])?; // 1×6
                let stacked = tr.stack_rows(&[cat, cat])?; // 2×6
                let ones = tr.constant(Tensor::new(vec![6, 1], vec![0.5; 6])?);
                let col = tr.matmul(stacked, ones)?; // 2×1
                let colt = tr.transpose(col); // 1×2
                let half = tr.constant(Tensor::new(vec![2, 1], vec![0.7, -0.4])?);
                let logit = tr.matmul(colt, half)?;
                let logit = tr.scale(logit, 1.7);
                tr.bce_with_logits(logit, 1.0)
            },
            &mut ps,
            1e-6,
        )
        .unwrap();
        assert!(report.max_rel_error < 1e-6, "{report:?}");
    }
}
