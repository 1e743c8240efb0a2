use super::{Bindings, GradError, Graph, NodeId};

/// Compares the analytic gradient of `loss` with respect to `leaf` against
/// central differences and returns the largest relative error.
///
/// Each element `x` is probed at `x ± h·(1 + |x|)`. The relative error of an
/// element is `|a − n| / max(|a|, |n|, 1e-8)`.
pub fn finite_diff_check(
    graph: &mut Graph,
    bindings: &Bindings,
    loss: NodeId,
    leaf: NodeId,
    h: f64,
) -> Result<f64, GradError> {
    if !(h > 0.0) {
        return Err(GradError::InvalidStep);
    }
    graph.forward(bindings, loss)?;
    let analytic = graph
        .backward(loss)?
        .take(leaf)
        .ok_or(GradError::NotALeaf { node: leaf })?;

    let mut probe = bindings.clone();
    let n = analytic.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let x = bindings.get(leaf).expect("leaf was bound").data()[i];
        let step = h * (1.0 + x.abs());
        let (xp, xm) = (x + step, x - step);
        let mut eval = |v: f64| -> Result<f64, GradError> {
            probe.get_mut(leaf).expect("leaf was bound").data_mut()[i] = v;
            let f = graph
                .forward(&probe, loss)
                .map_err(|_| GradError::NonFiniteProbe)?
                .data()[0];
            if f.is_finite() {
                Ok(f)
            } else {
                Err(GradError::NonFiniteProbe)
            }
        };
        let fp = eval(xp)?;
        let fm = eval(xm)?;
        probe.get_mut(leaf).expect("leaf was bound").data_mut()[i] = x;
        let numeric = (fp - fm) / (xp - xm);
        let a = analytic.data()[i];
        let denom = a.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((a - numeric).abs() / denom);
    }
    graph.forward(bindings, loss)?;
    Ok(worst)
}
