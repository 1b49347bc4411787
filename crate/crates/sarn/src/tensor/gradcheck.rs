use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::rng::Pcg32;
use crate::tensor::{GradBuffer, Graph, ParamSet, Var};

/// Coordinates checked per parameter group (or the whole group if smaller).
const COORDS_PER_GROUP: usize = 50;

/// Compares analytic gradients against central finite differences.
///
/// `forward` must rebuild the same scalar loss from the current parameter
/// values on every call. Each group is probed at up to [`COORDS_PER_GROUP`]
/// seed-chosen coordinates with symmetric perturbations of size `step`;
/// the return value is the worst relative error observed, with the
/// denominator floored at 1e-4 so near-zero gradient pairs compare absolutely.
pub fn grad_check<F>(params: &mut ParamSet, step: f32, seed: u64, mut forward: F) -> Result<f32>
where
    F: FnMut(&ParamSet, &mut Graph) -> Result<Var>,
{
    assert!(step > 0.0, "grad_check: step must be positive");
    let eval = |params: &ParamSet, forward: &mut F| -> Result<f64> {
        let mut g = Graph::new();
        let loss = forward(params, &mut g)?;
        if g.value(loss).numel() != 1 {
            return Err(Error::InvalidArgument(format!(
                "grad_check: forward produced non-scalar loss {:?}",
                g.value(loss).shape()
            )));
        }
        Ok(g.value(loss).item() as f64)
    };

    let analytic = {
        let mut g = Graph::new();
        let loss = forward(params, &mut g)?;
        let mut buf = GradBuffer::new(params);
        g.backward(loss, params, &mut buf)?;
        buf
    };

    let group_count = params.len();
    let mut max_rel = 0.0f64;
    for gi in 0..group_count {
        let id = crate::tensor::ParamId(gi);
        let numel = params.get(id).numel();
        let coords: Vec<usize> = if numel <= COORDS_PER_GROUP {
            (0..numel).collect()
        } else {
            let mut rng = Pcg32::new(seed, gi as u64);
            let mut seen = HashSet::new();
            let mut picks = Vec::with_capacity(COORDS_PER_GROUP);
            while picks.len() < COORDS_PER_GROUP {
                let c = rng.next_below(numel as u32) as usize;
                if seen.insert(c) {
                    picks.push(c);
                }
            }
            picks
        };

        for c in coords {
            let w0 = params.get(id).data()[c];
            params.get_mut(id).data_mut()[c] = w0 + step;
            let plus = eval(params, &mut forward)?;
            params.get_mut(id).data_mut()[c] = w0 - step;
            let minus = eval(params, &mut forward)?;
            params.get_mut(id).data_mut()[c] = w0;

            let numeric = (plus - minus) / (2.0 * step as f64);
            let a = analytic.get(id).map_or(0.0, |g| g[c]) as f64;
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-4);
            if rel > max_rel {
                max_rel = rel;
            }
        }
    }
    Ok(max_rel as f32)
}
