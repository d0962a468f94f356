/// Orthonormal polynomial basis of degree `<= order` on the points
/// `0..len` of one segment.
///
/// The abscissa is mapped to `[-1, 1]` and the basis is built by a
/// Stieltjes-style recurrence (multiply the previous vector by the abscissa,
/// then orthogonalize twice against all earlier vectors), which stays well
/// conditioned for large segments and moderate orders.
#[derive(Debug, Clone)]
pub(crate) struct SegmentBasis {
    len: usize,
    order: usize,
    // row-major, (order + 1) x len
    q: Vec<f64>,
}

impl SegmentBasis {
    pub(crate) fn new(len: usize, order: usize) -> Self {
        assert!(
            len > order,
            "segment of {len} points cannot carry degree {order}"
        );
        let t: Vec<f64> = if len == 1 {
            vec![0.0]
        } else {
            let half = (len - 1) as f64 / 2.0;
            (0..len).map(|j| (j as f64 - half) / half).collect()
        };

        let mut q = vec![0.0; (order + 1) * len];
        let norm0 = 1.0 / (len as f64).sqrt();
        q[..len].iter_mut().for_each(|v| *v = norm0);

        let mut v = vec![0.0; len];
        for k in 1..=order {
            let (done, rest) = q.split_at_mut(k * len);
            let prev = &done[(k - 1) * len..];
            for j in 0..len {
                v[j] = t[j] * prev[j];
            }
            for _ in 0..2 {
                for i in 0..k {
                    let qi = &done[i * len..(i + 1) * len];
                    let dot: f64 = qi.iter().zip(&v).map(|(a, b)| a * b).sum();
                    v.iter_mut().zip(qi).for_each(|(x, a)| *x -= dot * a);
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            rest[..len]
                .iter_mut()
                .zip(&v)
                .for_each(|(dst, x)| *dst = x / norm);
        }
        Self { len, order, q }
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }

    fn row(&self, k: usize) -> &[f64] {
        &self.q[k * self.len..(k + 1) * self.len]
    }

    /// Writes `y - fit(y)` into `out`, where `fit` is the least-squares
    /// polynomial of degree `<= order`.
    pub(crate) fn residuals_into(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.len);
        out.copy_from_slice(y);
        for k in 0..=self.order {
            let qk = self.row(k);
            let c: f64 = qk.iter().zip(y).map(|(a, b)| a * b).sum();
            out.iter_mut().zip(qk).for_each(|(r, a)| *r -= c * a);
        }
    }
}
