//! A small reverse-mode autodiff tape over `f64` ndarrays.
//!
//! Every operation appends a node holding its value and a backward closure;
//! `Tape::backward` walks the nodes in reverse creation order (which is a
//! topological order) accumulating gradients. Single-threaded by design:
//! the whole crate trains and decodes deterministically.

use ndarray::{Array1, Array2, ArrayD, Axis, Ix1, Ix2, IxDyn};
use std::cell::RefCell;

type BackwardFn = Box<dyn Fn(&[&ArrayD<f64>], &ArrayD<f64>, &ArrayD<f64>) -> Vec<ArrayD<f64>>>;

struct Node {
    value: ArrayD<f64>,
    parents: Vec<usize>,
    backward: Option<BackwardFn>,
}

#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

/// Handle to a tape node. Cheap to copy; tied to its tape's lifetime.
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    idx: usize,
}

/// Gradients of a scalar root with respect to every node, indexed by node.
pub struct Grads {
    by_node: Vec<Option<ArrayD<f64>>>,
}

impl Grads {
    pub fn get(&self, v: Var<'_>) -> Option<&ArrayD<f64>> {
        self.by_node.get(v.idx).and_then(|g| g.as_ref())
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    fn push(&self, value: ArrayD<f64>, parents: Vec<usize>, backward: Option<BackwardFn>) -> usize {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value,
            parents,
            backward,
        });
        nodes.len() - 1
    }

    /// A leaf node (input or parameter); its gradient is retained.
    pub fn leaf(&self, value: ArrayD<f64>) -> Var<'_> {
        Var {
            tape: self,
            idx: self.push(value, vec![], None),
        }
    }

    pub fn leaf1(&self, value: Array1<f64>) -> Var<'_> {
        self.leaf(value.into_dyn())
    }

    pub fn leaf2(&self, value: Array2<f64>) -> Var<'_> {
        self.leaf(value.into_dyn())
    }

    pub fn scalar(&self, x: f64) -> Var<'_> {
        self.leaf(ArrayD::from_elem(IxDyn(&[]), x))
    }

    /// Reverse pass from a scalar root. Returns the gradient of the root
    /// with respect to every node created so far.
    pub fn backward(&self, root: Var<'_>) -> Grads {
        let nodes = self.nodes.borrow();
        assert_eq!(
            nodes[root.idx].value.len(),
            1,
            "backward root must be a scalar"
        );
        let mut grads: Vec<Option<ArrayD<f64>>> = vec![None; nodes.len()];
        grads[root.idx] = Some(ArrayD::from_elem(nodes[root.idx].value.raw_dim(), 1.0));
        for i in (0..=root.idx).rev() {
            let Some(grad) = grads[i].clone() else {
                continue;
            };
            let node = &nodes[i];
            let Some(backward) = &node.backward else {
                continue;
            };
            let parent_values: Vec<&ArrayD<f64>> =
                node.parents.iter().map(|&p| &nodes[p].value).collect();
            let contribs = backward(&parent_values, &node.value, &grad);
            debug_assert_eq!(contribs.len(), node.parents.len());
            for (&p, c) in node.parents.iter().zip(contribs) {
                match &mut grads[p] {
                    Some(g) => *g += &c,
                    slot => *slot = Some(c),
                }
            }
        }
        Grads { by_node: grads }
    }
}

fn as2(a: &ArrayD<f64>) -> ndarray::ArrayView2<'_, f64> {
    a.view().into_dimensionality::<Ix2>().expect("2-d value")
}

fn as1(a: &ArrayD<f64>) -> ndarray::ArrayView1<'_, f64> {
    a.view().into_dimensionality::<Ix1>().expect("1-d value")
}

/// Log-sum-exp of a slice, tolerating `-inf` entries (an all-`-inf` input
/// yields `-inf`, never NaN).
pub fn logsumexp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl<'t> Var<'t> {
    pub fn value(&self) -> ArrayD<f64> {
        self.tape.nodes.borrow()[self.idx].value.clone()
    }

    pub fn scalar_value(&self) -> f64 {
        let nodes = self.tape.nodes.borrow();
        let v = &nodes[self.idx].value;
        assert_eq!(v.len(), 1, "scalar_value on non-scalar");
        *v.iter().next().expect("non-empty")
    }

    pub fn shape(&self) -> Vec<usize> {
        self.tape.nodes.borrow()[self.idx].value.shape().to_vec()
    }

    fn unary(
        self,
        value: ArrayD<f64>,
        backward: impl Fn(&ArrayD<f64>, &ArrayD<f64>, &ArrayD<f64>) -> ArrayD<f64> + 'static,
    ) -> Var<'t> {
        let idx = self.tape.push(
            value,
            vec![self.idx],
            Some(Box::new(move |ps, out, g| vec![backward(ps[0], out, g)])),
        );
        Var {
            tape: self.tape,
            idx,
        }
    }

    fn binary(
        self,
        other: Var<'t>,
        value: ArrayD<f64>,
        backward: impl Fn(&ArrayD<f64>, &ArrayD<f64>, &ArrayD<f64>) -> (ArrayD<f64>, ArrayD<f64>)
            + 'static,
    ) -> Var<'t> {
        let idx = self.tape.push(
            value,
            vec![self.idx, other.idx],
            Some(Box::new(move |ps, _out, g| {
                let (ga, gb) = backward(ps[0], ps[1], g);
                vec![ga, gb]
            })),
        );
        Var {
            tape: self.tape,
            idx,
        }
    }

    pub fn add(self, other: Var<'t>) -> Var<'t> {
        let v = &self.value() + &other.value();
        self.binary(other, v, |_, _, g| (g.clone(), g.clone()))
    }

    pub fn sub(self, other: Var<'t>) -> Var<'t> {
        let v = &self.value() - &other.value();
        self.binary(other, v, |_, _, g| (g.clone(), -g))
    }

    pub fn mul(self, other: Var<'t>) -> Var<'t> {
        let v = &self.value() * &other.value();
        self.binary(other, v, |a, b, g| (g * b, g * a))
    }

    pub fn add_scalar(self, c: f64) -> Var<'t> {
        let v = &self.value() + c;
        self.unary(v, |_, _, g| g.clone())
    }

    pub fn mul_scalar(self, c: f64) -> Var<'t> {
        let v = &self.value() * c;
        self.unary(v, move |_, _, g| g * c)
    }

    pub fn neg(self) -> Var<'t> {
        self.mul_scalar(-1.0)
    }

    pub fn sigmoid(self) -> Var<'t> {
        let v = self.value().mapv(|x| {
            if x >= 0.0 {
                1.0 / (1.0 + (-x).exp())
            } else {
                let e = x.exp();
                e / (1.0 + e)
            }
        });
        self.unary(v, |_, out, g| g * &out.mapv(|y| y * (1.0 - y)))
    }

    pub fn tanh(self) -> Var<'t> {
        let v = self.value().mapv(f64::tanh);
        self.unary(v, |_, out, g| g * &out.mapv(|y| 1.0 - y * y))
    }

    pub fn relu(self) -> Var<'t> {
        let v = self.value().mapv(|x| x.max(0.0));
        self.unary(v, |x, _, g| g * &x.mapv(|x| if x > 0.0 { 1.0 } else { 0.0 }))
    }

    /// Matrix product `[m,k]·[k,n] -> [m,n]`.
    pub fn matmul(self, other: Var<'t>) -> Var<'t> {
        let v = as2(&self.value()).dot(&as2(&other.value())).into_dyn();
        self.binary(other, v, |a, b, g| {
            let (a, b, g) = (as2(a), as2(b), as2(g));
            (g.dot(&b.t()).into_dyn(), a.t().dot(&g).into_dyn())
        })
    }

    /// Matrix-vector product `[o,i]·[i] -> [o]`.
    pub fn matvec(self, x: Var<'t>) -> Var<'t> {
        let v = as2(&self.value()).dot(&as1(&x.value())).into_dyn();
        self.binary(x, v, |w, x, g| {
            let (w, x, g) = (as2(w), as1(x), as1(g));
            let mut gw = Array2::zeros((w.nrows(), w.ncols()));
            for i in 0..w.nrows() {
                for j in 0..w.ncols() {
                    gw[[i, j]] = g[i] * x[j];
                }
            }
            (gw.into_dyn(), w.t().dot(&g).into_dyn())
        })
    }

    /// Add a row vector `[d]` to every row of `[n,d]`.
    pub fn add_rowvec(self, v: Var<'t>) -> Var<'t> {
        let val = &as2(&self.value()) + &as1(&v.value());
        self.binary(v, val.into_dyn(), |_, _, g| {
            (g.clone(), as2(g).sum_axis(Axis(0)).into_dyn())
        })
    }

    /// Add a column vector `[r]` to every column of `[r,c]`.
    pub fn add_colvec(self, v: Var<'t>) -> Var<'t> {
        let m = as2(&self.value()).to_owned();
        let col = as1(&v.value()).to_owned();
        let mut val = m;
        for (i, mut row) in val.rows_mut().into_iter().enumerate() {
            row += col[i];
        }
        self.binary(v, val.into_dyn(), |_, _, g| {
            (g.clone(), as2(g).sum_axis(Axis(1)).into_dyn())
        })
    }

    pub fn transpose(self) -> Var<'t> {
        let v = as2(&self.value()).t().to_owned().into_dyn();
        self.unary(v, |_, _, g| as2(g).t().to_owned().into_dyn())
    }

    pub fn sum_all(self) -> Var<'t> {
        let v = ArrayD::from_elem(IxDyn(&[]), self.value().sum());
        self.unary(v, |x, _, g| {
            ArrayD::from_elem(x.raw_dim(), g[IxDyn(&[])])
        })
    }

    pub fn mean_all(self) -> Var<'t> {
        let n = self.value().len().max(1) as f64;
        self.sum_all().mul_scalar(1.0 / n)
    }

    /// Row `i` of a matrix as a 1-d vector.
    pub fn row(self, i: usize) -> Var<'t> {
        let v = as2(&self.value()).row(i).to_owned().into_dyn();
        self.unary(v, move |x, _, g| {
            let mut gx = ArrayD::zeros(x.raw_dim());
            let mut gx2 = gx.view_mut().into_dimensionality::<Ix2>().expect("2-d");
            gx2.row_mut(i).assign(&as1(g));
            gx
        })
    }

    /// Columns `a..b` of a matrix.
    pub fn slice_cols(self, a: usize, b: usize) -> Var<'t> {
        let v = as2(&self.value())
            .slice(ndarray::s![.., a..b])
            .to_owned()
            .into_dyn();
        self.unary(v, move |x, _, g| {
            let mut gx = ArrayD::zeros(x.raw_dim());
            gx.view_mut()
                .into_dimensionality::<Ix2>()
                .expect("2-d")
                .slice_mut(ndarray::s![.., a..b])
                .assign(&as2(g));
            gx
        })
    }

    /// Shift rows of `[n,d]` by `offset` with zero padding: row `t` of the
    /// result is row `t + offset` of the input when in range, else zero.
    pub fn shift_rows(self, offset: isize) -> Var<'t> {
        let x = as2(&self.value()).to_owned();
        let n = x.nrows() as isize;
        let mut v = Array2::zeros(x.raw_dim());
        for t in 0..n {
            let s = t + offset;
            if s >= 0 && s < n {
                v.row_mut(t as usize).assign(&x.row(s as usize));
            }
        }
        self.unary(v.into_dyn(), move |x, _, g| {
            let g = as2(g);
            let mut gx = Array2::zeros(as2(x).raw_dim());
            for t in 0..n {
                let s = t + offset;
                if s >= 0 && s < n {
                    let mut row = gx.row_mut(s as usize);
                    row += &g.row(t as usize);
                }
            }
            gx.into_dyn()
        })
    }

    /// Pick entry `[i]` of a vector as a scalar.
    pub fn pick1(self, i: usize) -> Var<'t> {
        let v = ArrayD::from_elem(IxDyn(&[]), as1(&self.value())[i]);
        self.unary(v, move |x, _, g| {
            let mut gx = ArrayD::zeros(x.raw_dim());
            gx[IxDyn(&[i])] = g[IxDyn(&[])];
            gx
        })
    }

    /// Pick entry `[i,j]` of a matrix as a scalar.
    pub fn pick(self, i: usize, j: usize) -> Var<'t> {
        let v = ArrayD::from_elem(IxDyn(&[]), as2(&self.value())[[i, j]]);
        self.unary(v, move |x, _, g| {
            let mut gx = ArrayD::zeros(x.raw_dim());
            gx[IxDyn(&[i, j])] = g[IxDyn(&[])];
            gx
        })
    }

    /// One entry per row: `out[i] = m[i, idx[i]]`.
    pub fn select_per_row(self, idx: &[usize]) -> Var<'t> {
        let m = as2(&self.value()).to_owned();
        assert_eq!(m.nrows(), idx.len());
        let v = Array1::from_iter(idx.iter().enumerate().map(|(i, &j)| m[[i, j]]));
        let idx = idx.to_vec();
        self.unary(v.into_dyn(), move |x, _, g| {
            let g = as1(g);
            let mut gx = ArrayD::zeros(x.raw_dim());
            let mut gx2 = gx.view_mut().into_dimensionality::<Ix2>().expect("2-d");
            for (i, &j) in idx.iter().enumerate() {
                gx2[[i, j]] += g[i];
            }
            gx
        })
    }

    /// Gather rows of an embedding table: `out[t] = table[ids[t]]`.
    pub fn gather_rows(self, ids: &[usize]) -> Var<'t> {
        let table = as2(&self.value()).to_owned();
        let mut v = Array2::zeros((ids.len(), table.ncols()));
        for (t, &i) in ids.iter().enumerate() {
            v.row_mut(t).assign(&table.row(i));
        }
        let ids = ids.to_vec();
        self.unary(v.into_dyn(), move |x, _, g| {
            let g = as2(g);
            let mut gx = ArrayD::zeros(x.raw_dim());
            let mut gx2 = gx.view_mut().into_dimensionality::<Ix2>().expect("2-d");
            for (t, &i) in ids.iter().enumerate() {
                let mut row = gx2.row_mut(i);
                row += &g.row(t);
            }
            gx
        })
    }

    /// Replace entries where `allowed` is false with `fill`; gradients only
    /// flow through allowed entries.
    pub fn mask_fill(self, allowed: &Array2<bool>, fill: f64) -> Var<'t> {
        let x = as2(&self.value()).to_owned();
        assert_eq!(x.shape(), allowed.shape());
        let mut v = x;
        for ((i, j), ok) in allowed.indexed_iter() {
            if !ok {
                v[[i, j]] = fill;
            }
        }
        let allowed = allowed.clone();
        self.unary(v.into_dyn(), move |_, _, g| {
            let g = as2(g);
            let mut gx = Array2::zeros(g.raw_dim());
            for ((i, j), ok) in allowed.indexed_iter() {
                if *ok {
                    gx[[i, j]] = g[[i, j]];
                }
            }
            gx.into_dyn()
        })
    }

    /// Vector variant of [`Var::mask_fill`].
    pub fn mask_fill1(self, allowed: &Array1<bool>, fill: f64) -> Var<'t> {
        let mut v = as1(&self.value()).to_owned();
        assert_eq!(v.len(), allowed.len());
        for (i, ok) in allowed.iter().enumerate() {
            if !ok {
                v[i] = fill;
            }
        }
        let allowed = allowed.clone();
        self.unary(v.into_dyn(), move |_, _, g| {
            let g = as1(g);
            let mut gx = Array1::zeros(g.len());
            for (i, ok) in allowed.iter().enumerate() {
                if *ok {
                    gx[i] = g[i];
                }
            }
            gx.into_dyn()
        })
    }

    /// Log-sum-exp over axis 0 of `[r,c] -> [c]`, stable for `-inf` entries.
    pub fn logsumexp_axis0(self) -> Var<'t> {
        let m = as2(&self.value()).to_owned();
        let v = Array1::from_iter((0..m.ncols()).map(|j| logsumexp(m.column(j).iter().copied())));
        self.unary(v.into_dyn(), |x, out, g| {
            let (x, out, g) = (as2(x), as1(out), as1(g));
            let mut gx = Array2::zeros(x.raw_dim());
            for j in 0..x.ncols() {
                if out[j] == f64::NEG_INFINITY {
                    continue;
                }
                for i in 0..x.nrows() {
                    let w = if x[[i, j]] == f64::NEG_INFINITY {
                        0.0
                    } else {
                        (x[[i, j]] - out[j]).exp()
                    };
                    gx[[i, j]] = g[j] * w;
                }
            }
            gx.into_dyn()
        })
    }

    /// Log-sum-exp of a vector to a scalar, stable for `-inf` entries.
    pub fn logsumexp_1d(self) -> Var<'t> {
        let x = as1(&self.value()).to_owned();
        let v = ArrayD::from_elem(IxDyn(&[]), logsumexp(x.iter().copied()));
        self.unary(v, |x, out, g| {
            let x = as1(x);
            let out = out[IxDyn(&[])];
            let g = g[IxDyn(&[])];
            let mut gx = Array1::zeros(x.len());
            if out != f64::NEG_INFINITY {
                for i in 0..x.len() {
                    if x[i] != f64::NEG_INFINITY {
                        gx[i] = g * (x[i] - out).exp();
                    }
                }
            }
            gx.into_dyn()
        })
    }

    /// Row-wise log-softmax of `[n,v]`.
    pub fn log_softmax_rows(self) -> Var<'t> {
        let x = as2(&self.value()).to_owned();
        let mut v = x.clone();
        for mut row in v.rows_mut() {
            let lse = logsumexp(row.iter().copied());
            row.mapv_inplace(|e| e - lse);
        }
        self.unary(v.into_dyn(), |_, out, g| {
            let (out, g) = (as2(out), as2(g));
            let mut gx = Array2::zeros(out.raw_dim());
            for i in 0..out.nrows() {
                let gsum: f64 = g.row(i).sum();
                for j in 0..out.ncols() {
                    gx[[i, j]] = g[[i, j]] - out[[i, j]].exp() * gsum;
                }
            }
            gx.into_dyn()
        })
    }

    /// Row-wise softmax of `[n,v]`, tolerating `-inf` entries (fully masked
    /// rows become all-zero rows).
    pub fn softmax_rows(self) -> Var<'t> {
        let x = as2(&self.value()).to_owned();
        let mut v = Array2::zeros(x.raw_dim());
        for (i, row) in x.rows().into_iter().enumerate() {
            let lse = logsumexp(row.iter().copied());
            if lse == f64::NEG_INFINITY {
                continue;
            }
            for j in 0..row.len() {
                if row[j] != f64::NEG_INFINITY {
                    v[[i, j]] = (row[j] - lse).exp();
                }
            }
        }
        self.unary(v.into_dyn(), |_, out, g| {
            let (y, g) = (as2(out), as2(g));
            let mut gx = Array2::zeros(y.raw_dim());
            for i in 0..y.nrows() {
                let dot: f64 = y.row(i).iter().zip(g.row(i)).map(|(a, b)| a * b).sum();
                for j in 0..y.ncols() {
                    gx[[i, j]] = y[[i, j]] * (g[[i, j]] - dot);
                }
            }
            gx.into_dyn()
        })
    }

    /// Row-wise layer normalization with learned gain and bias.
    pub fn layer_norm(self, gamma: Var<'t>, beta: Var<'t>, eps: f64) -> Var<'t> {
        let x = as2(&self.value()).to_owned();
        let gm = as1(&gamma.value()).to_owned();
        let bt = as1(&beta.value()).to_owned();
        let d = x.ncols() as f64;
        let mut v = Array2::zeros(x.raw_dim());
        for (i, row) in x.rows().into_iter().enumerate() {
            let mu = row.sum() / d;
            let var = row.iter().map(|e| (e - mu) * (e - mu)).sum::<f64>() / d;
            let sigma = (var + eps).sqrt();
            for j in 0..row.len() {
                v[[i, j]] = gm[j] * (row[j] - mu) / sigma + bt[j];
            }
        }
        let idx = self.tape.push(
            v.into_dyn(),
            vec![self.idx, gamma.idx, beta.idx],
            Some(Box::new(move |ps, _out, g| {
                let x = as2(ps[0]);
                let gm = as1(ps[1]);
                let g = as2(g);
                let d = x.ncols() as f64;
                let mut gx = Array2::zeros(x.raw_dim());
                let mut ggamma = Array1::zeros(gm.len());
                let mut gbeta = Array1::zeros(gm.len());
                for i in 0..x.nrows() {
                    let row = x.row(i);
                    let mu = row.sum() / d;
                    let var = row.iter().map(|e| (e - mu) * (e - mu)).sum::<f64>() / d;
                    let sigma = (var + eps).sqrt();
                    let xhat: Vec<f64> = row.iter().map(|e| (e - mu) / sigma).collect();
                    let dxhat: Vec<f64> =
                        (0..gm.len()).map(|j| g[[i, j]] * gm[j]).collect();
                    let mean_dxhat = dxhat.iter().sum::<f64>() / d;
                    let mean_dxhat_xhat = dxhat
                        .iter()
                        .zip(&xhat)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                        / d;
                    for j in 0..gm.len() {
                        gx[[i, j]] =
                            (dxhat[j] - mean_dxhat - xhat[j] * mean_dxhat_xhat) / sigma;
                        ggamma[j] += g[[i, j]] * xhat[j];
                        gbeta[j] += g[[i, j]];
                    }
                }
                vec![gx.into_dyn(), ggamma.into_dyn(), gbeta.into_dyn()]
            })),
        );
        Var {
            tape: self.tape,
            idx,
        }
    }
}

/// Concatenate matrices `[n,d_i]` along columns.
pub fn concat_cols<'t>(parts: &[Var<'t>]) -> Var<'t> {
    assert!(!parts.is_empty());
    let tape = parts[0].tape;
    let values: Vec<ArrayD<f64>> = parts.iter().map(|p| p.value()).collect();
    let views: Vec<_> = values.iter().map(|v| as2(v)).collect();
    let v = ndarray::concatenate(Axis(1), &views).expect("column concat");
    let widths: Vec<usize> = values.iter().map(|v| v.shape()[1]).collect();
    let idx = tape.push(
        v.into_dyn(),
        parts.iter().map(|p| p.idx).collect(),
        Some(Box::new(move |_, _, g| {
            let g = as2(g);
            let mut out = Vec::new();
            let mut at = 0;
            for &w in &widths {
                out.push(g.slice(ndarray::s![.., at..at + w]).to_owned().into_dyn());
                at += w;
            }
            out
        })),
    );
    Var { tape, idx }
}

/// Stack 1-d vectors `[d]` into a matrix `[n,d]`.
pub fn stack_rows<'t>(parts: &[Var<'t>]) -> Var<'t> {
    assert!(!parts.is_empty());
    let tape = parts[0].tape;
    let values: Vec<ArrayD<f64>> = parts.iter().map(|p| p.value()).collect();
    let d = values[0].len();
    let mut v = Array2::zeros((values.len(), d));
    for (i, val) in values.iter().enumerate() {
        v.row_mut(i).assign(&as1(val));
    }
    let idx = tape.push(
        v.into_dyn(),
        parts.iter().map(|p| p.idx).collect(),
        Some(Box::new(move |_, _, g| {
            let g = as2(g);
            (0..g.nrows())
                .map(|i| g.row(i).to_owned().into_dyn())
                .collect()
        })),
    );
    Var { tape, idx }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr1;
    use ndarray::arr2;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const H: f64 = 1e-5;
    const TOL: f64 = 1e-7;

    /// Finite-difference check of one op: perturbs every input entry.
    fn gradcheck(
        inputs: &[ArrayD<f64>],
        f: impl Fn(&Tape, &[Var<'_>]) -> f64 + Copy,
        build: impl for<'t> Fn(&'t Tape, &[Var<'t>]) -> Var<'t> + Copy,
    ) {
        let tape = Tape::new();
        let vars: Vec<Var<'_>> = inputs.iter().map(|x| tape.leaf(x.clone())).collect();
        let out = build(&tape, &vars);
        let loss = out.sum_all();
        let grads = tape.backward(loss);
        for (k, input) in inputs.iter().enumerate() {
            let analytic = grads
                .get(vars[k])
                .cloned()
                .unwrap_or_else(|| ArrayD::zeros(input.raw_dim()));
            for idx in ndarray::indices(input.shape()) {
                let mut plus = inputs.to_vec();
                plus[k][&idx] += H;
                let mut minus = inputs.to_vec();
                minus[k][&idx] -= H;
                let eval = |ins: &[ArrayD<f64>]| {
                    let t = Tape::new();
                    let vs: Vec<Var<'_>> = ins.iter().map(|x| t.leaf(x.clone())).collect();
                    f(&t, &vs)
                };
                let fd = (eval(&plus) - eval(&minus)) / (2.0 * H);
                let a = analytic[&idx];
                assert!(
                    (fd - a).abs() <= TOL * fd.abs().max(a.abs()).max(1.0),
                    "input {k} idx {idx:?}: fd {fd} vs analytic {a}"
                );
            }
        }
    }

    fn rand_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> ArrayD<f64> {
        Array2::from_shape_fn((r, c), |_| rng.random_range(-1.0..1.0)).into_dyn()
    }

    fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> ArrayD<f64> {
        Array1::from_shape_fn(n, |_| rng.random_range(-1.0..1.0)).into_dyn()
    }

    #[test]
    fn elementwise_ops_gradcheck() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = rand_mat(&mut rng, 3, 4);
        let b = rand_mat(&mut rng, 3, 4);
        gradcheck(
            &[a, b],
            |t, vs| {
                let o = vs[0].mul(vs[1]).add(vs[0]).sub(vs[1]).sigmoid().tanh();
                let _ = t;
                o.sum_all().scalar_value()
            },
            |_, vs| vs[0].mul(vs[1]).add(vs[0]).sub(vs[1]).sigmoid().tanh(),
        );
    }

    #[test]
    fn matmul_and_bias_gradcheck() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = rand_mat(&mut rng, 2, 3);
        let w = rand_mat(&mut rng, 3, 4);
        let b = rand_vec(&mut rng, 4);
        gradcheck(
            &[a, w, b],
            |_, vs| {
                vs[0]
                    .matmul(vs[1])
                    .add_rowvec(vs[2])
                    .relu()
                    .sum_all()
                    .scalar_value()
            },
            |_, vs| vs[0].matmul(vs[1]).add_rowvec(vs[2]).relu(),
        );
    }

    #[test]
    fn matvec_gradcheck() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = rand_mat(&mut rng, 4, 3);
        let x = rand_vec(&mut rng, 3);
        gradcheck(
            &[w, x],
            |_, vs| vs[0].matvec(vs[1]).tanh().sum_all().scalar_value(),
            |_, vs| vs[0].matvec(vs[1]).tanh(),
        );
    }

    #[test]
    fn structural_ops_gradcheck() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = rand_mat(&mut rng, 3, 4);
        let b = rand_mat(&mut rng, 3, 2);
        gradcheck(
            &[a, b],
            |_, vs| {
                let c = concat_cols(&[vs[0], vs[1]]);
                let r0 = c.row(0);
                let r2 = c.row(2);
                stack_rows(&[r0, r2])
                    .slice_cols(1, 5)
                    .shift_rows(1)
                    .transpose()
                    .sum_all()
                    .scalar_value()
            },
            |_, vs| {
                let c = concat_cols(&[vs[0], vs[1]]);
                let r0 = c.row(0);
                let r2 = c.row(2);
                stack_rows(&[r0, r2])
                    .slice_cols(1, 5)
                    .shift_rows(1)
                    .transpose()
            },
        );
    }

    #[test]
    fn softmax_ops_gradcheck() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = rand_mat(&mut rng, 3, 5);
        gradcheck(
            &[a.clone()],
            |_, vs| vs[0].log_softmax_rows().select_per_row(&[1, 0, 4]).sum_all().scalar_value(),
            |_, vs| vs[0].log_softmax_rows().select_per_row(&[1, 0, 4]),
        );
        gradcheck(
            &[a.clone()],
            |_, vs| vs[0].softmax_rows().mul(vs[0]).sum_all().scalar_value(),
            |_, vs| vs[0].softmax_rows().mul(vs[0]),
        );
        gradcheck(
            &[a],
            |_, vs| {
                vs[0]
                    .logsumexp_axis0()
                    .pick1(2)
                    .add(vs[0].row(1).logsumexp_1d())
                    .scalar_value()
            },
            |_, vs| vs[0].logsumexp_axis0().pick1(2).add(vs[0].row(1).logsumexp_1d()),
        );
    }

    #[test]
    fn gather_and_pick_gradcheck() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let table = rand_mat(&mut rng, 5, 3);
        gradcheck(
            &[table],
            |_, vs| {
                vs[0]
                    .gather_rows(&[4, 0, 0, 2])
                    .pick(1, 2)
                    .add(vs[0].gather_rows(&[1]).sum_all())
                    .scalar_value()
            },
            |_, vs| {
                vs[0]
                    .gather_rows(&[4, 0, 0, 2])
                    .pick(1, 2)
                    .add(vs[0].gather_rows(&[1]).sum_all())
            },
        );
    }

    #[test]
    fn layer_norm_gradcheck() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = rand_mat(&mut rng, 3, 4);
        let gamma = rand_vec(&mut rng, 4);
        let beta = rand_vec(&mut rng, 4);
        gradcheck(
            &[x, gamma, beta],
            |_, vs| {
                vs[0]
                    .layer_norm(vs[1], vs[2], 1e-5)
                    .tanh()
                    .sum_all()
                    .scalar_value()
            },
            |_, vs| vs[0].layer_norm(vs[1], vs[2], 1e-5).tanh(),
        );
    }

    #[test]
    fn mask_fill_blocks_gradient() {
        let tape = Tape::new();
        let x = tape.leaf2(arr2(&[[1.0, 2.0], [3.0, 4.0]]));
        let allowed = arr2(&[[true, false], [false, true]]);
        let masked = x.mask_fill(&allowed, f64::NEG_INFINITY);
        let loss = masked.logsumexp_axis0().logsumexp_1d();
        let grads = tape.backward(loss);
        let gx = grads.get(x).unwrap();
        assert!(gx[[0, 1].as_ref()] == 0.0 && gx[[1, 0].as_ref()] == 0.0);
        assert!(gx[[0, 0].as_ref()] > 0.0 && gx[[1, 1].as_ref()] > 0.0);
    }

    #[test]
    fn logsumexp_handles_all_masked() {
        assert_eq!(
            logsumexp([f64::NEG_INFINITY, f64::NEG_INFINITY].into_iter()),
            f64::NEG_INFINITY
        );
        let v = arr1(&[0.5, f64::NEG_INFINITY]);
        assert!((logsumexp(v.iter().copied()) - 0.5f64.exp().ln()).abs() < 1e-12);
    }

    #[test]
    fn backward_is_deterministic() {
        let run = || {
            let tape = Tape::new();
            let x = tape.leaf2(arr2(&[[0.3, -0.2], [0.1, 0.9]]));
            let w = tape.leaf2(arr2(&[[0.5, -1.0], [2.0, 0.25]]));
            let loss = x.matmul(w).sigmoid().sum_all();
            let grads = tape.backward(loss);
            (loss.scalar_value(), grads.get(w).unwrap().clone())
        };
        let (l1, g1) = run();
        let (l2, g2) = run();
        assert_eq!(l1, l2);
        assert_eq!(g1, g2);
    }
}
