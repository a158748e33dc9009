use rand::Rng;

use crate::error::{Error, Result};
use crate::neuro::graph::{Activation, Graph, ParamId, ParamStore, Var};
use crate::neuro::scalar::Scalar;
use crate::neuro::tensor::Tensor;

/// Uniform Glorot initialisation in `[-a, a]`, `a = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot<T: Scalar, R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Tensor<T> {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| T::lit(rng.random_range(-a..a))).collect();
    Tensor::matrix(rows, cols, data).expect("non-empty glorot matrix")
}

/// One affine layer followed by an activation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dense {
    pub w: ParamId,
    pub b: ParamId,
    pub act: Activation,
}

impl Dense {
    pub fn register<T: Scalar, R: Rng>(
        store: &mut ParamStore<T>,
        name: &str,
        input: usize,
        output: usize,
        act: Activation,
        rng: &mut R,
    ) -> Self {
        let w = store.add(format!("{name}.w"), glorot(rng, output, input));
        let b = store.add(format!("{name}.b"), Tensor::zeros(&[output]));
        Self { w, b, act }
    }

    pub fn output_width<T: Scalar>(&self, store: &ParamStore<T>) -> usize {
        store.get(self.w).rows()
    }
}

/// Registers a stack of dense layers with the given widths; the final layer
/// uses `last`, all others relu.
pub fn register_mlp<T: Scalar, R: Rng>(
    store: &mut ParamStore<T>,
    name: &str,
    widths: &[usize],
    last: Activation,
    rng: &mut R,
) -> Vec<Dense> {
    let n = widths.len() - 1;
    (0..n)
        .map(|i| {
            let act = if i + 1 == n { last } else { Activation::Relu };
            Dense::register(store, &format!("{name}.{i}"), widths[i], widths[i + 1], act, rng)
        })
        .collect()
}

/// Applies a stack of dense layers.
pub fn mlp_apply<T: Scalar>(g: &mut Graph<'_, T>, x: Var, layers: &[Dense]) -> Result<Var> {
    let mut h = x;
    for (i, layer) in layers.iter().enumerate() {
        let w = g.store().get(layer.w);
        if w.shape().len() != 2 || w.cols() != g.len_of(h) {
            return Err(Error::dim(
                format!("mlp layer {i} ({})", g.store().name(layer.w)),
                format!("input width {}", if w.shape().len() == 2 { w.cols() } else { 0 }),
                g.len_of(h),
            ));
        }
        let z = g.linear(layer.w, Some(layer.b), h)?;
        h = g.activate(z, layer.act);
    }
    Ok(h)
}

/// Looks up row `id` of an embedding table.
pub fn embedding_lookup<T: Scalar>(g: &mut Graph<'_, T>, table: ParamId, id: usize) -> Result<Var> {
    g.row(table, id)
}

/// LSTM weights in the standard 4-gate layout: one `4H x (I + H)` matrix
/// over `[x ; h]` with gate blocks ordered input, forget, candidate, output.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LstmWeights {
    pub w: ParamId,
    pub b: ParamId,
    pub input: usize,
    pub hidden: usize,
}

impl LstmWeights {
    /// Glorot weights, zero biases except the forget gate at 1.0.
    pub fn register<T: Scalar, R: Rng>(
        store: &mut ParamStore<T>,
        name: &str,
        input: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        let w = store.add(format!("{name}.w"), glorot(rng, 4 * hidden, input + hidden));
        let mut bias = Tensor::zeros(&[4 * hidden]);
        bias.data_mut()[hidden..2 * hidden].iter_mut().for_each(|v| *v = T::one());
        let b = store.add(format!("{name}.b"), bias);
        Self { w, b, input, hidden }
    }
}

/// Recurrent state as graph nodes.
#[derive(Clone, Copy, Debug)]
pub struct LstmVars {
    pub h: Var,
    pub c: Var,
}

/// Recurrent state held outside any graph.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmState<T> {
    pub h: Tensor<T>,
    pub c: Tensor<T>,
}

impl<T: Scalar> LstmState<T> {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            h: Tensor::zeros(&[hidden]),
            c: Tensor::zeros(&[hidden]),
        }
    }

    pub fn hidden(&self) -> usize {
        self.h.len()
    }

    /// Places the state on a graph as constant inputs.
    pub fn to_vars(&self, g: &mut Graph<'_, T>) -> LstmVars {
        LstmVars {
            h: g.input(self.h.data().to_vec()),
            c: g.input(self.c.data().to_vec()),
        }
    }

    pub fn from_vars(g: &Graph<'_, T>, vars: LstmVars) -> Self {
        Self {
            h: Tensor::vector(g.value(vars.h).to_vec()),
            c: Tensor::vector(g.value(vars.c).to_vec()),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.h.is_finite() && self.c.is_finite()
    }
}

/// One LSTM transition:
/// `c' = f * c + i * g`, `h' = o * tanh(c')`.
pub fn lstm_step<T: Scalar>(g: &mut Graph<'_, T>, x: Var, state: LstmVars, w: &LstmWeights) -> Result<LstmVars> {
    let hsz = w.hidden;
    if g.len_of(x) != w.input {
        return Err(Error::dim(format!("lstm {} input", g.store().name(w.w)), w.input, g.len_of(x)));
    }
    if g.len_of(state.h) != hsz || g.len_of(state.c) != hsz {
        return Err(Error::dim(
            format!("lstm {} state", g.store().name(w.w)),
            hsz,
            format!("h={} c={}", g.len_of(state.h), g.len_of(state.c)),
        ));
    }
    let xh = g.concat(&[x, state.h]);
    let z = g.linear(w.w, Some(w.b), xh)?;
    let zi = g.slice(z, 0, hsz)?;
    let zf = g.slice(z, hsz, hsz)?;
    let zg = g.slice(z, 2 * hsz, hsz)?;
    let zo = g.slice(z, 3 * hsz, hsz)?;
    let i = g.sigmoid(zi);
    let f = g.sigmoid(zf);
    let cand = g.tanh(zg);
    let o = g.sigmoid(zo);
    let keep = g.mul(f, state.c)?;
    let write = g.mul(i, cand)?;
    let c = g.add(keep, write)?;
    let tc = g.tanh(c);
    let h = g.mul(o, tc)?;
    Ok(LstmVars { h, c })
}

/// Eager single step outside a caller-managed graph.
pub fn lstm_step_eager<T: Scalar>(
    store: &ParamStore<T>,
    w: &LstmWeights,
    x: &[T],
    state: &LstmState<T>,
) -> Result<LstmState<T>> {
    let mut g = Graph::new(store);
    let xv = g.input(x.to_vec());
    let s = state.to_vars(&mut g);
    let out = lstm_step(&mut g, xv, s, w)?;
    Ok(LstmState::from_vars(&g, out))
}

/// Runs an LSTM over embedded tokens, optionally concatenating a fixed
/// vector to every input embedding.
pub fn lstm_encode<T: Scalar>(
    g: &mut Graph<'_, T>,
    emb: ParamId,
    w: &LstmWeights,
    tokens: &[usize],
    extra: Option<Var>,
    mut state: LstmVars,
) -> Result<LstmVars> {
    for &t in tokens {
        let e = g.row(emb, t)?;
        let x = match extra {
            Some(v) => g.concat(&[e, v]),
            None => e,
        };
        state = lstm_step(g, x, state, w)?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_dense(w: &[&[f64]], b: &[f64], act: Activation) -> (ParamStore<f64>, Dense) {
        let mut store = ParamStore::new();
        let wid = store.add("l.w", Tensor::from_rows(w).unwrap());
        let bid = store.add("l.b", Tensor::from_f64(b));
        (store, Dense { w: wid, b: bid, act })
    }

    #[test]
    fn mlp_identity_and_relu() {
        let (store, d) = single_dense(&[&[1.0, 0.0], &[0.0, 1.0]], &[0.0, 0.0], Activation::Identity);
        let mut g = Graph::new(&store);
        let x = g.input(vec![1.0, 2.0]);
        let y = mlp_apply(&mut g, x, &[d]).unwrap();
        assert_eq!(g.value(y), &[1.0, 2.0]);

        let (store, d) = single_dense(&[&[1.0, 1.0]], &[0.0], Activation::Relu);
        let mut g = Graph::new(&store);
        let x = g.input(vec![1.0, -1.0]);
        let y = mlp_apply(&mut g, x, &[d]).unwrap();
        assert_eq!(g.value(y), &[0.0]);
    }

    #[test]
    fn mlp_tanh_reference() {
        let (store, d) = single_dense(&[&[2.0, 0.0], &[0.0, 2.0]], &[0.1, 0.1], Activation::Tanh);
        let mut g = Graph::new(&store);
        let x = g.input(vec![0.5, 0.5]);
        let y = mlp_apply(&mut g, x, &[d]).unwrap();
        // tanh(1.1) = 0.80049902176...
        for &v in g.value(y) {
            assert!((v - 0.800_499_021_760_629_7).abs() < 1e-12);
        }
    }

    #[test]
    fn mlp_shape_error_names_layer() {
        let (store, d) = single_dense(&[&[1.0, 0.0, 0.0]], &[0.0], Activation::Identity);
        let mut g = Graph::new(&store);
        let x = g.input(vec![1.0, 2.0]);
        let err = mlp_apply(&mut g, x, &[d]).unwrap_err().to_string();
        assert!(err.contains("mlp layer 0") && err.contains("l.w"), "{err}");
    }

    #[test]
    fn embedding_row_and_gradient() {
        let mut store = ParamStore::<f64>::new();
        let t = store.add("emb", Tensor::from_rows(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]).unwrap());
        let mut g = Graph::new(&store);
        let r = embedding_lookup(&mut g, t, 1).unwrap();
        assert_eq!(g.value(r), &[3.0, 4.0]);
        let r0 = embedding_lookup(&mut g, t, 0).unwrap();
        assert_eq!(g.value(r0), &[1.0, 2.0]);
        let s = g.sum(r);
        let bw = g.backward(s).unwrap();
        assert_eq!(bw.params.get(t), &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        assert!(matches!(embedding_lookup(&mut g, t, 3), Err(Error::Index { .. })));
    }

    fn zero_lstm(input: usize, hidden: usize) -> (ParamStore<f64>, LstmWeights) {
        let mut store = ParamStore::new();
        let w = store.add("lstm.w", Tensor::zeros(&[4 * hidden, input + hidden]));
        let b = store.add("lstm.b", Tensor::zeros(&[4 * hidden]));
        (store, LstmWeights { w, b, input, hidden })
    }

    #[test]
    fn lstm_zero_weights() {
        let (store, w) = zero_lstm(3, 1);
        let s = lstm_step_eager(&store, &w, &[0.3, -2.0, 7.0], &LstmState::zeros(1)).unwrap();
        assert_eq!(s.h.data(), &[0.0]);
        assert_eq!(s.c.data(), &[0.0]);

        let init = LstmState {
            h: Tensor::from_f64(&[0.0]),
            c: Tensor::from_f64(&[1.0]),
        };
        let s = lstm_step_eager(&store, &w, &[1.0, 1.0, 1.0], &init).unwrap();
        assert_eq!(s.c.data(), &[0.5]);
        assert!((s.h.data()[0] - 0.5 * 0.5f64.tanh()).abs() < 1e-15);
        assert!((s.h.data()[0] - 0.2311).abs() < 1e-4);
    }

    #[test]
    fn lstm_rejects_wrong_input() {
        let (store, w) = zero_lstm(3, 2);
        assert!(matches!(
            lstm_step_eager(&store, &w, &[1.0], &LstmState::zeros(2)),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn forget_bias_starts_at_one() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let mut store = ParamStore::<f32>::new();
        let w = LstmWeights::register(&mut store, "l", 2, 3, &mut rng);
        assert_eq!(store.get(w.b).data(), &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let a = (6.0f32 / (12.0 + 5.0)).sqrt();
        assert!(store.get(w.w).data().iter().all(|v| v.abs() <= a));
    }
}
