//! Answerer model: a question LSTM, a category embedding and the target's
//! spatial vector feed an MLP over {Yes, No, NA}.

use rand::Rng;

use crate::data::record::{Answer, GameRecord};
use crate::data::spatial::{encode_spatial, SpatialVec};
use crate::data::vocab::Vocab;
use crate::error::{Error, Result};
use crate::neuro::{
    argmax, glorot, lstm_encode, mlp_apply, register_mlp, softmax_slice, Activation, Dense, Graph, LstmState,
    LstmWeights, ParamId, ParamStore, Scalar, Var,
};
use crate::profile::OracleDims;

#[derive(Clone, Debug, PartialEq)]
pub struct Oracle<T: Scalar> {
    pub store: ParamStore<T>,
    pub dims: OracleDims,
    emb: ParamId,
    lstm: LstmWeights,
    cat: ParamId,
    mlp: Vec<Dense>,
}

/// One supervised example: question tokens about the target, the answer.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleSample {
    pub tokens: Vec<usize>,
    pub category_id: usize,
    pub spatial: SpatialVec,
    pub answer: Answer,
}

impl<T: Scalar> Oracle<T> {
    pub fn new<R: Rng>(dims: OracleDims, rng: &mut R) -> Self {
        let mut store = ParamStore::new();
        let emb = store.add("oracle.word_emb", glorot(rng, dims.vocab, dims.word_emb));
        let lstm = LstmWeights::register(&mut store, "oracle.lstm", dims.word_emb, dims.hidden, rng);
        let cat = store.add("oracle.cat_emb", glorot(rng, dims.n_categories, dims.cat_emb));
        let mlp = register_mlp(
            &mut store,
            "oracle.mlp",
            &[dims.hidden + dims.cat_emb + 8, dims.mlp_hidden, 3],
            Activation::Identity,
            rng,
        );
        Self {
            store,
            dims,
            emb,
            lstm,
            cat,
            mlp,
        }
    }

    pub fn cast<U: Scalar>(&self) -> Oracle<U> {
        Oracle {
            store: self.store.cast(),
            dims: self.dims,
            emb: self.emb,
            lstm: self.lstm,
            cat: self.cat,
            mlp: self.mlp.clone(),
        }
    }

    /// Answer logits recorded on `g`, which must be built over `self.store`.
    pub fn logits(&self, g: &mut Graph<'_, T>, tokens: &[usize], category_id: usize, spatial: &SpatialVec) -> Result<Var> {
        if tokens.is_empty() {
            return Err(Error::Argument("oracle question has no tokens".into()));
        }
        let start = LstmState::zeros(self.dims.hidden).to_vars(g);
        let q = lstm_encode(g, self.emb, &self.lstm, tokens, None, start)?;
        let c = g.row(self.cat, category_id)?;
        let s = g.input(spatial.0.iter().map(|&v| T::lit(v)).collect());
        let x = g.concat(&[q.h, c, s]);
        mlp_apply(g, x, &self.mlp)
    }

    pub fn sample_loss(&self, g: &mut Graph<'_, T>, s: &OracleSample) -> Result<Var> {
        let logits = self.logits(g, &s.tokens, s.category_id, &s.spatial)?;
        g.softmax_cross_entropy(logits, s.answer.index(), T::one())
    }

    /// Probabilities over (Yes, No, NA).
    pub fn forward(&self, tokens: &[usize], category_id: usize, spatial: &SpatialVec) -> Result<[T; 3]> {
        let mut g = Graph::new(&self.store);
        let l = self.logits(&mut g, tokens, category_id, spatial)?;
        let p = softmax_slice(g.value(l))?;
        Ok([p[0], p[1], p[2]])
    }

    pub fn answer(&self, tokens: &[usize], category_id: usize, spatial: &SpatialVec) -> Result<Answer> {
        Ok(answer_from_probs(&self.forward(tokens, category_id, spatial)?))
    }
}

/// One sample per question/answer pair, about the game's target.
pub fn oracle_samples(games: &[GameRecord], vocab: &Vocab) -> Result<Vec<OracleSample>> {
    let mut out = Vec::new();
    for g in games {
        let t = g.target().ok_or_else(|| Error::Integrity {
            game_id: g.game_id,
            message: "target missing".into(),
        })?;
        let spatial = encode_spatial(&t.bbox, g.image.width as f64, g.image.height as f64)?;
        for qa in &g.qas {
            let tokens = vocab.encode(&qa.question);
            if tokens.is_empty() {
                continue;
            }
            out.push(OracleSample {
                tokens,
                category_id: t.category_id,
                spatial,
                answer: qa.answer,
            });
        }
    }
    Ok(out)
}

/// Argmax with ties resolved in the order Yes, No, NA.
pub fn answer_from_probs<T: Scalar>(p: &[T; 3]) -> Answer {
    Answer::from_index(argmax(p).unwrap_or(0)).expect("three-way argmax")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::record::BBox;
    use crate::profile::Profile;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small() -> Oracle<f64> {
        let dims = OracleDims {
            vocab: 12,
            n_categories: 5,
            word_emb: 4,
            hidden: 5,
            cat_emb: 3,
            mlp_hidden: 6,
        };
        Oracle::new(dims, &mut ChaCha8Rng::seed_from_u64(3))
    }

    fn sp() -> SpatialVec {
        encode_spatial(&BBox { x: 10.0, y: 20.0, w: 30.0, h: 40.0 }, 100.0, 100.0).unwrap()
    }

    #[test]
    fn zero_weights_give_uniform_and_yes() {
        let mut o = small();
        o.store.zero_all();
        let p = o.forward(&[7, 8, 9], 2, &sp()).unwrap();
        for v in p {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(o.answer(&[7], 2, &sp()).unwrap(), Answer::Yes);
    }

    #[test]
    fn tie_break_and_argmax() {
        assert_eq!(answer_from_probs(&[0.2, 0.7, 0.1]), Answer::No);
        assert_eq!(answer_from_probs(&[0.4, 0.4, 0.2]), Answer::Yes);
        assert_eq!(answer_from_probs(&[0.1, 0.4, 0.4]), Answer::No);
    }

    #[test]
    fn output_is_distribution_and_deterministic() {
        let o = small();
        let a = o.forward(&[7, 3, 11], 4, &sp()).unwrap();
        let b = o.forward(&[7, 3, 11], 4, &sp()).unwrap();
        assert_eq!(a, b);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(a.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn unknown_category_is_index_error() {
        let o = small();
        assert!(matches!(o.forward(&[7], 5, &sp()), Err(Error::Index { .. })));
        assert!(matches!(o.forward(&[], 1, &sp()), Err(Error::Argument(_))));
    }

    #[test]
    fn toy_dims() {
        let o: Oracle<f32> = Oracle::new(Profile::Toy.oracle(20, 11), &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(o.store.get(o.mlp[0].w).cols(), 64 + 16 + 8);
        assert_eq!(o.store.get(o.mlp[1].w).rows(), 3);
    }
}
