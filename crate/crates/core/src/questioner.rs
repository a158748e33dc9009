//! Questioner submodels. QGen is a recurrent language model over the
//! dialogue conditioned on projected image features; the Guesser encodes
//! the dialogue and scores candidates by a dot product with per-object
//! embeddings. Their recurrent states are what the decider consumes.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::features::FeatureTable;
use crate::data::record::{Answer, GameRecord, ObjectInfo};
use crate::data::spatial::{encode_spatial, SpatialVec};
use crate::data::vocab::{self, answer_token, Vocab};
use crate::error::{Error, Result};
use crate::neuro::{
    glorot, lstm_encode, mlp_apply, register_mlp, softmax_slice, Activation, Dense, Graph, LstmState, LstmVars,
    LstmWeights, ParamId, ParamStore, Scalar, Var,
};
use crate::profile::{GuesserDims, QGenDims};

/// A candidate object as the Guesser sees it.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub id: i64,
    pub category_id: usize,
    pub spatial: SpatialVec,
}

pub fn candidates(game: &GameRecord) -> Result<Vec<Candidate>> {
    game.objects
        .iter()
        .map(|o| candidate(o, game))
        .collect()
}

fn candidate(o: &ObjectInfo, game: &GameRecord) -> Result<Candidate> {
    Ok(Candidate {
        id: o.id,
        category_id: o.category_id,
        spatial: encode_spatial(&o.bbox, game.image.width as f64, game.image.height as f64)?,
    })
}

/// Flat history: question tokens followed by one answer token per pair.
pub fn history_tokens(qas: &[(Vec<usize>, Answer)]) -> Vec<usize> {
    qas.iter()
        .flat_map(|(q, a)| q.iter().copied().chain(std::iter::once(answer_token(*a))))
        .collect()
}

fn to_scalars<T: Scalar>(v: &[f32]) -> Vec<T> {
    v.iter().map(|&x| T::lit(x as f64)).collect()
}

// ---------------------------------------------------------------- QGen

#[derive(Clone, Debug, PartialEq)]
pub struct QGen<T: Scalar> {
    pub store: ParamStore<T>,
    pub dims: QGenDims,
    emb: ParamId,
    proj: ParamId,
    lstm: LstmWeights,
    out: Dense,
}

/// One dialogue as a training stream: `inputs[k]` is fed at step `k` and
/// `targets[k]` is the token to predict after it, if any.
#[derive(Clone, Debug, PartialEq)]
pub struct QGenSample {
    pub features: Vec<f32>,
    pub inputs: Vec<usize>,
    pub targets: Vec<Option<usize>>,
}

impl QGenSample {
    /// `[sos, q1.., a1, q2.., a2, ...]`; every question is followed by an
    /// eos target, every answer token predicts the next question's first
    /// token, and nothing is predicted after the final answer.
    pub fn from_dialogue(features: Vec<f32>, questions: &[(Vec<usize>, Answer)]) -> Self {
        let mut inputs = vec![vocab::SOS];
        let mut targets = Vec::new();
        for (q, a) in questions {
            for &tok in q {
                targets.push(Some(tok));
                inputs.push(tok);
            }
            targets.push(Some(vocab::EOS));
            inputs.push(answer_token(*a));
        }
        targets.push(None);
        Self {
            features,
            inputs,
            targets,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DecodeMode {
    Greedy,
    Sample { temperature: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecodeConfig {
    pub mode: DecodeMode,
    pub max_len: usize,
    /// Emitted when decoding produces no token at all.
    pub fallback: usize,
}

impl DecodeConfig {
    pub fn greedy(vocab: &Vocab, max_len: usize) -> Self {
        Self {
            mode: DecodeMode::Greedy,
            max_len,
            fallback: vocab.id("?"),
        }
    }
}

impl<T: Scalar> QGen<T> {
    pub fn new<R: Rng>(dims: QGenDims, rng: &mut R) -> Self {
        let mut store = ParamStore::new();
        let emb = store.add("qgen.word_emb", glorot(rng, dims.vocab, dims.word_emb));
        let proj = store.add("qgen.img_proj", glorot(rng, dims.proj, dims.feature_dim));
        let lstm = LstmWeights::register(&mut store, "qgen.lstm", dims.word_emb + dims.proj, dims.hidden, rng);
        let out = Dense::register(&mut store, "qgen.out", dims.hidden, dims.vocab, Activation::Identity, rng);
        Self {
            store,
            dims,
            emb,
            proj,
            lstm,
            out,
        }
    }

    pub fn cast<U: Scalar>(&self) -> QGen<U> {
        QGen {
            store: self.store.cast(),
            dims: self.dims,
            emb: self.emb,
            proj: self.proj,
            lstm: self.lstm,
            out: self.out,
        }
    }

    fn project(&self, g: &mut Graph<'_, T>, features: &[T]) -> Result<Var> {
        if features.len() != self.dims.feature_dim {
            return Err(Error::dim("qgen image features", self.dims.feature_dim, features.len()));
        }
        let f = g.input(features.to_vec());
        g.linear(self.proj, None, f)
    }

    fn run(&self, g: &mut Graph<'_, T>, features: &[T], tokens: &[usize], state: &LstmState<T>) -> Result<LstmVars> {
        let p = self.project(g, features)?;
        let s = state.to_vars(g);
        lstm_encode(g, self.emb, &self.lstm, tokens, Some(p), s)
    }

    /// Consumes `tokens` starting from `state`.
    pub fn advance(&self, state: &LstmState<T>, features: &[T], tokens: &[usize]) -> Result<LstmState<T>> {
        if tokens.is_empty() {
            return Ok(state.clone());
        }
        let mut g = Graph::new(&self.store);
        let s = self.run(&mut g, features, tokens, state)?;
        Ok(LstmState::from_vars(&g, s))
    }

    /// State after `sos` followed by the flat history tokens.
    pub fn encode(&self, features: &[T], history: &[usize]) -> Result<LstmState<T>> {
        let mut toks = Vec::with_capacity(history.len() + 1);
        toks.push(vocab::SOS);
        toks.extend_from_slice(history);
        self.advance(&LstmState::zeros(self.dims.hidden), features, &toks)
    }

    /// Next-token logits given a hidden vector.
    pub fn next_logits(&self, h: &[T]) -> Result<Vec<T>> {
        let mut g = Graph::new(&self.store);
        let x = g.input(h.to_vec());
        let l = mlp_apply(&mut g, x, std::slice::from_ref(&self.out))?;
        Ok(g.value(l).to_vec())
    }

    /// Decodes one question. Returns its tokens (without eos) and the state
    /// after consuming them.
    pub fn generate(
        &self,
        state: &LstmState<T>,
        features: &[T],
        cfg: &DecodeConfig,
        seed: u64,
    ) -> Result<(Vec<usize>, LstmState<T>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut st = state.clone();
        let mut out = Vec::new();
        while out.len() < cfg.max_len {
            let mut logits = self.next_logits(st.h.data())?;
            for banned in [vocab::PAD, vocab::SOS, vocab::YES, vocab::NO, vocab::NA] {
                if banned < logits.len() {
                    logits[banned] = T::neg_infinity();
                }
            }
            let tok = match cfg.mode {
                DecodeMode::Greedy => crate::neuro::argmax(&logits).unwrap_or(vocab::EOS),
                DecodeMode::Sample { temperature } => {
                    let t = T::lit(temperature.max(1e-6));
                    let scaled: Vec<T> = logits.iter().map(|&l| l / t).collect();
                    let p = softmax_slice(&scaled)?;
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut pick = crate::neuro::argmax(&p).unwrap_or(vocab::EOS);
                    for (i, &pi) in p.iter().enumerate() {
                        acc += pi.to_f64_lossy();
                        if u < acc {
                            pick = i;
                            break;
                        }
                    }
                    pick
                }
            };
            if tok == vocab::EOS {
                break;
            }
            out.push(tok);
            st = self.advance(&st, features, &[tok])?;
        }
        if out.is_empty() {
            out.push(cfg.fallback);
            st = self.advance(&st, features, &out)?;
        }
        Ok((out, st))
    }

    /// Mean token negative log-likelihood over the stream.
    pub fn sample_loss(&self, g: &mut Graph<'_, T>, s: &QGenSample) -> Result<Var> {
        let feats: Vec<T> = to_scalars(&s.features);
        let p = self.project(g, &feats)?;
        let mut state = LstmState::zeros(self.dims.hidden).to_vars(g);
        let mut terms = Vec::new();
        for (&tok, target) in s.inputs.iter().zip(&s.targets) {
            state = lstm_encode(g, self.emb, &self.lstm, &[tok], Some(p), state)?;
            if let Some(t) = *target {
                let l = mlp_apply(g, state.h, std::slice::from_ref(&self.out))?;
                terms.push(g.softmax_cross_entropy(l, t, T::one())?);
            }
        }
        let n = terms.len();
        let total = g.add_scalars(&terms)?;
        Ok(g.scale(total, T::one() / T::lit(n as f64)))
    }
}

// ------------------------------------------------------------- Guesser

#[derive(Clone, Debug, PartialEq)]
pub struct Guesser<T: Scalar> {
    pub store: ParamStore<T>,
    pub dims: GuesserDims,
    emb: ParamId,
    lstm: LstmWeights,
    cat: ParamId,
    mlp: Vec<Dense>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GuesserSample {
    /// Flat history without the leading sos.
    pub history: Vec<usize>,
    pub candidates: Vec<Candidate>,
    pub target: usize,
}

impl<T: Scalar> Guesser<T> {
    pub fn new<R: Rng>(dims: GuesserDims, rng: &mut R) -> Self {
        let mut store = ParamStore::new();
        let emb = store.add("guesser.word_emb", glorot(rng, dims.vocab, dims.word_emb));
        let lstm = LstmWeights::register(&mut store, "guesser.lstm", dims.word_emb, dims.hidden, rng);
        let cat = store.add("guesser.cat_emb", glorot(rng, dims.n_categories, dims.cat_emb));
        let mlp = register_mlp(
            &mut store,
            "guesser.obj_mlp",
            &[dims.cat_emb + 8, dims.obj_hidden, dims.hidden],
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

    pub fn cast<U: Scalar>(&self) -> Guesser<U> {
        Guesser {
            store: self.store.cast(),
            dims: self.dims,
            emb: self.emb,
            lstm: self.lstm,
            cat: self.cat,
            mlp: self.mlp.clone(),
        }
    }

    pub fn advance(&self, state: &LstmState<T>, tokens: &[usize]) -> Result<LstmState<T>> {
        if tokens.is_empty() {
            return Ok(state.clone());
        }
        let mut g = Graph::new(&self.store);
        let s = state.to_vars(&mut g);
        let out = lstm_encode(&mut g, self.emb, &self.lstm, tokens, None, s)?;
        Ok(LstmState::from_vars(&g, out))
    }

    pub fn encode(&self, history: &[usize]) -> Result<LstmState<T>> {
        let mut toks = Vec::with_capacity(history.len() + 1);
        toks.push(vocab::SOS);
        toks.extend_from_slice(history);
        self.advance(&LstmState::zeros(self.dims.hidden), &toks)
    }

    fn object_embedding(&self, g: &mut Graph<'_, T>, c: &Candidate) -> Result<Var> {
        let e = g.row(self.cat, c.category_id)?;
        let s = g.input(c.spatial.0.iter().map(|&v| T::lit(v)).collect());
        let x = g.concat(&[e, s]);
        mlp_apply(g, x, &self.mlp)
    }

    fn score_vars(&self, g: &mut Graph<'_, T>, h: Var, objects: &[Candidate]) -> Result<Var> {
        if objects.is_empty() {
            return Err(Error::Argument("guesser needs at least one candidate".into()));
        }
        let scores = objects
            .iter()
            .map(|c| {
                let e = self.object_embedding(g, c)?;
                g.dot(h, e)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(g.concat(&scores))
    }

    /// Raw dot-product scores for each candidate.
    pub fn scores(&self, h: &[T], objects: &[Candidate]) -> Result<Vec<T>> {
        if h.len() != self.dims.hidden {
            return Err(Error::dim("guesser hidden state", self.dims.hidden, h.len()));
        }
        let mut g = Graph::new(&self.store);
        let hv = g.input(h.to_vec());
        let s = self.score_vars(&mut g, hv, objects)?;
        Ok(g.value(s).to_vec())
    }

    /// Softmax over candidates.
    pub fn probs(&self, h: &[T], objects: &[Candidate]) -> Result<Vec<T>> {
        softmax_slice(&self.scores(h, objects)?)
    }

    /// Id of the most probable candidate; ties go to the lowest object id.
    pub fn pick(&self, h: &[T], objects: &[Candidate]) -> Result<i64> {
        let p = self.probs(h, objects)?;
        Ok(pick_from_probs(&p, objects))
    }

    pub fn sample_loss(&self, g: &mut Graph<'_, T>, s: &GuesserSample) -> Result<Var> {
        let start = LstmState::zeros(self.dims.hidden).to_vars(g);
        let mut toks = Vec::with_capacity(s.history.len() + 1);
        toks.push(vocab::SOS);
        toks.extend_from_slice(&s.history);
        let st = lstm_encode(g, self.emb, &self.lstm, &toks, None, start)?;
        let scores = self.score_vars(g, st.h, &s.candidates)?;
        g.softmax_cross_entropy(scores, s.target, T::one())
    }
}

pub fn pick_from_probs<T: Scalar>(p: &[T], objects: &[Candidate]) -> i64 {
    let mut best = 0;
    for i in 1..p.len() {
        if p[i] > p[best] || (p[i] == p[best] && objects[i].id < objects[best].id) {
            best = i;
        }
    }
    objects[best].id
}

// ------------------------------------------------------ Dialogue state

/// Dialogue history with both encoders' states cached.
#[derive(Clone, Debug, PartialEq)]
pub struct DialogueState<T: Scalar> {
    pub tokens: Vec<usize>,
    pub turns: usize,
    pub qgen: LstmState<T>,
    pub guesser: LstmState<T>,
}

impl<T: Scalar> DialogueState<T> {
    pub fn new(qgen: &QGen<T>, guesser: &Guesser<T>, features: &[T]) -> Result<Self> {
        Ok(Self {
            tokens: Vec::new(),
            turns: 0,
            qgen: qgen.encode(features, &[])?,
            guesser: guesser.encode(&[])?,
        })
    }

    /// Appends one question/answer pair and advances both encoders.
    pub fn push_qa(
        &mut self,
        qgen: &QGen<T>,
        guesser: &Guesser<T>,
        features: &[T],
        question: &[usize],
        answer: Answer,
    ) -> Result<()> {
        let mut step: Vec<usize> = question.to_vec();
        step.push(answer_token(answer));
        self.qgen = qgen.advance(&self.qgen, features, &step)?;
        self.guesser = guesser.advance(&self.guesser, &step)?;
        self.tokens.extend_from_slice(&step);
        self.turns += 1;
        Ok(())
    }

    pub fn answer_count(&self) -> usize {
        self.tokens.iter().filter(|&&t| vocab::is_answer_token(t)).count()
    }
}

/// Converts f32 features to the model scalar.
pub fn features_as<T: Scalar>(features: &[f32]) -> Vec<T> {
    to_scalars(features)
}

/// Guesser sample for a full human dialogue.
pub fn guesser_sample(game: &GameRecord, vocab: &Vocab) -> Result<GuesserSample> {
    let qas: Vec<(Vec<usize>, Answer)> = game.qas.iter().map(|qa| (vocab.encode(&qa.question), qa.answer)).collect();
    Ok(GuesserSample {
        history: history_tokens(&qas),
        candidates: candidates(game)?,
        target: game.target_index().ok_or_else(|| Error::Integrity {
            game_id: game.game_id,
            message: "target missing".into(),
        })?,
    })
}

/// QGen training stream for a human dialogue.
pub fn qgen_sample(game: &GameRecord, vocab: &Vocab, features: &FeatureTable) -> Result<QGenSample> {
    let qas: Vec<(Vec<usize>, Answer)> = game.qas.iter().map(|qa| (vocab.encode(&qa.question), qa.answer)).collect();
    Ok(QGenSample::from_dialogue(features.get(game.image.id)?.to_vec(), &qas))
}
