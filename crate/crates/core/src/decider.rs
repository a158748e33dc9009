//! Ask-vs-guess decision module. After every question/answer pair an MLP
//! over `[image features ; encoder state]` picks between asking again and
//! guessing. DM1 reads the QGen state, DM2 the Guesser state.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use log::warn;
use rand::Rng;

use crate::data::features::FeatureTable;
use crate::data::record::{GameRecord, Status};
use crate::data::vocab::Vocab;
use crate::error::{Error, Result};
use crate::neuro::{mlp_apply, register_mlp, softmax_slice, Activation, Dense, Graph, ParamStore, Scalar, Var};
use crate::profile::DmDims;
use crate::questioner::{candidates, features_as, DialogueState, Guesser, QGen};
use crate::trainer::{fit, TrainConfig, TrainLog, Trainable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DmVariant {
    Dm1,
    Dm2,
    /// Both encoder states concatenated. Disabled unless explicitly enabled.
    Hybrid,
}

impl DmVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            DmVariant::Dm1 => "dm1",
            DmVariant::Dm2 => "dm2",
            DmVariant::Hybrid => "hybrid",
        }
    }

    /// Width of the encoder state this variant consumes.
    pub fn hidden_width(self, qgen_hidden: usize, guesser_hidden: usize) -> usize {
        match self {
            DmVariant::Dm1 => qgen_hidden,
            DmVariant::Dm2 => guesser_hidden,
            DmVariant::Hybrid => qgen_hidden + guesser_hidden,
        }
    }

    /// Selects this variant's input from the dialogue state.
    pub fn hidden_of<T: Scalar>(self, st: &DialogueState<T>) -> Vec<T> {
        match self {
            DmVariant::Dm1 => st.qgen.h.data().to_vec(),
            DmVariant::Dm2 => st.guesser.h.data().to_vec(),
            DmVariant::Hybrid => st.qgen.h.data().iter().chain(st.guesser.h.data()).copied().collect(),
        }
    }

    pub fn parse(s: &str, allow_hybrid: bool) -> Result<Self> {
        let v: DmVariant = s.parse()?;
        if v == DmVariant::Hybrid && !allow_hybrid {
            return Err(Error::Config("the hybrid decider is disabled (set hybrid=true to enable)".into()));
        }
        Ok(v)
    }
}

impl fmt::Display for DmVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DmVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dm1" => Ok(DmVariant::Dm1),
            "dm2" => Ok(DmVariant::Dm2),
            "hybrid" => Ok(DmVariant::Hybrid),
            other => Err(Error::Argument(format!("unknown decider variant {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DecisionLabel {
    Ask,
    Guess,
}

impl DecisionLabel {
    pub fn index(self) -> usize {
        match self {
            DecisionLabel::Ask => 0,
            DecisionLabel::Guess => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DecisionLabel::Ask => "ask",
            DecisionLabel::Guess => "guess",
        }
    }
}

impl FromStr for DecisionLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ask" => Ok(DecisionLabel::Ask),
            "guess" => Ok(DecisionLabel::Guess),
            other => Err(Error::Argument(format!("unknown decision {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LabelScheme {
    GtLabel,
    GuessLabel,
}

impl FromStr for LabelScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "gt" | "gt-label" => Ok(LabelScheme::GtLabel),
            "guess" | "guess-label" => Ok(LabelScheme::GuessLabel),
            other => Err(Error::Argument(format!("unknown label scheme {other:?}"))),
        }
    }
}

impl LabelScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelScheme::GtLabel => "gt-label",
            LabelScheme::GuessLabel => "guess-label",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassWeighting {
    Uniform,
    InverseFrequency,
}

impl FromStr for ClassWeighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(ClassWeighting::Uniform),
            "inverse" | "inverse-frequency" => Ok(ClassWeighting::InverseFrequency),
            other => Err(Error::Argument(format!("unknown class weighting {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decider<T: Scalar> {
    pub store: ParamStore<T>,
    pub variant: DmVariant,
    pub dims: DmDims,
    mlp: Vec<Dense>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DmSample {
    pub input: Vec<f32>,
    pub label: DecisionLabel,
    pub weight: f32,
}

impl<T: Scalar> Decider<T> {
    pub fn new<R: Rng>(variant: DmVariant, dims: DmDims, rng: &mut R) -> Self {
        let mut store = ParamStore::new();
        let name = format!("{}.mlp", variant.as_str());
        let mlp = register_mlp(
            &mut store,
            &name,
            &[dims.feature_dim + dims.hidden_dim, dims.mlp_hidden, 2],
            Activation::Identity,
            rng,
        );
        Self {
            store,
            variant,
            dims,
            mlp,
        }
    }

    pub fn cast<U: Scalar>(&self) -> Decider<U> {
        Decider {
            store: self.store.cast(),
            variant: self.variant,
            dims: self.dims,
            mlp: self.mlp.clone(),
        }
    }

    pub fn input_width(&self) -> usize {
        self.dims.feature_dim + self.dims.hidden_dim
    }

    pub fn logits(&self, g: &mut Graph<'_, T>, input: Var) -> Result<Var> {
        if g.len_of(input) != self.input_width() {
            return Err(Error::dim(
                format!("{} input (features + hidden)", self.variant),
                self.input_width(),
                g.len_of(input),
            ));
        }
        mlp_apply(g, input, &self.mlp)
    }

    /// `(p_ask, p_guess)`.
    pub fn forward(&self, features: &[T], hidden: &[T]) -> Result<(T, T)> {
        if features.len() != self.dims.feature_dim || hidden.len() != self.dims.hidden_dim {
            return Err(Error::dim(
                format!("{} input", self.variant),
                format!("features {} + hidden {}", self.dims.feature_dim, self.dims.hidden_dim),
                format!("features {} + hidden {}", features.len(), hidden.len()),
            ));
        }
        let mut g = Graph::new(&self.store);
        let x = g.input(features.iter().chain(hidden).copied().collect());
        let l = self.logits(&mut g, x)?;
        let p = softmax_slice(g.value(l))?;
        Ok((p[0], p[1]))
    }

    pub fn decide(&self, features: &[T], hidden: &[T]) -> Result<DecisionLabel> {
        let (a, g) = self.forward(features, hidden)?;
        Ok(dm_decide(a, g))
    }

    pub fn sample_loss(&self, g: &mut Graph<'_, T>, s: &DmSample) -> Result<Var> {
        let x = g.input(s.input.iter().map(|&v| T::lit(v as f64)).collect());
        let l = self.logits(g, x)?;
        g.softmax_cross_entropy(l, s.label.index(), T::lit(s.weight as f64))
    }
}

/// Argmax; an exact tie asks for more evidence.
pub fn dm_decide<T: Scalar>(p_ask: T, p_guess: T) -> DecisionLabel {
    if p_guess > p_ask {
        DecisionLabel::Guess
    } else {
        DecisionLabel::Ask
    }
}

fn labelable(game: &GameRecord) -> bool {
    if game.status == Status::Incomplete {
        return false;
    }
    if game.qas.is_empty() {
        warn!("game {} has no question/answer pairs; skipped for decision labels", game.game_id);
        return false;
    }
    true
}

/// Human-behaviour labels: ask wherever a follow-up question exists, guess
/// at the final pair. `t` counts completed pairs (1-based). Returns `None`
/// for games that cannot be labelled.
pub fn make_gt_labels(game: &GameRecord) -> Option<Vec<(usize, DecisionLabel)>> {
    if !labelable(game) {
        return None;
    }
    let n = game.qas.len();
    Some(
        (1..=n)
            .map(|t| (t, if t < n { DecisionLabel::Ask } else { DecisionLabel::Guess }))
            .collect(),
    )
}

/// Guesser-success labels: guess at every prefix where the frozen Guesser
/// already picks the true target.
pub fn make_guess_labels<T: Scalar>(
    game: &GameRecord,
    guesser: &Guesser<T>,
    vocab: &Vocab,
) -> Result<Option<Vec<(usize, DecisionLabel)>>> {
    if !labelable(game) {
        return Ok(None);
    }
    let cands = candidates(game)?;
    let mut state = guesser.encode(&[])?;
    let mut out = Vec::with_capacity(game.qas.len());
    for (i, qa) in game.qas.iter().enumerate() {
        let mut step = vocab.encode(&qa.question);
        step.push(crate::data::vocab::answer_token(qa.answer));
        state = guesser.advance(&state, &step)?;
        let pick = guesser.pick(state.h.data(), &cands)?;
        let label = if pick == game.target_id {
            DecisionLabel::Guess
        } else {
            DecisionLabel::Ask
        };
        out.push((i + 1, label));
    }
    Ok(Some(out))
}

/// Frozen encoders used to build decider inputs.
pub struct Encoders<'a> {
    pub qgen: &'a QGen<f32>,
    pub guesser: &'a Guesser<f32>,
    pub vocab: &'a Vocab,
    pub features: &'a FeatureTable,
}

/// Labels for one game under a scheme.
pub fn labels_for(
    game: &GameRecord,
    scheme: LabelScheme,
    enc: &Encoders<'_>,
) -> Result<Option<Vec<(usize, DecisionLabel)>>> {
    match scheme {
        LabelScheme::GtLabel => Ok(make_gt_labels(game)),
        LabelScheme::GuessLabel => make_guess_labels(game, enc.guesser, enc.vocab),
    }
}

/// Decider training states for one game: `[features ; hidden after t pairs]`
/// with the scheme's label, unit weight.
pub fn dm_samples_for_game(
    game: &GameRecord,
    variant: DmVariant,
    scheme: LabelScheme,
    enc: &Encoders<'_>,
) -> Result<Vec<DmSample>> {
    if variant == DmVariant::Dm1 && scheme == LabelScheme::GuessLabel {
        return Err(Error::Config("DM1 can only be trained with gt-label".into()));
    }
    let Some(labels) = labels_for(game, scheme, enc)? else {
        return Ok(Vec::new());
    };
    let feats = enc.features.get(game.image.id)?;
    let ft: Vec<f32> = features_as(feats);
    let mut st = DialogueState::new(enc.qgen, enc.guesser, &ft)?;
    let mut out = Vec::with_capacity(labels.len());
    for (qa, (_, label)) in game.qas.iter().zip(labels) {
        st.push_qa(enc.qgen, enc.guesser, &ft, &enc.vocab.encode(&qa.question), qa.answer)?;
        let mut input = ft.clone();
        input.extend(variant.hidden_of(&st));
        out.push(DmSample {
            input,
            label,
            weight: 1.0,
        });
    }
    Ok(out)
}

/// Rejects single-class sets and applies the weighting scheme.
pub fn prepare_dm_samples(samples: &mut [DmSample], weighting: ClassWeighting) -> Result<()> {
    let n_guess = samples.iter().filter(|s| s.label == DecisionLabel::Guess).count();
    let n_ask = samples.len() - n_guess;
    if n_guess == 0 || n_ask == 0 {
        return Err(Error::Argument(format!(
            "decider training set has a single class ({n_ask} ask, {n_guess} guess over {} states)",
            samples.len()
        )));
    }
    let n = samples.len() as f32;
    for s in samples.iter_mut() {
        s.weight = match weighting {
            ClassWeighting::Uniform => 1.0,
            ClassWeighting::InverseFrequency => {
                let nc = if s.label == DecisionLabel::Guess { n_guess } else { n_ask };
                n / (2.0 * nc as f32)
            }
        };
    }
    Ok(())
}

impl Trainable for Decider<f32> {
    type Sample = DmSample;

    fn store(&self) -> &ParamStore<f32> {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParamStore<f32> {
        &mut self.store
    }

    fn sample_loss(&self, g: &mut Graph<'_, f32>, s: &DmSample) -> Result<Var> {
        Decider::sample_loss(self, g, s)
    }
}

/// Trains a decider on prepared states. Validation states are weighted the
/// same way as training states.
pub fn dm_train(
    dm: &mut Decider<f32>,
    mut train: Vec<DmSample>,
    mut val: Vec<DmSample>,
    weighting: ClassWeighting,
    cfg: &TrainConfig,
) -> Result<TrainLog> {
    prepare_dm_samples(&mut train, weighting)?;
    for s in &mut val {
        s.weight = 1.0;
    }
    fit(dm, &train, &val, cfg)
}

/// Classification accuracy of a decider over labelled states.
pub fn dm_accuracy(dm: &Decider<f32>, samples: &[DmSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Argument("no decider states to evaluate".into()));
    }
    let (f, h) = (dm.dims.feature_dim, dm.dims.hidden_dim);
    let mut hits = 0usize;
    for s in samples {
        if dm.decide(&s.input[..f], &s.input[f..f + h])? == s.label {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples.len() as f64)
}

/// Writes `game_id,t,label` rows for auditing.
pub fn write_label_dump(path: impl AsRef<Path>, rows: &[(i64, usize, DecisionLabel)]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path.as_ref())?);
    writeln!(f, "game_id,t,label")?;
    for (g, t, l) in rows {
        writeln!(f, "{g},{t},{}", l.as_str())?;
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::record::{Answer, BBox, ImageInfo, ObjectInfo, QaPair};
    use crate::neuro::Tensor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn game(n_qas: usize, status: Status) -> GameRecord {
        let obj = |id, cat: usize, x| ObjectInfo {
            id,
            category: format!("c{cat}"),
            category_id: cat,
            bbox: BBox { x, y: 10.0, w: 30.0, h: 30.0 },
            area: 900.0,
        };
        GameRecord {
            game_id: 5,
            image: ImageInfo { id: 5, width: 100, height: 100 },
            objects: vec![obj(1, 1, 0.0), obj(2, 2, 30.0), obj(3, 3, 60.0)],
            qas: (0..n_qas)
                .map(|i| QaPair {
                    question: format!("is it {i} ?"),
                    answer: Answer::No,
                })
                .collect(),
            target_id: 2,
            status,
        }
    }

    fn tiny(variant: DmVariant) -> Decider<f64> {
        let dims = DmDims {
            feature_dim: 2,
            hidden_dim: 3,
            mlp_hidden: 4,
        };
        Decider::new(variant, dims, &mut ChaCha8Rng::seed_from_u64(0))
    }

    #[test]
    fn zero_weights_and_reference_logits() {
        let mut d = tiny(DmVariant::Dm2);
        d.store.zero_all();
        let (a, g) = d.forward(&[1.0, 2.0], &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!((a, g), (0.5, 0.5));
        assert_eq!(dm_decide(a, g), DecisionLabel::Ask);
        let b = d.store.id("dm2.mlp.1.b").unwrap();
        d.store.replace(b, Tensor::from_f64(&[2.0, 0.0])).unwrap();
        let (a, g) = d.forward(&[1.0, 2.0], &[0.1, 0.2, 0.3]).unwrap();
        let expect = 1.0 / (1.0 + (-2f64).exp());
        assert!((a - expect).abs() < 1e-12 && (a - 0.8808).abs() < 1e-4 && (g - 0.1192).abs() < 1e-4);
    }

    #[test]
    fn wrong_width_is_dimension_error() {
        let d = tiny(DmVariant::Dm1);
        assert!(matches!(d.forward(&[1.0, 2.0], &[0.0; 5]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn decide_rule() {
        assert_eq!(dm_decide(0.4, 0.6), DecisionLabel::Guess);
        assert_eq!(dm_decide(0.5, 0.5), DecisionLabel::Ask);
        assert_eq!(dm_decide(1.0, 0.0), DecisionLabel::Ask);
    }

    #[test]
    fn gt_labels() {
        use DecisionLabel::*;
        let l = make_gt_labels(&game(3, Status::Success)).unwrap();
        assert_eq!(l, vec![(1, Ask), (2, Ask), (3, Guess)]);
        assert_eq!(make_gt_labels(&game(1, Status::Failure)).unwrap(), vec![(1, Guess)]);
        assert!(make_gt_labels(&game(3, Status::Incomplete)).is_none());
        assert!(make_gt_labels(&game(0, Status::Success)).is_none());
    }

    fn rigged_guesser(favour: usize) -> (Guesser<f64>, Vocab) {
        // A guesser whose score depends only on the category embedding:
        // the object of category `favour` always wins.
        let dims = crate::profile::GuesserDims {
            vocab: 20,
            n_categories: 4,
            word_emb: 2,
            hidden: 1,
            cat_emb: 1,
            obj_hidden: 1,
        };
        let mut g: Guesser<f64> = Guesser::new(dims, &mut ChaCha8Rng::seed_from_u64(0));
        g.store.zero_all();
        let lb = g.store.id("guesser.lstm.b").unwrap();
        // Constant positive hidden state: input and output gates open,
        // candidate saturated.
        g.store.replace(lb, Tensor::from_f64(&[10.0, 0.0, 10.0, 10.0])).unwrap();
        let cat = g.store.id("guesser.cat_emb").unwrap();
        let mut t = Tensor::zeros(&[4, 1]);
        t.data_mut()[favour] = 1.0;
        g.store.replace(cat, t).unwrap();
        let w0 = g.store.id("guesser.obj_mlp.0.w").unwrap();
        let mut w = Tensor::zeros(&[1, 9]);
        w.data_mut()[0] = 1.0;
        g.store.replace(w0, w).unwrap();
        g.store.replace(g.store.id("guesser.obj_mlp.1.w").unwrap(), Tensor::from_rows(&[&[1.0]]).unwrap()).unwrap();
        let vocab = Vocab::build(["is it 0 ?", "is it 1 ?", "is it 2 ?", "is it 3 ?"].iter().copied(), 1).unwrap();
        (g, vocab)
    }

    #[test]
    fn guess_labels_with_rigged_guessers() {
        let g4 = game(4, Status::Success);
        let (perfect, v) = rigged_guesser(2);
        let l = make_guess_labels(&g4, &perfect, &v).unwrap().unwrap();
        assert!(l.iter().all(|(_, x)| *x == DecisionLabel::Guess), "{l:?}");
        let (adversarial, v) = rigged_guesser(3);
        let l = make_guess_labels(&g4, &adversarial, &v).unwrap().unwrap();
        assert!(l.iter().all(|(_, x)| *x == DecisionLabel::Ask));
        assert_eq!(l.iter().map(|p| p.0).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        let again = make_guess_labels(&g4, &adversarial, &v).unwrap().unwrap();
        assert_eq!(l, again);
    }

    #[test]
    fn single_class_refused() {
        let mut s = vec![
            DmSample {
                input: vec![0.0],
                label: DecisionLabel::Ask,
                weight: 1.0,
            };
            3
        ];
        assert!(matches!(prepare_dm_samples(&mut s, ClassWeighting::Uniform), Err(Error::Argument(_))));
        s[0].label = DecisionLabel::Guess;
        prepare_dm_samples(&mut s, ClassWeighting::InverseFrequency).unwrap();
        assert_eq!(s[0].weight, 1.5);
        assert_eq!(s[1].weight, 0.75);
    }

    #[test]
    fn variant_parsing() {
        assert_eq!(DmVariant::parse("DM2", false).unwrap(), DmVariant::Dm2);
        assert!(matches!(DmVariant::parse("hybrid", false), Err(Error::Config(_))));
        assert_eq!(DmVariant::parse("hybrid", true).unwrap(), DmVariant::Hybrid);
        assert!("dm3".parse::<DmVariant>().is_err());
    }
}
