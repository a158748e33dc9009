//! Game records, vocabulary, spatial encoding, image features and the
//! synthetic toy world.

pub mod complexity;
pub mod features;
pub mod record;
pub mod spatial;
pub mod stats;
pub mod toyworld;
pub mod vocab;

pub use complexity::{complexity_measures, ComplexityMeasures};
pub use features::FeatureTable;
pub use record::{
    filter_games, keeps, parse_games, parse_games_from, write_games, write_games_to, Answer, BBox, FilterReport,
    GameRecord, ImageInfo, ObjectInfo, ParsedGames, QaPair, Status,
};
pub use spatial::{encode_spatial, SpatialVec};
pub use stats::{dataset_stats, DatasetStats};
pub use toyworld::{geometric_answer, script_dialogue, toyworld_generate, ToyConfig, ToyWorld};
pub use vocab::{build_vocab, normalize_question, tokenize, Vocab};
