use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Oracle answer to a yes/no question.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Answer {
    Yes,
    No,
    NA,
}

impl Answer {
    pub const ALL: [Answer; 3] = [Answer::Yes, Answer::No, Answer::NA];

    pub fn index(self) -> usize {
        match self {
            Answer::Yes => 0,
            Answer::No => 1,
            Answer::NA => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Answer::Yes => "Yes",
            Answer::No => "No",
            Answer::NA => "N/A",
        }
    }
}

impl FromStr for Answer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "yes" | "y" => Ok(Answer::Yes),
            "no" | "n" => Ok(Answer::No),
            "n/a" | "na" => Ok(Answer::NA),
            other => Err(Error::Argument(format!("unknown answer {other:?}"))),
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Answer {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Answer {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    Success,
    Failure,
    Incomplete,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Success => "success",
            Status::Failure => "failure",
            Status::Incomplete => "incomplete",
        }
    }
}

impl FromStr for Status {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "success" => Ok(Status::Success),
            "failure" => Ok(Status::Failure),
            "incomplete" => Ok(Status::Incomplete),
            other => Err(Error::Argument(format!("unknown status {other:?}"))),
        }
    }
}

impl Serialize for Status {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Status {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Bounding box in pixels: top-left corner plus extent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }
}

impl Serialize for BBox {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.x, self.y, self.w, self.h].serialize(s)
    }
}

impl<'de> Deserialize<'de> for BBox {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [x, y, w, h] = <[f64; 4]>::deserialize(d)?;
        Ok(BBox { x, y, w, h })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectInfo {
    pub id: i64,
    pub category: String,
    pub category_id: usize,
    pub bbox: BBox,
    pub area: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageInfo {
    pub id: i64,
    pub width: u32,
    pub height: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QaPair {
    pub question: String,
    pub answer: Answer,
}

/// One GuessWhat?! game, serialized with the public dataset's field names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    #[serde(rename = "id")]
    pub game_id: i64,
    #[serde(alias = "picture")]
    pub image: ImageInfo,
    pub objects: Vec<ObjectInfo>,
    pub qas: Vec<QaPair>,
    #[serde(rename = "object_id")]
    pub target_id: i64,
    pub status: Status,
}

impl GameRecord {
    pub fn target(&self) -> Option<&ObjectInfo> {
        self.objects.iter().find(|o| o.id == self.target_id)
    }

    pub fn target_index(&self) -> Option<usize> {
        self.objects.iter().position(|o| o.id == self.target_id)
    }

    /// Checks the record-level invariants that do not depend on filtering.
    pub fn validate(&self) -> Result<()> {
        let fail = |message: String| Error::Integrity {
            game_id: self.game_id,
            message,
        };
        if self.target().is_none() {
            return Err(fail(format!("target object {} not among the objects", self.target_id)));
        }
        if self.image.width == 0 || self.image.height == 0 {
            return Err(fail("image has zero extent".into()));
        }
        for o in &self.objects {
            if !(o.bbox.w > 0.0 && o.bbox.h > 0.0 && o.area > 0.0) {
                return Err(fail(format!("object {} has an empty box or area", o.id)));
            }
        }
        Ok(())
    }
}

/// Result of reading a game file.
#[derive(Clone, Debug, Default)]
pub struct ParsedGames {
    pub games: Vec<GameRecord>,
    /// Lines skipped in lenient mode.
    pub skipped: usize,
}

/// Reads newline-delimited game records.
///
/// Strict mode fails on the first malformed line; lenient mode skips
/// malformed or inconsistent records and counts them.
pub fn parse_games_from<R: BufRead>(reader: R, lenient: bool) -> Result<ParsedGames> {
    let mut out = ParsedGames::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let game = match serde_json::from_str::<GameRecord>(&line) {
            Ok(g) => g,
            Err(e) if lenient => {
                log::debug!("skipping line {lineno}: {e}");
                out.skipped += 1;
                continue;
            }
            Err(e) => {
                return Err(Error::Parse {
                    line: lineno,
                    message: e.to_string(),
                })
            }
        };
        match game.validate() {
            Ok(()) => out.games.push(game),
            Err(e) if lenient => {
                log::debug!("skipping line {lineno}: {e}");
                out.skipped += 1;
            }
            Err(e) => return Err(e),
        }
    }
    if out.skipped > 0 {
        log::warn!("skipped {} malformed game records", out.skipped);
    }
    Ok(out)
}

pub fn parse_games(path: impl AsRef<Path>, lenient: bool) -> Result<ParsedGames> {
    let f = std::fs::File::open(path.as_ref())?;
    parse_games_from(BufReader::new(f), lenient)
}

pub fn write_games_to<W: Write>(mut w: W, games: &[GameRecord]) -> Result<()> {
    for g in games {
        serde_json::to_writer(&mut w, g).map_err(|e| Error::Format(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_games(path: impl AsRef<Path>, games: &[GameRecord]) -> Result<()> {
    let f = std::fs::File::create(path.as_ref())?;
    let mut w = std::io::BufWriter::new(f);
    write_games_to(&mut w, games)?;
    w.flush()?;
    Ok(())
}

pub const MIN_OBJECTS: usize = 3;
pub const MAX_OBJECTS: usize = 20;
/// Targets must be strictly larger than this many square pixels.
pub const MIN_TARGET_AREA: f64 = 500.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct FilterReport {
    pub kept: usize,
    pub dropped: usize,
}

pub fn keeps(game: &GameRecord) -> bool {
    let n = game.objects.len();
    (MIN_OBJECTS..=MAX_OBJECTS).contains(&n) && game.target().is_some_and(|t| t.area > MIN_TARGET_AREA)
}

/// Keeps games with 3..=20 objects and a target larger than 500 px².
pub fn filter_games(games: Vec<GameRecord>) -> (Vec<GameRecord>, FilterReport) {
    let total = games.len();
    let kept: Vec<GameRecord> = games.into_iter().filter(keeps).collect();
    let report = FilterReport {
        kept: kept.len(),
        dropped: total - kept.len(),
    };
    (kept, report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(id: i64, target: i64, status: &str) -> String {
        format!(
            r#"{{"id":{id},"image":{{"id":7,"width":100,"height":80}},"objects":[{{"id":1,"category":"dog","category_id":18,"bbox":[0,0,30,30],"area":900}},{{"id":2,"category":"cat","category_id":17,"bbox":[50,10,20,20],"area":400}}],"qas":[{{"question":"is it a dog?","answer":"Yes"}},{{"question":"left?","answer":"N/A"}}],"object_id":{target},"status":"{status}"}}"#
        )
    }

    #[test]
    fn parses_well_formed_lines() {
        let text = format!("{}\n{}\n", line(1, 1, "success"), line(2, 2, "failure"));
        let parsed = parse_games_from(text.as_bytes(), false).unwrap();
        assert_eq!(parsed.games.len(), 2);
        assert_eq!(parsed.games[0].status, Status::Success);
        assert_eq!(parsed.games[1].status, Status::Failure);
        assert_eq!(parsed.games[0].qas[1].answer, Answer::NA);
    }

    #[test]
    fn missing_target_is_integrity_error() {
        let text = line(42, 99, "success");
        match parse_games_from(text.as_bytes(), false) {
            Err(Error::Integrity { game_id, .. }) => assert_eq!(game_id, 42),
            other => panic!("{other:?}"),
        }
        let parsed = parse_games_from(text.as_bytes(), true).unwrap();
        assert_eq!((parsed.games.len(), parsed.skipped), (0, 1));
    }

    #[test]
    fn strict_reports_line_number_and_lenient_skips() {
        let text = format!("{}\nnot json\n{}\n", line(1, 1, "success"), line(3, 1, "incomplete"));
        match parse_games_from(text.as_bytes(), false) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let parsed = parse_games_from(text.as_bytes(), true).unwrap();
        assert_eq!(parsed.skipped, 1);
        assert_eq!(parsed.games.iter().map(|g| g.game_id).collect::<Vec<_>>(), vec![1, 3]);
    }

    #[test]
    fn answers_parse_case_insensitively() {
        assert_eq!("YES".parse::<Answer>().unwrap(), Answer::Yes);
        assert_eq!("no".parse::<Answer>().unwrap(), Answer::No);
        assert_eq!("n/a".parse::<Answer>().unwrap(), Answer::NA);
        assert!("maybe".parse::<Answer>().is_err());
    }

    fn game_with(n_objects: usize, target_area: f64) -> GameRecord {
        let objects = (0..n_objects)
            .map(|i| ObjectInfo {
                id: i as i64,
                category: "dog".into(),
                category_id: 1,
                bbox: BBox {
                    x: 0.0,
                    y: 0.0,
                    w: 10.0,
                    h: 10.0,
                },
                area: if i == 0 { target_area } else { 100.0 },
            })
            .collect();
        GameRecord {
            game_id: 1,
            image: ImageInfo {
                id: 1,
                width: 100,
                height: 100,
            },
            objects,
            qas: vec![],
            target_id: 0,
            status: Status::Success,
        }
    }

    #[test]
    fn filter_boundaries() {
        let (kept, r) = filter_games(vec![
            game_with(2, 1000.0),
            game_with(20, 501.0),
            game_with(5, 500.0),
            game_with(21, 1000.0),
            game_with(3, 600.0),
        ]);
        assert_eq!(r, FilterReport { kept: 2, dropped: 3 });
        assert_eq!(kept.iter().map(|g| g.objects.len()).collect::<Vec<_>>(), vec![20, 3]);
    }
}
