//! File formats: JSONL corpora and reports, JSON models, features, and configs.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::lexicon::{Lexicon, MatchMode};
use crate::features::FeatureStore;
use crate::fit::FitResult;
use crate::likelihood::Zeta;
use crate::model::{separate_ties, Cascade, Event, ModelParams, UserId, TIE_EPSILON};
use crate::simulate::SimConfig;

pub const MODEL_FORMAT: &str = "hawkfeed-model/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub t: f64,
    pub publisher: UserId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_features: Option<Vec<f64>>,
}

/// One corpus line. The first event is the post.
///
/// With `origin` present, event times and `window_end` are minutes since
/// `origin`; without it they are global and the post time becomes the origin.
/// A missing `window_end` closes the window just after the last event.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeRecord {
    pub cascade_id: String,
    #[serde(default)]
    pub group_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_end: Option<f64>,
    pub events: Vec<EventRecord>,
}

impl From<EventRecord> for Event {
    fn from(r: EventRecord) -> Self {
        Event {
            time: r.t,
            publisher: r.publisher,
            content: r.content_features.unwrap_or_default(),
            text: r.text,
            wall_clock: r.wall_clock,
        }
    }
}

fn event_record(e: &Event) -> EventRecord {
    EventRecord {
        t: e.time,
        publisher: e.publisher.clone(),
        wall_clock: e.wall_clock.clone(),
        text: e.text.clone(),
        content_features: (!e.content.is_empty()).then(|| e.content.clone()),
    }
}

impl CascadeRecord {
    pub fn into_cascade(self) -> Result<Cascade> {
        let mut events = self.events.into_iter().map(Event::from);
        let post = events.next().ok_or_else(|| {
            Error::precondition(format!("cascade {} has no events", self.cascade_id))
        })?;
        let mut comments: Vec<Event> = events.collect();
        let last = comments.iter().map(|e| e.time).fold(post.time, f64::max);
        let window_end = self.window_end.unwrap_or(last + TIE_EPSILON);
        match self.origin {
            Some(origin) => {
                if post.time != 0.0 {
                    return Err(Error::precondition(format!(
                        "cascade {}: with an origin the post must be at t = 0",
                        self.cascade_id
                    )));
                }
                comments.sort_by(|a, b| a.time.total_cmp(&b.time));
                separate_ties(&mut comments);
                Cascade::new(
                    self.cascade_id,
                    self.group_id,
                    origin,
                    post,
                    comments,
                    window_end,
                )
            }
            None => {
                if comments.iter().any(|e| e.time < post.time) {
                    return Err(Error::precondition(format!(
                        "cascade {}: comment precedes the post",
                        self.cascade_id
                    )));
                }
                Cascade::from_global(self.cascade_id, self.group_id, post, comments, window_end)
            }
        }
    }

    pub fn from_cascade(c: &Cascade) -> Self {
        CascadeRecord {
            cascade_id: c.id.clone(),
            group_id: c.group.clone(),
            origin: Some(c.origin),
            window_end: Some(c.window_end),
            events: c.events().map(event_record).collect(),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, msg: impl ToString) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.to_string(),
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_err(path))
}

/// Parses a JSONL corpus; `path` only labels errors.
pub fn parse_corpus(text: &str, path: &Path) -> Result<Vec<Cascade>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CascadeRecord =
            serde_json::from_str(line).map_err(|e| parse_err(path, lineno, e))?;
        if !seen.insert(rec.cascade_id.clone()) {
            return Err(parse_err(
                path,
                lineno,
                format!("duplicate cascade id {}", rec.cascade_id),
            ));
        }
        let c = rec.into_cascade().map_err(|e| match e {
            Error::Precondition(msg) => parse_err(path, lineno, msg),
            other => other,
        })?;
        out.push(c);
    }
    Ok(out)
}

pub fn read_corpus(path: &Path) -> Result<Vec<Cascade>> {
    parse_corpus(&read_text(path)?, path)
}

pub fn corpus_to_string(cascades: &[Cascade]) -> String {
    let mut s = String::new();
    for c in cascades {
        s.push_str(
            &serde_json::to_string(&CascadeRecord::from_cascade(c))
                .expect("corpus records serialize"),
        );
        s.push('\n');
    }
    s
}

pub fn write_corpus(path: &Path, cascades: &[Cascade]) -> Result<()> {
    write_text(path, &corpus_to_string(cascades))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e.line(), e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::config(e.to_string()))?;
    s.push('\n');
    write_text(path, &s)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    read_text(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| parse_err(path, i + 1, e)))
        .collect()
}

pub fn write_jsonl<T: Serialize>(path: &Path, values: &[T]) -> Result<()> {
    let mut s = String::new();
    for v in values {
        s.push_str(&serde_json::to_string(v).map_err(|e| Error::config(e.to_string()))?);
        s.push('\n');
    }
    write_text(path, &s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub projected_gradient_norm: f64,
    pub log_likelihood: f64,
}

/// A fitted model on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub params: ModelParams,
    #[serde(default)]
    pub zeta: Zeta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<FitDiagnostics>,
}

impl ModelFile {
    pub fn new(params: ModelParams) -> Self {
        ModelFile {
            format: MODEL_FORMAT.to_string(),
            params,
            zeta: Zeta::default(),
            diagnostics: None,
        }
    }

    pub fn from_fit(fit: &FitResult) -> Self {
        ModelFile {
            format: MODEL_FORMAT.to_string(),
            params: fit.params.clone(),
            zeta: fit.zeta,
            diagnostics: Some(FitDiagnostics {
                iterations: fit.iterations,
                converged: fit.converged,
                projected_gradient_norm: fit.projected_gradient_norm,
                log_likelihood: fit.log_likelihood,
            }),
        }
    }
}

pub fn save_model(path: &Path, model: &ModelFile) -> Result<()> {
    write_json(path, model)
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let m: ModelFile = read_json(path)?;
    if m.format != MODEL_FORMAT {
        return Err(parse_err(
            path,
            1,
            format!(
                "unsupported model format {:?}, expected {MODEL_FORMAT}",
                m.format
            ),
        ));
    }
    m.params.validate()?;
    Ok(m)
}

pub fn save_features(path: &Path, store: &FeatureStore) -> Result<()> {
    write_json(path, store)
}

pub fn load_features(path: &Path) -> Result<FeatureStore> {
    read_json(path)
}

pub fn load_lexicon(path: &Path, mode: MatchMode) -> Result<Lexicon> {
    Lexicon::parse_jsonl(&read_text(path)?, mode).map_err(|(line, msg)| parse_err(path, line, msg))
}

/// Simulation settings; the model and features are inline.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimSpec {
    pub n_cascades: usize,
    pub horizon: f64,
    #[serde(default = "default_event_cap")]
    pub event_cap: usize,
    #[serde(default)]
    pub post_interval: f64,
    #[serde(default = "default_group")]
    pub group: String,
    #[serde(default)]
    pub seed: u64,
    /// Defaults to the feature store's population.
    #[serde(default)]
    pub users: Option<Vec<UserId>>,
    pub params: ModelParams,
    pub features: FeatureStore,
}

fn default_event_cap() -> usize {
    10_000
}

fn default_group() -> String {
    "sim".to_string()
}

impl SimSpec {
    pub fn to_config(&self, seed: Option<u64>) -> Result<SimConfig> {
        let users = match &self.users {
            Some(u) => u.clone(),
            None => self.features.population().to_vec(),
        };
        let cfg = SimConfig {
            users,
            store: self.features.clone(),
            params: self.params.clone(),
            horizon: self.horizon,
            event_cap: self.event_cap,
            seed: seed.unwrap_or(self.seed),
            post_interval: self.post_interval,
            group: self.group.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::Manifest;

    #[test]
    fn global_records_rebase_and_separate_ties() {
        let text = r#"{"cascade_id":"a","group_id":"g","window_end":200,"events":[{"t":100,"publisher":"p"},{"t":130,"publisher":"u"},{"t":130,"publisher":"v"},{"t":110,"publisher":"w"}]}"#;
        let cs = parse_corpus(text, Path::new("x")).unwrap();
        let c = &cs[0];
        assert_eq!(c.origin, 100.0);
        assert_eq!(c.window_end, 100.0);
        let times: Vec<f64> = c.comments.iter().map(|e| e.time).collect();
        assert_eq!(times, vec![10.0, 30.0, 30.0 + TIE_EPSILON]);
        assert_eq!(c.comments[1].publisher, "u");
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let text =
            "{\"cascade_id\":\"a\",\"events\":[{\"t\":0,\"publisher\":\"p\"}]}\n\n{not json}\n";
        match parse_corpus(text, Path::new("c.jsonl")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let dup = "{\"cascade_id\":\"a\",\"events\":[{\"t\":0,\"publisher\":\"p\"}]}\n{\"cascade_id\":\"a\",\"events\":[{\"t\":0,\"publisher\":\"p\"}]}";
        assert!(matches!(
            parse_corpus(dup, Path::new("c")),
            Err(Error::Parse { line: 2, .. })
        ));
        let empty = "{\"cascade_id\":\"a\",\"events\":[]}";
        assert!(matches!(
            parse_corpus(empty, Path::new("c")),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn corpus_round_trip_is_exact() {
        let c = Cascade::new(
            "a",
            "g",
            0.1 + 0.2,
            Event::new(0.0, "p", vec![0.25]).with_text("hello"),
            vec![Event::new(1.0 / 3.0, "u", vec![0.5])],
            7.7,
        )
        .unwrap();
        let back =
            parse_corpus(&corpus_to_string(std::slice::from_ref(&c)), Path::new("x")).unwrap();
        assert_eq!(back, vec![c]);
    }

    #[test]
    fn model_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let params = ModelParams::new(
            vec![0.1 + 0.2, 1e-300],
            vec![std::f64::consts::PI],
            vec![1.0 / 3.0, 0.0],
            vec![2.0f64.sqrt()],
            0.001,
            0.01,
            Manifest::generic("p", 2),
            Manifest::generic("d", 1),
        )
        .unwrap();
        let m = ModelFile::new(params);
        save_model(&path, &m).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, m);
        let bits = |p: &ModelParams| p.theta().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back.params), bits(&m.params));
    }

    #[test]
    fn wrong_model_format_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let mut m = ModelFile::new(ModelParams::zeros(
            Manifest::generic("p", 1),
            Manifest::generic("d", 0),
            0.1,
            0.1,
        ));
        m.format = "other/9".into();
        save_model(&path, &m).unwrap();
        assert!(matches!(load_model(&path), Err(Error::Parse { .. })));
    }
}
