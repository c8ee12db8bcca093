//! Three-step structure inference against a pluggable backend.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use base64::Engine;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::graph::connectivity::ConnectivityGraph;
use crate::graph::response::parse_structure_response;

/// Environment variable holding the bearer token of the HTTP backend.
pub const TOKEN_ENV: &str = "ARTIKIT_VLM_TOKEN";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Capabilities {
    pub accepts_image: bool,
    pub accepts_text: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Condition {
    Text(String),
    Image(PathBuf),
}

impl Condition {
    /// Text used for the `{condition}` placeholder and for mock lookups.
    pub fn describe(&self) -> String {
        match self {
            Condition::Text(t) => t.clone(),
            Condition::Image(p) => format!("the attached image ({})", p.display()),
        }
    }

    fn key(&self) -> String {
        match self {
            Condition::Text(t) => t.clone(),
            Condition::Image(p) => p.display().to_string(),
        }
    }
}

/// A backend that answers one prompt at a time.
pub trait StructurePriorProvider {
    fn capabilities(&self) -> Capabilities;

    /// Answers the prompt of `step` (1, 2 or 3).
    fn complete(&self, step: usize, prompt: &str, condition: &Condition) -> Result<String>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplates {
    pub steps: [String; 3],
}

impl Default for PromptTemplates {
    fn default() -> Self {
        Self {
            steps: [
                include_str!("../../../../prompts/cot_step1.txt").to_string(),
                include_str!("../../../../prompts/cot_step2.txt").to_string(),
                include_str!("../../../../prompts/cot_step3.txt").to_string(),
            ],
        }
    }
}

impl PromptTemplates {
    /// Reads `cot_step{1,2,3}.txt` from `dir`.
    pub fn load(dir: &Path) -> Result<Self> {
        let read = |k: usize| std::fs::read_to_string(dir.join(format!("cot_step{k}.txt")));
        Ok(Self { steps: [read(1)?, read(2)?, read(3)?] })
    }

    /// Fills `{condition}`, `{step1}` and `{step2}`; a leading `# ` version line is dropped.
    pub fn render(&self, step: usize, condition: &str, answers: &[String]) -> String {
        let template = &self.steps[step - 1];
        let body = match template.strip_prefix("# ") {
            Some(rest) => rest.split_once('\n').map_or("", |(_, b)| b),
            None => template,
        };
        let mut out = body.replace("{condition}", condition);
        for (k, a) in answers.iter().enumerate() {
            out = out.replace(&format!("{{step{}}}", k + 1), a.trim());
        }
        out
    }
}

/// Runs part census, interaction inference and graph emission, then parses
/// the final answer. Any failure yields no graph.
pub fn infer_structure(
    provider: &dyn StructurePriorProvider,
    condition: &Condition,
    templates: &PromptTemplates,
) -> Result<ConnectivityGraph> {
    let caps = provider.capabilities();
    let ok = match condition {
        Condition::Text(_) => caps.accepts_text,
        Condition::Image(_) => caps.accepts_image,
    };
    if !ok {
        return Err(Error::Parameter("provider does not accept this condition modality".into()));
    }
    let describe = condition.describe();
    let mut answers = Vec::with_capacity(3);
    for step in 1..=3 {
        let prompt = templates.render(step, &describe, &answers);
        answers.push(provider.complete(step, &prompt, condition)?);
    }
    parse_structure_response(answers[2].trim())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Recording {
    condition: String,
    steps: [String; 3],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordingFile {
    #[serde(default = "yes")]
    accepts_text: bool,
    #[serde(default = "yes")]
    accepts_image: bool,
    recordings: Vec<Recording>,
}

fn yes() -> bool {
    true
}

/// Replays answers recorded per condition.
///
/// File format: `{"recordings": [{"condition": "...", "steps": ["...", "...", "..."]}]}`
/// with optional `accepts_text` / `accepts_image` flags. Image conditions are
/// looked up by their path as written.
#[derive(Debug, Clone, Default)]
pub struct MockProvider {
    responses: BTreeMap<String, [String; 3]>,
    caps: Option<Capabilities>,
}

impl MockProvider {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_recording(mut self, condition: impl Into<String>, steps: [String; 3]) -> Self {
        self.responses.insert(condition.into(), steps);
        self
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: RecordingFile = serde_json::from_str(&text)
            .map_err(|e| Error::parse(format!("{}: {e}", path.display())))?;
        Ok(Self {
            responses: file.recordings.into_iter().map(|r| (r.condition, r.steps)).collect(),
            caps: Some(Capabilities { accepts_image: file.accepts_image, accepts_text: file.accepts_text }),
        })
    }
}

impl StructurePriorProvider for MockProvider {
    fn capabilities(&self) -> Capabilities {
        self.caps.unwrap_or(Capabilities { accepts_image: true, accepts_text: true })
    }

    fn complete(&self, step: usize, _prompt: &str, condition: &Condition) -> Result<String> {
        let key = condition.key();
        let steps = self.responses.get(&key).ok_or_else(|| Error::Provider {
            message: format!("no recorded response for `{key}`"),
            retriable: false,
        })?;
        Ok(steps[step - 1].clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpProviderConfig {
    /// Chat-completion endpoint URL.
    pub endpoint: String,
    pub model: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub accepts_image: bool,
}

impl Default for HttpProviderConfig {
    fn default() -> Self {
        Self { endpoint: String::new(), model: String::new(), timeout_secs: 60, max_retries: 2, accepts_image: true }
    }
}

/// Generic chat-completion client: posts `{"model", "messages"}` and reads
/// `choices[0].message.content`. Images travel as base64 data URLs. The
/// token, if any, comes from [`TOKEN_ENV`].
#[derive(Debug)]
pub struct HttpProvider {
    config: HttpProviderConfig,
    agent: ureq::Agent,
    token: Option<String>,
}

impl HttpProvider {
    pub fn new(config: HttpProviderConfig) -> Result<Self> {
        if config.endpoint.is_empty() {
            return Err(Error::Parameter("provider endpoint is not configured".into()));
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs.max(1))))
            .build()
            .into();
        Ok(Self { config, agent, token: std::env::var(TOKEN_ENV).ok().filter(|t| !t.is_empty()) })
    }

    fn body(&self, prompt: &str, condition: &Condition) -> Result<serde_json::Value> {
        let content = match condition {
            Condition::Text(_) => serde_json::json!(prompt),
            Condition::Image(path) => {
                let bytes = std::fs::read(path)?;
                let mime = match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
                    Some("jpg" | "jpeg") => "image/jpeg",
                    Some("webp") => "image/webp",
                    _ => "image/png",
                };
                let data = base64::engine::general_purpose::STANDARD.encode(bytes);
                serde_json::json!([
                    {"type": "text", "text": prompt},
                    {"type": "image_url", "image_url": {"url": format!("data:{mime};base64,{data}")}}
                ])
            }
        };
        Ok(serde_json::json!({
            "model": self.config.model,
            "temperature": 0,
            "messages": [{"role": "user", "content": content}]
        }))
    }

    fn post_once(&self, body: &serde_json::Value) -> Result<String> {
        let mut req = self.agent.post(&self.config.endpoint);
        if let Some(t) = &self.token {
            req = req.header("Authorization", format!("Bearer {t}"));
        }
        let reply: serde_json::Value = match req.send_json(body) {
            Ok(resp) => resp.into_body().read_json().map_err(|e| Error::Provider {
                message: format!("unreadable response body: {e}"),
                retriable: false,
            })?,
            Err(ureq::Error::StatusCode(code)) => {
                return Err(Error::Provider {
                    message: format!("endpoint answered HTTP {code}"),
                    retriable: code == 429 || code >= 500,
                })
            }
            Err(e) => return Err(Error::Provider { message: format!("transport failure: {e}"), retriable: true }),
        };
        reply["choices"][0]["message"]["content"].as_str().map(str::to_string).ok_or_else(|| Error::Parse {
            message: "response has no choices[0].message.content string".into(),
            offset: None,
            payload: Some(reply.to_string()),
        })
    }
}

impl StructurePriorProvider for HttpProvider {
    fn capabilities(&self) -> Capabilities {
        Capabilities { accepts_image: self.config.accepts_image, accepts_text: true }
    }

    fn complete(&self, _step: usize, prompt: &str, condition: &Condition) -> Result<String> {
        let body = self.body(prompt, condition)?;
        let mut attempt = 0;
        loop {
            match self.post_once(&body) {
                Err(Error::Provider { retriable: true, message }) if attempt < self.config.max_retries => {
                    attempt += 1;
                    log::warn!("provider attempt {attempt} failed ({message}); retrying");
                    std::thread::sleep(Duration::from_millis(250 << attempt.min(4)));
                }
                other => return other,
            }
        }
    }
}
