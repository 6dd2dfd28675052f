use std::collections::{HashMap, VecDeque};
use std::fs;
use std::path::Path;
use std::sync::Mutex;

use reqwest::blocking::Client;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::http;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: "user".into(),
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Turn {
    /// First turn of the two-turn protocol: long answer from full context.
    Long,
    /// Second turn: short answer distilled from the long one.
    Short,
    /// Single-turn direct answer for short contexts.
    Direct,
}

/// Side information about a call. Not sent over the wire; test doubles use
/// it to pick a scripted reply.
#[derive(Debug, Clone, Copy)]
pub struct CallInfo<'a> {
    pub question: &'a str,
    pub turn: Turn,
}

pub trait ChatClient: Send + Sync {
    fn complete(&self, messages: &[ChatMessage], call: &CallInfo<'_>) -> Result<String>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseShape {
    /// `{"content": "..."}`
    #[default]
    Content,
    /// `{"choices": [{"message": {"content": "..."}}]}`
    OpenAi,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f32,
}

pub struct HttpChatClient {
    url: String,
    model: String,
    temperature: f32,
    shape: ResponseShape,
    api_key: Option<String>,
    client: Client,
}

impl HttpChatClient {
    pub fn new(
        url: impl Into<String>,
        model: impl Into<String>,
        temperature: f32,
        shape: ResponseShape,
        api_key_env: Option<&str>,
        timeout_secs: u64,
    ) -> Result<Self> {
        Ok(Self {
            url: url.into(),
            model: model.into(),
            temperature,
            shape,
            api_key: http::credential(api_key_env),
            client: http::client(timeout_secs)?,
        })
    }
}

impl ChatClient for HttpChatClient {
    fn complete(&self, messages: &[ChatMessage], _call: &CallInfo<'_>) -> Result<String> {
        let body = ChatRequest {
            model: &self.model,
            messages,
            temperature: self.temperature,
        };
        let value: serde_json::Value =
            http::post_json(&self.client, &self.url, &body, self.api_key.as_deref())?;
        let content = match self.shape {
            ResponseShape::Content => value.get("content"),
            ResponseShape::OpenAi => value.pointer("/choices/0/message/content"),
        };
        content
            .and_then(|c| c.as_str())
            .map(str::to_string)
            .ok_or_else(|| Error::Data(format!("chat response lacks content: {value}")))
    }
}

/// One scripted exchange, keyed by question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub question: String,
    pub long_answer: String,
    pub short_answer: String,
    /// Reply for the single-turn path; defaults to `short_answer`.
    #[serde(default)]
    pub direct: Option<String>,
}

/// Test double. Replies either by question and turn from a script, or from
/// a fixed queue in call order.
#[derive(Debug, Default)]
pub struct ScriptedChatClient {
    by_question: HashMap<String, ScriptEntry>,
    queue: Mutex<VecDeque<String>>,
}

impl ScriptedChatClient {
    pub fn sequence(replies: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            by_question: HashMap::new(),
            queue: Mutex::new(replies.into_iter().map(Into::into).collect()),
        }
    }

    pub fn from_entries(entries: impl IntoIterator<Item = ScriptEntry>) -> Self {
        Self {
            by_question: entries
                .into_iter()
                .map(|e| (e.question.clone(), e))
                .collect(),
            queue: Mutex::default(),
        }
    }

    /// Loads a JSON-lines script of [`ScriptEntry`] records.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let entries = raw
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str::<ScriptEntry>(l).map_err(|e| Error::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_entries(entries))
    }
}

impl ChatClient for ScriptedChatClient {
    fn complete(&self, _messages: &[ChatMessage], call: &CallInfo<'_>) -> Result<String> {
        if let Some(e) = self.by_question.get(call.question) {
            return Ok(match call.turn {
                Turn::Long => e.long_answer.clone(),
                Turn::Short => e.short_answer.clone(),
                Turn::Direct => e.direct.clone().unwrap_or_else(|| e.short_answer.clone()),
            });
        }
        self.queue
            .lock()
            .expect("script queue poisoned")
            .pop_front()
            .ok_or_else(|| Error::Remote {
                status: 404,
                message: format!("no scripted reply for {:?}", call.question),
            })
    }
}
