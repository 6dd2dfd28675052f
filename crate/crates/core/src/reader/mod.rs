//! Long-context reader over a pluggable chat model.
//!
//! Long contexts go through two turns: the model first answers freely from
//! the whole context, then a fresh conversation distills that long answer
//! into a short one with few-shot exemplars. Short contexts are answered in
//! a single turn.

mod client;
mod prompt;

use serde::{Deserialize, Serialize};

pub use client::{
    CallInfo, ChatClient, ChatMessage, HttpChatClient, ResponseShape, ScriptEntry,
    ScriptedChatClient, Turn,
};
pub use prompt::{
    build_turn1, build_turn2, default_exemplars, load_exemplars, Exemplar, PromptTemplate,
    DEFAULT_TURN1, DEFAULT_TURN2,
};

use crate::error::{Error, Result};
use crate::retriever::RetrievalContext;
use crate::retry::RetryPolicy;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub turn: Turn,
    pub request: String,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReaderResult {
    pub long_answer: String,
    pub short_answer: String,
    pub transcripts: Vec<Transcript>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReaderConfig {
    /// Contexts with fewer tokens than this take the single-turn path.
    pub short_context_tokens: usize,
    pub retry: RetryPolicy,
}

impl Default for ReaderConfig {
    fn default() -> Self {
        Self {
            short_context_tokens: 1_000,
            retry: RetryPolicy::default(),
        }
    }
}

fn call(
    llm: &dyn ChatClient,
    prompt: &str,
    question: &str,
    turn: Turn,
    retry: &RetryPolicy,
    transcripts: &mut Vec<Transcript>,
) -> Result<String> {
    let messages = [ChatMessage::user(prompt)];
    let info = CallInfo { question, turn };
    let reply = retry.run(|| llm.complete(&messages, &info))?;
    transcripts.push(Transcript {
        turn,
        request: prompt.to_string(),
        response: reply.clone(),
    });
    Ok(reply.trim().to_string())
}

/// Two-turn read: long answer from the context, then a short answer from
/// the long one in a fresh conversation.
pub fn answer(
    question: &str,
    context: &RetrievalContext,
    llm: &dyn ChatClient,
    tpl: &PromptTemplate,
    retry: &RetryPolicy,
) -> Result<ReaderResult> {
    let turn1 = build_turn1(question, context, tpl)?;
    let mut transcripts = Vec::with_capacity(2);
    let long_answer = call(llm, &turn1, question, Turn::Long, retry, &mut transcripts)?;
    if long_answer.is_empty() {
        return Err(Error::EmptyCompletion {
            turn: "turn 1",
            long_answer: None,
        });
    }
    let turn2 = build_turn2(question, &long_answer, tpl)?;
    let short_answer = call(llm, &turn2, question, Turn::Short, retry, &mut transcripts)?;
    if short_answer.is_empty() {
        return Err(Error::EmptyCompletion {
            turn: "turn 2",
            long_answer: Some(long_answer),
        });
    }
    Ok(ReaderResult {
        long_answer,
        short_answer,
        transcripts,
    })
}

/// Single-turn read for short contexts. Long and short answers coincide.
pub fn answer_short_context(
    question: &str,
    context: &RetrievalContext,
    llm: &dyn ChatClient,
    tpl: &PromptTemplate,
    retry: &RetryPolicy,
) -> Result<ReaderResult> {
    if context.is_empty() {
        return Err(Error::Precondition("retrieval context is empty".into()));
    }
    let prompt = build_turn1(question, context, tpl)?;
    let mut transcripts = Vec::with_capacity(1);
    let reply = call(llm, &prompt, question, Turn::Direct, retry, &mut transcripts)?;
    if reply.is_empty() {
        return Err(Error::EmptyCompletion {
            turn: "direct turn",
            long_answer: None,
        });
    }
    Ok(ReaderResult {
        long_answer: reply.clone(),
        short_answer: reply,
        transcripts,
    })
}

/// Picks the single- or two-turn path by context length.
pub fn read(
    question: &str,
    context: &RetrievalContext,
    llm: &dyn ChatClient,
    tpl: &PromptTemplate,
    cfg: &ReaderConfig,
) -> Result<ReaderResult> {
    if context.total_tokens < cfg.short_context_tokens {
        answer_short_context(question, context, llm, tpl, &cfg.retry)
    } else {
        answer(question, context, llm, tpl, &cfg.retry)
    }
}
