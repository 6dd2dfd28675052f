use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::retriever::{render_document, RetrievalContext};

pub const DEFAULT_TURN1: &str = "Go through the following context and then answer the question. \
The context is a list of Wikipedia documents, ordered by title: {titles}.\n\
Each Wikipedia document contains a title field and a text field. The context is:\n\
{context}\n\
Find the useful documents from the context, then answer the question: {question}.\n\
Answer the question directly. Your response should be very concise.";

pub const DEFAULT_TURN2: &str = "You have been provided with a question and its long answer. \
Your task is to derive a very concise short answer from the given long answer. \
It's important to ensure that the output short answer remains as simple as possible. \
Here a few examples:\n\
{exemplars}\n\
Extract the short answer of the following question and long answer:\n\
\"Question\": {question} \"Long Answer\": {long_answer} \"Short Answer\":";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub question: String,
    pub long_answer: String,
    pub short_answer: String,
}

impl Exemplar {
    fn new(q: &str, long: &str, short: &str) -> Self {
        Self {
            question: q.into(),
            long_answer: long.into(),
            short_answer: short.into(),
        }
    }

    fn render(&self) -> String {
        format!(
            "\"Question\": {} \"Long Answer\": {} \"Short Answer\": {}",
            self.question, self.long_answer, self.short_answer
        )
    }
}

/// Small built-in set for the second turn. Real runs should load exemplars
/// drawn from the target dataset.
pub fn default_exemplars() -> Vec<Exemplar> {
    vec![
        Exemplar::new(
            "who wrote the novel pride and prejudice",
            "Pride and Prejudice was written by the English novelist Jane Austen and published in 1813.",
            "Jane Austen",
        ),
        Exemplar::new(
            "what is the capital city of australia",
            "The capital of Australia is Canberra, a planned city chosen as a compromise between Sydney and Melbourne.",
            "Canberra",
        ),
        Exemplar::new(
            "when did the berlin wall come down",
            "The Berlin Wall fell on November 9, 1989, when border crossings were opened.",
            "November 9, 1989",
        ),
        Exemplar::new(
            "how many players are on a rugby union team",
            "A rugby union side fields fifteen players, eight forwards and seven backs.",
            "fifteen",
        ),
        Exemplar::new(
            "which planet has the great red spot",
            "The Great Red Spot is a persistent storm on Jupiter, the largest planet in the solar system.",
            "Jupiter",
        ),
        Exemplar::new(
            "who painted the ceiling of the sistine chapel",
            "Michelangelo painted the Sistine Chapel ceiling between 1508 and 1512 under Pope Julius II.",
            "Michelangelo",
        ),
        Exemplar::new(
            "what river flows through baghdad",
            "Baghdad lies on the Tigris river in central Iraq.",
            "the Tigris",
        ),
        Exemplar::new(
            "are the alps and the andes on the same continent",
            "No. The Alps are in Europe while the Andes run along the western side of South America.",
            "no",
        ),
    ]
}

/// Templates for the two reader turns plus the second-turn exemplars.
///
/// Turn 1 placeholders: `{context}` and `{question}` (required), `{titles}`
/// (optional). Turn 2 placeholders: `{exemplars}`, `{question}` and
/// `{long_answer}` (all required).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub turn1: String,
    pub turn2: String,
    pub exemplars: Vec<Exemplar>,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self {
            turn1: DEFAULT_TURN1.into(),
            turn2: DEFAULT_TURN2.into(),
            exemplars: default_exemplars(),
        }
    }
}

const TURN1_REQUIRED: &[&str] = &["context", "question"];
const TURN1_KNOWN: &[&str] = &["context", "question", "titles"];
const TURN2_REQUIRED: &[&str] = &["exemplars", "question", "long_answer"];

impl PromptTemplate {
    pub fn with_exemplar_count(mut self, n: usize) -> Self {
        self.exemplars.truncate(n);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for name in TURN1_REQUIRED {
            require(&self.turn1, name, "turn 1")?;
        }
        for name in TURN2_REQUIRED {
            require(&self.turn2, name, "turn 2")?;
        }
        Ok(())
    }
}

fn require(template: &str, name: &str, which: &str) -> Result<()> {
    if template.contains(&format!("{{{name}}}")) {
        Ok(())
    } else {
        Err(Error::Template(format!("{which} template lacks {{{name}}}")))
    }
}

/// Reads exemplars from a JSON-lines file of
/// `{"question", "long_answer", "short_answer"}` objects.
pub fn load_exemplars(path: impl AsRef<Path>) -> Result<Vec<Exemplar>> {
    let path = path.as_ref();
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    raw.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Single left-to-right pass, so substituted values are never re-scanned.
fn fill(template: &str, known: &[&str], values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + values.iter().map(|v| v.1.len()).sum::<usize>());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let hit = after.find('}').and_then(|close| {
            let name = &after[..close];
            known
                .contains(&name)
                .then(|| (close, values.iter().find(|v| v.0 == name).map_or("", |v| v.1)))
        });
        match hit {
            Some((close, value)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

fn require_question(question: &str) -> Result<()> {
    if question.trim().is_empty() {
        return Err(Error::Template("question is empty".into()));
    }
    Ok(())
}

pub fn build_turn1(question: &str, context: &RetrievalContext, tpl: &PromptTemplate) -> Result<String> {
    require_question(question)?;
    for name in TURN1_REQUIRED {
        require(&tpl.turn1, name, "turn 1")?;
    }
    if context.is_empty() {
        return Err(Error::Precondition("retrieval context is empty".into()));
    }
    let titles = context
        .documents
        .iter()
        .map(|d| d.title.as_str())
        .collect::<Vec<_>>()
        .join(", ");
    let docs = context
        .documents
        .iter()
        .map(|d| render_document(&d.title, &d.text))
        .collect::<Vec<_>>()
        .join("\n");
    Ok(fill(
        &tpl.turn1,
        TURN1_KNOWN,
        &[("context", &docs), ("question", question), ("titles", &titles)],
    ))
}

pub fn build_turn2(question: &str, long_answer: &str, tpl: &PromptTemplate) -> Result<String> {
    require_question(question)?;
    for name in TURN2_REQUIRED {
        require(&tpl.turn2, name, "turn 2")?;
    }
    if long_answer.trim().is_empty() {
        return Err(Error::Template("long answer is empty".into()));
    }
    let exemplars = tpl
        .exemplars
        .iter()
        .map(Exemplar::render)
        .collect::<Vec<_>>()
        .join("\n");
    Ok(fill(
        &tpl.turn2,
        TURN2_REQUIRED,
        &[
            ("exemplars", &exemplars),
            ("question", question),
            ("long_answer", long_answer),
        ],
    ))
}
