//! Browser bindings for the fire alarm network. The page drives three
//! operations: move a prior, add or tighten a conditional, and explain a
//! bound. Each returns a JSON view of the network after the change.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use ibn_core::model::{parse_script, RunStatus, Session, FIRE_MODEL};

#[derive(Debug, Serialize, PartialEq)]
pub struct StateView {
    pub variable: String,
    pub state: String,
    pub lo: f64,
    pub hi: f64,
    pub prior: Option<[f64; 2]>,
}

#[derive(Debug, Serialize, PartialEq)]
pub struct View {
    pub states: Vec<StateView>,
    /// Output of the last operation, or the error it raised.
    pub output: String,
    pub contradiction: bool,
}

/// One network session. Only the first step of the bundled model is
/// loaded so that the page starts from genuine intervals.
#[wasm_bindgen]
pub struct Demo {
    session: Session,
}

impl Default for Demo {
    fn default() -> Self {
        Self::new()
    }
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Demo {
        let step1: String = FIRE_MODEL
            .lines()
            .take_while(|l| !l.starts_with("step 2"))
            .map(|l| format!("{l}\n"))
            .collect();
        let mut session = Session::new(".");
        let doc = parse_script(&step1).expect("bundled model parses");
        session.run(&doc).expect("bundled model loads");
        session.take_transcript();
        Demo { session }
    }

    /// Current intervals as JSON.
    pub fn view(&self) -> String {
        self.render(String::new())
    }

    /// Replaces the prior of `variable=state` with `[lo, hi]`.
    pub fn set_prior(&mut self, variable: &str, state: &str, lo: f64, hi: f64) -> String {
        self.command(&format!("prior {variable}={state} : [{lo}, {hi}]"))
    }

    /// Explanation tree of one bound (`"lower"` or `"upper"`).
    pub fn explain(&mut self, variable: &str, state: &str, bound: &str) -> String {
        self.command(&format!("explain {variable}={state} {bound}"))
    }

    /// Runs one script line, such as a `conditional` or `explain`.
    pub fn command(&mut self, line: &str) -> String {
        let output = match parse_script(line) {
            Ok(doc) => {
                let mut out = String::new();
                for l in &doc.lines {
                    if let Err(e) = self.session.execute(&l.statement, l.line) {
                        out.push_str(&format!("error: {e}\n"));
                    }
                }
                let mut text = self.session.take_transcript();
                text.push_str(&out);
                text
            }
            Err(e) => format!("error: {e}\n"),
        };
        self.render(output)
    }
}

impl Demo {
    fn render(&self, output: String) -> String {
        let net = self.session.network();
        let states = net
            .marginals()
            .into_iter()
            .map(|(s, p)| {
                let (variable, state) = net.state_ref(s);
                StateView {
                    variable,
                    state,
                    lo: p.lo(),
                    hi: p.hi(),
                    prior: net.priors().get(&s).map(|q| [q.lo(), q.hi()]),
                }
            })
            .collect();
        let view = View {
            states,
            output,
            contradiction: self.session.status() == RunStatus::Contradiction,
        };
        serde_json::to_string(&view).expect("view serializes")
    }
}
