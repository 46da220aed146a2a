//! Wire contract for agents served by an external backend.
//!
//! Messages are single-line JSON objects. A request names the task and the
//! mode; the backend answers `{"confidence": 0..100}` for `assess` and
//! `{"answer": "..."}` for `execute`. The transport is left to the caller.

use serde::{Deserialize, Serialize};

use super::{Agent, ExecutionResult};
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::scalar::Scalar;
use crate::task::{Dimension, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RemoteMode {
    Assess,
    Execute,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemoteRequest {
    pub task_id: String,
    pub prompt_text: String,
    pub mode: RemoteMode,
}

impl RemoteRequest {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("request serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssessResponse {
    /// Percent scale, 0 to 100.
    pub confidence: f64,
}

impl AssessResponse {
    pub fn parse(line: &str) -> Result<Self> {
        serde_json::from_str(line.trim()).map_err(|e| Error::Protocol(format!("bad assess response: {e}")))
    }

    /// Maps the 0–100 scale onto [0, 1]; values off the scale are rejected.
    pub fn normalized<T: Scalar>(&self) -> Result<T> {
        if !(0.0..=100.0).contains(&self.confidence) {
            return Err(Error::Protocol(format!(
                "confidence {} outside 0..=100",
                self.confidence
            )));
        }
        Ok(T::of(self.confidence / 100.0))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecuteResponse {
    pub answer: String,
}

impl ExecuteResponse {
    pub fn parse(line: &str) -> Result<Self> {
        serde_json::from_str(line.trim()).map_err(|e| Error::Protocol(format!("bad execute response: {e}")))
    }
}

/// Carries one request line to a backend and returns its response line.
pub trait Transport {
    fn exchange(&self, request_line: &str) -> Result<String>;
}

impl<F> Transport for F
where
    F: Fn(&str) -> Result<String>,
{
    fn exchange(&self, request_line: &str) -> Result<String> {
        self(request_line)
    }
}

pub struct RemoteAgent<Tr> {
    id: String,
    specialization: Option<Dimension>,
    transport: Tr,
}

impl<Tr: Transport> RemoteAgent<Tr> {
    pub fn new(id: impl Into<String>, specialization: Option<Dimension>, transport: Tr) -> Self {
        RemoteAgent {
            id: id.into(),
            specialization,
            transport,
        }
    }

    fn request(&self, task: &Task, mode: RemoteMode) -> Result<String> {
        let req = RemoteRequest {
            task_id: task.id.clone(),
            prompt_text: task.prompt.clone(),
            mode,
        };
        self.transport.exchange(&req.to_line())
    }
}

impl<T: Scalar, Tr: Transport> Agent<T> for RemoteAgent<Tr> {
    fn id(&self) -> &str {
        &self.id
    }

    fn specialization(&self) -> Option<Dimension> {
        self.specialization
    }

    fn verbalized_confidence(&self, task: &Task, _rng: &mut SimRng) -> Result<T> {
        AssessResponse::parse(&self.request(task, RemoteMode::Assess)?)?.normalized()
    }

    fn execute(&self, task: &Task, _rng: &mut SimRng) -> Result<ExecutionResult> {
        let answer = ExecuteResponse::parse(&self.request(task, RemoteMode::Execute)?)?.answer;
        Ok(ExecutionResult {
            correct: answer == task.ground_truth,
            answer,
            calls_consumed: 1,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use crate::task::Difficulty;
    use std::cell::RefCell;

    fn task() -> Task {
        Task::new("t7", "compute it", [Dimension::MC], Difficulty::Easy, "42", ["41".to_string()]).unwrap()
    }

    #[test]
    fn request_line_shape() {
        let line = RemoteRequest {
            task_id: "t7".into(),
            prompt_text: "compute it".into(),
            mode: RemoteMode::Assess,
        }
        .to_line();
        assert_eq!(line, r#"{"task_id":"t7","prompt_text":"compute it","mode":"assess"}"#);
        assert!(!line.contains('\n'));
    }

    #[test]
    fn confidence_normalization() {
        assert_eq!(AssessResponse::parse(r#"{"confidence": 45}"#).unwrap().normalized::<f64>().unwrap(), 0.45);
        assert!(AssessResponse { confidence: 120.0 }.normalized::<f64>().is_err());
        assert!(AssessResponse::parse("{\"score\": 3}").is_err());
    }

    #[test]
    fn remote_agent_round_trip() {
        let seen = RefCell::new(Vec::new());
        let transport = |line: &str| -> Result<String> {
            seen.borrow_mut().push(line.to_string());
            let req: RemoteRequest = serde_json::from_str(line).unwrap();
            Ok(match req.mode {
                RemoteMode::Assess => r#"{"confidence": 80}"#.to_string(),
                RemoteMode::Execute => r#"{"answer": "42"}"#.to_string(),
            })
        };
        let agent = RemoteAgent::new("remote", Some(Dimension::MC), transport);
        let mut rng = substream(0, &[]);
        let c: f64 = agent.verbalized_confidence(&task(), &mut rng).unwrap();
        assert_eq!(c, 0.8);
        let r = Agent::<f64>::execute(&agent, &task(), &mut rng).unwrap();
        assert!(r.correct);
        assert_eq!(r.calls_consumed, 1);
        assert_eq!(seen.borrow().len(), 2);
        assert!(seen.borrow()[1].contains(r#""mode":"execute""#));
    }

    #[test]
    fn malformed_backend_reply_is_a_protocol_error() {
        let agent = RemoteAgent::new("remote", None, |_: &str| Ok("not json".to_string()));
        let err = Agent::<f64>::verbalized_confidence(&agent, &task(), &mut substream(0, &[])).unwrap_err();
        assert!(matches!(err, Error::Protocol(_)));
    }
}
