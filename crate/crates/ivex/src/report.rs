//! Machine-readable run reports. Apart from the `timing` block a report is
//! a pure function of the input file and the configuration, so reruns are
//! byte-identical and witnesses replay from the report alone.

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct InputInfo {
    pub path: String,
    pub sha256: String,
    pub problem: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: ToolInfo,
    pub input: InputInfo,
    pub command: String,
    pub config: serde_json::Value,
    pub results: serde_json::Value,
    pub timing: Timing,
}

impl Report {
    pub fn new(
        path: &str,
        sha256: &str,
        problem: &str,
        command: String,
        config: serde_json::Value,
        results: serde_json::Value,
        seconds: f64,
    ) -> Report {
        Report {
            tool: ToolInfo {
                name: "ivex",
                version: env!("CARGO_PKG_VERSION"),
            },
            input: InputInfo {
                path: path.to_string(),
                sha256: sha256.to_string(),
                problem: problem.to_string(),
            },
            command,
            config,
            results,
            timing: Timing { seconds },
        }
    }

    pub fn to_pretty_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}
