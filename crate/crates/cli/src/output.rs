//! JSON rendering plus a provenance block so results can be traced
//! back to the exact inputs and settings that produced them.

use std::collections::BTreeMap;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::settings::Settings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Indented JSON.
    Pretty,
    /// One-line JSON, for piping.
    Json,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Names every input the invocation read, keyed by role, with the
/// sha256 of its raw bytes. Purely a function of the inputs, so
/// repeated runs stay byte-identical.
#[derive(Debug, Default)]
pub struct Inputs(BTreeMap<String, String>);

impl Inputs {
    pub fn digest(&mut self, role: &str, bytes: &[u8]) {
        self.0.insert(role.to_string(), sha256_hex(bytes));
    }

    pub fn digest_hex(&mut self, role: &str, hex_digest: String) {
        self.0.insert(role.to_string(), hex_digest);
    }
}

/// Attaches `provenance` to a result object and renders it. The
/// config digest covers the resolved settings, so two runs with the
/// same digest and input hashes are comparable.
pub fn render(mut value: Value, settings: &Settings, inputs: Inputs, format: Format) -> String {
    let config_json = serde_json::to_string(settings).expect("settings serialize");
    let provenance = json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "config_digest": sha256_hex(config_json.as_bytes()),
        "inputs": inputs.0,
    });
    match value.as_object_mut() {
        Some(map) => {
            map.insert("provenance".to_string(), provenance);
        }
        None => value = json!({ "result": value, "provenance": provenance }),
    }
    match format {
        Format::Pretty => serde_json::to_string_pretty(&value).expect("render"),
        Format::Json => value.to_string(),
    }
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serialize result")
}

/// Writes a line to stdout. A closed downstream pipe (`dialign ... |
/// head`) ends the program quietly instead of panicking.
pub fn print_line(line: &str) -> Result<(), crate::error::CliError> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(line.as_bytes()).and_then(|()| out.write_all(b"\n")) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(crate::error::CliError::Input(format!("cannot write output: {e}"))),
    }
}
