use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

use super::{CommandSpec, HarnessError, Mode, RunConfig};
use crate::deterministic::Method;

pub const MANIFEST_FILE: &str = "manifest.txt";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Plain-text `key=value` record of a run, sufficient to reproduce its outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub entries: BTreeMap<String, String>,
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

pub(crate) fn method_name(m: Method) -> &'static str {
    match m {
        Method::Auto => "auto",
        Method::DormandPrince => "dopri5",
        Method::Rodas4 => "rodas4",
    }
}

pub(crate) fn parse_method(s: &str) -> Option<Method> {
    match s {
        "auto" => Some(Method::Auto),
        "dopri5" => Some(Method::DormandPrince),
        "rodas4" => Some(Method::Rodas4),
        _ => None,
    }
}

impl RunManifest {
    pub fn new(cfg: &RunConfig, model_text: &str) -> Self {
        let mut e = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            e.insert(k.to_string(), v);
        };
        put("tool", format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")));
        put("model", cfg.model.display().to_string());
        put("model_sha256", sha256_hex(model_text.as_bytes()));
        put("rtol", cfg.rtol.to_string());
        put("atol", cfg.atol.to_string());
        put("method", method_name(cfg.method).to_string());
        put("workers", cfg.workers.to_string());
        match &cfg.command {
            CommandSpec::Simulate { m, replicates, seed } => {
                put("command", "simulate".into());
                put("m", m.to_string());
                put("replicates", replicates.to_string());
                put("master_seed", seed.to_string());
            }
            CommandSpec::Rre => put("command", "rre".into()),
            CommandSpec::Sobol {
                mode,
                m,
                n_s,
                m_s,
                design_seed,
                master_seed,
                dump_samples,
            } => {
                put("command", "sobol".into());
                put(
                    "mode",
                    match mode {
                        Mode::Deterministic => "deterministic",
                        Mode::Stochastic => "stochastic",
                    }
                    .into(),
                );
                put("m", m.to_string());
                put("ns", n_s.to_string());
                put("ms", m_s.to_string());
                put("design_seed", design_seed.to_string());
                put("master_seed", master_seed.to_string());
                put("dump_samples", dump_samples.to_string());
            }
            CommandSpec::Converge {
                m_list,
                n_s,
                m_s,
                design_seed,
                master_seed,
                dump_samples,
            } => {
                put("command", "converge".into());
                put("m_list", join(m_list));
                put("ns", n_s.to_string());
                put("ms", m_s.to_string());
                put("design_seed", design_seed.to_string());
                put("master_seed", master_seed.to_string());
                put("dump_samples", dump_samples.to_string());
            }
            CommandSpec::FixParams {
                threshold,
                m,
                n_s,
                n_samples,
                m_s,
                design_seed,
                master_seed,
            } => {
                put("command", "fix-params".into());
                put("threshold", threshold.to_string());
                put("m", m.to_string());
                put("ns", n_s.to_string());
                put("samples", n_samples.to_string());
                put("ms", m_s.to_string());
                put("design_seed", design_seed.to_string());
                put("master_seed", master_seed.to_string());
            }
        }
        Self { entries: e }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut entries = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::Argument(format!("manifest line {}: expected key=value", no + 1)))?;
            entries.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self { entries })
    }

    fn get(&self, key: &str) -> Result<&str, HarnessError> {
        self.entries
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| HarnessError::Argument(format!("manifest is missing `{key}`")))
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> Result<T, HarnessError> {
        let raw = self.get(key)?;
        raw.parse()
            .map_err(|_| HarnessError::Argument(format!("manifest `{key}` = `{raw}` is not a valid value")))
    }

    /// Reconstruct the run, writing into `out` with `workers` threads when given.
    pub fn to_config(&self, out: PathBuf, workers: Option<usize>) -> Result<RunConfig, HarnessError> {
        let command = match self.get("command")? {
            "simulate" => CommandSpec::Simulate {
                m: self.num("m")?,
                replicates: self.num("replicates")?,
                seed: self.num("master_seed")?,
            },
            "rre" => CommandSpec::Rre,
            "sobol" => CommandSpec::Sobol {
                mode: match self.get("mode")? {
                    "deterministic" => Mode::Deterministic,
                    "stochastic" => Mode::Stochastic,
                    other => return Err(HarnessError::Argument(format!("unknown sobol mode `{other}`"))),
                },
                m: self.num("m")?,
                n_s: self.num("ns")?,
                m_s: self.num("ms")?,
                design_seed: self.num("design_seed")?,
                master_seed: self.num("master_seed")?,
                dump_samples: self.num("dump_samples")?,
            },
            "converge" => CommandSpec::Converge {
                m_list: self
                    .get("m_list")?
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse()
                            .map_err(|_| HarnessError::Argument(format!("bad m_list entry `{s}`")))
                    })
                    .collect::<Result<_, _>>()?,
                n_s: self.num("ns")?,
                m_s: self.num("ms")?,
                design_seed: self.num("design_seed")?,
                master_seed: self.num("master_seed")?,
                dump_samples: self.num("dump_samples")?,
            },
            "fix-params" => CommandSpec::FixParams {
                threshold: self.num("threshold")?,
                m: self.num("m")?,
                n_s: self.num("ns")?,
                n_samples: self.num("samples")?,
                m_s: self.num("ms")?,
                design_seed: self.num("design_seed")?,
                master_seed: self.num("master_seed")?,
            },
            other => return Err(HarnessError::Argument(format!("unknown command `{other}`"))),
        };
        let method = self.get("method")?;
        Ok(RunConfig {
            model: PathBuf::from(self.get("model")?),
            command,
            rtol: self.num("rtol")?,
            atol: self.num("atol")?,
            method: parse_method(method)
                .ok_or_else(|| HarnessError::Argument(format!("unknown solver method `{method}`")))?,
            workers: match workers {
                Some(w) => w,
                None => self.num("workers")?,
            },
            out,
        })
    }

    pub fn model_hash(&self) -> Result<&str, HarnessError> {
        self.get("model_sha256")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_known_input() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn round_trip_every_command() {
        let commands = [
            CommandSpec::Simulate {
                m: 10.0,
                replicates: 25,
                seed: 3,
            },
            CommandSpec::Rre,
            CommandSpec::Sobol {
                mode: Mode::Stochastic,
                m: 1.0,
                n_s: 512,
                m_s: 50,
                design_seed: 1,
                master_seed: 2,
                dump_samples: true,
            },
            CommandSpec::Converge {
                m_list: vec![1.0, 10.0, 100.0],
                n_s: 64,
                m_s: 5,
                design_seed: 7,
                master_seed: 8,
                dump_samples: false,
            },
            CommandSpec::FixParams {
                threshold: 0.02,
                m: 1.0,
                n_s: 128,
                n_samples: 1000,
                m_s: 2,
                design_seed: 4,
                master_seed: 5,
            },
        ];
        for command in commands {
            let cfg = RunConfig {
                model: PathBuf::from("models/x.model"),
                command,
                rtol: 1e-6,
                atol: 1e-8,
                method: Method::Rodas4,
                workers: 3,
                out: PathBuf::from("out"),
            };
            let text = RunManifest::new(&cfg, "species: A").render();
            let back = RunManifest::parse(&text).unwrap().to_config(PathBuf::from("out"), None).unwrap();
            assert_eq!(back, cfg);
        }
    }

    #[test]
    fn missing_keys_are_reported() {
        let m = RunManifest::parse("command=sobol\n").unwrap();
        assert!(matches!(m.to_config(PathBuf::new(), None), Err(HarnessError::Argument(_))));
        assert!(RunManifest::parse("no equals sign").is_err());
    }
}
