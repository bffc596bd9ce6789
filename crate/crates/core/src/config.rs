//! Run configuration: a flat key-value text file (or the `resolved_config`
//! block of an emitted manifest), validated against every module
//! precondition in one pass. The seed fully determines every random draw.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::PerturbationKind;

/// Defaults: d=2, M=16, L=2π, μ=1.05, T=1, dt=1e−3, seed=42.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub dimension: usize,
    pub modes_per_dim: usize,
    pub box_length: f64,
    pub mu: f64,
    pub fermi_floor: f64,
    pub seed: u64,

    pub t_final: f64,
    pub dt: f64,
    pub time_samples: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub record_every: usize,

    pub ensemble_size: usize,
    /// unitary_conjugation | particle_hole | smooth_random | mixed
    pub generator: String,
    pub size: f64,

    pub alpha: f64,
    pub window: f64,
    pub pair_count: usize,
    /// Cutoff levels for the approximation scheme.
    pub n_values: Vec<f64>,
    /// Frequency offsets for the optimality scan.
    pub optimality_n: Vec<usize>,
    /// α list for the exponent table.
    pub alpha_list: Vec<f64>,

    pub orbital_particles: usize,

    pub output_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dimension: 2,
            modes_per_dim: 16,
            box_length: 2.0 * std::f64::consts::PI,
            mu: 1.05,
            fermi_floor: 0.0,
            seed: 42,
            t_final: 1.0,
            dt: 1e-3,
            time_samples: 65,
            max_iters: 25,
            tol: 1e-9,
            record_every: 10,
            ensemble_size: 20,
            generator: "mixed".to_string(),
            size: 0.7,
            alpha: 1.0,
            window: 1.0,
            pair_count: 4,
            n_values: vec![2.0, 4.0, 8.0, 32.0, 1e4],
            optimality_n: vec![8, 16, 32, 64, 128],
            alpha_list: vec![0.6, 0.75, 1.0, 1.5],
            orbital_particles: 2,
            output_dir: "out".to_string(),
        }
    }
}

fn parse_list_f64(v: &str) -> std::result::Result<Vec<f64>, String> {
    v.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| format!("bad float '{s}': {e}")))
        .collect()
}

fn parse_list_usize(v: &str) -> std::result::Result<Vec<usize>, String> {
    v.split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|e| format!("bad integer '{s}': {e}")))
        .collect()
}

impl RunConfig {
    /// Apply `key = value` pairs onto the defaults. Unknown keys are errors.
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut problems = Vec::new();
        for (key, value) in pairs {
            let r: std::result::Result<(), String> = (|| {
                let v = value.trim();
                match key.as_str() {
                    "dimension" => cfg.dimension = v.parse().map_err(|e| format!("{e}"))?,
                    "modes_per_dim" => cfg.modes_per_dim = v.parse().map_err(|e| format!("{e}"))?,
                    "box_length" => cfg.box_length = v.parse().map_err(|e| format!("{e}"))?,
                    "mu" => cfg.mu = v.parse().map_err(|e| format!("{e}"))?,
                    "fermi_floor" => cfg.fermi_floor = v.parse().map_err(|e| format!("{e}"))?,
                    "seed" => cfg.seed = v.parse().map_err(|e| format!("{e}"))?,
                    "t_final" => cfg.t_final = v.parse().map_err(|e| format!("{e}"))?,
                    "dt" => cfg.dt = v.parse().map_err(|e| format!("{e}"))?,
                    "time_samples" => cfg.time_samples = v.parse().map_err(|e| format!("{e}"))?,
                    "max_iters" => cfg.max_iters = v.parse().map_err(|e| format!("{e}"))?,
                    "tol" => cfg.tol = v.parse().map_err(|e| format!("{e}"))?,
                    "record_every" => cfg.record_every = v.parse().map_err(|e| format!("{e}"))?,
                    "ensemble_size" => cfg.ensemble_size = v.parse().map_err(|e| format!("{e}"))?,
                    "generator" => cfg.generator = v.to_string(),
                    "size" => cfg.size = v.parse().map_err(|e| format!("{e}"))?,
                    "alpha" => cfg.alpha = v.parse().map_err(|e| format!("{e}"))?,
                    "window" => cfg.window = v.parse().map_err(|e| format!("{e}"))?,
                    "pair_count" => cfg.pair_count = v.parse().map_err(|e| format!("{e}"))?,
                    "n_values" => cfg.n_values = parse_list_f64(v)?,
                    "optimality_n" => cfg.optimality_n = parse_list_usize(v)?,
                    "alpha_list" => cfg.alpha_list = parse_list_f64(v)?,
                    "orbital_particles" => {
                        cfg.orbital_particles = v.parse().map_err(|e| format!("{e}"))?
                    }
                    "output_dir" => cfg.output_dir = v.to_string(),
                    other => return Err(format!("unknown key '{other}'")),
                }
                Ok(())
            })();
            if let Err(e) = r {
                problems.push(format!("{key}: {e}"));
            }
        }
        if problems.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config(problems))
        }
    }

    /// Parse a run file: `key = value` lines, '#' comments. A JSON manifest
    /// (from a previous run) is accepted too — its resolved_config block is
    /// used, which makes re-runs reproducible by construction.
    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        if text.trim_start().starts_with('{') {
            #[derive(Deserialize)]
            struct ManifestConfig {
                resolved_config: BTreeMap<String, String>,
            }
            let m: ManifestConfig = serde_json::from_str(&text)?;
            return RunConfig::from_pairs(&m.resolved_config);
        }
        let mut pairs = BTreeMap::new();
        let mut problems = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) => {
                    pairs.insert(k.trim().to_string(), v.trim().to_string());
                }
                None => problems.push(format!("line {}: expected key = value", lineno + 1)),
            }
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
        RunConfig::from_pairs(&pairs)
    }

    /// Validate every module precondition, reporting all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(1..=3).contains(&self.dimension) {
            problems.push(format!("dimension must be 1, 2 or 3 (got {})", self.dimension));
        }
        if self.modes_per_dim % 2 != 0 || self.modes_per_dim < 4 {
            problems.push(format!(
                "modes_per_dim must be even and >= 4 (got {})",
                self.modes_per_dim
            ));
        }
        if !(self.box_length > 0.0) {
            problems.push(format!("box_length must be > 0 (got {})", self.box_length));
        }
        if !(self.mu > 0.0) {
            problems.push(format!("mu must be > 0 (got {})", self.mu));
        }
        if self.fermi_floor < 0.0 {
            problems.push(format!("fermi_floor must be >= 0 (got {})", self.fermi_floor));
        }
        if !(self.dt > 0.0) {
            problems.push(format!("dt must be > 0 (got {})", self.dt));
        }
        if !(self.t_final >= self.dt) {
            problems.push(format!(
                "t_final must be >= dt (got t_final={}, dt={})",
                self.t_final, self.dt
            ));
        }
        if self.time_samples < 2 {
            problems.push(format!("time_samples must be >= 2 (got {})", self.time_samples));
        }
        if self.max_iters == 0 {
            problems.push("max_iters must be >= 1".to_string());
        }
        if !(self.tol > 0.0) {
            problems.push(format!("tol must be > 0 (got {})", self.tol));
        }
        if self.record_every == 0 {
            problems.push("record_every must be >= 1".to_string());
        }
        if self.size < 0.0 {
            problems.push(format!("size must be >= 0 (got {})", self.size));
        }
        if self.generator != "mixed" && PerturbationKind::parse(&self.generator).is_err() {
            problems.push(format!("unknown generator '{}'", self.generator));
        }
        if !(self.window > 0.0) {
            problems.push(format!("window must be > 0 (got {})", self.window));
        }
        if self.pair_count == 0 {
            problems.push("pair_count must be >= 1".to_string());
        }
        if self.n_values.is_empty() || !self.n_values.windows(2).all(|w| w[1] > w[0]) {
            problems.push("n_values must be a strictly increasing nonempty list".to_string());
        }
        if self.n_values.iter().any(|&n| n < 1.0) {
            problems.push("n_values entries must be >= 1".to_string());
        }
        if self.optimality_n.len() < 3 || !self.optimality_n.windows(2).all(|w| w[1] > w[0]) {
            problems
                .push("optimality_n must be a strictly increasing list of >= 3 entries".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    /// Canonical key-value rendering: the manifest's resolved_config block.
    pub fn to_pairs(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let fmt_list_f64 =
            |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        m.insert("dimension".into(), self.dimension.to_string());
        m.insert("modes_per_dim".into(), self.modes_per_dim.to_string());
        m.insert("box_length".into(), format!("{}", self.box_length));
        m.insert("mu".into(), format!("{}", self.mu));
        m.insert("fermi_floor".into(), format!("{}", self.fermi_floor));
        m.insert("seed".into(), self.seed.to_string());
        m.insert("t_final".into(), format!("{}", self.t_final));
        m.insert("dt".into(), format!("{}", self.dt));
        m.insert("time_samples".into(), self.time_samples.to_string());
        m.insert("max_iters".into(), self.max_iters.to_string());
        m.insert("tol".into(), format!("{}", self.tol));
        m.insert("record_every".into(), self.record_every.to_string());
        m.insert("ensemble_size".into(), self.ensemble_size.to_string());
        m.insert("generator".into(), self.generator.clone());
        m.insert("size".into(), format!("{}", self.size));
        m.insert("alpha".into(), format!("{}", self.alpha));
        m.insert("window".into(), format!("{}", self.window));
        m.insert("pair_count".into(), self.pair_count.to_string());
        m.insert("n_values".into(), fmt_list_f64(&self.n_values));
        m.insert(
            "optimality_n".into(),
            self.optimality_n.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
        );
        m.insert("alpha_list".into(), fmt_list_f64(&self.alpha_list));
        m.insert("orbital_particles".into(), self.orbital_particles.to_string());
        m.insert("output_dir".into(), self.output_dir.clone());
        m
    }

    /// FNV-1a hash of the canonical rendering; stamped on every artifact.
    pub fn config_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for (k, v) in self.to_pairs() {
            for b in k.bytes().chain([b'='].into_iter()).chain(v.bytes()).chain([b'\n']) {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        }
        h
    }

    /// Per-member seed derivation (splitmix-style stride keeps members
    /// decorrelated while staying reproducible).
    pub fn member_seed(&self, member: usize) -> u64 {
        self.seed.wrapping_add((member as u64).wrapping_mul(0x9E3779B97F4A7C15))
    }

    /// Generator kind for one ensemble member ("mixed" cycles the kinds).
    pub fn member_kind(&self, member: usize) -> PerturbationKind {
        if self.generator == "mixed" {
            match member % 3 {
                0 => PerturbationKind::UnitaryConjugation,
                1 => PerturbationKind::ParticleHole,
                _ => PerturbationKind::SmoothRandom,
            }
        } else {
            PerturbationKind::parse(&self.generator).expect("validated")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn every_violation_is_reported() {
        let cfg = RunConfig {
            dimension: 5,
            modes_per_dim: 7,
            mu: -1.0,
            dt: -0.5,
            ..RunConfig::default()
        };
        match cfg.validate() {
            Err(Error::Config(problems)) => {
                assert!(problems.len() >= 4, "expected all violations listed: {problems:?}");
            }
            other => panic!("expected Config error, got {other:?}"),
        }
    }

    #[test]
    fn file_roundtrip_through_manifest_block() {
        let cfg = RunConfig { seed: 7, modes_per_dim: 8, ..RunConfig::default() };
        let pairs = cfg.to_pairs();
        let back = RunConfig::from_pairs(&pairs).unwrap();
        assert_eq!(back.config_hash(), cfg.config_hash());
    }

    #[test]
    fn parses_key_value_text() {
        let dir = std::env::temp_dir().join("fermibox-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        std::fs::write(
            &path,
            "# comment\ndimension = 2\nmodes_per_dim = 8\nseed = 9\nn_values = 1,2,4\n",
        )
        .unwrap();
        let cfg = RunConfig::from_file(&path).unwrap();
        assert_eq!(cfg.modes_per_dim, 8);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.n_values, vec![1.0, 2.0, 4.0]);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut pairs = BTreeMap::new();
        pairs.insert("no_such_key".to_string(), "1".to_string());
        assert!(RunConfig::from_pairs(&pairs).is_err());
    }
}
