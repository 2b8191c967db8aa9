use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::policies::MaxPolicyKind;
use crate::problems::Benchmark;

/// The experiment families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    /// Random 1-D curves observed through interval means.
    Estimation1D,
    /// Random 1-D curves observed through smoothed gradients after `f(0)` and `f(1)`.
    Gradient1D,
    /// Elevation surface observed through disk means.
    Elevation2D,
    /// Maximization of random 1-D curves.
    MaxSearch1D,
    /// Maximization of a negated benchmark function.
    MaxSearchBenchmark,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Estimation1D => "estimation-1d",
            Self::Gradient1D => "gradient-1d",
            Self::Elevation2D => "elevation-2d",
            Self::MaxSearch1D => "max-search-1d",
            Self::MaxSearchBenchmark => "max-search-benchmark",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        [
            Self::Estimation1D,
            Self::Gradient1D,
            Self::Elevation2D,
            Self::MaxSearch1D,
            Self::MaxSearchBenchmark,
        ]
        .into_iter()
        .find(|t| t.name() == s)
        .ok_or_else(|| Error::Config(format!("unknown task '{s}'")))
    }

    pub fn is_max_search(&self) -> bool {
        matches!(self, Self::MaxSearch1D | Self::MaxSearchBenchmark)
    }

    /// Policy names accepted by this task.
    pub fn policy_names(&self) -> Vec<&'static str> {
        if self.is_max_search() {
            MaxPolicyKind::ALL.iter().map(|k| k.name()).collect()
        } else {
            vec!["gp-dc", "random", "max-var"]
        }
    }
}

/// Kernel family of the surrogate model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelChoice {
    RqMatern32,
    Matern52,
    Matern32,
}

impl KernelChoice {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rq+matern32" => Ok(Self::RqMatern32),
            "matern52" => Ok(Self::Matern52),
            "matern32" => Ok(Self::Matern32),
            _ => Err(Error::Config(format!("unknown kernel '{s}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::RqMatern32 => "rq+matern32",
            Self::Matern52 => "matern52",
            Self::Matern32 => "matern32",
        }
    }

    pub fn build(&self, length_scale: f64) -> Result<KernelSpec> {
        match self {
            Self::RqMatern32 => KernelSpec::rq_plus_matern32(length_scale),
            Self::Matern52 => KernelSpec::matern52(length_scale, 1.0),
            Self::Matern32 => KernelSpec::matern32(length_scale, 1.0),
        }
    }
}

/// Everything needed to reproduce one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub task: Task,
    pub policies: Vec<String>,
    /// Policy steps after the initial queries.
    pub steps: usize,
    pub replicas: usize,
    /// Posterior draws per decision.
    pub draws: usize,
    /// Points of the representative line, or the side of the square mesh.
    pub grid: usize,
    pub widths: Vec<f64>,
    pub seed: u64,
    /// Variance of Gaussian noise added to every observation.
    pub noise: f64,
    pub output: Option<PathBuf>,
    pub alpha: f64,
    pub hyper_budget: usize,
    /// Random candidate subset per width on the elevation mesh.
    pub candidates: usize,
    /// Number of random initial queries (the gradient task always starts from `f(0)`, `f(1)`).
    pub initial: usize,
    pub kernel: KernelChoice,
    pub length_scale: f64,
    pub benchmark: Benchmark,
    /// ASCII elevation grid; a synthetic surface is used when absent.
    pub elevation: Option<PathBuf>,
    pub elevation_size: usize,
    /// Record wall-clock milliseconds (breaks byte-identical reruns).
    pub timing: bool,
}

const ESTIMATION_WIDTHS: [f64; 9] = [0.0, 0.0875, 0.175, 0.2625, 0.35, 0.4375, 0.525, 0.6125, 0.7];
const GRADIENT_WIDTHS: [f64; 9] = [0.02, 0.06, 0.12, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7];
const DISK_RADII: [f64; 9] = [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4];

impl ExperimentConfig {
    /// Defaults of the published setups for `task`.
    pub fn defaults(task: Task) -> Self {
        let mut c = Self {
            task,
            policies: vec![],
            steps: 33,
            replicas: 16,
            draws: 200,
            grid: 120,
            widths: ESTIMATION_WIDTHS.to_vec(),
            seed: 0,
            noise: 0.0,
            output: None,
            alpha: 1.0,
            hyper_budget: 20,
            candidates: 100,
            initial: 2,
            kernel: KernelChoice::RqMatern32,
            length_scale: 0.1,
            benchmark: Benchmark::Branin,
            elevation: None,
            elevation_size: 64,
            timing: false,
        };
        match task {
            Task::Estimation1D => c.policies = vec!["gp-dc".into(), "random".into(), "max-var".into()],
            Task::Gradient1D => {
                c.policies = vec!["gp-dc".into(), "random".into(), "max-var".into()];
                c.widths = GRADIENT_WIDTHS.to_vec();
                c.draws = 300;
            }
            Task::Elevation2D => {
                c.policies = vec!["gp-dc".into(), "random".into(), "max-var".into()];
                c.widths = DISK_RADII.to_vec();
                c.draws = 300;
                c.grid = 30;
                c.steps = 28;
                c.kernel = KernelChoice::Matern52;
                c.length_scale = 0.2;
            }
            Task::MaxSearch1D => {
                c.policies = vec!["gp-dcor".into(), "random".into(), "varmax".into()];
                c.widths = vec![];
                c.grid = 400;
                c.steps = 48;
                c.replicas = 32;
            }
            Task::MaxSearchBenchmark => {
                c.policies = vec!["gp-dcor".into(), "random".into()];
                c.widths = vec![];
                c.grid = 30;
                c.steps = 48;
                c.kernel = KernelChoice::Matern52;
                c.length_scale = 0.2;
            }
        }
        c
    }

    /// Parse the flat `key = value` format; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {}: expected key = value", i + 1)));
            };
            pairs.push((i + 1, k.trim().to_string(), v.trim().to_string()));
        }
        let Some((_, _, task)) = pairs.iter().find(|p| p.1 == "task") else {
            return Err(Error::Config("missing 'task'".into()));
        };
        let mut c = Self::defaults(Task::parse(task)?);
        for (line, key, val) in &pairs {
            c.set(key, val)
                .map_err(|e| Error::Config(format!("line {line}: {e}")))?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn set(&mut self, key: &str, val: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("bad value '{v}' for '{key}'"))
        }
        match key {
            "task" => {}
            "policies" => {
                self.policies = val
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect()
            }
            "steps" => self.steps = num(key, val)?,
            "replicas" => self.replicas = num(key, val)?,
            "draws" => self.draws = num(key, val)?,
            "grid" => self.grid = num(key, val)?,
            "widths" => {
                self.widths = val
                    .split(',')
                    .map(|s| num(key, s.trim()))
                    .collect::<std::result::Result<_, _>>()?
            }
            "seed" => self.seed = num(key, val)?,
            "noise" => self.noise = num(key, val)?,
            "output" => self.output = Some(PathBuf::from(val)),
            "alpha" => self.alpha = num(key, val)?,
            "hyper_budget" => self.hyper_budget = num(key, val)?,
            "candidates" => self.candidates = num(key, val)?,
            "initial" => self.initial = num(key, val)?,
            "kernel" => self.kernel = KernelChoice::parse(val).map_err(|e| e.to_string())?,
            "length_scale" => self.length_scale = num(key, val)?,
            "benchmark" => self.benchmark = Benchmark::parse(val).map_err(|e| e.to_string())?,
            "elevation" => self.elevation = Some(PathBuf::from(val)),
            "elevation_size" => self.elevation_size = num(key, val)?,
            "timing" => self.timing = num(key, val)?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.steps < 1 || self.replicas < 1 {
            return fail("steps and replicas must be >= 1".into());
        }
        if self.policies.is_empty() {
            return fail("no policies listed".into());
        }
        let known = self.task.policy_names();
        if let Some(p) = self.policies.iter().find(|p| !known.contains(&p.as_str())) {
            return fail(format!("policy '{p}' is not available for {}", self.task.name()));
        }
        if self.draws < 2 {
            return fail("draws must be >= 2".into());
        }
        if self.grid < 2 {
            return fail("grid must be >= 2".into());
        }
        if !self.task.is_max_search() {
            if self.widths.is_empty() || self.widths.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                return fail("widths must be a nonempty list of nonnegative numbers".into());
            }
            if self.task == Task::Gradient1D && self.widths.contains(&0.0) {
                return fail("gradient widths must be positive".into());
            }
        }
        if self.task != Task::Gradient1D && self.initial < 1 {
            return fail("initial must be >= 1".into());
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return fail("noise must be a nonnegative variance".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return fail("alpha must lie in (0, 2)".into());
        }
        if !(self.length_scale > 0.0) {
            return fail("length_scale must be positive".into());
        }
        if self.candidates < 1 || self.elevation_size < 2 {
            return fail("candidates must be >= 1 and elevation_size >= 2".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects() {
        let c = ExperimentConfig::parse("task = max-search-benchmark\nbenchmark = himmelblau # comment\nsteps=5\n")
            .unwrap();
        assert_eq!(c.benchmark, Benchmark::Himmelblau);
        assert_eq!(c.steps, 5);
        assert!(ExperimentConfig::parse("task = estimation-1d\nstep = 3\n").is_err());
        assert!(ExperimentConfig::parse("steps = 3\n").is_err());
        assert!(ExperimentConfig::parse("task = estimation-1d\npolicies = ei\n").is_err());
        assert!(ExperimentConfig::parse("task = gradient-1d\nwidths = 0, 0.1\n").is_err());
        assert!(ExperimentConfig::parse("task = estimation-1d\nsteps = 0\n").is_err());
    }
}
