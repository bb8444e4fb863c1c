//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::problems::{PoissonConfig, Target, TopologyConfig, TopologyExample};
use crate::tr::{ModelKind, TrParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    Poisson,
    Topology(TopologyExample),
    Synthetic,
}

impl ProblemKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "poisson" => Ok(Self::Poisson),
            "topo1" => Ok(Self::Topology(TopologyExample::LeftTop)),
            "topo2" => Ok(Self::Topology(TopologyExample::LeftSlot)),
            "synthetic" => Ok(Self::Synthetic),
            _ => Err(Error::Config(format!("unknown problem '{s}' (poisson, topo1, topo2, synthetic)"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Poisson => "poisson",
            Self::Topology(TopologyExample::LeftTop) => "topo1",
            Self::Topology(TopologyExample::LeftSlot) => "topo2",
            Self::Synthetic => "synthetic",
        }
    }
}

const KEYS: &[&str] = &[
    "problem",
    "delta0",
    "delta_max",
    "eta1",
    "eta2",
    "gamma1",
    "gamma2",
    "gamma3",
    "theta",
    "kappa_val",
    "kappa_der",
    "tau_max_val",
    "tau_max_der",
    "gamma",
    "eps0",
    "eps_decay",
    "j",
    "psi_tol",
    "max_iter",
    "kappa_rad",
    "subproblem_iters",
    "mu_c",
    "model",
    "alpha",
    "beta",
    "target",
    "v0",
    "k_min",
    "k_max",
    "r",
    "q",
    "max_dofs",
    "grid",
    "solver_tol",
    "flip_adjoint",
    "seed",
    "noise",
    "degree",
    "refinements",
];

/// Raw settings: file entries overridden by command-line pairs.
#[derive(Clone, Debug, Default)]
pub struct Settings {
    map: BTreeMap<String, String>,
}

impl Settings {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            s.set(line).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("line {}: {m}", i + 1)),
                e => e,
            })?;
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies one `key=value` pair.
    pub fn set(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair.split_once('=').ok_or_else(|| Error::Config(format!("expected key=value, got '{pair}'")))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(Error::Config(format!("unknown key '{k}'")));
        }
        if v.is_empty() {
            return Err(Error::Config(format!("empty value for '{k}'")));
        }
        self.map.insert(k.to_string(), v.to_string());
        Ok(())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.map
            .get(key)
            .map(|v| v.parse::<T>().map_err(|_| Error::Config(format!("invalid value '{v}' for '{key}'"))))
            .transpose()
    }

    fn read<T: FromStr>(&self, key: &str, slot: &mut T) -> Result<()> {
        if let Some(v) = self.get(key)? {
            *slot = v;
        }
        Ok(())
    }
}

/// Fully resolved run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub params: TrParams,
    pub poisson: PoissonConfig,
    pub topology: TopologyConfig,
    pub seed: u64,
    /// Synthetic noise amplitude in multiples of the value tolerance.
    pub noise: f64,
    pub degree: Option<usize>,
    pub refinements: usize,
    /// Grid size for rate studies.
    pub rates_grid: usize,
}

impl RunConfig {
    pub fn resolve(s: &Settings) -> Result<Self> {
        let problem = ProblemKind::parse(&s.get::<String>("problem")?.unwrap_or_else(|| "poisson".into()))?;
        let mut params = TrParams::default();
        match problem {
            ProblemKind::Poisson => {
                params.model = ModelKind::Hessian;
                params.kappa_val = 1e6;
                params.kappa_der = 1e6;
            }
            ProblemKind::Topology(_) => {
                params.model = ModelKind::Lbfgs { memory: 10 };
                params.kappa_val = 1e9;
                params.kappa_der = 1e9;
            }
            ProblemKind::Synthetic => {
                params.kappa_val = 1.0;
                params.kappa_der = 1.0;
            }
        }
        let p = &mut params;
        s.read("delta0", &mut p.delta0)?;
        s.read("delta_max", &mut p.delta_max)?;
        s.read("eta1", &mut p.eta1)?;
        s.read("eta2", &mut p.eta2)?;
        s.read("gamma1", &mut p.gamma1)?;
        s.read("gamma2", &mut p.gamma2)?;
        s.read("gamma3", &mut p.gamma3)?;
        s.read("theta", &mut p.theta)?;
        s.read("kappa_val", &mut p.kappa_val)?;
        s.read("kappa_der", &mut p.kappa_der)?;
        s.read("tau_max_val", &mut p.tau_max_val)?;
        s.read("tau_max_der", &mut p.tau_max_der)?;
        s.read("gamma", &mut p.gamma)?;
        s.read("eps0", &mut p.eps0)?;
        s.read("eps_decay", &mut p.eps_decay)?;
        s.read("j", &mut p.j)?;
        s.read("psi_tol", &mut p.psi_tol)?;
        s.read("max_iter", &mut p.max_iter)?;
        s.read("kappa_rad", &mut p.kappa_rad)?;
        s.read("subproblem_iters", &mut p.subproblem_iters)?;
        s.read("mu_c", &mut p.mu_c)?;
        if let Some(m) = s.get::<String>("model")? {
            p.model = ModelKind::parse(&m).ok_or_else(|| Error::Config(format!("unknown model '{m}'")))?;
        }

        let mut poisson = PoissonConfig { theta: params.theta, ..PoissonConfig::default() };
        s.read("alpha", &mut poisson.alpha)?;
        s.read("beta", &mut poisson.beta)?;
        s.read("max_dofs", &mut poisson.max_dofs)?;
        s.read("grid", &mut poisson.grid)?;
        s.read("solver_tol", &mut poisson.solver_tol)?;
        s.read("flip_adjoint", &mut poisson.flip_adjoint)?;
        if let Some(t) = s.get::<String>("target")? {
            poisson.target = Target::by_name(&t)?;
        }

        let example = match problem {
            ProblemKind::Topology(e) => e,
            _ => TopologyExample::LeftTop,
        };
        let mut topology = TopologyConfig { theta: params.theta, ..TopologyConfig::new(example) };
        s.read("v0", &mut topology.volume_fraction)?;
        s.read("k_min", &mut topology.k_min)?;
        s.read("k_max", &mut topology.k_max)?;
        s.read("r", &mut topology.radius)?;
        s.read("q", &mut topology.source)?;
        s.read("max_dofs", &mut topology.max_dofs)?;
        s.read("grid", &mut topology.grid)?;
        s.read("solver_tol", &mut topology.solver_tol)?;

        let mut cfg = Self {
            problem,
            params,
            poisson,
            topology,
            seed: 0,
            noise: 0.0,
            degree: None,
            refinements: 4,
            rates_grid: 4,
        };
        s.read("seed", &mut cfg.seed)?;
        s.read("noise", &mut cfg.noise)?;
        cfg.degree = s.get("degree")?;
        s.read("refinements", &mut cfg.refinements)?;
        if problem == ProblemKind::Poisson || problem == ProblemKind::Synthetic {
            s.read("grid", &mut cfg.rates_grid)?;
        }
        cfg.params.validate()?;
        if let ProblemKind::Topology(_) = problem {
            cfg.topology.validate()?;
        }
        Ok(cfg)
    }

    /// Every resolved parameter, one `key = value` per line.
    pub fn manifest(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("problem", self.problem.name().into());
        kv("model", p.model.name());
        for (k, v) in [
            ("delta0", p.delta0),
            ("delta_max", p.delta_max),
            ("eta1", p.eta1),
            ("eta2", p.eta2),
            ("gamma1", p.gamma1),
            ("gamma2", p.gamma2),
            ("gamma3", p.gamma3),
            ("theta", p.theta),
            ("kappa_val", p.kappa_val),
            ("kappa_der", p.kappa_der),
            ("tau_max_val", p.tau_max_val),
            ("tau_max_der", p.tau_max_der),
            ("gamma", p.gamma),
            ("eps0", p.eps0),
            ("eps_decay", p.eps_decay),
            ("j", p.j),
            ("psi_tol", p.psi_tol),
            ("kappa_rad", p.kappa_rad),
            ("mu_c", p.mu_c),
        ] {
            kv(k, format!("{v:e}"));
        }
        kv("max_iter", p.max_iter.to_string());
        kv("subproblem_iters", p.subproblem_iters.to_string());
        match self.problem {
            ProblemKind::Poisson => {
                let c = &self.poisson;
                kv("alpha", format!("{:e}", c.alpha));
                kv("beta", format!("{:e}", c.beta));
                kv("target", c.target.name.clone());
                kv("grid", c.grid.to_string());
                kv("max_dofs", c.max_dofs.to_string());
                kv("solver_tol", format!("{:e}", c.solver_tol));
                kv("flip_adjoint", c.flip_adjoint.to_string());
            }
            ProblemKind::Topology(_) => {
                let c = &self.topology;
                kv("v0", format!("{:e}", c.volume_fraction));
                kv("k_min", format!("{:e}", c.k_min));
                kv("k_max", format!("{:e}", c.k_max));
                kv("r", format!("{:e}", c.radius));
                kv("q", format!("{:e}", c.source));
                kv("grid", c.grid.to_string());
                kv("max_dofs", c.max_dofs.to_string());
                kv("solver_tol", format!("{:e}", c.solver_tol));
            }
            ProblemKind::Synthetic => {
                kv("seed", self.seed.to_string());
                kv("noise", format!("{:e}", self.noise));
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_overrides() {
        let mut s = Settings::parse("problem = topo2 # comment\n\nkappa_val=5\n").unwrap();
        s.set("kappa_val = 7").unwrap();
        let c = RunConfig::resolve(&s).unwrap();
        assert_eq!(c.problem, ProblemKind::Topology(TopologyExample::LeftSlot));
        assert_eq!(c.params.kappa_val, 7.0);
        assert_eq!(c.params.kappa_der, 1e9);
        assert_eq!(c.topology.volume_fraction, 0.1);
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(Settings::parse("no equals sign").is_err());
        assert!(Settings::parse("colour = red").is_err());
        let s = Settings::parse("alpha = lots").unwrap();
        assert!(RunConfig::resolve(&s).is_err());
        let s = Settings::parse("eta1 = 0.95").unwrap();
        assert!(RunConfig::resolve(&s).is_err());
    }

    #[test]
    fn poisson_defaults() {
        let c = RunConfig::resolve(&Settings::default()).unwrap();
        assert_eq!(c.problem, ProblemKind::Poisson);
        assert_eq!(c.params.model, ModelKind::Hessian);
        assert_eq!(c.poisson.max_dofs, 10_000);
        assert!(c.manifest().contains("beta = 1e-2"));
    }
}
