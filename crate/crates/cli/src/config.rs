//! Run configuration: command-line flags plus an optional flat
//! `key=value` file (flags win on conflict), and the named function
//! constructors for densities and boundary data.

use std::path::PathBuf;

use hesslab_core::error::{domain_err, Error, Result};
use hesslab_core::field::{mollify, radius_sq_of, GridDomain, GridField, RadialProfile};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Verify,
    Solve,
    Torus,
    Capacity,
    Stability,
    Integrability,
    Regularity,
}

impl Command {
    fn parse(word: &str) -> Result<Command> {
        Ok(match word {
            "verify" => Command::Verify,
            "solve" => Command::Solve,
            "torus" => Command::Torus,
            "capacity" => Command::Capacity,
            "stability" => Command::Stability,
            "integrability" => Command::Integrability,
            "regularity" => Command::Regularity,
            other => return domain_err(format!("unknown command `{other}`")),
        })
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub n: usize,
    pub m: usize,
    /// points per axis
    pub grid: usize,
    /// half-width of the box / radius of the ball
    pub extent: f64,
    /// box | ball (torus command ignores this)
    pub domain: String,
    pub f_spec: String,
    pub phi_spec: String,
    pub suite: String,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub q: f64,
    pub q_sweep: Vec<f64>,
    pub p_sweep: Vec<f64>,
    pub delta_sweep: Vec<f64>,
    pub r_sweep: Vec<f64>,
    pub eps_cells: Vec<usize>,
    pub out: PathBuf,
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: Command::Verify,
            n: 2,
            m: 1,
            grid: 17,
            extent: 1.0,
            domain: "ball".into(),
            f_spec: "const:2".into(),
            phi_spec: "const:0".into(),
            suite: "all".into(),
            samples: 100_000,
            seed: 1,
            tol: 1e-9,
            q: 4.0,
            q_sweep: Vec::new(),
            p_sweep: Vec::new(),
            delta_sweep: vec![0.1, 0.03, 0.01],
            r_sweep: vec![0.2, 0.3, 0.4],
            eps_cells: vec![4, 8],
            out: PathBuf::from("hesslab-out"),
            threads: 0,
        }
    }
}

fn parse_sweep(text: &str) -> Result<Vec<f64>> {
    // either `lo:hi:step` or a comma list
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return domain_err(format!("sweep `{text}` must be lo:hi:step"));
        }
        let lo: f64 = parts[0].parse().map_err(|_| bad(text))?;
        let hi: f64 = parts[1].parse().map_err(|_| bad(text))?;
        let step: f64 = parts[2].parse().map_err(|_| bad(text))?;
        if !(step > 0.0) || hi < lo {
            return domain_err(format!("sweep `{text}` is empty"));
        }
        let mut v = Vec::new();
        let mut x = lo;
        while x <= hi + 1e-12 * step {
            v.push(x);
            x += step;
        }
        Ok(v)
    } else {
        text.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad(text)))
            .collect()
    }
}

fn bad(text: &str) -> Error {
    Error::Domain(format!("cannot parse numeric value `{text}`"))
}

impl RunConfig {
    pub fn from_args(args: &[String]) -> Result<RunConfig> {
        if args.is_empty() {
            return domain_err("missing command (verify|solve|torus|capacity|stability|integrability|regularity)");
        }
        let mut cfg = RunConfig {
            command: Command::parse(&args[0])?,
            ..RunConfig::default()
        };
        // a config file is applied first so that flags win
        let mut pairs: Vec<(String, String)> = Vec::new();
        let mut i = 1;
        while i < args.len() {
            let key = args[i]
                .strip_prefix("--")
                .ok_or_else(|| Error::Domain(format!("expected flag, found `{}`", args[i])))?;
            let val = args
                .get(i + 1)
                .ok_or_else(|| Error::Domain(format!("flag --{key} needs a value")))?;
            pairs.push((key.to_string(), val.clone()));
            i += 2;
        }
        if let Some((_, path)) = pairs.iter().find(|(k, _)| k == "config") {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Io(format!("config file {path}: {e}")))?;
            let mut from_file = Vec::new();
            for line in text.lines() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| Error::Domain(format!("config line `{line}` is not key=value")))?;
                from_file.push((k.trim().to_string(), v.trim().to_string()));
            }
            from_file.extend(pairs);
            pairs = from_file;
        }
        for (key, val) in &pairs {
            cfg.apply(key, val)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, val: &str) -> Result<()> {
        match key {
            "config" => {}
            "n" => self.n = val.parse().map_err(|_| bad(val))?,
            "m" => self.m = val.parse().map_err(|_| bad(val))?,
            "grid" => self.grid = val.parse().map_err(|_| bad(val))?,
            "extent" | "radius" => self.extent = val.parse().map_err(|_| bad(val))?,
            "domain" => self.domain = val.into(),
            "f" => self.f_spec = val.into(),
            "phi" => self.phi_spec = val.into(),
            "suite" => self.suite = val.into(),
            "samples" => self.samples = val.parse().map_err(|_| bad(val))?,
            "seed" => self.seed = val.parse().map_err(|_| bad(val))?,
            "tol" => self.tol = val.parse().map_err(|_| bad(val))?,
            "q" => self.q = val.parse().map_err(|_| bad(val))?,
            "q-sweep" => self.q_sweep = parse_sweep(val)?,
            "p-sweep" => self.p_sweep = parse_sweep(val)?,
            "delta-sweep" => self.delta_sweep = parse_sweep(val)?,
            "r-sweep" => self.r_sweep = parse_sweep(val)?,
            "eps-cells" => {
                self.eps_cells = parse_sweep(val)?
                    .into_iter()
                    .map(|x| x.round() as usize)
                    .collect()
            }
            "out" => self.out = PathBuf::from(val),
            "threads" => self.threads = val.parse().map_err(|_| bad(val))?,
            other => return domain_err(format!("unknown flag --{other}")),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.n < 1 || self.n > 3 || self.m < 1 || self.m > self.n {
            return domain_err(format!("need 1 <= m <= n <= 3, got n={} m={}", self.n, self.m));
        }
        if self.grid < 5 {
            return domain_err("grid needs at least 5 points per axis");
        }
        if !(self.extent > 0.0) {
            return domain_err("extent must be positive");
        }
        if !(self.tol > 0.0) {
            return domain_err("tol must be positive");
        }
        Ok(())
    }

    pub fn build_domain(&self) -> Result<Arc<GridDomain>> {
        match self.domain.as_str() {
            "box" => GridDomain::box_on(self.n, self.grid, -self.extent, self.extent),
            "ball" => GridDomain::ball(self.n, self.grid, self.extent),
            other => domain_err(format!("unknown domain kind `{other}`")),
        }
    }

    pub fn worker_threads(&self) -> usize {
        if self.threads > 0 {
            return self.threads;
        }
        if let Ok(v) = std::env::var("HESSLAB_THREADS") {
            if let Ok(t) = v.parse::<usize>() {
                if t > 0 {
                    return t;
                }
            }
        }
        std::thread::available_parallelism()
            .map(|v| v.get())
            .unwrap_or(1)
    }
}

/// Builds a field from a named constructor:
/// `const:c`, `quad:c`, `radial:G`, `radial:log`, `bump:a,r`, `sing:a`.
///
/// `sing:a` samples |z|^{-a} with the radius floored at h/2 and then
/// mollifies at scale 2h (keeping raw values where the mollifier lacks
/// margin), the grid stand-in for an unbounded L^q density.
pub fn build_field(
    spec: &str,
    dom: &Arc<GridDomain>,
    n: usize,
    m: usize,
) -> Result<GridField> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let field = match kind {
        "const" => {
            let c: f64 = arg.parse().map_err(|_| bad(spec))?;
            GridField::constant(dom.clone(), c)
        }
        "quad" => {
            let c: f64 = arg.parse().map_err(|_| bad(spec))?;
            GridField::from_fn(dom.clone(), move |p| c * radius_sq_of(p))
        }
        "radial" => {
            let profile = match arg {
                "G" => RadialProfile::PowerSingular { n, m },
                "log" => RadialProfile::Log,
                other => return domain_err(format!("unknown radial profile `{other}`")),
            };
            profile.sample(dom.clone())
        }
        "bump" => {
            let (a, r) = arg
                .split_once(',')
                .ok_or_else(|| bad(spec))
                .and_then(|(a, r)| {
                    Ok((
                        a.parse::<f64>().map_err(|_| bad(spec))?,
                        r.parse::<f64>().map_err(|_| bad(spec))?,
                    ))
                })?;
            GridField::from_fn(dom.clone(), move |p| {
                a * (-radius_sq_of(p) / (r * r)).exp()
            })
        }
        "sing" => {
            let a: f64 = arg.parse().map_err(|_| bad(spec))?;
            let h = dom.spacing();
            let floor = 0.5 * h;
            let raw = GridField::from_fn(dom.clone(), move |p| {
                radius_sq_of(p).sqrt().max(floor).powf(-a)
            });
            let smooth = mollify(&raw, 2.0 * h)?;
            // keep raw samples where the mollifier lacks margin
            let mut out = raw.clone();
            for &f in &smooth.finite_interior() {
                out.values_mut()[f as usize] = smooth.value(f as usize);
            }
            out
        }
        other => return domain_err(format!("unknown field constructor `{other}`")),
    };
    Ok(field)
}
